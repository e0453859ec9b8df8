// Copyright 2026 The ZED Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Comma-separated key=value option strings, the configuration surface of the
// C API ("k=10,trunk_depth=4"). Unknown keys are hard errors.

#ifndef ZED_CORE_CONFIG_HPP_
#define ZED_CORE_CONFIG_HPP_

#include <string>
#include <utility>
#include <vector>

#include "net.hpp"
#include "trainer.hpp"

namespace zed {

std::vector<std::pair<std::string, std::string>> parse_kv(
    const std::string& spec);

// Keys: k, trunk_depth, trunk_channels. Empty spec -> defaults.
NetConfig net_config_from_kv(const std::string& spec);

// Keys: crop_size, batch_size, steps, log_every, learning_rate, beta1,
// beta2, adam_eps, seed, level_weights (colon-separated, e.g. "1:1:0").
TrainConfig train_config_from_kv(const std::string& spec);

}  // namespace zed

#endif  // ZED_CORE_CONFIG_HPP_
