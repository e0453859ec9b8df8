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

#ifndef ZED_CORE_MANIFEST_HPP_
#define ZED_CORE_MANIFEST_HPP_

#include <string>
#include <vector>

namespace zed {

struct ManifestEntry {
  std::string path;       // resolved (absolute or manifest-relative) path
  bool synthetic = false;  // label: real / synthetic
  std::string generator;
  std::string group;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
};

// CSV with exact header `path,label,generator,group`. Labels are `real` or
// `synthetic`; paths must be unique; relative paths are resolved against the
// manifest's directory. Fields must not contain commas (no quoting).
CorpusManifest load_manifest(const std::string& path);

// One scored image: identity columns plus per-level NLL/entropy means (nats
// per coded pixel-channel). The remaining table columns are derived.
struct FeatureRow {
  std::string path;
  std::string label;
  std::string generator;
  std::string group;
  double nll[3] = {0, 0, 0};
  double h[3] = {0, 0, 0};

  double d(int l) const { return nll[l] - h[l]; }
  double delta01() const { return d(0) - d(1); }
};

extern const char kFeatureTableHeader[];

void save_feature_table(const std::vector<FeatureRow>& rows,
                        const std::string& path);
std::vector<FeatureRow> load_feature_table(const std::string& path);

}  // namespace zed

#endif  // ZED_CORE_MANIFEST_HPP_
