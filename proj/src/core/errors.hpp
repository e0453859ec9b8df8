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

#ifndef ZED_CORE_ERRORS_HPP_
#define ZED_CORE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace zed {

// Error classes map one-to-one onto the CLI exit codes and C API statuses:
// usage -> 1, data -> 2, numeric -> 3.
enum class ErrorKind { usage = 1, data = 2, numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(ErrorKind::usage, msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg)
      : Error(ErrorKind::numeric, msg) {}
};

}  // namespace zed

#endif  // ZED_CORE_ERRORS_HPP_
