// Copyright 2026 The rcg authors
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

#ifndef RCG_ERRORS_HPP
#define RCG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rcg {

/// Invalid model/layer/schedule configuration (bad dims, bad ranges).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// API misuse: wrong call order, missing caches, out-of-range arguments.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent external data (files, stores, checkpoints).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training diverged (non-finite loss or gradients).
struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A representation whose variance is too small to normalize.
struct DegenerateRepresentationError : UsageError {
  explicit DegenerateRepresentationError(const std::string& msg) : UsageError(msg) {}
};

}  // namespace rcg

#endif  // RCG_ERRORS_HPP
