/*
 Copyright 2026 the a3dfdg authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

     http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef A3DFDG_ERROR_HPP
#define A3DFDG_ERROR_HPP

#include <stdexcept>
#include <string>

namespace a3dfdg {

// Invalid-argument conditions use std::invalid_argument directly.

/// Malformed or truncated serialized payload (bank, volume, checkpoint files).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested entity does not exist (empty bank, missing provenance).
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad run configuration (unknown key, unusable value, missing input).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric has no defined value for the given inputs (e.g. ASD on an empty mask).
class UndefinedMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace a3dfdg

#endif
