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

#ifndef A3DFDG_CONFIG_HPP
#define A3DFDG_CONFIG_HPP

#include <string>

#include "a3dfdg/federation.hpp"
#include "a3dfdg/phantom.hpp"

namespace a3dfdg {

// Flat `key = value` run configuration ('#' starts a comment). Unknown keys
// are rejected by name. Command-line flags override file values.

struct RunConfig {
  PhantomSpec phantom;
  FederationConfig fed;
  int cropsPerVolume = 4;          // styles per volume at bank registration
  float domainOffsetScale = 1.0f;  // multiplies every client intensity offset
};

RunConfig defaultRunConfig();

/// Applies one key; throws ConfigError naming an unknown key or bad value.
void applyConfigKey(RunConfig& cfg, const std::string& key,
                    const std::string& value);

/// Parses config text; line numbers appear in errors.
RunConfig parseRunConfig(const std::string& text);

/// Loads a config file; a missing file is a ConfigError naming the path.
RunConfig loadRunConfig(const std::string& path);

/// Sets every seed field (phantom and federation) at once.
void setSeed(RunConfig& cfg, std::uint64_t seed);

/// The phantom spec with domainOffsetScale applied to all client offsets.
PhantomSpec effectivePhantom(const RunConfig& cfg);

/// The config rendered back as parseable `key = value` lines.
std::string renderRunConfig(const RunConfig& cfg);

}  // namespace a3dfdg

#endif
