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

#include "a3dfdg/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "a3dfdg/error.hpp"

namespace a3dfdg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parseNumber(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw ConfigError("config: empty value for key '" + key + "'");
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) {
    throw ConfigError("config: invalid number '" + v + "' for key '" + key +
                      "'");
  }
  return x;
}

std::int64_t parseInt(const std::string& key, const std::string& value) {
  const double x = parseNumber(key, value);
  const auto i = static_cast<std::int64_t>(x);
  if (static_cast<double>(i) != x) {
    throw ConfigError("config: key '" + key + "' expects an integer");
  }
  return i;
}

float parseFloat(const std::string& key, const std::string& value) {
  return static_cast<float>(parseNumber(key, value));
}

std::uint64_t parseSeed(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  char* end = nullptr;
  const std::uint64_t x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw ConfigError("config: invalid seed '" + v + "' for key '" + key + "'");
  }
  return x;
}

}  // namespace

RunConfig defaultRunConfig() {
  RunConfig cfg;
  cfg.phantom = defaultPhantomSpec();
  cfg.fed.numClasses = static_cast<int>(cfg.phantom.organs.size()) + 1;
  return cfg;
}

void setSeed(RunConfig& cfg, std::uint64_t seed) {
  cfg.phantom.seed = seed;
  cfg.fed.seed = seed;
}

void applyConfigKey(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "seed") {
    setSeed(cfg, parseSeed(key, value));
  } else if (key == "rounds") {
    cfg.fed.rounds = static_cast<int>(parseInt(key, value));
  } else if (key == "local_iters_per_round") {
    cfg.fed.localItersPerRound = static_cast<int>(parseInt(key, value));
  } else if (key == "lr") {
    cfg.fed.lr = parseFloat(key, value);
  } else if (key == "batch_size") {
    cfg.fed.batchSize = static_cast<int>(parseInt(key, value));
  } else if (key == "alpha_lo") {
    cfg.fed.alphaLo = parseFloat(key, value);
  } else if (key == "alpha_hi") {
    cfg.fed.alphaHi = parseFloat(key, value);
  } else if (key == "beta_h") {
    cfg.fed.beta.h = parseFloat(key, value);
  } else if (key == "beta_w") {
    cfg.fed.beta.w = parseFloat(key, value);
  } else if (key == "beta_d") {
    cfg.fed.beta.d = parseFloat(key, value);
  } else if (key == "z_bin") {
    cfg.fed.zBin = parseFloat(key, value);
  } else if (key == "tau_air") {
    cfg.fed.tauAir = parseFloat(key, value);
  } else if (key == "arm") {
    cfg.fed.arm = parseArm(trim(value));
  } else if (key == "eval_every") {
    cfg.fed.evalEvery = static_cast<int>(parseInt(key, value));
  } else if (key == "threads") {
    cfg.fed.threads = static_cast<int>(parseInt(key, value));
  } else if (key == "crop_h") {
    cfg.fed.cropSize.h = parseInt(key, value);
  } else if (key == "crop_w") {
    cfg.fed.cropSize.w = parseInt(key, value);
  } else if (key == "crop_d") {
    cfg.fed.cropSize.d = parseInt(key, value);
  } else if (key == "spacing_h") {
    cfg.fed.commonSpacing.h = parseFloat(key, value);
    cfg.phantom.spacing.h = cfg.fed.commonSpacing.h;
  } else if (key == "spacing_w") {
    cfg.fed.commonSpacing.w = parseFloat(key, value);
    cfg.phantom.spacing.w = cfg.fed.commonSpacing.w;
  } else if (key == "spacing_d") {
    cfg.fed.commonSpacing.d = parseFloat(key, value);
    cfg.phantom.spacing.d = cfg.fed.commonSpacing.d;
  } else if (key == "volume_h") {
    cfg.phantom.volumeShape.h = parseInt(key, value);
  } else if (key == "volume_w") {
    cfg.phantom.volumeShape.w = parseInt(key, value);
  } else if (key == "volume_d") {
    cfg.phantom.volumeShape.d = parseInt(key, value);
  } else if (key == "volumes_per_client") {
    cfg.phantom.volumesPerClient = static_cast<int>(parseInt(key, value));
  } else if (key == "crops_per_volume") {
    cfg.cropsPerVolume = static_cast<int>(parseInt(key, value));
  } else if (key == "domain_offset_scale") {
    cfg.domainOffsetScale = parseFloat(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

RunConfig parseRunConfig(const std::string& text) {
  RunConfig cfg = defaultRunConfig();
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineNo) +
                        " is not 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config: line " + std::to_string(lineNo) +
                        " has an empty key");
    }
    try {
      applyConfigKey(cfg, key, value);
    } catch (const ConfigError& e) {
      // Re-raise with file position; strip the standard prefix to avoid
      // "config: line 3: config: ..." stutter.
      std::string msg = e.what();
      const std::string prefix = "config: ";
      if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
      throw ConfigError("config: line " + std::to_string(lineNo) + ": " + msg);
    }
  }
  return cfg;
}

RunConfig loadRunConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parseRunConfig(buf.str());
}

PhantomSpec effectivePhantom(const RunConfig& cfg) {
  PhantomSpec spec = cfg.phantom;
  for (ClientDomain& c : spec.clients) c.offset *= cfg.domainOffsetScale;
  spec.outFed.offset *= cfg.domainOffsetScale;
  return spec;
}

std::string renderRunConfig(const RunConfig& cfg) {
  std::ostringstream out;
  out << "seed = " << cfg.fed.seed << "\n"
      << "rounds = " << cfg.fed.rounds << "\n"
      << "local_iters_per_round = " << cfg.fed.localItersPerRound << "\n"
      << "lr = " << cfg.fed.lr << "\n"
      << "batch_size = " << cfg.fed.batchSize << "\n"
      << "alpha_lo = " << cfg.fed.alphaLo << "\n"
      << "alpha_hi = " << cfg.fed.alphaHi << "\n"
      << "beta_h = " << cfg.fed.beta.h << "\n"
      << "beta_w = " << cfg.fed.beta.w << "\n"
      << "beta_d = " << cfg.fed.beta.d << "\n"
      << "z_bin = " << cfg.fed.zBin << "\n"
      << "tau_air = " << cfg.fed.tauAir << "\n"
      << "arm = " << armName(cfg.fed.arm) << "\n"
      << "eval_every = " << cfg.fed.evalEvery << "\n"
      << "threads = " << cfg.fed.threads << "\n"
      << "crop_h = " << cfg.fed.cropSize.h << "\n"
      << "crop_w = " << cfg.fed.cropSize.w << "\n"
      << "crop_d = " << cfg.fed.cropSize.d << "\n"
      << "spacing_h = " << cfg.fed.commonSpacing.h << "\n"
      << "spacing_w = " << cfg.fed.commonSpacing.w << "\n"
      << "spacing_d = " << cfg.fed.commonSpacing.d << "\n"
      << "volume_h = " << cfg.phantom.volumeShape.h << "\n"
      << "volume_w = " << cfg.phantom.volumeShape.w << "\n"
      << "volume_d = " << cfg.phantom.volumeShape.d << "\n"
      << "volumes_per_client = " << cfg.phantom.volumesPerClient << "\n"
      << "crops_per_volume = " << cfg.cropsPerVolume << "\n"
      << "domain_offset_scale = " << cfg.domainOffsetScale << "\n";
  return out.str();
}

}  // namespace a3dfdg
