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

#ifndef A3DFDG_RNG_HPP
#define A3DFDG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace a3dfdg {

// All randomness in the simulator flows through these fixed algorithms
// (splitmix64 + Box-Muller) instead of std:: distributions, whose output is
// implementation-defined. Same seed, same stream, on every platform.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a path of indices.
inline std::uint64_t deriveSeed(std::uint64_t base,
                                std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = base ^ 0xa3dfd6a3dfd6ull;
  for (std::uint64_t p : path) {
    s ^= splitmix64(p) + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2);
    (void)splitmix64(s);
  }
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t nextU64() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(nextU64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniformInt(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    const auto wide =
        static_cast<unsigned __int128>(nextU64()) * static_cast<unsigned __int128>(range);
    return lo + static_cast<std::int64_t>(static_cast<std::uint64_t>(wide >> 64));
  }

  /// Standard normal via Box-Muller; pairs are cached.
  double gaussian() {
    if (haveSpare_) {
      haveSpare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = unit();
    } while (u1 <= 0.0);
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    haveSpare_ = true;
    return r * std::cos(t);
  }

 private:
  std::uint64_t state_;
  bool haveSpare_ = false;
  double spare_ = 0.0;
};

/// Order-independent gaussian draw: the i-th value of a virtual stream.
/// Used for parameter initialization so layouts can be filled in any order.
inline double gaussianAt(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = deriveSeed(seed, {index});
  Rng rng(s);
  return rng.gaussian();
}

}  // namespace a3dfdg

#endif
