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

#ifndef A3DFDG_TYPES_HPP
#define A3DFDG_TYPES_HPP

#include <Eigen/Core>
#include <unsupported/Eigen/CXX11/Tensor>

#include <cstdint>

namespace a3dfdg {

/// Voxel intensities, style payloads and model parameters are f32 throughout;
/// spectral analysis promotes to double internally.
using Real = float;

/// Dense 3D grid indexed (h, w, d); column-major, h fastest in memory.
template <typename Scalar>
using Grid3 = Eigen::Tensor<Scalar, 3>;

using Tensor3 = Grid3<Real>;
using Tensor3d = Grid3<double>;
using Mask3 = Grid3<bool>;
using Labels3 = Grid3<std::uint8_t>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct Index3 {
  Eigen::Index h = 0, w = 0, d = 0;

  Eigen::array<Eigen::Index, 3> arr() const { return {h, w, d}; }
  bool operator==(const Index3&) const = default;
};

struct Extent3 {
  Eigen::Index h = 0, w = 0, d = 0;

  Eigen::array<Eigen::Index, 3> arr() const { return {h, w, d}; }
  Eigen::Index count() const { return h * w * d; }
  bool allPositive() const { return h >= 1 && w >= 1 && d >= 1; }
  bool operator==(const Extent3&) const = default;
};

template <typename Scalar>
Extent3 extentOf(const Grid3<Scalar>& g) {
  return {g.dimension(0), g.dimension(1), g.dimension(2)};
}

/// Element-wise equality of two grids (shape and every value).
template <typename Scalar>
bool gridEquals(const Grid3<Scalar>& a, const Grid3<Scalar>& b) {
  if (extentOf(a) != extentOf(b)) return false;
  const Scalar* pa = a.data();
  const Scalar* pb = b.data();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!(pa[i] == pb[i])) return false;
  }
  return true;
}

/// Physical voxel size in mm along (h, w, d).
struct Spacing {
  float h = 1.0f, w = 1.0f, d = 1.0f;

  bool allPositive() const { return h > 0.0f && w > 0.0f && d > 0.0f; }
  bool operator==(const Spacing&) const = default;
};

/// Low-frequency band fractions per axis (the style-transfer extent).
struct Beta {
  float h = 0.01f, w = 0.01f, d = 0.05f;

  bool allPositive() const { return h > 0.0f && w > 0.0f && d > 0.0f; }
  bool operator==(const Beta&) const = default;
};

/// Slice-score interval on the 0 (pelvis) .. 100 (head) body axis.
struct ScoreRange {
  float lo = 0.0f, hi = 100.0f;

  bool valid() const {
    return lo >= 0.0f && hi <= 100.0f && lo <= hi && lo == lo && hi == hi;
  }
  bool operator==(const ScoreRange&) const = default;
};

}  // namespace a3dfdg

#endif
