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

#ifndef A3DFDG_VOLUME_HPP
#define A3DFDG_VOLUME_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "a3dfdg/rng.hpp"
#include "a3dfdg/types.hpp"

namespace a3dfdg {

/// A 3D scalar grid in HU-like units with physical spacing and the
/// slice-score extent [lo, hi] spanned along the d axis.
struct Volume {
  Tensor3 data;
  Spacing spacing;
  ScoreRange zExtent;
};

/// Validated constructor; throws std::invalid_argument on broken invariants.
Volume makeVolume(Tensor3 data, Spacing spacing, ScoreRange zExtent);

/// A cropped block of a parent volume together with its voxel offset and the
/// anatomical slice score of its d-axis midpoint.
struct SubVolume {
  Tensor3 data;
  Index3 origin;
  float sliceScore = 0.0f;
};

struct AirMask {
  Mask3 mask;
};

/// A volume paired with its per-voxel class labels (same shape, 0 = background).
struct LabeledVolume {
  Volume volume;
  Labels3 labels;
};

/// Resamples onto the target physical spacing (trilinear, edge-clamped).
/// Output shape per axis is round(n * spacing/target), at least 1.
Volume respace(const Volume& v, Spacing target);

/// Exact sub-block copy; slice score is the d-axis midpoint of the crop
/// mapped linearly into the parent's score extent.
SubVolume cropSubVolume(const Volume& v, Index3 origin, Extent3 size);

/// Slice score of a crop starting at d0 with depth cropD inside a parent of
/// depth parentD spanning `extent`.
float sliceScoreOfCrop(ScoreRange extent, Eigen::Index parentD,
                       Eigen::Index d0, Eigen::Index cropD);

/// Per-voxel mask: true iff intensity < tauAir.
AirMask airMask(const SubVolume& sv, float tauAir);

/// Random crop origin used by style registration and local training: the d
/// offset is uniform over its full valid range, h and w stay in the middle
/// half of theirs so crops remain centred on the imaged body.
Index3 randomCropOrigin(Extent3 volumeShape, Extent3 crop, Rng& rng);

/// Trilinear resample of a grid: output voxel i samples the source at
/// coordinate i*scale per axis, clamped to the source extent. Integral
/// sample coordinates copy the source voxel bit-exactly.
template <typename Scalar>
Grid3<Scalar> resampleTrilinear(const Grid3<Scalar>& src, Extent3 outShape,
                                double scaleH, double scaleW, double scaleD) {
  const Eigen::Index H = src.dimension(0);
  const Eigen::Index W = src.dimension(1);
  const Eigen::Index D = src.dimension(2);
  Grid3<Scalar> out(outShape.h, outShape.w, outShape.d);

  struct Axis {
    Eigen::Index i0, i1;
    double frac;
  };
  const auto sample = [](Eigen::Index i, double scale, Eigen::Index n) -> Axis {
    double x = std::clamp(static_cast<double>(i) * scale, 0.0,
                          static_cast<double>(n - 1));
    const auto i0 = static_cast<Eigen::Index>(std::floor(x));
    return {i0, std::min<Eigen::Index>(i0 + 1, n - 1), x - static_cast<double>(i0)};
  };

  for (Eigen::Index d = 0; d < outShape.d; ++d) {
    const Axis ad = sample(d, scaleD, D);
    for (Eigen::Index w = 0; w < outShape.w; ++w) {
      const Axis aw = sample(w, scaleW, W);
      for (Eigen::Index h = 0; h < outShape.h; ++h) {
        const Axis ah = sample(h, scaleH, H);
        if (ah.frac == 0.0 && aw.frac == 0.0 && ad.frac == 0.0) {
          out(h, w, d) = src(ah.i0, aw.i0, ad.i0);
          continue;
        }
        double acc = 0.0;
        for (int cd = 0; cd < 2; ++cd) {
          const double wd = cd ? ad.frac : 1.0 - ad.frac;
          if (wd == 0.0) continue;
          for (int cw = 0; cw < 2; ++cw) {
            const double ww = cw ? aw.frac : 1.0 - aw.frac;
            if (ww == 0.0) continue;
            for (int ch = 0; ch < 2; ++ch) {
              const double wh = ch ? ah.frac : 1.0 - ah.frac;
              if (wh == 0.0) continue;
              acc += wd * ww * wh *
                     static_cast<double>(src(ch ? ah.i1 : ah.i0,
                                             cw ? aw.i1 : aw.i0,
                                             cd ? ad.i1 : ad.i0));
            }
          }
        }
        out(h, w, d) = static_cast<Scalar>(acc);
      }
    }
  }
  return out;
}

/// Nearest-neighbour resample for label grids.
Labels3 resampleNearest(const Labels3& src, Extent3 outShape, double scaleH,
                        double scaleW, double scaleD);

}  // namespace a3dfdg

#endif
