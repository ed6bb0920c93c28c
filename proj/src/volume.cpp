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

#include "a3dfdg/volume.hpp"

#include <string>
#include <utility>

namespace a3dfdg {

Volume makeVolume(Tensor3 data, Spacing spacing, ScoreRange zExtent) {
  if (!extentOf(data).allPositive()) {
    throw std::invalid_argument("volume: all shape dims must be >= 1");
  }
  if (!spacing.allPositive()) {
    throw std::invalid_argument("volume: spacings must be > 0");
  }
  if (!zExtent.valid()) {
    throw std::invalid_argument(
        "volume: slice-score extent must satisfy 0 <= lo <= hi <= 100");
  }
  return Volume{std::move(data), spacing, zExtent};
}

Volume respace(const Volume& v, Spacing target) {
  if (!target.allPositive()) {
    throw std::invalid_argument("respace: target spacings must be > 0");
  }
  const Extent3 in = extentOf(v.data);
  const auto outDim = [](Eigen::Index n, float s, float t) {
    const double scaled = static_cast<double>(n) * static_cast<double>(s) /
                          static_cast<double>(t);
    return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(scaled)));
  };
  const Extent3 out{outDim(in.h, v.spacing.h, target.h),
                    outDim(in.w, v.spacing.w, target.w),
                    outDim(in.d, v.spacing.d, target.d)};
  const double sh = static_cast<double>(target.h) / static_cast<double>(v.spacing.h);
  const double sw = static_cast<double>(target.w) / static_cast<double>(v.spacing.w);
  const double sd = static_cast<double>(target.d) / static_cast<double>(v.spacing.d);
  return Volume{resampleTrilinear(v.data, out, sh, sw, sd), target, v.zExtent};
}

float sliceScoreOfCrop(ScoreRange extent, Eigen::Index parentD,
                       Eigen::Index d0, Eigen::Index cropD) {
  const double mid = (static_cast<double>(d0) + static_cast<double>(cropD) / 2.0) /
                     static_cast<double>(parentD);
  return static_cast<float>(extent.lo + (extent.hi - extent.lo) * mid);
}

SubVolume cropSubVolume(const Volume& v, Index3 origin, Extent3 size) {
  const Extent3 in = extentOf(v.data);
  if (!size.allPositive() || origin.h < 0 || origin.w < 0 || origin.d < 0 ||
      origin.h + size.h > in.h || origin.w + size.w > in.w ||
      origin.d + size.d > in.d) {
    throw std::invalid_argument("cropSubVolume: crop exceeds volume bounds");
  }
  Tensor3 block = v.data.slice(origin.arr(), size.arr());
  const float z = sliceScoreOfCrop(v.zExtent, in.d, origin.d, size.d);
  return SubVolume{std::move(block), origin, z};
}

Index3 randomCropOrigin(Extent3 volumeShape, Extent3 crop, Rng& rng) {
  if (!crop.allPositive() || crop.h > volumeShape.h || crop.w > volumeShape.w ||
      crop.d > volumeShape.d) {
    throw std::invalid_argument("randomCropOrigin: crop exceeds volume shape");
  }
  const auto centered = [&rng](Eigen::Index n, Eigen::Index c) {
    const Eigen::Index slack = n - c;
    return static_cast<Eigen::Index>(
        rng.uniformInt(slack / 2 - slack / 4, slack / 2 + slack / 4));
  };
  const Eigen::Index h = centered(volumeShape.h, crop.h);
  const Eigen::Index w = centered(volumeShape.w, crop.w);
  const Eigen::Index d =
      static_cast<Eigen::Index>(rng.uniformInt(0, volumeShape.d - crop.d));
  return Index3{h, w, d};
}

AirMask airMask(const SubVolume& sv, float tauAir) {
  Mask3 mask(sv.data.dimension(0), sv.data.dimension(1), sv.data.dimension(2));
  const Real* src = sv.data.data();
  bool* dst = mask.data();
  const Eigen::Index n = sv.data.size();
  for (Eigen::Index i = 0; i < n; ++i) dst[i] = src[i] < tauAir;
  return AirMask{std::move(mask)};
}

Labels3 resampleNearest(const Labels3& src, Extent3 outShape, double scaleH,
                        double scaleW, double scaleD) {
  const Eigen::Index H = src.dimension(0);
  const Eigen::Index W = src.dimension(1);
  const Eigen::Index D = src.dimension(2);
  Labels3 out(outShape.h, outShape.w, outShape.d);
  const auto nearest = [](Eigen::Index i, double scale, Eigen::Index n) {
    const double x = std::clamp(static_cast<double>(i) * scale, 0.0,
                                static_cast<double>(n - 1));
    return static_cast<Eigen::Index>(std::llround(x));
  };
  for (Eigen::Index d = 0; d < outShape.d; ++d) {
    const Eigen::Index sdI = nearest(d, scaleD, D);
    for (Eigen::Index w = 0; w < outShape.w; ++w) {
      const Eigen::Index swI = nearest(w, scaleW, W);
      for (Eigen::Index h = 0; h < outShape.h; ++h) {
        out(h, w, d) = src(nearest(h, scaleH, H), swI, sdI);
      }
    }
  }
  return out;
}

}  // namespace a3dfdg
