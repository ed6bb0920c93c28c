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

#include "a3dfdg/phantom.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "a3dfdg/error.hpp"
#include "a3dfdg/rng.hpp"

namespace a3dfdg {

namespace {

constexpr std::uint64_t kGeomStream = 11;
constexpr std::uint64_t kDomainStream = 12;
constexpr std::uint64_t kOutFedTag = 0xfeed;
constexpr std::uint64_t kOutFedGeomOffset = 1000;

// Air voxels are forced at or below this after every domain transform, well
// under the -200 air threshold.
constexpr float kAirCeiling = -250.0f;

struct OrganDraw {
  float ch, cw;        // (h, w) center
  float rh, rw, rd;    // semi-axes in voxels
};

void validateSpec(const PhantomSpec& spec) {
  const Extent3 s = spec.volumeShape;
  if (!s.allPositive() || !spec.spacing.allPositive()) {
    throw std::invalid_argument("phantom: invalid volume shape or spacing");
  }
  if (spec.volumesPerClient < 1) {
    throw std::invalid_argument("phantom: volumesPerClient must be >= 1");
  }
  const float maxPlane = 0.5f * static_cast<float>(std::min(s.h, s.w));
  for (const OrganSpec& o : spec.organs) {
    if (o.classId < 1 || !(o.zCenter >= 0.0f && o.zCenter <= 100.0f)) {
      throw std::invalid_argument("phantom: organ class/z-center out of range");
    }
    if (!(o.radiusMin > 0.0f) || o.radiusMax < o.radiusMin) {
      throw std::invalid_argument("phantom: organ radius range invalid");
    }
    if (spec.organRingRadius + o.radiusMax >= maxPlane ||
        2.0f * o.radiusMax >= static_cast<float>(s.d)) {
      throw std::invalid_argument("phantom: organ radius exceeds the volume");
    }
  }
  for (const ClientDomain& c : spec.clients) {
    if (!c.zWindow.valid() || !(c.contrast > 0.0f)) {
      throw std::invalid_argument("phantom: invalid client domain");
    }
  }
}

/// Body half-axes at anatomical height z; the torso narrows toward both ends.
void bodyRadii(const PhantomSpec& spec, float z, float& rh, float& rw) {
  const float m =
      0.88f + 0.10f * std::sin(std::numbers::pi_v<float> * z / 100.0f);
  rh = 0.42f * static_cast<float>(spec.volumeShape.h) * m;
  rw = 0.44f * static_cast<float>(spec.volumeShape.w) * m;
}

/// Separable Gaussian blur, edge-clamped. No-op at sigma <= 0.
void gaussianSmooth(Tensor3& t, float sigma) {
  if (!(sigma > 0.0f)) return;
  const int radius = static_cast<int>(std::ceil(3.0f * sigma));
  std::vector<float> kernel(static_cast<std::size_t>(2 * radius + 1));
  float sum = 0.0f;
  for (int i = -radius; i <= radius; ++i) {
    const float v = std::exp(-0.5f * static_cast<float>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (float& v : kernel) v /= sum;

  const Extent3 e = extentOf(t);
  Tensor3 tmp(e.h, e.w, e.d);
  const auto pass = [&](const Tensor3& src, Tensor3& dst, int axis) {
    const Eigen::Index n = axis == 0 ? e.h : axis == 1 ? e.w : e.d;
    for (Eigen::Index d = 0; d < e.d; ++d) {
      for (Eigen::Index w = 0; w < e.w; ++w) {
        for (Eigen::Index h = 0; h < e.h; ++h) {
          const Eigen::Index at = axis == 0 ? h : axis == 1 ? w : d;
          float acc = 0.0f;
          for (int k = -radius; k <= radius; ++k) {
            const Eigen::Index j =
                std::clamp<Eigen::Index>(at + k, 0, n - 1);
            const float s = axis == 0   ? src(j, w, d)
                            : axis == 1 ? src(h, j, d)
                                        : src(h, w, j);
            acc += kernel[static_cast<std::size_t>(k + radius)] * s;
          }
          dst(h, w, d) = acc;
        }
      }
    }
  };
  pass(t, tmp, 0);
  pass(tmp, t, 1);
  pass(t, tmp, 2);
  t = tmp;
}

/// Renders one volume: index-determined geometry, client-determined
/// appearance.
LabeledVolume renderVolume(const PhantomSpec& spec, const ClientDomain& domain,
                           std::uint64_t domainTag, std::uint64_t volIdx) {
  const Extent3 e = spec.volumeShape;
  const float cx = 0.5f * static_cast<float>(e.h - 1);
  const float cy = 0.5f * static_cast<float>(e.w - 1);
  const ScoreRange win = domain.zWindow;

  Rng geom(deriveSeed(spec.seed, {kGeomStream, volIdx}));
  std::vector<OrganDraw> draws(spec.organs.size());
  for (std::size_t i = 0; i < spec.organs.size(); ++i) {
    const OrganSpec& o = spec.organs[i];
    const float rad =
        o.angleDeg * std::numbers::pi_v<float> / 180.0f;
    OrganDraw& dr = draws[i];
    dr.ch = cx + spec.organRingRadius * std::cos(rad) +
            static_cast<float>(geom.uniform(-1.0, 1.0));
    dr.cw = cy + spec.organRingRadius * std::sin(rad) +
            static_cast<float>(geom.uniform(-1.0, 1.0));
    dr.rh = static_cast<float>(geom.uniform(o.radiusMin, o.radiusMax));
    dr.rw = static_cast<float>(geom.uniform(o.radiusMin, o.radiusMax));
    dr.rd = static_cast<float>(geom.uniform(o.radiusMin, o.radiusMax));
  }

  Tensor3 data(e.h, e.w, e.d);
  Labels3 labels(e.h, e.w, e.d);
  labels.setZero();
  Mask3 geomAir(e.h, e.w, e.d);

  const float winSpan = win.hi - win.lo;
  for (Eigen::Index d = 0; d < e.d; ++d) {
    const float z = win.lo + winSpan * (static_cast<float>(d) + 0.5f) /
                                 static_cast<float>(e.d);
    float rbh = 0.0f, rbw = 0.0f;
    bodyRadii(spec, z, rbh, rbw);
    for (Eigen::Index w = 0; w < e.w; ++w) {
      for (Eigen::Index h = 0; h < e.h; ++h) {
        const float nh = (static_cast<float>(h) - cx) / rbh;
        const float nw = (static_cast<float>(w) - cy) / rbw;
        const float rho = std::sqrt(nh * nh + nw * nw);
        geomAir(h, w, d) = rho > 1.0f;
        // Soft contour: logistic blend between air and body intensity.
        const float blend = 1.0f / (1.0f + std::exp(-12.0f * (1.0f - rho)));
        data(h, w, d) =
            spec.airIntensity + (spec.bodyIntensity - spec.airIntensity) * blend;
      }
    }
  }

  for (std::size_t i = 0; i < spec.organs.size(); ++i) {
    const OrganSpec& o = spec.organs[i];
    if (!(o.zCenter >= win.lo && o.zCenter <= win.hi)) continue;
    const OrganDraw& dr = draws[i];
    const float dc = (o.zCenter - win.lo) / winSpan * static_cast<float>(e.d);
    const auto lo = [](float c, float r) {
      return std::max<Eigen::Index>(
          0, static_cast<Eigen::Index>(std::floor(c - r)));
    };
    const auto hi = [](float c, float r, Eigen::Index n) {
      return std::min<Eigen::Index>(
          n - 1, static_cast<Eigen::Index>(std::ceil(c + r)));
    };
    for (Eigen::Index d = lo(dc, dr.rd); d <= hi(dc, dr.rd, e.d); ++d) {
      const float nd = (static_cast<float>(d) - dc) / dr.rd;
      for (Eigen::Index w = lo(dr.cw, dr.rw); w <= hi(dr.cw, dr.rw, e.w);
           ++w) {
        const float nw = (static_cast<float>(w) - dr.cw) / dr.rw;
        for (Eigen::Index h = lo(dr.ch, dr.rh);
             h <= hi(dr.ch, dr.rh, e.h); ++h) {
          const float nh = (static_cast<float>(h) - dr.ch) / dr.rh;
          if (nh * nh + nw * nw + nd * nd > 1.0f) continue;
          // Organs are tissue: an ellipsoid reaching past the body contour
          // is clipped to the body instead of floating in air.
          if (geomAir(h, w, d)) continue;
          const float sign = ((h + w + d) & 1) ? -1.0f : 1.0f;
          data(h, w, d) = o.intensity + o.texture * sign;
          labels(h, w, d) = static_cast<std::uint8_t>(o.classId);
        }
      }
    }
  }

  Rng dom(deriveSeed(spec.seed, {kDomainStream, domainTag, volIdx}));
  const float offset =
      domain.offset + domain.offsetJitterSigma *
                          static_cast<float>(dom.gaussian());
  {
    Real* p = data.data();
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      p[i] = domain.contrast * p[i] + offset;
    }
  }
  gaussianSmooth(data, domain.smoothSigma);
  if (domain.noiseSigma > 0.0f) {
    Real* p = data.data();
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      p[i] += domain.noiseSigma * static_cast<float>(dom.gaussian());
    }
  }
  {
    Real* p = data.data();
    const bool* air = geomAir.data();
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      if (air[i]) p[i] = std::min(p[i], kAirCeiling);
    }
  }

  return LabeledVolume{makeVolume(std::move(data), spec.spacing, win),
                       std::move(labels)};
}

}  // namespace

PhantomSpec defaultPhantomSpec() {
  PhantomSpec spec;
  // Base intensities sit in a narrow band so absolute brightness separates
  // foreground from body but barely separates organs once client offsets and
  // contrasts shift it; the per-organ texture amplitude is the cue that
  // survives every domain transform (and style mixup, which only moves the
  // low-frequency band).
  spec.organs = {
      {1, "liver", 65.0f, 90.0f, 11.0f, 14.0f, 124.0f, 40.0f},
      {2, "kidney", 45.0f, 234.0f, 9.0f, 12.0f, 100.0f, 80.0f},
      {3, "pancreas", 55.0f, 162.0f, 8.0f, 11.0f, 136.0f, 120.0f},
      {4, "spleen", 72.0f, 306.0f, 10.0f, 13.0f, 148.0f, 160.0f},
      {5, "gallbladder", 35.0f, 18.0f, 7.0f, 10.0f, 112.0f, 200.0f},
  };
  spec.organRingRadius = 15.0f;
  // The offset ladder is the federated conflict: wide enough that averaged
  // models cannot settle on one intensity calibration, which is what style
  // mixup repairs. Texture amplitude stays within a disjoint band per organ
  // across all contrasts.
  spec.clients = {
      {0.0f, 0.90f, 0.0f, 4.0f, 1.5f, {0.0f, 60.0f}},
      {100.0f, 1.05f, 0.0f, 5.0f, 1.5f, {20.0f, 80.0f}},
      {200.0f, 0.95f, 0.0f, 3.0f, 1.5f, {40.0f, 100.0f}},
      {300.0f, 1.10f, 0.0f, 6.0f, 1.5f, {10.0f, 70.0f}},
      {400.0f, 1.00f, 0.0f, 5.0f, 1.5f, {30.0f, 90.0f}},
  };
  spec.outFed = {500.0f, 1.05f, 0.0f, 5.0f, 1.5f, {15.0f, 85.0f}};
  return spec;
}

std::vector<int> organClassIds(const PhantomSpec& spec) {
  std::vector<int> ids;
  ids.reserve(spec.organs.size());
  for (const OrganSpec& o : spec.organs) ids.push_back(o.classId);
  return ids;
}

ClientDataset generateClientDataset(const PhantomSpec& spec, int clientId) {
  validateSpec(spec);
  if (clientId < 0 || clientId >= static_cast<int>(spec.clients.size())) {
    throw std::invalid_argument("phantom: client id out of range");
  }
  const ClientDomain& domain = spec.clients[static_cast<std::size_t>(clientId)];
  const int n = spec.volumesPerClient;
  const int nTrain = std::max<int>(1, static_cast<int>(std::llround(0.6 * n)));
  const int nVal = static_cast<int>(std::llround(0.1 * n));
  ClientDataset out;
  for (int i = 0; i < n; ++i) {
    LabeledVolume lv = renderVolume(spec, domain,
                                    static_cast<std::uint64_t>(clientId),
                                    static_cast<std::uint64_t>(i));
    if (i < nTrain) {
      out.train.push_back(std::move(lv));
    } else if (i < nTrain + nVal) {
      out.val.push_back(std::move(lv));
    } else {
      out.test.push_back(std::move(lv));
    }
  }
  return out;
}

std::vector<LabeledVolume> makeOutOfFederationClient(const PhantomSpec& spec) {
  validateSpec(spec);
  float maxOffset = 0.0f;
  for (const ClientDomain& c : spec.clients) {
    maxOffset = std::max(maxOffset, c.offset);
  }
  if (!spec.clients.empty() && !(spec.outFed.offset > maxOffset)) {
    throw std::invalid_argument(
        "phantom: out-of-federation offset must exceed every training offset");
  }
  std::vector<LabeledVolume> out;
  for (int i = 0; i < spec.volumesPerClient; ++i) {
    out.push_back(renderVolume(spec, spec.outFed, kOutFedTag,
                               kOutFedGeomOffset + static_cast<std::uint64_t>(i)));
  }
  return out;
}

ScoreRange analyticSliceScores(const Volume& v) {
  if (!v.zExtent.valid()) {
    throw NotFoundError("slice scores: volume carries no valid z-window");
  }
  return v.zExtent;
}

}  // namespace a3dfdg
