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

#ifndef A3DFDG_PHANTOM_HPP
#define A3DFDG_PHANTOM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "a3dfdg/stylebank.hpp"
#include "a3dfdg/types.hpp"
#include "a3dfdg/volume.hpp"

namespace a3dfdg {

// Synthetic multi-organ CT phantoms. Geometry (body contour, organ ellipsoids,
// labels) depends only on the volume index, so clients sharing a z-window see
// paired anatomy; appearance depends on the client domain. Organs carry a
// voxel-parity texture whose amplitude identifies the class independently of
// the client's intensity offset: the offset is the shortcut feature that
// frequency-domain style mixup can transfer between clients, the texture is
// the invariant cue that survives it.

/// One organ class: anatomical height, placement angle on the body ring,
/// per-axis radius range, appearance.
struct OrganSpec {
  int classId = 0;  // 1-based; 0 is background
  std::string name;
  float zCenter = 50.0f;  // slice-score units
  float angleDeg = 0.0f;  // position on the organ ring in the (h, w) plane
  float radiusMin = 4.0f, radiusMax = 6.0f;  // voxels
  float intensity = 100.0f;                  // HU before domain transform
  float texture = 30.0f;                     // parity-texture amplitude
};

/// Appearance transform and anatomical coverage of one client.
struct ClientDomain {
  float offset = 0.0f;
  float contrast = 1.0f;
  float smoothSigma = 0.0f;
  float noiseSigma = 0.0f;
  float offsetJitterSigma = 0.0f;  // per-volume N(0, sigma) added to offset
  ScoreRange zWindow;
};

struct PhantomSpec {
  std::vector<OrganSpec> organs;
  std::vector<ClientDomain> clients;
  ClientDomain outFed;
  int volumesPerClient = 8;
  Extent3 volumeShape{64, 64, 64};
  Spacing spacing;
  std::uint64_t seed = 1;
  float bodyIntensity = 30.0f;
  float airIntensity = -1000.0f;
  float organRingRadius = 13.0f;  // voxels from the body axis
};

/// Five training clients with staggered z-windows and an intensity-offset
/// ladder, one out-of-federation client beyond the training offset range.
PhantomSpec defaultPhantomSpec();

std::vector<int> organClassIds(const PhantomSpec& spec);

struct ClientDataset {
  std::vector<LabeledVolume> train, val, test;
};

/// Deterministic per-client dataset, split 60/10/30 into train/val/test.
ClientDataset generateClientDataset(const PhantomSpec& spec, int clientId);

/// Evaluation-only client whose intensity offset lies strictly outside the
/// training clients' range; never registered in any style bank.
std::vector<LabeledVolume> makeOutOfFederationClient(const PhantomSpec& spec);

/// The generating z-window, carried on the volume itself (zExtent survives
/// serialization). Throws NotFoundError when the volume carries no valid
/// extent.
ScoreRange analyticSliceScores(const Volume& v);

/// Slice-score source standing in for a body-part regressor.
class AnalyticSliceScoreProvider final : public SliceScoreProvider {
 public:
  ScoreRange scoreExtent(const Volume& v) const override {
    return analyticSliceScores(v);
  }
};

}  // namespace a3dfdg

#endif
