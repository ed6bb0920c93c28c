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

#ifndef A3DFDG_STYLEBANK_HPP
#define A3DFDG_STYLEBANK_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "a3dfdg/rng.hpp"
#include "a3dfdg/spectral.hpp"
#include "a3dfdg/types.hpp"
#include "a3dfdg/volume.hpp"

namespace a3dfdg {

/// Source of per-volume slice-score extents (anatomical height of the bottom
/// and top slice). Implementations: phantom's analytic provider.
class SliceScoreProvider {
 public:
  virtual ~SliceScoreProvider() = default;
  virtual ScoreRange scoreExtent(const Volume& v) const = 0;
};

/// A registered style plus the slice score it was extracted at. The score is
/// retained for auditing bin assignment; retrieval only uses the bin.
struct StoredStyle {
  float sliceScore = 0.0f;
  StyleSpectrum style;
};

bool operator==(const StyleSpectrum& a, const StyleSpectrum& b);
bool operator==(const StoredStyle& a, const StoredStyle& b);

/// Two-level style store: client id -> slice-score bin -> styles. Shared with
/// every client once before training; immutable afterwards.
struct StyleBank {
  std::map<int, std::map<int, std::vector<StoredStyle>>> entries;
  float binSize = 10.0f;
  Beta beta;
  Extent3 cropSize{32, 32, 32};

  int binOf(float sliceScore) const {
    return static_cast<int>(std::floor(sliceScore / binSize));
  }
  std::size_t styleCount() const;
  bool empty() const { return styleCount() == 0; }

  bool operator==(const StyleBank& other) const;
};

/// Registers styles for one client: per training volume, respace to the
/// common spacing, draw cropsPerVolume random crops, and file each crop's
/// style under bin floor(z' / binSize). Volumes too small for the crop size
/// are skipped with a note in `warnings`, never an error.
StyleBank registerClientStyles(StyleBank bank, int clientId,
                               const std::vector<Volume>& trainVolumes,
                               int cropsPerVolume,
                               const SliceScoreProvider& provider,
                               std::uint64_t rngSeed,
                               Spacing commonSpacing = Spacing{},
                               std::vector<std::string>* warnings = nullptr);

/// Anatomically matched retrieval: uniformly picks a client other than the
/// requester whose bin floor(z'/binSize) is populated, then a style in that
/// bin. Fallbacks when that bin is empty everywhere else: (1) a uniformly
/// chosen other client with any styles contributes its nearest non-empty bin
/// (ties toward the lower index); (2) with no other client populated, the
/// requester's own matching (else nearest) bin. Empty bank: NotFoundError.
const StoredStyle& retrieveStyle(const StyleBank& bank, int requestingClient,
                                 float sliceScore, Rng& rng);

/// Slice-score-agnostic retrieval (the no-slice-matching ablation): uniform
/// over another client's non-empty bins, then uniform within the bin.
const StoredStyle& retrieveStyleAnyBin(const StyleBank& bank,
                                       int requestingClient, Rng& rng);

std::vector<std::uint8_t> serializeBank(const StyleBank& bank);
StyleBank deserializeBank(const std::uint8_t* data, std::size_t size);
StyleBank deserializeBank(const std::vector<std::uint8_t>& bytes);

/// Exact length of serializeBank's output, computed without serializing.
std::uint64_t bankSizeBytes(const StyleBank& bank);

}  // namespace a3dfdg

#endif
