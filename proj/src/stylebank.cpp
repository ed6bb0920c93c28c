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

#include "a3dfdg/stylebank.hpp"

#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <utility>

#include "a3dfdg/bytes.hpp"
#include "a3dfdg/error.hpp"

namespace a3dfdg {

namespace {

constexpr std::uint32_t kBankVersion = 1;

int nearestBin(const std::map<int, std::vector<StoredStyle>>& bins, int target) {
  int best = 0;
  long bestDist = -1;
  for (const auto& [idx, styles] : bins) {
    if (styles.empty()) continue;
    const long dist = std::labs(static_cast<long>(idx) - static_cast<long>(target));
    if (bestDist < 0 || dist < bestDist) {  // ascending scan keeps the lower tie
      best = idx;
      bestDist = dist;
    }
  }
  if (bestDist < 0) throw NotFoundError("style bank: client has no styles");
  return best;
}

const StoredStyle& pickUniform(const std::vector<StoredStyle>& styles, Rng& rng) {
  const auto i = rng.uniformInt(0, static_cast<std::int64_t>(styles.size()) - 1);
  return styles[static_cast<std::size_t>(i)];
}

}  // namespace

bool operator==(const StyleSpectrum& a, const StyleSpectrum& b) {
  return a.beta == b.beta && a.sourceShape == b.sourceShape &&
         gridEquals(a.block, b.block);
}

bool operator==(const StoredStyle& a, const StoredStyle& b) {
  return a.sliceScore == b.sliceScore && a.style == b.style;
}

std::size_t StyleBank::styleCount() const {
  std::size_t n = 0;
  for (const auto& [cid, bins] : entries) {
    for (const auto& [idx, styles] : bins) n += styles.size();
  }
  return n;
}

bool StyleBank::operator==(const StyleBank& other) const {
  return binSize == other.binSize && beta == other.beta &&
         cropSize == other.cropSize && entries == other.entries;
}

StyleBank registerClientStyles(StyleBank bank, int clientId,
                               const std::vector<Volume>& trainVolumes,
                               int cropsPerVolume,
                               const SliceScoreProvider& provider,
                               std::uint64_t rngSeed, Spacing commonSpacing,
                               std::vector<std::string>* warnings) {
  if (cropsPerVolume < 1) {
    throw std::invalid_argument("registerClientStyles: cropsPerVolume must be >= 1");
  }
  for (std::size_t vi = 0; vi < trainVolumes.size(); ++vi) {
    Volume v = trainVolumes[vi];
    v.zExtent = provider.scoreExtent(v);
    v = respace(v, commonSpacing);
    const Extent3 shape = extentOf(v.data);
    if (shape.h < bank.cropSize.h || shape.w < bank.cropSize.w ||
        shape.d < bank.cropSize.d) {
      if (warnings) {
        warnings->push_back("client " + std::to_string(clientId) + " volume " +
                            std::to_string(vi) +
                            ": smaller than crop size after respacing, skipped");
      }
      continue;
    }
    Rng rng(deriveSeed(rngSeed, {static_cast<std::uint64_t>(clientId), vi}));
    for (int c = 0; c < cropsPerVolume; ++c) {
      const Index3 origin = randomCropOrigin(shape, bank.cropSize, rng);
      SubVolume sv = cropSubVolume(v, origin, bank.cropSize);
      StyleSpectrum style = extractStyle(fft3(sv), bank.beta);
      const int bin = bank.binOf(sv.sliceScore);
      bank.entries[clientId][bin].push_back(
          StoredStyle{sv.sliceScore, std::move(style)});
    }
  }
  return bank;
}

const StoredStyle& retrieveStyle(const StyleBank& bank, int requestingClient,
                                 float sliceScore, Rng& rng) {
  if (bank.empty()) throw NotFoundError("style bank is empty");
  const int bin = bank.binOf(sliceScore);

  std::vector<const std::vector<StoredStyle>*> exact;
  for (const auto& [cid, bins] : bank.entries) {
    if (cid == requestingClient) continue;
    const auto it = bins.find(bin);
    if (it != bins.end() && !it->second.empty()) exact.push_back(&it->second);
  }
  if (!exact.empty()) {
    const auto i = rng.uniformInt(0, static_cast<std::int64_t>(exact.size()) - 1);
    return pickUniform(*exact[static_cast<std::size_t>(i)], rng);
  }

  std::vector<const std::map<int, std::vector<StoredStyle>>*> others;
  for (const auto& [cid, bins] : bank.entries) {
    if (cid == requestingClient) continue;
    bool any = false;
    for (const auto& [idx, styles] : bins) {
      if (!styles.empty()) {
        any = true;
        break;
      }
    }
    if (any) others.push_back(&bins);
  }
  if (!others.empty()) {
    const auto i = rng.uniformInt(0, static_cast<std::int64_t>(others.size()) - 1);
    const auto& bins = *others[static_cast<std::size_t>(i)];
    return pickUniform(bins.at(nearestBin(bins, bin)), rng);
  }

  // All styles belong to the requester; serve its matching (else nearest) bin.
  const auto own = bank.entries.find(requestingClient);
  if (own == bank.entries.end()) throw NotFoundError("style bank is empty");
  const auto it = own->second.find(bin);
  if (it != own->second.end() && !it->second.empty()) {
    return pickUniform(it->second, rng);
  }
  return pickUniform(own->second.at(nearestBin(own->second, bin)), rng);
}

const StoredStyle& retrieveStyleAnyBin(const StyleBank& bank,
                                       int requestingClient, Rng& rng) {
  if (bank.empty()) throw NotFoundError("style bank is empty");

  std::vector<const std::map<int, std::vector<StoredStyle>>*> candidates;
  for (const auto& [cid, bins] : bank.entries) {
    if (cid == requestingClient) continue;
    for (const auto& [idx, styles] : bins) {
      if (!styles.empty()) {
        candidates.push_back(&bins);
        break;
      }
    }
  }
  const std::map<int, std::vector<StoredStyle>>* bins = nullptr;
  if (!candidates.empty()) {
    const auto i =
        rng.uniformInt(0, static_cast<std::int64_t>(candidates.size()) - 1);
    bins = candidates[static_cast<std::size_t>(i)];
  } else {
    const auto own = bank.entries.find(requestingClient);
    if (own == bank.entries.end()) throw NotFoundError("style bank is empty");
    bins = &own->second;
  }

  std::vector<const std::vector<StoredStyle>*> nonEmpty;
  for (const auto& [idx, styles] : *bins) {
    if (!styles.empty()) nonEmpty.push_back(&styles);
  }
  if (nonEmpty.empty()) throw NotFoundError("style bank is empty");
  const auto b = rng.uniformInt(0, static_cast<std::int64_t>(nonEmpty.size()) - 1);
  return pickUniform(*nonEmpty[static_cast<std::size_t>(b)], rng);
}

std::vector<std::uint8_t> serializeBank(const StyleBank& bank) {
  bytes::Writer w;
  w.magic("A3DB");
  w.u32(kBankVersion);
  w.f32(bank.binSize);
  w.f32(bank.beta.h);
  w.f32(bank.beta.w);
  w.f32(bank.beta.d);
  w.u32(static_cast<std::uint32_t>(bank.cropSize.h));
  w.u32(static_cast<std::uint32_t>(bank.cropSize.w));
  w.u32(static_cast<std::uint32_t>(bank.cropSize.d));
  w.u32(static_cast<std::uint32_t>(bank.entries.size()));
  for (const auto& [cid, bins] : bank.entries) {
    w.u32(static_cast<std::uint32_t>(cid));
    w.u32(static_cast<std::uint32_t>(bins.size()));
    for (const auto& [idx, styles] : bins) {
      w.i32(idx);
      w.u32(static_cast<std::uint32_t>(styles.size()));
      for (const StoredStyle& s : styles) {
        w.f32(s.sliceScore);
        const Extent3 be = extentOf(s.style.block);
        w.u32(static_cast<std::uint32_t>(be.h));
        w.u32(static_cast<std::uint32_t>(be.w));
        w.u32(static_cast<std::uint32_t>(be.d));
        w.f32Array(s.style.block.data(), static_cast<std::size_t>(be.count()));
      }
    }
  }
  return w.take();
}

StyleBank deserializeBank(const std::uint8_t* data, std::size_t size) {
  bytes::Reader r(data, size, "style bank");
  r.expectMagic("A3DB");
  const std::uint32_t version = r.u32();
  if (version != kBankVersion) {
    throw FormatError("style bank: unsupported version " + std::to_string(version));
  }
  StyleBank bank;
  bank.binSize = r.f32();
  bank.beta = Beta{r.f32(), r.f32(), r.f32()};
  bank.cropSize = Extent3{static_cast<Eigen::Index>(r.u32()),
                          static_cast<Eigen::Index>(r.u32()),
                          static_cast<Eigen::Index>(r.u32())};
  if (!(bank.binSize > 0.0f) || !bank.beta.allPositive() ||
      !bank.cropSize.allPositive()) {
    throw FormatError("style bank: invalid header fields");
  }
  const Extent3 blockShape = styleBlockExtent(bank.beta, bank.cropSize);
  const std::uint32_t clientCount = r.u32();
  for (std::uint32_t c = 0; c < clientCount; ++c) {
    const int cid = static_cast<int>(r.u32());
    if (bank.entries.count(cid) != 0) {
      throw FormatError("style bank: duplicate client id");
    }
    auto& bins = bank.entries[cid];
    const std::uint32_t binCount = r.u32();
    for (std::uint32_t b = 0; b < binCount; ++b) {
      const int idx = r.i32();
      if (bins.count(idx) != 0) throw FormatError("style bank: duplicate bin");
      auto& styles = bins[idx];
      const std::uint32_t styleCount = r.u32();
      styles.reserve(styleCount);
      for (std::uint32_t s = 0; s < styleCount; ++s) {
        StoredStyle st;
        st.sliceScore = r.f32();
        const Extent3 be{static_cast<Eigen::Index>(r.u32()),
                         static_cast<Eigen::Index>(r.u32()),
                         static_cast<Eigen::Index>(r.u32())};
        if (be != blockShape) {
          throw FormatError("style bank: style block shape mismatch");
        }
        st.style.beta = bank.beta;
        st.style.sourceShape = bank.cropSize;
        st.style.block = Tensor3(be.h, be.w, be.d);
        r.f32Array(st.style.block.data(), static_cast<std::size_t>(be.count()));
        styles.push_back(std::move(st));
      }
    }
  }
  r.expectEnd();
  return bank;
}

StyleBank deserializeBank(const std::vector<std::uint8_t>& bytes) {
  return deserializeBank(bytes.data(), bytes.size());
}

std::uint64_t bankSizeBytes(const StyleBank& bank) {
  std::uint64_t n = 4 + 4 + 4 + 12 + 12 + 4;  // header through client count
  for (const auto& [cid, bins] : bank.entries) {
    n += 8;
    for (const auto& [idx, styles] : bins) {
      n += 8;
      for (const StoredStyle& s : styles) {
        n += 16 + 4 * static_cast<std::uint64_t>(s.style.block.size());
      }
    }
  }
  return n;
}

}  // namespace a3dfdg
