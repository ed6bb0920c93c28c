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

#include "a3dfdg/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "a3dfdg/bytes.hpp"
#include "a3dfdg/error.hpp"

namespace a3dfdg::io {

namespace {

constexpr std::uint32_t kVolumeVersion = 1;
constexpr std::uint32_t kModelVersion = 1;
constexpr std::size_t kVolumeHeaderSize = 64;

void writeVolumeHeader(bytes::Writer& w, const char (&magic)[5], Extent3 shape,
                       Spacing spacing, ScoreRange zExtent) {
  w.magic(magic);
  w.u32(kVolumeVersion);
  w.u32(static_cast<std::uint32_t>(shape.h));
  w.u32(static_cast<std::uint32_t>(shape.w));
  w.u32(static_cast<std::uint32_t>(shape.d));
  w.f32(spacing.h);
  w.f32(spacing.w);
  w.f32(spacing.d);
  w.f32(zExtent.lo);
  w.f32(zExtent.hi);
  w.pad(kVolumeHeaderSize);
}

struct VolumeHeader {
  Extent3 shape;
  Spacing spacing;
  ScoreRange zExtent;
};

VolumeHeader readVolumeHeader(bytes::Reader& r, const char (&magic)[5],
                              const std::string& what) {
  r.expectMagic(magic);
  const std::uint32_t version = r.u32();
  if (version != kVolumeVersion) {
    throw FormatError(what + ": unsupported version " +
                      std::to_string(version));
  }
  VolumeHeader h;
  h.shape.h = static_cast<Eigen::Index>(r.u32());
  h.shape.w = static_cast<Eigen::Index>(r.u32());
  h.shape.d = static_cast<Eigen::Index>(r.u32());
  h.spacing.h = r.f32();
  h.spacing.w = r.f32();
  h.spacing.d = r.f32();
  h.zExtent.lo = r.f32();
  h.zExtent.hi = r.f32();
  r.skip(kVolumeHeaderSize - 40);
  if (!h.shape.allPositive() || !h.spacing.allPositive()) {
    throw FormatError(what + ": non-positive shape or spacing");
  }
  return h;
}

std::string csvNum(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s.precision(9);
  s << v;
  return s.str();
}

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parseCsvNum(const std::string& cell, const std::string& what) {
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw FormatError(what + ": bad numeric cell '" + cell + "'");
  }
}

/// Metric columns of one scope: dsc per organ, global dsc, asd per organ,
/// global asd.
void appendScopeHeader(std::ostringstream& out, const std::string& scope,
                       const std::vector<std::string>& organNames) {
  for (const std::string& n : organNames) out << "," << scope << "_dsc_" << n;
  out << "," << scope << "_global_dsc";
  for (const std::string& n : organNames) out << "," << scope << "_asd_" << n;
  out << "," << scope << "_global_asd";
}

void appendScopeRow(std::ostringstream& out, const MetricTable& t,
                    const std::vector<int>& organClasses, bool evaluated) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto lookup = [&](const std::map<int, double>& m, int c) {
    const auto it = m.find(c);
    return it == m.end() ? nan : it->second;
  };
  for (int c : organClasses) {
    out << "," << csvNum(evaluated ? lookup(t.dscByClass, c) : nan);
  }
  out << "," << csvNum(evaluated ? t.globalDsc : nan);
  for (int c : organClasses) {
    out << "," << csvNum(evaluated ? lookup(t.asdByClass, c) : nan);
  }
  out << "," << csvNum(evaluated ? t.globalAsd : nan);
}

void parseScopeRow(const std::vector<std::string>& cells, std::size_t& at,
                   const std::vector<int>& organClasses, MetricTable& t,
                   const std::string& what) {
  bool any = false;
  for (int c : organClasses) {
    const double v = parseCsvNum(cells.at(at++), what);
    if (!std::isnan(v)) {
      t.dscByClass[c] = v;
      any = true;
    }
  }
  t.globalDsc = parseCsvNum(cells.at(at++), what);
  for (int c : organClasses) {
    const double v = parseCsvNum(cells.at(at++), what);
    if (!std::isnan(v)) {
      t.asdByClass[c] = v;
    } else if (any) {
      t.missingAsd.push_back(c);
    }
  }
  t.globalAsd = parseCsvNum(cells.at(at++), what);
}

}  // namespace

std::vector<std::uint8_t> readBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("io: cannot open '" + path + "'");
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) throw FormatError("io: read failed for '" + path + "'");
  return data;
}

void writeBytes(const std::string& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("io: cannot create '" + path + "'");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  out.flush();
  if (!out) throw FormatError("io: write failed for '" + path + "'");
}

void writeVolume(const std::string& path, const Volume& v) {
  bytes::Writer w;
  writeVolumeHeader(w, "A3DV", extentOf(v.data), v.spacing, v.zExtent);
  w.f32Array(v.data.data(), static_cast<std::size_t>(v.data.size()));
  writeBytes(path, w.bytes().data(), w.size());
}

Volume readVolume(const std::string& path) {
  const std::vector<std::uint8_t> raw = readBytes(path);
  bytes::Reader r(raw.data(), raw.size(), "volume '" + path + "'");
  const VolumeHeader h = readVolumeHeader(r, "A3DV", "volume '" + path + "'");
  Tensor3 data(h.shape.h, h.shape.w, h.shape.d);
  r.f32Array(data.data(), static_cast<std::size_t>(data.size()));
  r.expectEnd();
  return Volume{std::move(data), h.spacing, h.zExtent};
}

void writeLabels(const std::string& path, const Labels3& labels,
                 Spacing spacing, ScoreRange zExtent) {
  bytes::Writer w;
  writeVolumeHeader(w, "A3DL", extentOf(labels), spacing, zExtent);
  w.u8Array(labels.data(), static_cast<std::size_t>(labels.size()));
  writeBytes(path, w.bytes().data(), w.size());
}

LabelsFile readLabels(const std::string& path) {
  const std::vector<std::uint8_t> raw = readBytes(path);
  bytes::Reader r(raw.data(), raw.size(), "labels '" + path + "'");
  const VolumeHeader h = readVolumeHeader(r, "A3DL", "labels '" + path + "'");
  LabelsFile out;
  out.labels = Labels3(h.shape.h, h.shape.w, h.shape.d);
  out.spacing = h.spacing;
  out.zExtent = h.zExtent;
  r.u8Array(out.labels.data(), static_cast<std::size_t>(out.labels.size()));
  r.expectEnd();
  return out;
}

void writeModel(const std::string& path, const SegModel& m) {
  detail::checkModel(m);
  bytes::Writer w;
  w.magic("A3DM");
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(m.numClasses));
  w.u64(static_cast<std::uint64_t>(m.params.size()));
  w.f32Array(m.params.data(), static_cast<std::size_t>(m.params.size()));
  writeBytes(path, w.bytes().data(), w.size());
}

SegModel readModel(const std::string& path) {
  const std::vector<std::uint8_t> raw = readBytes(path);
  const std::string what = "model '" + path + "'";
  bytes::Reader r(raw.data(), raw.size(), what);
  r.expectMagic("A3DM");
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    throw FormatError(what + ": unsupported version " +
                      std::to_string(version));
  }
  SegModel m;
  m.numClasses = static_cast<int>(r.u32());
  const std::uint64_t count = r.u64();
  if (m.numClasses < 2 ||
      count != static_cast<std::uint64_t>(paramCount(m.numClasses))) {
    throw FormatError(what + ": parameter count does not match class count");
  }
  m.params.resize(static_cast<Eigen::Index>(count));
  r.f32Array(m.params.data(), static_cast<std::size_t>(count));
  r.expectEnd();
  return m;
}

void writeBankFile(const std::string& path, const StyleBank& bank) {
  const std::vector<std::uint8_t> raw = serializeBank(bank);
  writeBytes(path, raw.data(), raw.size());
}

StyleBank readBankFile(const std::string& path) {
  const std::vector<std::uint8_t> raw = readBytes(path);
  return deserializeBank(raw);
}

std::string labelsPathFor(const std::string& volumePath) {
  const std::string suffix = ".a3dv";
  if (volumePath.size() >= suffix.size() &&
      volumePath.compare(volumePath.size() - suffix.size(), suffix.size(),
                         suffix) == 0) {
    return volumePath.substr(0, volumePath.size() - suffix.size()) + ".a3dl";
  }
  return volumePath + ".a3dl";
}

void writeDataManifest(const std::string& path,
                       const std::vector<ManifestEntry>& entries) {
  std::ostringstream out;
  out << "path,client,split,z_lo,z_hi\n";
  for (const ManifestEntry& e : entries) {
    if (e.path.find(',') != std::string::npos) {
      throw std::invalid_argument("manifest: path contains a comma: " + e.path);
    }
    out << e.path << "," << e.client << "," << e.split << ","
        << csvNum(e.zLo) << "," << csvNum(e.zHi) << "\n";
  }
  const std::string s = out.str();
  writeBytes(path, s.data(), s.size());
}

std::vector<ManifestEntry> readDataManifest(const std::string& path) {
  const std::vector<std::uint8_t> raw = readBytes(path);
  const std::string what = "manifest '" + path + "'";
  std::istringstream in(std::string(raw.begin(), raw.end()));
  std::string line;
  if (!std::getline(in, line) || line != "path,client,split,z_lo,z_hi") {
    throw FormatError(what + ": missing header line");
  }
  std::vector<ManifestEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = splitCsvLine(line);
    if (cells.size() != 5) {
      throw FormatError(what + ": expected 5 columns, got " +
                        std::to_string(cells.size()));
    }
    ManifestEntry e;
    e.path = cells[0];
    e.client = static_cast<int>(parseCsvNum(cells[1], what));
    e.split = cells[2];
    e.zLo = static_cast<float>(parseCsvNum(cells[3], what));
    e.zHi = static_cast<float>(parseCsvNum(cells[4], what));
    entries.push_back(std::move(e));
  }
  return entries;
}

void writeRoundsCsv(const std::string& path,
                    const std::vector<RoundReport>& reports,
                    const std::vector<int>& organClasses,
                    const std::vector<std::string>& organNames,
                    std::size_t clientCount) {
  if (organClasses.size() != organNames.size()) {
    throw std::invalid_argument("rounds csv: organ ids and names must match");
  }
  std::ostringstream out;
  out << "round";
  for (std::size_t c = 0; c < clientCount; ++c) out << ",loss_client_" << c;
  appendScopeHeader(out, "infed", organNames);
  appendScopeHeader(out, "outfed", organNames);
  out << ",cumulative_bytes\n";
  for (const RoundReport& rep : reports) {
    if (rep.clientLoss.size() != clientCount) {
      throw std::invalid_argument("rounds csv: client loss count mismatch");
    }
    out << rep.round;
    for (float l : rep.clientLoss) out << "," << csvNum(l);
    appendScopeRow(out, rep.inFed, organClasses, rep.evaluated);
    appendScopeRow(out, rep.outFed, organClasses, rep.evaluated);
    out << "," << rep.cumulativeBytes << "\n";
  }
  const std::string s = out.str();
  writeBytes(path, s.data(), s.size());
}

RoundsCsv readRoundsCsv(const std::string& path) {
  const std::vector<std::uint8_t> raw = readBytes(path);
  const std::string what = "rounds csv '" + path + "'";
  std::istringstream in(std::string(raw.begin(), raw.end()));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(what + ": empty file");
  const std::vector<std::string> header = splitCsvLine(line);

  RoundsCsv out;
  std::size_t i = 1;
  while (i < header.size() && header[i].rfind("loss_client_", 0) == 0) ++i;
  out.clientCount = i - 1;
  const std::string dscPrefix = "infed_dsc_";
  int nextClass = 1;
  while (i < header.size() && header[i].rfind(dscPrefix, 0) == 0) {
    out.organNames.push_back(header[i].substr(dscPrefix.size()));
    out.organClasses.push_back(nextClass++);
    ++i;
  }
  const std::size_t expected = 1 + out.clientCount +
                               2 * (2 * out.organNames.size() + 2) + 1;
  if (header.empty() || header[0] != "round" || out.organNames.empty() ||
      header.size() != expected) {
    throw FormatError(what + ": unrecognized header layout");
  }

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = splitCsvLine(line);
    if (cells.size() != expected) {
      throw FormatError(what + ": row has " + std::to_string(cells.size()) +
                        " cells, header has " + std::to_string(expected));
    }
    RoundReport rep;
    std::size_t at = 0;
    rep.round = static_cast<int>(parseCsvNum(cells[at++], what));
    for (std::size_t c = 0; c < out.clientCount; ++c) {
      rep.clientLoss.push_back(
          static_cast<float>(parseCsvNum(cells[at++], what)));
    }
    parseScopeRow(cells, at, out.organClasses, rep.inFed, what);
    parseScopeRow(cells, at, out.organClasses, rep.outFed, what);
    rep.evaluated = !std::isnan(rep.inFed.globalDsc);
    rep.cumulativeBytes =
        static_cast<std::uint64_t>(parseCsvNum(cells[at++], what));
    out.reports.push_back(std::move(rep));
  }
  return out;
}

}  // namespace a3dfdg::io
