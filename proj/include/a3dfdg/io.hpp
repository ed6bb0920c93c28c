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

#ifndef A3DFDG_IO_HPP
#define A3DFDG_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "a3dfdg/federation.hpp"
#include "a3dfdg/segmodel.hpp"
#include "a3dfdg/stylebank.hpp"
#include "a3dfdg/volume.hpp"

namespace a3dfdg::io {

// On-disk artifacts, all little-endian. Voxel payloads are laid out h-fastest
// (flat index h + H*(w + W*d)). A volume file is a 64-byte header (magic
// "A3DV", version, H W D, spacings, z-window, zero padding) plus f32 voxels;
// a label file shares the header layout under magic "A3DL" with u8 voxels;
// a checkpoint is magic "A3DM", version, class count, parameter count, f32
// parameters.

/// Whole-file read; unopenable path is a ConfigError naming the path.
std::vector<std::uint8_t> readBytes(const std::string& path);
/// Atomic-enough write (truncate + write + flush); failure is a FormatError.
void writeBytes(const std::string& path, const void* data, std::size_t size);

void writeVolume(const std::string& path, const Volume& v);
Volume readVolume(const std::string& path);

struct LabelsFile {
  Labels3 labels;
  Spacing spacing;
  ScoreRange zExtent;
};
void writeLabels(const std::string& path, const Labels3& labels,
                 Spacing spacing, ScoreRange zExtent);
LabelsFile readLabels(const std::string& path);

void writeModel(const std::string& path, const SegModel& m);
SegModel readModel(const std::string& path);

void writeBankFile(const std::string& path, const StyleBank& bank);
StyleBank readBankFile(const std::string& path);

/// The sidecar label path of a volume path (extension swapped to .a3dl).
std::string labelsPathFor(const std::string& volumePath);

/// One generated volume: file path, owning client (-1 out-of-federation),
/// split name (train/val/test/outfed), generating z-window.
struct ManifestEntry {
  std::string path;
  int client = 0;
  std::string split;
  float zLo = 0.0f, zHi = 0.0f;
};

void writeDataManifest(const std::string& path,
                       const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> readDataManifest(const std::string& path);

/// Per-round CSV: round, per-client losses, per-organ and global DSC/ASD for
/// the in- and out-of-federation splits, cumulative traffic bytes. Metrics of
/// non-evaluated rounds and undefined ASDs render as "nan".
void writeRoundsCsv(const std::string& path,
                    const std::vector<RoundReport>& reports,
                    const std::vector<int>& organClasses,
                    const std::vector<std::string>& organNames,
                    std::size_t clientCount);

struct RoundsCsv {
  std::vector<RoundReport> reports;
  std::vector<int> organClasses;
  std::vector<std::string> organNames;
  std::size_t clientCount = 0;
};
RoundsCsv readRoundsCsv(const std::string& path);

}  // namespace a3dfdg::io

#endif
