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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "a3dfdg/error.hpp"
#include "a3dfdg/io.hpp"
#include "a3dfdg/segmodel.hpp"
#include "a3dfdg/stylebank.hpp"
#include "doctest.h"
#include "support/testutil.hpp"

namespace fs = std::filesystem;
using namespace a3dfdg;

namespace {

// Per-case scratch directory under the test working directory; wiped on entry
// so reruns never see stale artifacts.
fs::path freshDir(const std::string& name) {
  const fs::path dir = fs::path("io_test_artifacts") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Volume sampleVolume(std::uint64_t seed, Extent3 e) {
  std::mt19937_64 g(seed);
  return Volume{testutil::randomTensor(g, e, -1000.0f, 400.0f),
                Spacing{1.5f, 0.8f, 2.5f}, ScoreRange{12.5f, 87.5f}};
}

void patchU32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  REQUIRE(at + 4 <= b.size());
  std::memcpy(b.data() + at, &v, 4);
}

void patchU64(std::vector<std::uint8_t>& b, std::size_t at, std::uint64_t v) {
  REQUIRE(at + 8 <= b.size());
  std::memcpy(b.data() + at, &v, 8);
}

void rewrite(const fs::path& p, const std::vector<std::uint8_t>& b) {
  io::writeBytes(p.string(), b.data(), b.size());
}

StoredStyle taggedStyle(float score, float fill) {
  StyleSpectrum s;
  s.block = Tensor3(1, 1, 3);
  s.block.setConstant(fill);
  s.sourceShape = Extent3{32, 32, 32};
  s.beta = Beta{};
  StoredStyle stored;
  stored.sliceScore = score;
  stored.style = s;
  return stored;
}

}  // namespace

TEST_CASE("volume files round-trip bit-exactly") {
  const fs::path dir = freshDir("volume_roundtrip");
  const Volume v = sampleVolume(41, Extent3{7, 6, 5});
  const fs::path path = dir / "v.a3dv";
  io::writeVolume(path.string(), v);

  // 64-byte header plus one f32 per voxel.
  CHECK(fs::file_size(path) == 64 + 4 * 7 * 6 * 5);

  const Volume back = io::readVolume(path.string());
  REQUIRE(extentOf(back.data) == extentOf(v.data));
  CHECK(std::memcmp(back.data.data(), v.data.data(),
                    sizeof(float) * static_cast<std::size_t>(v.data.size())) ==
        0);
  CHECK(back.spacing == v.spacing);
  CHECK(back.zExtent.lo == v.zExtent.lo);
  CHECK(back.zExtent.hi == v.zExtent.hi);
}

TEST_CASE("label files round-trip bit-exactly") {
  const fs::path dir = freshDir("labels_roundtrip");
  std::mt19937_64 g(7);
  std::uniform_int_distribution<int> lab(0, 5);
  Labels3 labels(6, 5, 4);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    labels.data()[i] = static_cast<std::uint8_t>(lab(g));
  }
  const Spacing spacing{2.0f, 2.0f, 3.0f};
  const ScoreRange z{30.0f, 70.0f};
  const fs::path path = dir / "v.a3dl";
  io::writeLabels(path.string(), labels, spacing, z);

  // 64-byte header plus one byte per voxel.
  CHECK(fs::file_size(path) == 64 + 6 * 5 * 4);

  const io::LabelsFile back = io::readLabels(path.string());
  REQUIRE(extentOf(back.labels) == extentOf(labels));
  CHECK(std::memcmp(back.labels.data(), labels.data(),
                    static_cast<std::size_t>(labels.size())) == 0);
  CHECK(back.spacing == spacing);
  CHECK(back.zExtent.lo == z.lo);
  CHECK(back.zExtent.hi == z.hi);
}

TEST_CASE("model checkpoints round-trip bit-exactly") {
  const fs::path dir = freshDir("model_roundtrip");
  for (const int numClasses : {2, 6}) {
    const SegModel m = makeSegModel<float>(numClasses, 77);
    const fs::path path = dir / ("m" + std::to_string(numClasses) + ".a3dm");
    io::writeModel(path.string(), m);

    // Magic + version + class count + u64 parameter count + f32 parameters.
    CHECK(fs::file_size(path) ==
          20 + 4 * static_cast<std::uintmax_t>(paramCount(numClasses)));

    const SegModel back = io::readModel(path.string());
    CHECK(back.numClasses == numClasses);
    REQUIRE(back.params.size() == m.params.size());
    CHECK(std::memcmp(back.params.data(), m.params.data(),
                      sizeof(float) *
                          static_cast<std::size_t>(m.params.size())) == 0);
  }
}

TEST_CASE("labelsPathFor swaps the volume extension") {
  CHECK(io::labelsPathFor("data/client0_train_03.a3dv") ==
        "data/client0_train_03.a3dl");
  CHECK(io::labelsPathFor("v.a3dv") == "v.a3dl");
  // Only a trailing .a3dv is replaced; anything else gains the suffix.
  CHECK(io::labelsPathFor("x.bin") == "x.bin.a3dl");
  CHECK(io::labelsPathFor("weird.a3dv.bak") == "weird.a3dv.bak.a3dl");
}

TEST_CASE("readBytes names the missing path") {
  const fs::path dir = freshDir("missing");
  const std::string path = (dir / "nope.a3dv").string();
  CHECK_THROWS_WITH_AS(io::readBytes(path),
                       ("io: cannot open '" + path + "'").c_str(), ConfigError);
  CHECK_THROWS_AS(io::readVolume(path), ConfigError);
  CHECK_THROWS_AS(io::readModel(path), ConfigError);
}

TEST_CASE("volume files reject malformed payloads") {
  const fs::path dir = freshDir("volume_malformed");
  const Volume v = sampleVolume(42, Extent3{4, 3, 2});
  const fs::path path = dir / "v.a3dv";
  io::writeVolume(path.string(), v);
  const std::vector<std::uint8_t> good = io::readBytes(path.string());
  const fs::path bad = dir / "bad.a3dv";

  SUBCASE("magic") {
    std::vector<std::uint8_t> b = good;
    b[0] = 'B';
    rewrite(bad, b);
    CHECK_THROWS_AS(io::readVolume(bad.string()), FormatError);
  }
  SUBCASE("version") {
    std::vector<std::uint8_t> b = good;
    patchU32(b, 4, 9);
    rewrite(bad, b);
    CHECK_THROWS_AS(io::readVolume(bad.string()), FormatError);
  }
  SUBCASE("zero height") {
    std::vector<std::uint8_t> b = good;
    patchU32(b, 8, 0);
    rewrite(bad, b);
    CHECK_THROWS_AS(io::readVolume(bad.string()), FormatError);
  }
  SUBCASE("truncation") {
    for (const std::size_t keep :
         {std::size_t{0}, std::size_t{63}, good.size() / 2, good.size() - 1}) {
      std::vector<std::uint8_t> b(good.begin(),
                                  good.begin() + static_cast<long>(keep));
      rewrite(bad, b);
      CHECK_THROWS_AS(io::readVolume(bad.string()), FormatError);
    }
  }
  SUBCASE("trailing byte") {
    std::vector<std::uint8_t> b = good;
    b.push_back(0);
    rewrite(bad, b);
    CHECK_THROWS_AS(io::readVolume(bad.string()), FormatError);
  }
  SUBCASE("label magic on a volume path") {
    // The two headers share a layout but not a magic; readers must not
    // accept each other's files.
    io::writeLabels((dir / "l.a3dl").string(), Labels3(2, 2, 2).setZero(),
                    Spacing{}, ScoreRange{0.0f, 1.0f});
    CHECK_THROWS_AS(io::readVolume((dir / "l.a3dl").string()), FormatError);
    CHECK_THROWS_AS(io::readLabels(path.string()), FormatError);
  }
}

TEST_CASE("model files reject count and class mismatches") {
  const fs::path dir = freshDir("model_malformed");
  const SegModel m = makeSegModel<float>(6, 3);
  const fs::path path = dir / "m.a3dm";
  io::writeModel(path.string(), m);
  const std::vector<std::uint8_t> good = io::readBytes(path.string());
  const fs::path bad = dir / "bad.a3dm";

  SUBCASE("parameter count off by one") {
    std::vector<std::uint8_t> b = good;
    patchU64(b, 12, static_cast<std::uint64_t>(m.params.size()) + 1);
    rewrite(bad, b);
    CHECK_THROWS_WITH_AS(
        io::readModel(bad.string()),
        ("model '" + bad.string() +
         "': parameter count does not match class count")
            .c_str(),
        FormatError);
  }
  SUBCASE("class count below the minimum") {
    std::vector<std::uint8_t> b = good;
    patchU32(b, 8, 1);
    rewrite(bad, b);
    CHECK_THROWS_AS(io::readModel(bad.string()), FormatError);
  }
  SUBCASE("payload shorter than the declared count") {
    std::vector<std::uint8_t> b(good.begin(), good.end() - 4);
    rewrite(bad, b);
    CHECK_THROWS_AS(io::readModel(bad.string()), FormatError);
  }
}

TEST_CASE("bank files round-trip through the serializer") {
  const fs::path dir = freshDir("bank");
  StyleBank bank;
  bank.binSize = 10.0f;
  bank.beta = Beta{};
  bank.cropSize = Extent3{32, 32, 32};
  bank.entries[0][3] = {taggedStyle(35.0f, 0.25f), taggedStyle(38.0f, 0.5f)};
  bank.entries[2][7] = {taggedStyle(71.0f, 0.75f)};

  const fs::path path = dir / "bank.a3db";
  io::writeBankFile(path.string(), bank);
  CHECK(fs::file_size(path) == bankSizeBytes(bank));

  const StyleBank back = io::readBankFile(path.string());
  CHECK(back == bank);

  std::vector<std::uint8_t> b = io::readBytes(path.string());
  b[0] = 'X';
  rewrite(path, b);
  CHECK_THROWS_AS(io::readBankFile(path.string()), FormatError);
}

TEST_CASE("data manifests round-trip") {
  const fs::path dir = freshDir("manifest");
  const std::vector<io::ManifestEntry> entries{
      {"data/client0_train_00.a3dv", 0, "train", 0.0f, 50.0f},
      {"data/client3_val_01.a3dv", 3, "val", 37.5f, 87.5f},
      {"data/outfed_00.a3dv", -1, "outfed", 20.0f, 80.0f},
  };
  const fs::path path = dir / "manifest.csv";
  io::writeDataManifest(path.string(), entries);

  const std::vector<io::ManifestEntry> back =
      io::readDataManifest(path.string());
  REQUIRE(back.size() == entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(back[i].path == entries[i].path);
    CHECK(back[i].client == entries[i].client);
    CHECK(back[i].split == entries[i].split);
    CHECK(back[i].zLo == entries[i].zLo);
    CHECK(back[i].zHi == entries[i].zHi);
  }

  SUBCASE("empty manifest is a bare header") {
    io::writeDataManifest(path.string(), {});
    CHECK(io::readDataManifest(path.string()).empty());
  }
  SUBCASE("commas in paths are rejected at write time") {
    CHECK_THROWS_AS(
        io::writeDataManifest(path.string(),
                              {{"a,b.a3dv", 0, "train", 0.0f, 1.0f}}),
        std::invalid_argument);
  }
  SUBCASE("missing header") {
    const std::string text = "data/x.a3dv,0,train,0,1\n";
    io::writeBytes(path.string(), text.data(), text.size());
    CHECK_THROWS_AS(io::readDataManifest(path.string()), FormatError);
  }
  SUBCASE("wrong column count") {
    const std::string text = "path,client,split,z_lo,z_hi\na.a3dv,0,train,0\n";
    io::writeBytes(path.string(), text.data(), text.size());
    CHECK_THROWS_AS(io::readDataManifest(path.string()), FormatError);
  }
  SUBCASE("unparseable client id") {
    const std::string text = "path,client,split,z_lo,z_hi\na.a3dv,x,train,0,1\n";
    io::writeBytes(path.string(), text.data(), text.size());
    CHECK_THROWS_AS(io::readDataManifest(path.string()), FormatError);
  }
}

TEST_CASE("rounds csv round-trips and renders gaps as nan") {
  const fs::path dir = freshDir("rounds");
  const std::vector<int> organClasses{1, 2};
  const std::vector<std::string> organNames{"liver", "kidney"};

  RoundReport r1;
  r1.round = 1;
  r1.clientLoss = {1.25f, 0.5f};
  r1.evaluated = false;
  r1.cumulativeBytes = 8056;

  RoundReport r2;
  r2.round = 2;
  r2.clientLoss = {0.75f, 0.25f};
  r2.evaluated = true;
  r2.inFed.dscByClass = {{1, 62.5}, {2, 40.0}};
  r2.inFed.asdByClass = {{1, 2.25}};
  r2.inFed.missingAsd = {2};
  r2.inFed.globalDsc = 51.25;
  r2.inFed.globalAsd = 2.25;
  r2.outFed.dscByClass = {{1, 30.0}, {2, 20.5}};
  r2.outFed.asdByClass = {{1, 4.5}, {2, 6.0}};
  r2.outFed.globalDsc = 25.25;
  r2.outFed.globalAsd = 5.25;
  r2.cumulativeBytes = 16112;

  const fs::path path = dir / "rounds.csv";
  io::writeRoundsCsv(path.string(), {r1, r2}, organClasses, organNames, 2);

  SUBCASE("header and nan cells are literal") {
    const std::vector<std::uint8_t> raw = io::readBytes(path.string());
    const std::string text(raw.begin(), raw.end());
    const std::string header =
        "round,loss_client_0,loss_client_1"
        ",infed_dsc_liver,infed_dsc_kidney,infed_global_dsc"
        ",infed_asd_liver,infed_asd_kidney,infed_global_asd"
        ",outfed_dsc_liver,outfed_dsc_kidney,outfed_global_dsc"
        ",outfed_asd_liver,outfed_asd_kidney,outfed_global_asd"
        ",cumulative_bytes\n";
    CHECK(text.rfind(header, 0) == 0);
    // Round 1 was not evaluated: its 12 metric cells are all nan.
    const std::string row1 = text.substr(header.size(),
                                         text.find('\n', header.size()) -
                                             header.size());
    std::size_t nans = 0;
    for (std::size_t at = row1.find("nan"); at != std::string::npos;
         at = row1.find("nan", at + 1)) {
      ++nans;
    }
    CHECK(nans == 12);
    // Round 2 carries exactly one nan: the ASD of the kidney class.
    const std::string row2 = text.substr(header.size() + row1.size() + 1);
    CHECK(row2.find("nan") == row2.rfind("nan"));
    CHECK(row2.find("nan") != std::string::npos);
  }

  SUBCASE("read reconstructs reports") {
    const io::RoundsCsv back = io::readRoundsCsv(path.string());
    CHECK(back.clientCount == 2);
    CHECK(back.organNames == organNames);
    CHECK(back.organClasses == organClasses);
    REQUIRE(back.reports.size() == 2);

    const RoundReport& b1 = back.reports[0];
    CHECK(b1.round == 1);
    CHECK(b1.clientLoss == r1.clientLoss);
    CHECK_FALSE(b1.evaluated);
    CHECK(b1.inFed.dscByClass.empty());
    CHECK(b1.cumulativeBytes == 8056);

    const RoundReport& b2 = back.reports[1];
    CHECK(b2.round == 2);
    CHECK(b2.clientLoss == r2.clientLoss);
    CHECK(b2.evaluated);
    CHECK(b2.inFed.dscByClass == r2.inFed.dscByClass);
    CHECK(b2.inFed.asdByClass == r2.inFed.asdByClass);
    CHECK(b2.inFed.missingAsd == r2.inFed.missingAsd);
    CHECK(b2.inFed.globalDsc == r2.inFed.globalDsc);
    CHECK(b2.inFed.globalAsd == r2.inFed.globalAsd);
    CHECK(b2.outFed.dscByClass == r2.outFed.dscByClass);
    CHECK(b2.outFed.asdByClass == r2.outFed.asdByClass);
    CHECK(b2.outFed.missingAsd.empty());
    CHECK(b2.outFed.globalDsc == r2.outFed.globalDsc);
    CHECK(b2.outFed.globalAsd == r2.outFed.globalAsd);
    CHECK(b2.cumulativeBytes == 16112);
  }

  SUBCASE("write validates shapes") {
    CHECK_THROWS_AS(
        io::writeRoundsCsv(path.string(), {r1}, organClasses, {"liver"}, 2),
        std::invalid_argument);
    CHECK_THROWS_AS(
        io::writeRoundsCsv(path.string(), {r1}, organClasses, organNames, 3),
        std::invalid_argument);
  }

  SUBCASE("read rejects malformed tables") {
    const std::string empty;
    io::writeBytes(path.string(), empty.data(), empty.size());
    CHECK_THROWS_AS(io::readRoundsCsv(path.string()), FormatError);

    const std::string garbage = "time,loss\n1,2\n";
    io::writeBytes(path.string(), garbage.data(), garbage.size());
    CHECK_THROWS_AS(io::readRoundsCsv(path.string()), FormatError);

    io::writeRoundsCsv(path.string(), {r1}, organClasses, organNames, 2);
    std::vector<std::uint8_t> raw = io::readBytes(path.string());
    raw.pop_back();  // drop the final newline
    raw.push_back(',');
    raw.push_back('7');
    raw.push_back('\n');
    rewrite(path, raw);
    CHECK_THROWS_AS(io::readRoundsCsv(path.string()), FormatError);
  }
}
