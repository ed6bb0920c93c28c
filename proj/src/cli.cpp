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

#include "a3dfdg/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "a3dfdg/config.hpp"
#include "a3dfdg/error.hpp"
#include "a3dfdg/federation.hpp"
#include "a3dfdg/io.hpp"
#include "a3dfdg/phantom.hpp"

namespace a3dfdg::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr std::uint64_t kBankSeedStream = 31;

struct CommonFlags {
  std::string configPath;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<std::string> arm;
  std::optional<int> threads;
};

void addCommonFlags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.configPath, "run configuration file");
  cmd->add_option("--seed", f.seed, "seed override (phantom and federation)");
  cmd->add_option("--rounds", f.rounds, "communication rounds override");
  cmd->add_option(
      "--arm", f.arm,
      "augmentation arm: none, a3dfdg, a3dfdg_no_slice_matching, "
      "a3dfdg_no_contour_preservation");
  cmd->add_option("--threads", f.threads,
                  "concurrent clients (falls back to A3DFDG_THREADS)");
}

RunConfig resolveConfig(const CommonFlags& f) {
  RunConfig cfg =
      f.configPath.empty() ? defaultRunConfig() : loadRunConfig(f.configPath);
  if (f.seed) setSeed(cfg, *f.seed);
  if (f.rounds) cfg.fed.rounds = *f.rounds;
  if (f.arm) cfg.fed.arm = parseArm(*f.arm);
  if (f.threads) {
    cfg.fed.threads = *f.threads;
  } else if (const char* env = std::getenv("A3DFDG_THREADS")) {
    char* end = nullptr;
    const long t = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || t < 1) {
      throw ConfigError("A3DFDG_THREADS must be a positive integer, got '" +
                        std::string(env) + "'");
    }
    cfg.fed.threads = static_cast<int>(t);
  }
  return cfg;
}

void writeRunManifest(const fs::path& dir, const std::string& command,
                      const RunConfig& cfg,
                      const std::vector<std::string>& artifacts) {
  nlohmann::json j;
  j["command"] = command;
  j["build"] = std::string("a3dfdg ") + kVersion;
  j["seed"] = cfg.fed.seed;
  j["config"] = renderRunConfig(cfg);
  j["artifacts"] = artifacts;
  j["created_unix"] = static_cast<std::int64_t>(std::time(nullptr));
  const std::string text = j.dump(2) + "\n";
  io::writeBytes((dir / "run_manifest.json").string(), text.data(),
                 text.size());
}

void requireEmptyOrForce(const fs::path& dir, bool force,
                         const std::string& command) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw ConfigError(command + ": output directory '" + dir.string() +
                      "' is not empty (pass --force to reuse it)");
  }
  fs::create_directories(dir);
}

std::string resolveDataPath(const fs::path& dataDir, const std::string& rel) {
  const fs::path p(rel);
  return p.is_absolute() ? p.string() : (dataDir / p).string();
}

std::vector<std::string> organNamesOf(const PhantomSpec& spec) {
  std::vector<std::string> names;
  names.reserve(spec.organs.size());
  for (const OrganSpec& o : spec.organs) names.push_back(o.name);
  return names;
}

int cmdGenData(const CommonFlags& flags, const std::string& outDir,
               bool force) {
  const RunConfig cfg = resolveConfig(flags);
  const PhantomSpec spec = effectivePhantom(cfg);
  const fs::path out(outDir);
  requireEmptyOrForce(out, force, "gen-data");

  std::vector<io::ManifestEntry> entries;
  std::vector<std::string> artifacts;
  const auto emit = [&](const LabeledVolume& lv, int client,
                        const std::string& split, int index) {
    char name[64];
    if (client >= 0) {
      std::snprintf(name, sizeof name, "client%d_%s_%02d.a3dv", client,
                    split.c_str(), index);
    } else {
      std::snprintf(name, sizeof name, "outfed_%02d.a3dv", index);
    }
    const std::string volPath = (out / name).string();
    io::writeVolume(volPath, lv.volume);
    io::writeLabels(io::labelsPathFor(volPath), lv.labels, lv.volume.spacing,
                    lv.volume.zExtent);
    entries.push_back(io::ManifestEntry{name, client, split,
                                        lv.volume.zExtent.lo,
                                        lv.volume.zExtent.hi});
    artifacts.push_back(name);
    artifacts.push_back(io::labelsPathFor(name));
  };

  for (int k = 0; k < static_cast<int>(spec.clients.size()); ++k) {
    const ClientDataset ds = generateClientDataset(spec, k);
    int i = 0;
    for (const LabeledVolume& lv : ds.train) emit(lv, k, "train", i++);
    for (const LabeledVolume& lv : ds.val) emit(lv, k, "val", i++);
    for (const LabeledVolume& lv : ds.test) emit(lv, k, "test", i++);
  }
  int i = 0;
  for (const LabeledVolume& lv : makeOutOfFederationClient(spec)) {
    emit(lv, -1, "outfed", i++);
  }

  io::writeDataManifest((out / "manifest.csv").string(), entries);
  artifacts.push_back("manifest.csv");
  writeRunManifest(out, "gen-data", cfg, artifacts);
  std::cout << "gen-data: wrote " << entries.size() << " volumes for "
            << spec.clients.size() << "+1 clients to " << out.string() << "\n";
  return 0;
}

int cmdBuildBank(const CommonFlags& flags, const std::string& dataDir,
                 const std::string& outPath) {
  const RunConfig cfg = resolveConfig(flags);
  const fs::path data(dataDir);
  const std::vector<io::ManifestEntry> entries =
      io::readDataManifest((data / "manifest.csv").string());

  std::map<int, std::vector<Volume>> perClient;
  for (const io::ManifestEntry& e : entries) {
    if (e.split != "train" || e.client < 0) continue;
    perClient[e.client].push_back(
        io::readVolume(resolveDataPath(data, e.path)));
  }
  if (perClient.empty()) {
    throw ConfigError("build-bank: manifest lists no training volumes");
  }

  StyleBank bank;
  bank.binSize = cfg.fed.zBin;
  bank.beta = cfg.fed.beta;
  bank.cropSize = cfg.fed.cropSize;
  const AnalyticSliceScoreProvider provider;
  std::vector<std::string> warnings;
  for (const auto& [clientId, volumes] : perClient) {
    bank = registerClientStyles(std::move(bank), clientId, volumes,
                                cfg.cropsPerVolume, provider,
                                deriveSeed(cfg.fed.seed, {kBankSeedStream}),
                                cfg.fed.commonSpacing, &warnings);
  }
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

  io::writeBankFile(outPath, bank);
  const std::uint64_t size = bankSizeBytes(bank);
  std::cout << "build-bank: " << bank.styleCount() << " styles from "
            << perClient.size() << " clients, " << size << " bytes ("
            << humanBytes(size) << ") -> " << outPath << "\n";
  return 0;
}

int parseCheckpointRound(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  const std::string tag = "_round_";
  const auto at = stem.rfind(tag);
  if (at != std::string::npos) {
    const std::string digits = stem.substr(at + tag.size());
    char* end = nullptr;
    const long r = std::strtol(digits.c_str(), &end, 10);
    if (end != digits.c_str() && *end == '\0' && r >= 1) {
      return static_cast<int>(r);
    }
  }
  throw ConfigError(
      "train: cannot infer the round from checkpoint name '" + path +
      "' (expected ..._round_<N>.a3dm)");
}

int cmdTrain(const CommonFlags& flags, const std::string& dataDir,
             const std::string& bankPath, const std::string& outDir,
             const std::string& resumePath, bool force) {
  const RunConfig cfg = resolveConfig(flags);
  const fs::path data(dataDir);
  const fs::path out(outDir);
  const std::vector<io::ManifestEntry> entries =
      io::readDataManifest((data / "manifest.csv").string());

  std::map<int, FederatedClient> byId;
  EvalSets eval;
  for (const io::ManifestEntry& e : entries) {
    if (e.split == "val") continue;
    const std::string volPath = resolveDataPath(data, e.path);
    LabeledVolume lv;
    lv.volume = io::readVolume(volPath);
    lv.labels = io::readLabels(io::labelsPathFor(volPath)).labels;
    if (e.split == "train" && e.client >= 0) {
      byId[e.client].id = e.client;
      byId[e.client].train.push_back(std::move(lv));
    } else if (e.split == "test" && e.client >= 0) {
      eval.inFed.push_back(std::move(lv));
    } else if (e.split == "outfed") {
      eval.outFed.push_back(std::move(lv));
    }
  }
  std::vector<FederatedClient> clients;
  clients.reserve(byId.size());
  for (auto& [id, c] : byId) clients.push_back(std::move(c));

  const PhantomSpec spec = effectivePhantom(cfg);
  eval.organClasses = organClassIds(spec);

  StyleBank bank;
  if (cfg.fed.arm != Arm::none) {
    if (bankPath.empty()) {
      throw ConfigError("train: --bank is required for augmenting arms");
    }
    bank = io::readBankFile(bankPath);
  }

  if (resumePath.empty()) {
    requireEmptyOrForce(out, force, "train");
  } else {
    fs::create_directories(out);
  }

  int startRound = 1;
  SegModel resumed;
  const SegModel* initial = nullptr;
  if (!resumePath.empty()) {
    const int checkpointRound = parseCheckpointRound(resumePath);
    if (checkpointRound >= cfg.fed.rounds) {
      throw ConfigError("train: checkpoint round " +
                        std::to_string(checkpointRound) +
                        " is not before the final round " +
                        std::to_string(cfg.fed.rounds));
    }
    resumed = io::readModel(resumePath);
    startRound = checkpointRound + 1;
    initial = &resumed;
  }

  const auto onRound = [&](const RoundReport& rep, const SegModel& model) {
    char name[64];
    std::snprintf(name, sizeof name, "checkpoint_round_%04d.a3dm", rep.round);
    io::writeModel((out / name).string(), model);
    if (rep.evaluated) {
      std::cout << "round " << rep.round << ": infed_gdsc=" << rep.inFed.globalDsc
                << " outfed_gdsc=" << rep.outFed.globalDsc
                << " traffic=" << humanBytes(rep.cumulativeBytes) << "\n";
    }
  };

  const FederationRun run = runFederation(cfg.fed, clients, eval, bank,
                                          onRound, startRound, initial);

  io::writeRoundsCsv((out / "rounds.csv").string(), run.reports,
                     eval.organClasses, organNamesOf(spec), clients.size());
  io::writeModel((out / "final_model.a3dm").string(), run.finalModel);
  std::vector<std::string> artifacts{"rounds.csv", "final_model.a3dm"};
  writeRunManifest(out, "train", cfg, artifacts);

  std::cout << "train: arm " << armName(cfg.fed.arm) << ", rounds "
            << cfg.fed.rounds << ", total traffic "
            << run.ledger.totalBytes << " bytes ("
            << humanBytes(run.ledger.totalBytes) << ") -> " << out.string()
            << "\n";
  return 0;
}

const RoundReport& lastEvaluated(const io::RoundsCsv& csv,
                                 const std::string& path) {
  for (auto it = csv.reports.rbegin(); it != csv.reports.rend(); ++it) {
    if (it->evaluated) return *it;
  }
  throw FormatError("report: no evaluated round in '" + path + "'");
}

int cmdReport(const std::vector<std::string>& runDirs,
              const std::string& outCsv) {
  struct Entry {
    std::string name;
    io::RoundsCsv csv;
    const RoundReport* last = nullptr;
  };
  std::vector<Entry> runs;
  for (const std::string& dir : runDirs) {
    Entry e;
    const std::string path = (fs::path(dir) / "rounds.csv").string();
    e.name = fs::path(dir).filename().string();
    if (e.name.empty()) e.name = dir;
    e.csv = io::readRoundsCsv(path);
    e.last = &lastEvaluated(e.csv, path);
    runs.push_back(std::move(e));
  }
  const std::vector<std::string>& names = runs.front().csv.organNames;
  const std::vector<int>& classes = runs.front().csv.organClasses;
  for (const Entry& e : runs) {
    if (e.csv.organNames != names) {
      throw FormatError("report: runs disagree on organ columns");
    }
  }

  const auto cell = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%8.2f", v);
    return std::string(buf);
  };
  const auto lookup = [](const std::map<int, double>& m, int c) {
    const auto it = m.find(c);
    return it == m.end() ? std::numeric_limits<double>::quiet_NaN()
                         : it->second;
  };

  std::ostringstream text;
  std::ostringstream csvOut;
  csvOut << "run,scope,metric";
  for (const std::string& n : names) csvOut << "," << n;
  csvOut << ",global\n";
  for (const char* scope : {"infed", "outfed"}) {
    for (const char* metric : {"dsc", "asd"}) {
      text << "== " << (std::string(scope) == "infed" ? "in-federation"
                                                      : "out-of-federation")
           << " " << (std::string(metric) == "dsc" ? "DSC (%)" : "ASD (mm)")
           << ", final round ==\n";
      text << "  " << std::string(20, ' ');
      for (const std::string& n : names) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%8.8s", n.c_str());
        text << buf;
      }
      text << "  Global\n";
      std::vector<double> first;
      for (std::size_t r = 0; r < runs.size(); ++r) {
        const Entry& e = runs[r];
        const MetricTable& t = std::string(scope) == "infed" ? e.last->inFed
                                                             : e.last->outFed;
        const bool isDsc = std::string(metric) == "dsc";
        char label[32];
        std::snprintf(label, sizeof label, "  %-20.20s", e.name.c_str());
        text << label;
        csvOut << e.name << "," << scope << "," << metric;
        std::vector<double> vals;
        for (int c : classes) {
          vals.push_back(isDsc ? lookup(t.dscByClass, c)
                               : lookup(t.asdByClass, c));
        }
        vals.push_back(isDsc ? t.globalDsc : t.globalAsd);
        for (double v : vals) {
          text << cell(v);
          csvOut << "," << (std::isnan(v) ? "nan" : std::to_string(v));
        }
        text << "\n";
        csvOut << "\n";
        if (r == 0) first = vals;
        if (r == 1 && runs.size() == 2) {
          text << "  " << std::string("delta") << std::string(15, ' ');
          for (std::size_t k = 0; k < vals.size(); ++k) {
            text << cell(vals[k] - first[k]);
          }
          text << "\n";
        }
      }
      text << "\n";
    }
  }

  std::cout << text.str();
  if (!outCsv.empty()) {
    const std::string s = csvOut.str();
    io::writeBytes(outCsv, s.data(), s.size());
    std::cout << "report: wrote " << outCsv << "\n";
  }
  return 0;
}

}  // namespace

int runCli(int argc, const char* const* argv) {
  CLI::App app{"federated 3D frequency-domain style generalization simulator"};
  app.require_subcommand(1);

  CommonFlags genFlags;
  std::string genOut;
  bool genForce = false;
  CLI::App* gen = app.add_subcommand("gen-data", "generate phantom datasets");
  addCommonFlags(gen, genFlags);
  gen->add_option("--out", genOut, "output directory")->required();
  gen->add_flag("--force", genForce, "allow a non-empty output directory");

  CommonFlags bankFlags;
  std::string bankData, bankOut;
  CLI::App* bankCmd =
      app.add_subcommand("build-bank", "register training styles into a bank");
  addCommonFlags(bankCmd, bankFlags);
  bankCmd->add_option("--data", bankData, "gen-data output directory")
      ->required();
  bankCmd->add_option("--out", bankOut, "bank file path")->required();

  CommonFlags trainFlags;
  std::string trainData, trainBank, trainOut, trainResume;
  bool trainForce = false;
  CLI::App* train = app.add_subcommand("train", "run federated training");
  addCommonFlags(train, trainFlags);
  train->add_option("--data", trainData, "gen-data output directory")
      ->required();
  train->add_option("--bank", trainBank, "style bank file");
  train->add_option("--out", trainOut, "run output directory")->required();
  train->add_option("--resume", trainResume,
                    "checkpoint file to continue from");
  train->add_flag("--force", trainForce, "allow a non-empty output directory");

  std::vector<std::string> reportDirs;
  std::string reportOut;
  CLI::App* report =
      app.add_subcommand("report", "compare final metrics across runs");
  report->add_option("dirs", reportDirs, "train output directories")
      ->required();
  report->add_option("--out", reportOut, "also write a comparison CSV");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmdGenData(genFlags, genOut, genForce);
    if (bankCmd->parsed()) return cmdBuildBank(bankFlags, bankData, bankOut);
    if (train->parsed()) {
      return cmdTrain(trainFlags, trainData, trainBank, trainOut, trainResume,
                      trainForce);
    }
    if (report->parsed()) return cmdReport(reportDirs, reportOut);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int runCli(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("a3dfdg");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  return runCli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace a3dfdg::cli
