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

#include "a3dfdg/federation.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "a3dfdg/error.hpp"
#include "a3dfdg/spectral.hpp"

namespace a3dfdg {

namespace {

constexpr std::uint64_t kModelInitStream = 21;
constexpr std::uint64_t kRoundStream = 22;

Labels3 cropLabels(const Labels3& labels, Index3 origin, Extent3 size) {
  const Eigen::DSizes<Eigen::Index, 3> off{origin.h, origin.w, origin.d};
  const Eigen::DSizes<Eigen::Index, 3> ext{size.h, size.w, size.d};
  return labels.slice(off, ext);
}

/// Runs fn(0..n-1), work-stealing across at most `threads` workers. The first
/// exception aborts the batch and is rethrown on the calling thread.
void parallelFor(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex errorMutex;
  const auto worker = [&] {
    for (int i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(errorMutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(threads, n);
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

const char* armName(Arm arm) {
  switch (arm) {
    case Arm::none:
      return "none";
    case Arm::a3dfdg:
      return "a3dfdg";
    case Arm::a3dfdgNoSliceMatching:
      return "a3dfdg_no_slice_matching";
    case Arm::a3dfdgNoContourPreservation:
      return "a3dfdg_no_contour_preservation";
  }
  return "unknown";
}

Arm parseArm(const std::string& name) {
  for (Arm arm : {Arm::none, Arm::a3dfdg, Arm::a3dfdgNoSliceMatching,
                  Arm::a3dfdgNoContourPreservation}) {
    if (name == armName(arm)) return arm;
  }
  throw ConfigError("unknown augmentation arm: " + name);
}

void validateConfig(const FederationConfig& cfg) {
  if (cfg.rounds < 1) throw ConfigError("config: rounds must be >= 1");
  if (cfg.localItersPerRound < 0) {
    throw ConfigError("config: local iterations must be >= 0");
  }
  if (!(cfg.lr >= 0.0f)) throw ConfigError("config: lr must be >= 0");
  if (cfg.batchSize < 1) throw ConfigError("config: batch size must be >= 1");
  if (!(cfg.alphaLo >= 0.0f && cfg.alphaHi <= 1.0f &&
        cfg.alphaLo <= cfg.alphaHi)) {
    throw ConfigError("config: alpha range must satisfy 0 <= lo <= hi <= 1");
  }
  if (!(cfg.beta.h > 0.0f && cfg.beta.w > 0.0f && cfg.beta.d > 0.0f)) {
    throw ConfigError("config: beta components must be positive");
  }
  if (!(cfg.zBin > 0.0f)) throw ConfigError("config: z bin must be positive");
  if (!cfg.cropSize.allPositive() || !cfg.commonSpacing.allPositive()) {
    throw ConfigError("config: crop size and spacing must be positive");
  }
  if (cfg.evalEvery < 1) throw ConfigError("config: eval period must be >= 1");
  if (cfg.numClasses < 2) throw ConfigError("config: need >= 2 classes");
  if (cfg.threads < 1) throw ConfigError("config: threads must be >= 1");
}

TrafficLedger makeTrafficLedger(std::uint64_t modelBytes, std::uint64_t rounds,
                                std::uint64_t styleBytes) {
  TrafficLedger ledger;
  ledger.modelBytes = modelBytes;
  ledger.rounds = rounds;
  ledger.styleBytes = styleBytes;
  ledger.totalBytes = modelBytes * rounds + styleBytes;
  return ledger;
}

TrafficLedger trafficReport(const FederationConfig& cfg,
                            std::uint64_t modelBytes,
                            std::uint64_t styleBytes) {
  return makeTrafficLedger(modelBytes, static_cast<std::uint64_t>(cfg.rounds),
                           styleBytes);
}

std::string humanBytes(std::uint64_t bytes) {
  static const char* kUnits[] = {"B", "K", "M", "G", "T", "P", "E"};
  double v = static_cast<double>(bytes);
  int unit = 0;
  // 999.95 already rounds to "1000.0", so promote it to the next unit.
  while (v >= 999.95 && unit < 6) {
    v /= 1000.0;
    ++unit;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%s", v, kUnits[unit]);
  return buf;
}

std::uint64_t modelSizeBytes(const SegModel& m) {
  return static_cast<std::uint64_t>(m.params.size()) * sizeof(Real);
}

SegModel localTrain(SegModel model, const FederatedClient& client,
                    const StyleBank& bank, const FederationConfig& cfg,
                    Rng& rng, float* meanLossOut) {
  validateConfig(cfg);
  detail::checkModel(model);
  if (client.train.empty()) {
    throw std::invalid_argument("localTrain: client has no training volumes");
  }
  const bool augment = cfg.arm != Arm::none;
  if (augment && bank.empty()) {
    throw ConfigError("localTrain: augmenting arm requires a non-empty bank");
  }

  // Fixed split keeps crop draws identical across arms; rng is consumed
  // exactly twice regardless of configuration.
  Rng cropRng(rng.nextU64());
  Rng augRng(rng.nextU64());

  std::vector<Tensor3> batch(static_cast<std::size_t>(cfg.batchSize));
  std::vector<Labels3> labels(static_cast<std::size_t>(cfg.batchSize));
  double lossSum = 0.0;
  for (int iter = 0; iter < cfg.localItersPerRound; ++iter) {
    for (int b = 0; b < cfg.batchSize; ++b) {
      const std::int64_t vi = cropRng.uniformInt(
          0, static_cast<std::int64_t>(client.train.size()) - 1);
      const LabeledVolume& lv = client.train[static_cast<std::size_t>(vi)];

      const LabeledVolume* src = &lv;
      LabeledVolume respaced;
      if (!(lv.volume.spacing == cfg.commonSpacing)) {
        respaced.volume = respace(lv.volume, cfg.commonSpacing);
        const Spacing from = lv.volume.spacing, to = cfg.commonSpacing;
        respaced.labels = resampleNearest(
            lv.labels, extentOf(respaced.volume.data), to.h / from.h,
            to.w / from.w, to.d / from.d);
        src = &respaced;
      }

      const Index3 origin =
          randomCropOrigin(extentOf(src->volume.data), cfg.cropSize, cropRng);
      SubVolume sv = cropSubVolume(src->volume, origin, cfg.cropSize);
      labels[static_cast<std::size_t>(b)] =
          cropLabels(src->labels, origin, cfg.cropSize);

      if (augment) {
        const float alpha =
            static_cast<float>(augRng.uniform(cfg.alphaLo, cfg.alphaHi));
        const StoredStyle& target =
            cfg.arm == Arm::a3dfdgNoSliceMatching
                ? retrieveStyleAnyBin(bank, client.id, augRng)
                : retrieveStyle(bank, client.id, sv.sliceScore, augRng);
        sv = applyStyle(sv, target.style, alpha, cfg.beta, cfg.tauAir,
                        cfg.arm != Arm::a3dfdgNoContourPreservation);
      }
      batch[static_cast<std::size_t>(b)] = std::move(sv.data);
    }
    auto [loss, grad] = lossAndGrad(model, batch, labels);
    model = sgdStep(std::move(model), grad, cfg.lr);
    lossSum += loss.total;
  }
  if (meanLossOut) {
    *meanLossOut = cfg.localItersPerRound > 0
                       ? static_cast<float>(lossSum / cfg.localItersPerRound)
                       : 0.0f;
  }
  return model;
}

std::vector<double> fedavgWeights(const std::vector<std::uint64_t>& dataSizes) {
  if (dataSizes.empty()) {
    throw std::invalid_argument("fedavg: no dataset sizes");
  }
  double total = 0.0;
  for (std::uint64_t s : dataSizes) {
    if (s == 0) throw std::invalid_argument("fedavg: dataset size must be > 0");
    total += static_cast<double>(s);
  }
  std::vector<double> w(dataSizes.size());
  for (std::size_t i = 0; i < dataSizes.size(); ++i) {
    w[i] = static_cast<double>(dataSizes[i]) / total;
  }
  return w;
}

SegModel fedavg(const std::vector<SegModel>& models,
                const std::vector<std::uint64_t>& dataSizes) {
  if (models.empty() || models.size() != dataSizes.size()) {
    throw std::invalid_argument("fedavg: models and sizes must match, non-empty");
  }
  const std::vector<double> w = fedavgWeights(dataSizes);
  for (const SegModel& m : models) {
    detail::checkModel(m);
    if (m.numClasses != models.front().numClasses ||
        m.params.size() != models.front().params.size()) {
      throw std::invalid_argument("fedavg: parameter length mismatch");
    }
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(models.front().params.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    acc += w[k] * models[k].params.template cast<double>();
  }
  SegModel out;
  out.numClasses = models.front().numClasses;
  out.params = acc.cast<Real>();
  return out;
}

FederationRun runFederation(const FederationConfig& cfg,
                            const std::vector<FederatedClient>& clients,
                            const EvalSets& eval, const StyleBank& bank,
                            const RoundCallback& onRound, int startRound,
                            const SegModel* initialModel) {
  validateConfig(cfg);
  if (clients.size() < 2) {
    throw std::invalid_argument("runFederation: need at least 2 clients");
  }
  if (startRound < 1 || startRound > cfg.rounds) {
    throw std::invalid_argument("runFederation: start round out of range");
  }

  SegModel global =
      initialModel
          ? *initialModel
          : makeSegModel<Real>(cfg.numClasses,
                               deriveSeed(cfg.seed, {kModelInitStream}));
  detail::checkModel(global);

  const std::uint64_t modelBytes = modelSizeBytes(global);
  const std::uint64_t styleBytes =
      cfg.arm != Arm::none ? bankSizeBytes(bank) : 0;

  std::vector<std::uint64_t> sizes;
  sizes.reserve(clients.size());
  for (const FederatedClient& c : clients) {
    sizes.push_back(static_cast<std::uint64_t>(c.train.size()));
  }

  FederationRun run;
  const int n = static_cast<int>(clients.size());
  std::vector<SegModel> locals(static_cast<std::size_t>(n));
  std::vector<float> losses(static_cast<std::size_t>(n), 0.0f);

  for (int round = startRound; round <= cfg.rounds; ++round) {
    parallelFor(n, cfg.threads, [&](int i) {
      Rng rng(deriveSeed(cfg.seed,
                         {kRoundStream, static_cast<std::uint64_t>(round),
                          static_cast<std::uint64_t>(clients[i].id)}));
      locals[static_cast<std::size_t>(i)] =
          localTrain(global, clients[static_cast<std::size_t>(i)], bank, cfg,
                     rng, &losses[static_cast<std::size_t>(i)]);
    });
    global = fedavg(locals, sizes);

    RoundReport report;
    report.round = round;
    report.clientLoss = losses;
    report.cumulativeBytes =
        modelBytes * static_cast<std::uint64_t>(round) + styleBytes;
    report.evaluated = round == cfg.rounds || round % cfg.evalEvery == 0;
    if (report.evaluated) {
      report.inFed = evaluateModel(global, eval.inFed, eval.organClasses);
      report.outFed = evaluateModel(global, eval.outFed, eval.organClasses);
    }
    run.reports.push_back(report);
    if (onRound) onRound(run.reports.back(), global);
  }

  run.finalModel = std::move(global);
  run.ledger = makeTrafficLedger(
      modelBytes, static_cast<std::uint64_t>(cfg.rounds), styleBytes);
  return run;
}

}  // namespace a3dfdg
