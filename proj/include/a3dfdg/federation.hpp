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

#ifndef A3DFDG_FEDERATION_HPP
#define A3DFDG_FEDERATION_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "a3dfdg/metrics.hpp"
#include "a3dfdg/rng.hpp"
#include "a3dfdg/segmodel.hpp"
#include "a3dfdg/stylebank.hpp"
#include "a3dfdg/types.hpp"
#include "a3dfdg/volume.hpp"

namespace a3dfdg {

// Synchronous full-participation federated training: every round broadcasts
// the global model, trains all clients locally, aggregates by dataset-size
// weighted average, and evaluates on held-out splits. Traffic counts one
// model transfer per round plus the style bank once.

enum class Arm {
  none,                         // bare local SGD, no augmentation
  a3dfdg,                       // style mixup with slice matching + air restore
  a3dfdgNoSliceMatching,        // target style drawn uniformly over all bins
  a3dfdgNoContourPreservation,  // air voxels not restored after mixup
};

const char* armName(Arm arm);
/// Throws ConfigError on an unknown name.
Arm parseArm(const std::string& name);

struct FederationConfig {
  int rounds = 5;
  int localItersPerRound = 20;  // SGD steps per client per round
  float lr = 0.01f;
  int batchSize = 4;
  float alphaLo = 0.0f, alphaHi = 1.0f;  // mixup coefficient range
  Beta beta;
  float zBin = 10.0f;
  float tauAir = -200.0f;
  Arm arm = Arm::a3dfdg;
  std::uint64_t seed = 1;
  Extent3 cropSize{32, 32, 32};
  Spacing commonSpacing;
  int evalEvery = 1;  // evaluate when round % evalEvery == 0; final round always
  int numClasses = 6;
  int threads = 1;  // concurrent clients per round
};

/// Throws ConfigError when a field is out of range.
void validateConfig(const FederationConfig& cfg);

struct FederatedClient {
  int id = 0;
  std::vector<LabeledVolume> train;
};

struct EvalSets {
  std::vector<LabeledVolume> inFed;   // pooled held-out splits of the clients
  std::vector<LabeledVolume> outFed;  // the unseen client
  std::vector<int> organClasses;
};

struct TrafficLedger {
  std::uint64_t modelBytes = 0;
  std::uint64_t rounds = 0;
  std::uint64_t styleBytes = 0;
  std::uint64_t totalBytes = 0;  // modelBytes * rounds + styleBytes
};

TrafficLedger trafficReport(const FederationConfig& cfg,
                            std::uint64_t modelBytes, std::uint64_t styleBytes);
TrafficLedger makeTrafficLedger(std::uint64_t modelBytes, std::uint64_t rounds,
                                std::uint64_t styleBytes);

/// Decimal-SI rendering with one decimal: 2.52e12 -> "2.5T", 3.15e10 ->
/// "31.5G".
std::string humanBytes(std::uint64_t bytes);

std::uint64_t modelSizeBytes(const SegModel& m);

struct RoundReport {
  int round = 0;
  std::vector<float> clientLoss;  // mean training loss per client this round
  bool evaluated = false;
  MetricTable inFed, outFed;  // valid only when evaluated
  std::uint64_t cumulativeBytes = 0;
};

/// One client's round: localItersPerRound SGD steps on random crops of the
/// client's training volumes. Per sample: crop, slice score, mixup coefficient
/// drawn uniformly from [alphaLo, alphaHi], style retrieval by slice score
/// (uniform over bins in the no-slice-matching arm), style application (air
/// voxels restored unless the no-contour-preservation arm), then one batched
/// gradient step. Arm none trains on raw crops.
///
/// The passed rng is consumed exactly twice, seeding a crop stream and an
/// augmentation stream; arms differ only in whether the augmentation stream
/// is drawn from. Throws ConfigError before the first step when the bank is
/// empty under an augmenting arm.
SegModel localTrain(SegModel model, const FederatedClient& client,
                    const StyleBank& bank, const FederationConfig& cfg,
                    Rng& rng, float* meanLossOut = nullptr);

/// Dataset-size-weighted average of parameters. Throws invalid_argument on an
/// empty list, mismatched parameter lengths, or a zero size.
SegModel fedavg(const std::vector<SegModel>& models,
                const std::vector<std::uint64_t>& dataSizes);
/// The normalized weights fedavg applies; sums to 1.
std::vector<double> fedavgWeights(const std::vector<std::uint64_t>& dataSizes);

struct FederationRun {
  std::vector<RoundReport> reports;
  SegModel finalModel;
  TrafficLedger ledger;
};

using RoundCallback = std::function<void(const RoundReport&, const SegModel&)>;

/// Runs rounds [startRound, cfg.rounds]. Client rngs derive from
/// (cfg.seed, round, client id), so resuming from a checkpointed model at
/// startRound reproduces the uninterrupted trajectory bit-exactly.
/// `initialModel` (when non-null) replaces the seeded initialization.
/// Evaluation happens on rounds divisible by evalEvery and on the final
/// round. Any client failure aborts the run.
FederationRun runFederation(const FederationConfig& cfg,
                            const std::vector<FederatedClient>& clients,
                            const EvalSets& eval, const StyleBank& bank,
                            const RoundCallback& onRound = {},
                            int startRound = 1,
                            const SegModel* initialModel = nullptr);

}  // namespace a3dfdg

#endif
