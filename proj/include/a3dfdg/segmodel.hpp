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

#ifndef A3DFDG_SEGMODEL_HPP
#define A3DFDG_SEGMODEL_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "a3dfdg/rng.hpp"
#include "a3dfdg/types.hpp"
#include "a3dfdg/volume.hpp"

namespace a3dfdg {

// Fixed per-voxel classifier: conv3x3x3 (1->8) + ReLU, conv3x3x3 (8->8) +
// ReLU, per-voxel linear 8->C, softmax. Zero padding, stride 1, so output
// shape equals input shape. Inputs pass through the fixed affine
// (x - 250) / 150 first, which zero-centers soft tissue at HU scale; a
// centered input keeps the early SGD steps from being dominated by the
// shared DC component. Gradients are hand-derived; convolutions run as
// im2col + GEMM over d-axis slabs to bound working memory.

namespace segarch {
inline constexpr Eigen::Index kKernelVol = 27;
inline constexpr Eigen::Index kC1 = 8;
inline constexpr Eigen::Index kC2 = 8;
inline constexpr float kNormShift = -250.0f;
inline constexpr float kNormScale = 1.0f / 150.0f;
inline constexpr Eigen::Index kSlabVoxels = 1 << 15;
}  // namespace segarch

template <typename S>
struct SegModelT {
  int numClasses = 0;
  VectorX<S> params;
};

using SegModel = SegModelT<Real>;

inline Eigen::Index paramCount(int numClasses) {
  using namespace segarch;
  return kKernelVol * kC1 + kC1 + kKernelVol * kC1 * kC2 + kC2 +
         kC2 * numClasses + numClasses;
}

struct LossValue {
  double total = 0.0;
  double diceTerm = 0.0;
  double ceTerm = 0.0;
};

namespace detail {

// Flat parameter layout. Weight matrices are column-major maps:
// W1 (27 x 8), W2 (216 x 8), WL (8 x C); conv output = im2col rows x W.
template <typename S>
struct Layout {
  explicit Layout(int numClasses) {
    using namespace segarch;
    w1 = 0;
    b1 = w1 + kKernelVol * kC1;
    w2 = b1 + kC1;
    b2 = w2 + kKernelVol * kC1 * kC2;
    wl = b2 + kC2;
    bl = wl + kC2 * numClasses;
    end = bl + numClasses;
  }
  Eigen::Index w1, b1, w2, b2, wl, bl, end;
};

template <typename S>
void checkModel(const SegModelT<S>& m) {
  if (m.numClasses < 2) {
    throw std::invalid_argument("segmodel: need at least 2 classes");
  }
  if (m.params.size() != paramCount(m.numClasses)) {
    throw std::invalid_argument("segmodel: params length does not match arch");
  }
}

/// im2col over one d-slab: row p of `cols` holds the 3x3x3 neighbourhood of
/// slab voxel p across all input channels; out-of-volume taps are zero.
/// Column index = ci * 27 + (kh+1)*9 + (kw+1)*3 + (kd+1).
template <typename S>
void im2col(const MatrixX<S>& act, Extent3 shape, Eigen::Index dLo,
            Eigen::Index dHi, MatrixX<S>& cols) {
  const Eigen::Index H = shape.h, W = shape.w, HW = shape.h * shape.w;
  const Eigen::Index rows = HW * (dHi - dLo);
  const Eigen::Index cin = act.cols();
  cols.resize(rows, cin * segarch::kKernelVol);
  cols.setZero();
  for (Eigen::Index ci = 0; ci < cin; ++ci) {
    const S* src = act.col(ci).data();
    for (int kh = -1; kh <= 1; ++kh) {
      const Eigen::Index h0 = std::max<Eigen::Index>(0, -kh);
      const Eigen::Index h1 = std::min<Eigen::Index>(H, H - kh);
      if (h1 <= h0) continue;
      for (int kw = -1; kw <= 1; ++kw) {
        for (int kd = -1; kd <= 1; ++kd) {
          const Eigen::Index col =
              ci * 27 + (kh + 1) * 9 + (kw + 1) * 3 + (kd + 1);
          S* dst = cols.col(col).data();
          for (Eigen::Index d = dLo; d < dHi; ++d) {
            const Eigen::Index sd = d + kd;
            if (sd < 0 || sd >= shape.d) continue;
            for (Eigen::Index w = 0; w < W; ++w) {
              const Eigen::Index sw = w + kw;
              if (sw < 0 || sw >= W) continue;
              const S* s = src + h0 + kh + H * (sw + W * sd);
              S* t = dst + h0 + H * w + HW * (d - dLo);
              for (Eigen::Index i = 0; i < h1 - h0; ++i) t[i] = s[i];
            }
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatter-adds neighbourhood gradients back onto the
/// input-activation gradient (full grid, not just the slab).
template <typename S>
void col2imAdd(const MatrixX<S>& cols, Extent3 shape, Eigen::Index dLo,
               Eigen::Index dHi, MatrixX<S>& dAct) {
  const Eigen::Index H = shape.h, W = shape.w, HW = shape.h * shape.w;
  const Eigen::Index cin = dAct.cols();
  for (Eigen::Index ci = 0; ci < cin; ++ci) {
    S* dst = dAct.col(ci).data();
    for (int kh = -1; kh <= 1; ++kh) {
      const Eigen::Index h0 = std::max<Eigen::Index>(0, -kh);
      const Eigen::Index h1 = std::min<Eigen::Index>(H, H - kh);
      if (h1 <= h0) continue;
      for (int kw = -1; kw <= 1; ++kw) {
        for (int kd = -1; kd <= 1; ++kd) {
          const Eigen::Index col =
              ci * 27 + (kh + 1) * 9 + (kw + 1) * 3 + (kd + 1);
          const S* src = cols.col(col).data();
          for (Eigen::Index d = dLo; d < dHi; ++d) {
            const Eigen::Index sd = d + kd;
            if (sd < 0 || sd >= shape.d) continue;
            for (Eigen::Index w = 0; w < W; ++w) {
              const Eigen::Index sw = w + kw;
              if (sw < 0 || sw >= W) continue;
              S* t = dst + h0 + kh + H * (sw + W * sd);
              const S* s = src + h0 + H * w + HW * (d - dLo);
              for (Eigen::Index i = 0; i < h1 - h0; ++i) t[i] += s[i];
            }
          }
        }
      }
    }
  }
}

inline Eigen::Index slabDepth(Extent3 shape) {
  const Eigen::Index perSlice = shape.h * shape.w;
  return std::max<Eigen::Index>(1, segarch::kSlabVoxels / perSlice);
}

template <typename S>
struct TrunkCache {
  MatrixX<S> a0;      // nvox x 1, normalized input
  MatrixX<S> a1, a2;  // nvox x 8, post-ReLU
  MatrixX<S> probs;   // nvox x C
  Extent3 shape;
};

/// Runs the network over one volume; fills all intermediate activations.
template <typename S>
void runTrunk(const SegModelT<S>& m, const Grid3<S>& x, TrunkCache<S>& c) {
  using namespace segarch;
  const Layout<S> L(m.numClasses);
  const Extent3 shape = extentOf(x);
  if (!shape.allPositive()) {
    throw std::invalid_argument("segmodel: input dims must be >= 1");
  }
  const Eigen::Index n = shape.count();
  const int C = m.numClasses;
  const S* p = m.params.data();
  const Eigen::Map<const MatrixX<S>> W1(p + L.w1, kKernelVol, kC1);
  const Eigen::Map<const VectorX<S>> B1(p + L.b1, kC1);
  const Eigen::Map<const MatrixX<S>> W2(p + L.w2, kKernelVol * kC1, kC2);
  const Eigen::Map<const VectorX<S>> B2(p + L.b2, kC2);
  const Eigen::Map<const MatrixX<S>> WL(p + L.wl, kC2, C);
  const Eigen::Map<const VectorX<S>> BL(p + L.bl, C);

  c.shape = shape;
  c.a0.resize(n, 1);
  {
    const S* src = x.data();
    S* dst = c.a0.data();
    for (Eigen::Index i = 0; i < n; ++i) {
      dst[i] = (src[i] + static_cast<S>(kNormShift)) * static_cast<S>(kNormScale);
    }
  }

  MatrixX<S> cols;
  const Eigen::Index step = slabDepth(shape);
  c.a1.resize(n, kC1);
  for (Eigen::Index d = 0; d < shape.d; d += step) {
    const Eigen::Index dHi = std::min(shape.d, d + step);
    im2col(c.a0, shape, d, dHi, cols);
    const Eigen::Index r0 = shape.h * shape.w * d;
    c.a1.middleRows(r0, cols.rows()).noalias() = cols * W1;
  }
  c.a1.rowwise() += B1.transpose();
  c.a1 = c.a1.cwiseMax(S(0));

  c.a2.resize(n, kC2);
  for (Eigen::Index d = 0; d < shape.d; d += step) {
    const Eigen::Index dHi = std::min(shape.d, d + step);
    im2col(c.a1, shape, d, dHi, cols);
    const Eigen::Index r0 = shape.h * shape.w * d;
    c.a2.middleRows(r0, cols.rows()).noalias() = cols * W2;
  }
  c.a2.rowwise() += B2.transpose();
  c.a2 = c.a2.cwiseMax(S(0));

  c.probs.resize(n, C);
  c.probs.noalias() = c.a2 * WL;
  c.probs.rowwise() += BL.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = c.probs.row(i);
    const S mx = row.maxCoeff();
    row = (row.array() - mx).exp();
    row /= row.sum();
  }
}

}  // namespace detail

/// He-initialized model: weights ~ N(0, 2/fan_in) from an order-independent
/// counter-based stream, biases zero.
template <typename S>
SegModelT<S> makeSegModel(int numClasses, std::uint64_t seed) {
  using namespace segarch;
  if (numClasses < 2) {
    throw std::invalid_argument("segmodel: need at least 2 classes");
  }
  const detail::Layout<S> L(numClasses);
  SegModelT<S> m{numClasses, VectorX<S>::Zero(L.end)};
  const auto fill = [&](Eigen::Index lo, Eigen::Index hi, double fanIn) {
    const double sigma = std::sqrt(2.0 / fanIn);
    for (Eigen::Index i = lo; i < hi; ++i) {
      m.params[i] = static_cast<S>(
          sigma * gaussianAt(seed, static_cast<std::uint64_t>(i)));
    }
  };
  fill(L.w1, L.b1, kKernelVol);
  fill(L.w2, L.b2, kKernelVol * kC1);
  fill(L.wl, L.bl, kC2);
  return m;
}

/// Per-voxel class probabilities for one volume; row index = h + H*(w + W*d).
template <typename S>
struct VoxelProbs {
  MatrixX<S> probs;  // (H*W*D) x numClasses, rows sum to 1
  Extent3 shape;
};

template <typename S>
std::vector<VoxelProbs<S>> forwardVoxelProbs(const SegModelT<S>& m,
                                             const std::vector<Grid3<S>>& batch) {
  detail::checkModel(m);
  std::vector<VoxelProbs<S>> out;
  out.reserve(batch.size());
  detail::TrunkCache<S> c;
  for (const Grid3<S>& x : batch) {
    detail::runTrunk(m, x, c);
    out.push_back(VoxelProbs<S>{std::move(c.probs), c.shape});
    c.probs = MatrixX<S>();
  }
  return out;
}

/// Argmax labels; ties resolve to the lowest class id.
template <typename S>
Labels3 predictLabels(const SegModelT<S>& m, const Grid3<S>& x) {
  detail::checkModel(m);
  detail::TrunkCache<S> c;
  detail::runTrunk(m, x, c);
  const Extent3 shape = c.shape;
  Labels3 out(shape.h, shape.w, shape.d);
  std::uint8_t* dst = out.data();
  const int C = m.numClasses;
  for (Eigen::Index i = 0; i < c.probs.rows(); ++i) {
    int best = 0;
    S bestP = c.probs(i, 0);
    for (int k = 1; k < C; ++k) {
      if (c.probs(i, k) > bestP) {
        bestP = c.probs(i, k);
        best = k;
      }
    }
    dst[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

/// Soft-Dice (foreground classes, batch-aggregated, eps = 1e-5) plus mean
/// per-voxel cross-entropy, with the exact parameter gradient.
template <typename S>
std::pair<LossValue, VectorX<S>> lossAndGrad(const SegModelT<S>& m,
                                             const std::vector<Grid3<S>>& batch,
                                             const std::vector<Labels3>& labels) {
  using namespace segarch;
  detail::checkModel(m);
  if (batch.empty() || batch.size() != labels.size()) {
    throw std::invalid_argument("lossAndGrad: batch and labels sizes differ");
  }
  const int C = m.numClasses;
  const detail::Layout<S> L(C);
  const S* p = m.params.data();
  const Eigen::Map<const MatrixX<S>> W2(p + L.w2, kKernelVol * kC1, kC2);
  const Eigen::Map<const MatrixX<S>> WL(p + L.wl, kC2, C);

  VectorX<S> grad = VectorX<S>::Zero(L.end);
  S* g = grad.data();
  Eigen::Map<MatrixX<S>> dW1(g + L.w1, kKernelVol, kC1);
  Eigen::Map<VectorX<S>> dB1(g + L.b1, kC1);
  Eigen::Map<MatrixX<S>> dW2(g + L.w2, kKernelVol * kC1, kC2);
  Eigen::Map<VectorX<S>> dB2(g + L.b2, kC2);
  Eigen::Map<MatrixX<S>> dWL(g + L.wl, kC2, C);
  Eigen::Map<VectorX<S>> dBL(g + L.bl, C);

  Eigen::Index nTotal = 0;
  for (const Grid3<S>& x : batch) nTotal += x.size();

  // Dice statistics need a pass over the whole batch before any gradient,
  // so activations are cached per item (bounded: training batches are small).
  std::vector<detail::TrunkCache<S>> caches(batch.size());
  std::vector<double> sumPG(C, 0.0), sumP(C, 0.0), sumG(C, 0.0);
  double ceSum = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (extentOf(labels[b]) != extentOf(batch[b])) {
      throw std::invalid_argument("lossAndGrad: label shape mismatch");
    }
    detail::runTrunk(m, batch[b], caches[b]);
    const auto& P = caches[b].probs;
    const std::uint8_t* y = labels[b].data();
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      if (y[i] >= C) {
        throw std::invalid_argument("lossAndGrad: label id out of range");
      }
      const double py = static_cast<double>(P(i, y[i]));
      ceSum -= std::log(std::max(py, 1e-30));
      sumG[y[i]] += 1.0;
      for (int k = 0; k < C; ++k) sumP[k] += static_cast<double>(P(i, k));
      sumPG[y[i]] += py;
    }
  }

  constexpr double kEps = 1e-5;
  const int nFg = C - 1;
  double diceMean = 0.0;
  std::vector<double> num(C, 0.0), den(C, 0.0);
  for (int k = 1; k < C; ++k) {
    num[k] = 2.0 * sumPG[k] + kEps;
    den[k] = sumP[k] + sumG[k] + kEps;
    diceMean += num[k] / den[k];
  }
  diceMean /= nFg;

  LossValue loss;
  loss.ceTerm = ceSum / static_cast<double>(nTotal);
  loss.diceTerm = 1.0 - diceMean;
  loss.total = loss.diceTerm + loss.ceTerm;

  const double invTotal = 1.0 / static_cast<double>(nTotal);
  MatrixX<S> dLogits, dP, cols, dCols, dA2, dA1;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto& c = caches[b];
    const auto& P = c.probs;
    const std::uint8_t* y = labels[b].data();
    const Eigen::Index n = P.rows();

    // Cross-entropy pushes softmax directly: d/dlogit = (P - onehot)/nTotal.
    dLogits = P * static_cast<S>(invTotal);
    for (Eigen::Index i = 0; i < n; ++i) {
      dLogits(i, y[i]) -= static_cast<S>(invTotal);
    }
    // Dice reaches logits through the softmax Jacobian.
    dP.resize(n, C);
    for (int k = 0; k < C; ++k) {
      if (k == 0) {
        dP.col(k).setZero();
        continue;
      }
      const double scale = -1.0 / nFg;
      const double coefG = scale * 2.0 / den[k];
      const double coefAll = scale * (-num[k] / (den[k] * den[k]));
      dP.col(k).setConstant(static_cast<S>(coefAll));
      const S add = static_cast<S>(coefG);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (y[i] == k) dP(i, k) += add;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const S dot = dP.row(i).dot(P.row(i));
      dLogits.row(i) += P.row(i).cwiseProduct((dP.row(i).array() - dot).matrix());
    }

    dWL.noalias() += c.a2.transpose() * dLogits;
    dBL.noalias() += dLogits.colwise().sum().transpose();
    dA2 = dLogits * WL.transpose();
    dA2 = dA2.cwiseProduct((c.a2.array() > S(0)).template cast<S>().matrix());

    const Eigen::Index step = detail::slabDepth(c.shape);
    const Eigen::Index HW = c.shape.h * c.shape.w;
    dA1 = MatrixX<S>::Zero(n, kC1);
    for (Eigen::Index d = 0; d < c.shape.d; d += step) {
      const Eigen::Index dHi = std::min(c.shape.d, d + step);
      detail::im2col(c.a1, c.shape, d, dHi, cols);
      const auto dZ2 = dA2.middleRows(HW * d, cols.rows());
      dW2.noalias() += cols.transpose() * dZ2;
      dCols.noalias() = dZ2 * W2.transpose();
      detail::col2imAdd(dCols, c.shape, d, dHi, dA1);
    }
    dB2.noalias() += dA2.colwise().sum().transpose();

    dA1 = dA1.cwiseProduct((c.a1.array() > S(0)).template cast<S>().matrix());
    for (Eigen::Index d = 0; d < c.shape.d; d += step) {
      const Eigen::Index dHi = std::min(c.shape.d, d + step);
      detail::im2col(c.a0, c.shape, d, dHi, cols);
      dW1.noalias() += cols.transpose() * dA1.middleRows(HW * d, cols.rows());
    }
    dB1.noalias() += dA1.colwise().sum().transpose();
  }

  return {loss, std::move(grad)};
}

template <typename S>
SegModelT<S> sgdStep(SegModelT<S> m, const VectorX<S>& grad, double lr) {
  detail::checkModel(m);
  if (grad.size() != m.params.size()) {
    throw std::invalid_argument("sgdStep: gradient length mismatch");
  }
  if (lr < 0.0) throw std::invalid_argument("sgdStep: negative learning rate");
  m.params -= (static_cast<S>(lr) * grad.array()).matrix();
  return m;
}

}  // namespace a3dfdg

#endif
