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

#include "a3dfdg/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "a3dfdg/error.hpp"

namespace a3dfdg {

namespace {

/// Spacing-scaled coordinates of the 6-connectivity surface voxels.
struct Surface {
  Eigen::VectorXd x, y, z;
  Eigen::Index n = 0;
};

Surface extractSurface(const Mask3& m, Spacing sp) {
  const Eigen::Index H = m.dimension(0), W = m.dimension(1), D = m.dimension(2);
  const auto bg = [&](Eigen::Index h, Eigen::Index w, Eigen::Index d) {
    if (h < 0 || h >= H || w < 0 || w >= W || d < 0 || d >= D) return true;
    return !m(h, w, d);
  };
  std::vector<double> xs, ys, zs;
  for (Eigen::Index d = 0; d < D; ++d) {
    for (Eigen::Index w = 0; w < W; ++w) {
      for (Eigen::Index h = 0; h < H; ++h) {
        if (!m(h, w, d)) continue;
        if (bg(h - 1, w, d) || bg(h + 1, w, d) || bg(h, w - 1, d) ||
            bg(h, w + 1, d) || bg(h, w, d - 1) || bg(h, w, d + 1)) {
          xs.push_back(static_cast<double>(h) * sp.h);
          ys.push_back(static_cast<double>(w) * sp.w);
          zs.push_back(static_cast<double>(d) * sp.d);
        }
      }
    }
  }
  Surface s;
  s.n = static_cast<Eigen::Index>(xs.size());
  s.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), s.n);
  s.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), s.n);
  s.z = Eigen::Map<const Eigen::VectorXd>(zs.data(), s.n);
  return s;
}

double sumNearest(const Surface& from, const Surface& to) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < from.n; ++i) {
    const double d2 = ((to.x.array() - from.x[i]).square() +
                       (to.y.array() - from.y[i]).square() +
                       (to.z.array() - from.z[i]).square())
                          .minCoeff();
    sum += std::sqrt(d2);
  }
  return sum;
}

bool anySet(const Mask3& m) {
  const bool* p = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (p[i]) return true;
  }
  return false;
}

}  // namespace

double dsc(const Mask3& pred, const Mask3& gt) {
  if (extentOf(pred) != extentOf(gt)) {
    throw std::invalid_argument("dsc: mask shapes differ");
  }
  std::int64_t nPred = 0, nGt = 0, nBoth = 0;
  const bool* p = pred.data();
  const bool* g = gt.data();
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    nPred += p[i];
    nGt += g[i];
    nBoth += p[i] && g[i];
  }
  if (nPred == 0 && nGt == 0) return 1.0;
  if (nPred == 0 || nGt == 0) return 0.0;
  return 2.0 * static_cast<double>(nBoth) / static_cast<double>(nPred + nGt);
}

double asd(const Mask3& pred, const Mask3& gt, Spacing spacing) {
  if (extentOf(pred) != extentOf(gt)) {
    throw std::invalid_argument("asd: mask shapes differ");
  }
  if (!anySet(pred) || !anySet(gt)) {
    throw UndefinedMetricError("asd: undefined for an empty mask");
  }
  const Surface sp = extractSurface(pred, spacing);
  const Surface sg = extractSurface(gt, spacing);
  return (sumNearest(sp, sg) + sumNearest(sg, sp)) /
         static_cast<double>(sp.n + sg.n);
}

MetricTable evaluateModel(const SegModel& m,
                          const std::vector<LabeledVolume>& data,
                          const std::vector<int>& organClasses) {
  std::map<int, double> dscSum, asdSum;
  std::map<int, int> dscCount, asdCount;

  for (const LabeledVolume& lv : data) {
    const Labels3 pred = predictLabels(m, lv.volume.data);
    const Extent3 shape = extentOf(lv.labels);
    for (int c : organClasses) {
      Mask3 gtMask(shape.h, shape.w, shape.d);
      Mask3 predMask(shape.h, shape.w, shape.d);
      const std::uint8_t* gl = lv.labels.data();
      const std::uint8_t* pl = pred.data();
      bool* gm = gtMask.data();
      bool* pm = predMask.data();
      bool gtAny = false;
      for (Eigen::Index i = 0; i < gtMask.size(); ++i) {
        gm[i] = gl[i] == c;
        pm[i] = pl[i] == c;
        gtAny = gtAny || gm[i];
      }
      if (!gtAny) continue;  // organ not imaged in this volume
      dscSum[c] += dsc(predMask, gtMask);
      dscCount[c] += 1;
      if (anySet(predMask)) {
        asdSum[c] += asd(predMask, gtMask, lv.volume.spacing);
        asdCount[c] += 1;
      }
    }
  }

  MetricTable t;
  double dscTotal = 0.0, asdTotal = 0.0;
  int dscOrgans = 0, asdOrgans = 0;
  for (int c : organClasses) {
    if (dscCount.count(c) == 0) {
      t.absentOrgans.push_back(c);
      continue;
    }
    const double d = 100.0 * dscSum[c] / dscCount[c];
    t.dscByClass[c] = d;
    dscTotal += d;
    dscOrgans += 1;
    if (asdCount.count(c) != 0) {
      const double a = asdSum[c] / asdCount[c];
      t.asdByClass[c] = a;
      asdTotal += a;
      asdOrgans += 1;
    } else {
      t.missingAsd.push_back(c);
    }
  }
  t.globalDsc = dscOrgans > 0 ? dscTotal / dscOrgans : 0.0;
  t.globalAsd = asdOrgans > 0 ? asdTotal / asdOrgans : 0.0;
  return t;
}

}  // namespace a3dfdg
