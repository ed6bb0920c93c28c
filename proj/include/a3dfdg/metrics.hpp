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

#ifndef A3DFDG_METRICS_HPP
#define A3DFDG_METRICS_HPP

#include <map>
#include <vector>

#include "a3dfdg/segmodel.hpp"
#include "a3dfdg/types.hpp"
#include "a3dfdg/volume.hpp"

namespace a3dfdg {

/// Per-organ and macro-averaged segmentation quality. Organs whose ASD is
/// undefined on every counted volume (empty prediction or ground truth) are
/// listed in missingAsd and excluded from globalAsd; organs absent from every
/// ground truth are listed in absentOrgans and excluded from both macro means.
struct MetricTable {
  std::map<int, double> dscByClass;  // percent, 0..100
  std::map<int, double> asdByClass;  // mm
  std::vector<int> missingAsd;
  std::vector<int> absentOrgans;
  double globalDsc = 0.0;
  double globalAsd = 0.0;
};

/// Dice overlap 2|P∩G| / (|P|+|G|); 1.0 when both masks are empty, 0.0 when
/// exactly one is.
double dsc(const Mask3& pred, const Mask3& gt);

/// Average symmetric surface distance in mm. Surface voxels are foreground
/// voxels with at least one of their 6 face neighbours background; the volume
/// boundary counts as background. Throws UndefinedMetricError when either
/// mask is empty.
double asd(const Mask3& pred, const Mask3& gt, Spacing spacing);

/// Argmax-predicts every volume and averages each organ's metrics over the
/// volumes whose ground truth contains it; global values are unweighted means
/// across organs.
MetricTable evaluateModel(const SegModel& m,
                          const std::vector<LabeledVolume>& data,
                          const std::vector<int>& organClasses);

}  // namespace a3dfdg

#endif
