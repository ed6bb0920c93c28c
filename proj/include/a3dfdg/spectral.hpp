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

#ifndef A3DFDG_SPECTRAL_HPP
#define A3DFDG_SPECTRAL_HPP

#include "a3dfdg/types.hpp"
#include "a3dfdg/volume.hpp"

namespace a3dfdg {

/// Amplitude/phase decomposition of a real 3D grid, stored center-shifted:
/// the DC bin sits at (H/2, W/2, D/2) (floor division).
struct Spectrum3D {
  Tensor3d amplitude;  // >= 0 everywhere
  Tensor3d phase;      // radians in (-pi, pi]
};

/// Centered low-frequency amplitude crop: the shareable "style" of a
/// sub-volume. Phase and out-of-band amplitude are never included, so the
/// source cannot be reconstructed from it.
struct StyleSpectrum {
  Tensor3 block;
  Beta beta;
  Extent3 sourceShape;
};

/// Block shape of the band selected by beta on a grid of the given shape:
/// 2*floor(beta*L)+1 per axis (always odd, always contains DC).
Extent3 styleBlockExtent(Beta beta, Extent3 shape);

/// The indicator of the centered low-frequency band: 1 on the style block,
/// 0 elsewhere.
struct BandMask {
  Beta beta;
  Extent3 shape;

  Extent3 blockExtent() const;
  Index3 blockOrigin() const;  // offset of the block in the shifted layout
  Mask3 materialize() const;
};

/// Center index of the shifted spectrum layout.
inline Index3 dcIndex(Extent3 shape) {
  return {shape.h / 2, shape.w / 2, shape.d / 2};
}

Spectrum3D fft3(const Tensor3& x);
inline Spectrum3D fft3(const SubVolume& sv) { return fft3(sv.data); }

/// Real part of the inverse transform of amplitude * exp(i*phase); the
/// residual imaginary part is discarded.
Tensor3 ifft3(const Spectrum3D& spec);

/// Center-crops the amplitude of the band selected by beta.
StyleSpectrum extractStyle(const Spectrum3D& spec, Beta beta);

/// Frequency-space MixUp: alpha*source + (1-alpha)*target, element-wise.
StyleSpectrum mixStyles(const StyleSpectrum& source, const StyleSpectrum& target,
                        float alpha);

/// Full style transfer: decompose, mix the low-frequency amplitude band with
/// the target style, keep out-of-band amplitude and all phase, reconstruct,
/// and (when preserveContour) restore the original value at air voxels
/// (intensity < tauAir).
SubVolume applyStyle(const SubVolume& sv, const StyleSpectrum& target,
                     float alpha, Beta beta, float tauAir,
                     bool preserveContour = true);

}  // namespace a3dfdg

#endif
