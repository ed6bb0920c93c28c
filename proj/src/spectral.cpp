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

#include "a3dfdg/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace a3dfdg {

namespace {

using Cplx = std::complex<double>;
using CTensor3 = Eigen::Tensor<Cplx, 3>;

/// In-place 1D transform of every line along `axis`. Lines along axis 0 are
/// contiguous; the other axes are gathered through a scratch buffer.
void fftAxis(CTensor3& t, int axis, bool inverse) {
  const Eigen::Index dims[3] = {t.dimension(0), t.dimension(1), t.dimension(2)};
  const Eigen::Index n = dims[axis];
  if (n == 1) return;  // single-bin transform is the identity (scaled by 1)

  Eigen::FFT<double> fft;
  std::vector<Cplx> line(static_cast<std::size_t>(n));
  std::vector<Cplx> out(static_cast<std::size_t>(n));

  const Eigen::Index strides[3] = {1, dims[0], dims[0] * dims[1]};
  const Eigen::Index stride = strides[axis];
  const int oa = axis == 0 ? 1 : 0;   // first off-axis
  const int ob = axis == 2 ? 1 : 2;   // second off-axis
  Cplx* data = t.data();

  for (Eigen::Index b = 0; b < dims[ob]; ++b) {
    for (Eigen::Index a = 0; a < dims[oa]; ++a) {
      Cplx* base = data + a * strides[oa] + b * strides[ob];
      for (Eigen::Index i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = base[i * stride];
      if (inverse) {
        fft.inv(out, line);  // applies the 1/n scaling
      } else {
        fft.fwd(out, line);
      }
      for (Eigen::Index i = 0; i < n; ++i) base[i * stride] = out[static_cast<std::size_t>(i)];
    }
  }
}

enum class Shift { Center, Undo };

/// Moves the DC bin to the grid center (Center) or back to index 0 (Undo).
CTensor3 fftshift(const CTensor3& in, Shift dir) {
  const Eigen::Index H = in.dimension(0), W = in.dimension(1), D = in.dimension(2);
  const Eigen::Index ch = H / 2, cw = W / 2, cd = D / 2;
  const Eigen::Index oh = dir == Shift::Center ? H - ch : ch;
  const Eigen::Index ow = dir == Shift::Center ? W - cw : cw;
  const Eigen::Index od = dir == Shift::Center ? D - cd : cd;
  CTensor3 out(H, W, D);
  for (Eigen::Index d = 0; d < D; ++d) {
    const Eigen::Index sd = (d + od) % D;
    for (Eigen::Index w = 0; w < W; ++w) {
      const Eigen::Index sw = (w + ow) % W;
      for (Eigen::Index h = 0; h < H; ++h) {
        out(h, w, d) = in((h + oh) % H, sw, sd);
      }
    }
  }
  return out;
}

struct Band {
  Index3 origin;
  Extent3 extent;
};

Band bandOf(Beta beta, Extent3 shape) {
  // styleBlockExtent validates beta and that the centered block fits.
  const Extent3 block = styleBlockExtent(beta, shape);
  const Index3 dc = dcIndex(shape);
  const Index3 half{(block.h - 1) / 2, (block.w - 1) / 2, (block.d - 1) / 2};
  return Band{{dc.h - half.h, dc.w - half.w, dc.d - half.d}, block};
}

}  // namespace

Extent3 styleBlockExtent(Beta beta, Extent3 shape) {
  if (!beta.allPositive()) {
    throw std::invalid_argument("style band: beta fractions must be > 0");
  }
  const auto span = [](float b, Eigen::Index n) {
    // Snap beta*L upward by a hair so decimal fractions stored as f32 hit
    // the intended integer (0.01f * 100 sits fractionally below 1).
    const double x = static_cast<double>(b) * static_cast<double>(n);
    return 2 * static_cast<Eigen::Index>(std::floor(x + 1e-4)) + 1;
  };
  const Extent3 block{span(beta.h, shape.h), span(beta.w, shape.w),
                      span(beta.d, shape.d)};
  // An odd block no wider than the axis always fits around the DC bin.
  if (block.h > shape.h || block.w > shape.w || block.d > shape.d) {
    throw std::invalid_argument("style band: beta block exceeds spectrum dims");
  }
  return block;
}

Extent3 BandMask::blockExtent() const { return styleBlockExtent(beta, shape); }

Index3 BandMask::blockOrigin() const { return bandOf(beta, shape).origin; }

Mask3 BandMask::materialize() const {
  const Band band = bandOf(beta, shape);
  Mask3 m(shape.h, shape.w, shape.d);
  m.setConstant(false);
  for (Eigen::Index d = 0; d < band.extent.d; ++d) {
    for (Eigen::Index w = 0; w < band.extent.w; ++w) {
      for (Eigen::Index h = 0; h < band.extent.h; ++h) {
        m(band.origin.h + h, band.origin.w + w, band.origin.d + d) = true;
      }
    }
  }
  return m;
}

Spectrum3D fft3(const Tensor3& x) {
  const Extent3 e = extentOf(x);
  if (!e.allPositive()) {
    throw std::invalid_argument("fft3: all shape dims must be >= 1");
  }
  CTensor3 f(e.h, e.w, e.d);
  {
    const Real* src = x.data();
    Cplx* dst = f.data();
    for (Eigen::Index i = 0; i < x.size(); ++i) dst[i] = Cplx(src[i], 0.0);
  }
  fftAxis(f, 0, false);
  fftAxis(f, 1, false);
  fftAxis(f, 2, false);
  f = fftshift(f, Shift::Center);

  Spectrum3D spec{Tensor3d(e.h, e.w, e.d), Tensor3d(e.h, e.w, e.d)};
  const Cplx* src = f.data();
  double* amp = spec.amplitude.data();
  double* ph = spec.phase.data();
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    amp[i] = std::abs(src[i]);
    ph[i] = std::arg(src[i]);
  }
  return spec;
}

Tensor3 ifft3(const Spectrum3D& spec) {
  const Extent3 e = extentOf(spec.amplitude);
  if (e != extentOf(spec.phase)) {
    throw std::invalid_argument("ifft3: amplitude/phase shapes must match");
  }
  CTensor3 f(e.h, e.w, e.d);
  {
    const double* amp = spec.amplitude.data();
    const double* ph = spec.phase.data();
    Cplx* dst = f.data();
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      dst[i] = std::polar(amp[i], ph[i]);
    }
  }
  f = fftshift(f, Shift::Undo);
  fftAxis(f, 0, true);
  fftAxis(f, 1, true);
  fftAxis(f, 2, true);

  Tensor3 out(e.h, e.w, e.d);
  const Cplx* src = f.data();
  Real* dst = out.data();
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    dst[i] = static_cast<Real>(src[i].real());
  }
  return out;
}

StyleSpectrum extractStyle(const Spectrum3D& spec, Beta beta) {
  const Extent3 shape = extentOf(spec.amplitude);
  const Band band = bandOf(beta, shape);
  Tensor3d blockD = spec.amplitude.slice(band.origin.arr(), band.extent.arr());
  Tensor3 block = blockD.cast<Real>();
  return StyleSpectrum{std::move(block), beta, shape};
}

StyleSpectrum mixStyles(const StyleSpectrum& source, const StyleSpectrum& target,
                        float alpha) {
  if (extentOf(source.block) != extentOf(target.block)) {
    throw std::invalid_argument("mixStyles: block shapes must match");
  }
  if (!(alpha >= 0.0f && alpha <= 1.0f)) {
    throw std::invalid_argument("mixStyles: alpha must lie in [0, 1]");
  }
  StyleSpectrum mixed = source;
  mixed.block = source.block * alpha + target.block * (1.0f - alpha);
  return mixed;
}

SubVolume applyStyle(const SubVolume& sv, const StyleSpectrum& target,
                     float alpha, Beta beta, float tauAir,
                     bool preserveContour) {
  const Extent3 shape = extentOf(sv.data);
  if (target.sourceShape != shape) {
    throw std::invalid_argument("applyStyle: target style source shape mismatch");
  }
  if (target.beta != beta) {
    throw std::invalid_argument("applyStyle: target style beta mismatch");
  }
  if (!(alpha >= 0.0f && alpha <= 1.0f)) {
    throw std::invalid_argument("applyStyle: alpha must lie in [0, 1]");
  }
  const Band band = bandOf(beta, shape);
  if (extentOf(target.block) != band.extent) {
    throw std::invalid_argument("applyStyle: target block shape mismatch");
  }

  Spectrum3D spec = fft3(sv.data);

  // Amplitude mixup restricted to the band; bins outside it keep their value.
  const double a = static_cast<double>(alpha);
  for (Eigen::Index d = 0; d < band.extent.d; ++d) {
    for (Eigen::Index w = 0; w < band.extent.w; ++w) {
      for (Eigen::Index h = 0; h < band.extent.h; ++h) {
        double& amp = spec.amplitude(band.origin.h + h, band.origin.w + w,
                                     band.origin.d + d);
        amp = a * amp + (1.0 - a) * static_cast<double>(target.block(h, w, d));
      }
    }
  }

  Tensor3 out = ifft3(spec);

  if (preserveContour) {
    const Real* orig = sv.data.data();
    Real* dst = out.data();
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      if (orig[i] < tauAir) dst[i] = orig[i];
    }
  }
  return SubVolume{std::move(out), sv.origin, sv.sliceScore};
}

}  // namespace a3dfdg
