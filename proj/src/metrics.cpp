// Copyright 2026 the raniqa authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "raniqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "raniqa/fft.hpp"

namespace raniqa {

double psnr(const ImagePlane& a, const ImagePlane& b) {
  if (!a.same_dims(b)) throw ShapeError("psnr: image dims differ");
  double acc = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    const double d = 255.0 * (static_cast<double>(a.values[i]) -
                              static_cast<double>(b.values[i]));
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.values.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

// Separable valid-mode convolution of an h x w map with a 1-D kernel applied
// along both axes.
std::vector<double> conv_valid_separable(const std::vector<double>& img, int h,
                                         int w,
                                         const std::vector<double>& kernel,
                                         int* oh, int* ow) {
  const int k = static_cast<int>(kernel.size());
  const int rw = w - k + 1;
  std::vector<double> rows(static_cast<size_t>(h) * rw);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < rw; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i)
        acc += kernel[i] * img[static_cast<size_t>(y) * w + x + i];
      rows[static_cast<size_t>(y) * rw + x] = acc;
    }
  const int rh = h - k + 1;
  std::vector<double> out(static_cast<size_t>(rh) * rw);
  for (int y = 0; y < rh; ++y)
    for (int x = 0; x < rw; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i)
        acc += kernel[i] * rows[static_cast<size_t>(y + i) * rw + x];
      out[static_cast<size_t>(y) * rw + x] = acc;
    }
  *oh = rh;
  *ow = rw;
  return out;
}

}  // namespace

double ssim(const ImagePlane& a, const ImagePlane& b) {
  if (!a.same_dims(b)) throw ShapeError("ssim: image dims differ");
  constexpr int kWin = 11;
  if (a.width < kWin || a.height < kWin)
    throw ArgumentError("ssim: image smaller than the 11x11 window");
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);

  std::vector<double> kernel(kWin);
  {
    const double sigma = 1.5;
    double s = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - (kWin - 1) / 2.0;
      kernel[i] = std::exp(-d * d / (2.0 * sigma * sigma));
      s += kernel[i];
    }
    for (auto& v : kernel) v /= s;
  }

  const std::vector<double> ya = luma255(a);
  const std::vector<double> yb = luma255(b);
  const int h = a.height, w = a.width;
  std::vector<double> aa(ya.size()), bb(ya.size()), ab(ya.size());
  for (size_t i = 0; i < ya.size(); ++i) {
    aa[i] = ya[i] * ya[i];
    bb[i] = yb[i] * yb[i];
    ab[i] = ya[i] * yb[i];
  }
  int oh = 0, ow = 0;
  const auto mu_a = conv_valid_separable(ya, h, w, kernel, &oh, &ow);
  const auto mu_b = conv_valid_separable(yb, h, w, kernel, &oh, &ow);
  const auto m_aa = conv_valid_separable(aa, h, w, kernel, &oh, &ow);
  const auto m_bb = conv_valid_separable(bb, h, w, kernel, &oh, &ow);
  const auto m_ab = conv_valid_separable(ab, h, w, kernel, &oh, &ow);

  double acc = 0.0;
  for (size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = m_aa[i] - ma * ma;
    const double vb = m_bb[i] - mb * mb;
    const double cab = m_ab[i] - ma * mb;
    const double num = (2.0 * ma * mb + c1) * (2.0 * cab + c2);
    const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
    acc += num / den;
  }
  return acc / static_cast<double>(mu_a.size());
}

// ---- FSIM ------------------------------------------------------------------

namespace {

struct PcParams {
  int nscale = 4;
  int norient = 4;
  double min_wavelength = 6.0;
  double mult = 2.0;
  double sigma_onf = 0.55;   // ratio sigma/f0 of the log-Gabor radial part
  double sigma_theta = 0.4;  // angular Gaussian width, radians
  double k_noise = 2.0;      // noise std multiplier for the PC threshold
  double epsilon = 1e-4;
};

// Phase congruency map of one luma image (Kovesi-style measure with a
// median-based noise threshold).
std::vector<double> phase_congruency(const std::vector<double>& luma, int h,
                                     int w, const PcParams& p) {
  const size_t n = luma.size();
  const Fft2d plan(h, w);
  const std::vector<Cplx> spectrum = plan.forward(luma);

  // frequency grid (unshifted layout), radius and angle per bin
  std::vector<double> radius(n), theta_cos(n), theta_sin(n);
  for (int y = 0; y < h; ++y) {
    const double fy = (y <= h / 2 ? y : y - h) / static_cast<double>(h);
    for (int x = 0; x < w; ++x) {
      const double fx = (x <= w / 2 ? x : x - w) / static_cast<double>(w);
      const size_t i = static_cast<size_t>(y) * w + x;
      const double r = std::sqrt(fx * fx + fy * fy);
      radius[i] = r;
      const double ang = std::atan2(-fy, fx);  // image y axis points down
      theta_cos[i] = std::cos(ang);
      theta_sin[i] = std::sin(ang);
    }
  }
  radius[0] = 1.0;  // avoid log(0) at DC; the DC gain is zeroed below

  // radial log-Gabor components, shared across orientations, with a
  // high-order Butterworth low-pass to suppress corner frequencies
  const double log_sigma = std::log(p.sigma_onf);
  std::vector<std::vector<double>> radial(p.nscale);
  for (int s = 0; s < p.nscale; ++s) {
    const double wavelength = p.min_wavelength * std::pow(p.mult, s);
    const double f0 = 1.0 / wavelength;
    radial[s].resize(n);
    for (size_t i = 0; i < n; ++i) {
      const double lr = std::log(radius[i] / f0);
      double g = std::exp(-(lr * lr) / (2.0 * log_sigma * log_sigma));
      const double lp = 1.0 / (1.0 + std::pow(radius[i] / 0.45, 30.0));
      radial[s][i] = g * lp;
    }
    radial[s][0] = 0.0;
  }

  std::vector<double> pc_num(n, 0.0), pc_den(n, 0.0);
  std::vector<double> filter(n);
  std::vector<Cplx> banded(n);
  std::vector<std::vector<Cplx>> resp(p.nscale);

  for (int o = 0; o < p.norient; ++o) {
    const double phi = o * M_PI / p.norient;
    const double cos_phi = std::cos(phi), sin_phi = std::sin(phi);
    std::vector<double> spread(n);
    for (size_t i = 0; i < n; ++i) {
      const double ds = theta_sin[i] * cos_phi - theta_cos[i] * sin_phi;
      const double dc = theta_cos[i] * cos_phi + theta_sin[i] * sin_phi;
      const double dtheta = std::abs(std::atan2(ds, dc));
      spread[i] =
          std::exp(-(dtheta * dtheta) / (2.0 * p.sigma_theta * p.sigma_theta));
    }

    std::vector<double> sum_e(n, 0.0), sum_o(n, 0.0), sum_an(n, 0.0);
    double tau = 0.0;
    for (int s = 0; s < p.nscale; ++s) {
      for (size_t i = 0; i < n; ++i) {
        filter[i] = radial[s][i] * spread[i];
        banded[i] = spectrum[i] * filter[i];
      }
      resp[s] = plan.inverse(banded);
      for (size_t i = 0; i < n; ++i) {
        const double re = resp[s][i].real();
        const double im = resp[s][i].imag();
        sum_e[i] += re;
        sum_o[i] += im;
        sum_an[i] += std::sqrt(re * re + im * im);
      }
      if (s == 0) {
        // median amplitude of the smallest-scale response -> Rayleigh scale
        std::vector<double> amps(n);
        for (size_t i = 0; i < n; ++i) amps[i] = std::abs(resp[0][i]);
        std::nth_element(amps.begin(), amps.begin() + amps.size() / 2,
                         amps.end());
        tau = amps[amps.size() / 2] / std::sqrt(std::log(4.0));
      }
    }

    // noise energy threshold from the Rayleigh model of the response chain
    const double total_tau = tau * (1.0 - std::pow(1.0 / p.mult, p.nscale)) /
                             (1.0 - 1.0 / p.mult);
    const double noise_mean = total_tau * std::sqrt(M_PI / 2.0);
    const double noise_sigma = total_tau * std::sqrt((4.0 - M_PI) / 2.0);
    const double threshold = noise_mean + p.k_noise * noise_sigma;

    for (size_t i = 0; i < n; ++i) {
      const double x_energy =
          std::sqrt(sum_e[i] * sum_e[i] + sum_o[i] * sum_o[i]) + p.epsilon;
      const double mean_e = sum_e[i] / x_energy;
      const double mean_o = sum_o[i] / x_energy;
      double energy = 0.0;
      for (int s = 0; s < p.nscale; ++s) {
        const double re = resp[s][i].real();
        const double im = resp[s][i].imag();
        energy += re * mean_e + im * mean_o -
                  std::abs(re * mean_o - im * mean_e);
      }
      energy = std::max(energy - threshold, 0.0);
      pc_num[i] += energy;
      pc_den[i] += sum_an[i];
    }
  }

  std::vector<double> pc(n);
  for (size_t i = 0; i < n; ++i) pc[i] = pc_num[i] / (pc_den[i] + p.epsilon);
  return pc;
}

// Scharr gradient magnitude, zero-padded same-size convolution.
std::vector<double> scharr_magnitude(const std::vector<double>& img, int h,
                                     int w) {
  static const double kx[3][3] = {
      {3 / 16.0, 0.0, -3 / 16.0},
      {10 / 16.0, 0.0, -10 / 16.0},
      {3 / 16.0, 0.0, -3 / 16.0},
  };
  std::vector<double> out(img.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx = 0.0, gy = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          const double v = img[static_cast<size_t>(yy) * w + xx];
          gx += kx[dy + 1][dx + 1] * v;
          gy += kx[dx + 1][dy + 1] * v;  // transpose for the vertical kernel
        }
      }
      out[static_cast<size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

// Average-pool by factor f and subsample (the customary pre-shrink for
// large inputs; f is 1 for anything smaller than ~384 pixels).
std::vector<double> downsample(const std::vector<double>& img, int h, int w,
                               int f, int* oh, int* ow) {
  if (f <= 1) {
    *oh = h;
    *ow = w;
    return img;
  }
  const int nh = h / f, nw = w / f;
  std::vector<double> out(static_cast<size_t>(nh) * nw);
  for (int y = 0; y < nh; ++y)
    for (int x = 0; x < nw; ++x) {
      double acc = 0.0;
      for (int dy = 0; dy < f; ++dy)
        for (int dx = 0; dx < f; ++dx)
          acc += img[static_cast<size_t>(y * f + dy) * w + (x * f + dx)];
      out[static_cast<size_t>(y) * nw + x] = acc / (f * f);
    }
  *oh = nh;
  *ow = nw;
  return out;
}

}  // namespace

FsimResult fsim(const ImagePlane& a, const ImagePlane& b) {
  if (!a.same_dims(b)) throw ShapeError("fsim: image dims differ");
  if (a.width < 32 || a.height < 32)
    throw ArgumentError("fsim: images must be at least 32x32");

  std::vector<double> ya = luma255(a);
  std::vector<double> yb = luma255(b);
  int h = a.height, w = a.width;
  const int f =
      std::max(1, static_cast<int>(std::lround(std::min(h, w) / 256.0)));
  int dh = 0, dw = 0;
  ya = downsample(ya, h, w, f, &dh, &dw);
  yb = downsample(yb, h, w, f, &dh, &dw);
  h = dh;
  w = dw;

  const PcParams params;
  const std::vector<double> pc_a = phase_congruency(ya, h, w, params);
  const std::vector<double> pc_b = phase_congruency(yb, h, w, params);
  const std::vector<double> g_a = scharr_magnitude(ya, h, w);
  const std::vector<double> g_b = scharr_magnitude(yb, h, w);

  constexpr double kT1 = 0.85;
  constexpr double kT2 = 160.0;
  double num = 0.0, mass = 0.0;
  for (size_t i = 0; i < pc_a.size(); ++i) {
    const double s_pc = (2.0 * pc_a[i] * pc_b[i] + kT1) /
                        (pc_a[i] * pc_a[i] + pc_b[i] * pc_b[i] + kT1);
    const double s_g = (2.0 * g_a[i] * g_b[i] + kT2) /
                       (g_a[i] * g_a[i] + g_b[i] * g_b[i] + kT2);
    const double pcm = std::max(pc_a[i], pc_b[i]);
    num += s_pc * s_g * pcm;
    mass += pcm;
  }
  FsimResult out;
  out.pc_mass = mass;
  out.score = mass > 0.0 ? num / mass : 1.0;  // constant pair convention
  return out;
}

PatchLabel patch_pseudo_labels(const ImagePlane& distorted,
                               const ImagePlane& pristine) {
  if (!distorted.same_dims(pristine))
    throw ShapeError("patch_pseudo_labels: patch dims differ");
  const FsimResult r = fsim(distorted, pristine);
  PatchLabel label;
  label.s0 = r.score;
  label.w0 = r.pc_mass / static_cast<double>(distorted.plane_size());
  return label;
}

}  // namespace raniqa
