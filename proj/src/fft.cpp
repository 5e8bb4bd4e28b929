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

#include "raniqa/fft.hpp"

#include <cmath>

#include "raniqa/common.hpp"

namespace raniqa {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 Cooley-Tukey; n must be a power of two.
void fft_pow2(Cplx* a, int n, bool inverse) {
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / len;
    const Cplx wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      Cplx w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const Cplx u = a[i + k];
        const Cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (int i = 0; i < n; ++i) a[i] /= n;
}

}  // namespace

Fft1d::Fft1d(int n) : n_(n) {
  if (n < 1) throw ArgumentError("fft length must be >= 1");
  pow2_ = is_pow2(n);
  if (pow2_) return;
  m_ = next_pow2(2 * n - 1);
  chirp_.resize(n);
  for (int i = 0; i < n; ++i) {
    // angle = -pi * i^2 / n, with i^2 reduced mod 2n to keep precision
    const long long sq = (static_cast<long long>(i) * i) % (2LL * n);
    const double ang = -M_PI * static_cast<double>(sq) / n;
    chirp_[i] = Cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<Cplx> b(m_, Cplx(0, 0));
  b[0] = std::conj(chirp_[0]);
  for (int i = 1; i < n; ++i) {
    b[i] = std::conj(chirp_[i]);
    b[m_ - i] = std::conj(chirp_[i]);
  }
  fft_pow2(b.data(), m_, false);
  chirp_fft_ = std::move(b);
}

void Fft1d::transform(Cplx* data, bool inverse) const {
  if (n_ == 1) return;
  if (pow2_) {
    fft_pow2(data, n_, inverse);
    return;
  }
  // Bluestein: X[k] = chirp[k] * (x .* chirp  (*)  conj-chirp)[k]
  std::vector<Cplx> a(m_, Cplx(0, 0));
  if (!inverse) {
    for (int i = 0; i < n_; ++i) a[i] = data[i] * chirp_[i];
  } else {
    for (int i = 0; i < n_; ++i) a[i] = std::conj(data[i]) * chirp_[i];
  }
  fft_pow2(a.data(), m_, false);
  for (int i = 0; i < m_; ++i) a[i] *= chirp_fft_[i];
  fft_pow2(a.data(), m_, true);
  if (!inverse) {
    for (int i = 0; i < n_; ++i) data[i] = a[i] * chirp_[i];
  } else {
    for (int i = 0; i < n_; ++i)
      data[i] = std::conj(a[i] * chirp_[i]) / static_cast<double>(n_);
  }
}

void Fft1d::forward(Cplx* data) const { transform(data, false); }
void Fft1d::inverse(Cplx* data) const { transform(data, true); }

Fft2d::Fft2d(int h, int w) : h_(h), w_(w), row_(w), col_(h) {}

std::vector<Cplx> Fft2d::run(std::vector<Cplx> data, bool inverse) const {
  // rows
  for (int y = 0; y < h_; ++y) {
    Cplx* row = data.data() + static_cast<size_t>(y) * w_;
    inverse ? row_.inverse(row) : row_.forward(row);
  }
  // columns
  std::vector<Cplx> col(static_cast<size_t>(h_));
  for (int x = 0; x < w_; ++x) {
    for (int y = 0; y < h_; ++y) col[y] = data[static_cast<size_t>(y) * w_ + x];
    inverse ? col_.inverse(col.data()) : col_.forward(col.data());
    for (int y = 0; y < h_; ++y) data[static_cast<size_t>(y) * w_ + x] = col[y];
  }
  return data;
}

std::vector<Cplx> Fft2d::forward(const std::vector<double>& real) const {
  if (real.size() != static_cast<size_t>(h_) * w_)
    throw ArgumentError("fft2d: data size does not match plan");
  std::vector<Cplx> data(real.size());
  for (size_t i = 0; i < real.size(); ++i) data[i] = Cplx(real[i], 0.0);
  return run(std::move(data), false);
}

std::vector<Cplx> Fft2d::forward(const std::vector<Cplx>& in) const {
  if (in.size() != static_cast<size_t>(h_) * w_)
    throw ArgumentError("fft2d: data size does not match plan");
  return run(in, false);
}

std::vector<Cplx> Fft2d::inverse(const std::vector<Cplx>& spec) const {
  if (spec.size() != static_cast<size_t>(h_) * w_)
    throw ArgumentError("fft2d: data size does not match plan");
  return run(spec, true);
}

}  // namespace raniqa
