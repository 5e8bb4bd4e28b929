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

#pragma once

#include <complex>
#include <vector>

namespace raniqa {

using Cplx = std::complex<double>;

// 1-D DFT plan for arbitrary length: radix-2 when N is a power of two,
// Bluestein's chirp-z otherwise. Deterministic, double precision.
class Fft1d {
 public:
  explicit Fft1d(int n);
  int size() const { return n_; }
  void forward(Cplx* data) const;
  void inverse(Cplx* data) const;  // includes the 1/N scaling

 private:
  void transform(Cplx* data, bool inverse) const;
  int n_;
  bool pow2_;
  int m_ = 0;                     // Bluestein working size
  std::vector<Cplx> chirp_;       // e^{-i pi n^2 / N}
  std::vector<Cplx> chirp_fft_;   // FFT of the wrapped conjugate chirp
};

// Row-column 2-D DFT on h x w row-major grids.
class Fft2d {
 public:
  Fft2d(int h, int w);
  std::vector<Cplx> forward(const std::vector<double>& real) const;
  std::vector<Cplx> forward(const std::vector<Cplx>& data) const;
  std::vector<Cplx> inverse(const std::vector<Cplx>& spec) const;

 private:
  std::vector<Cplx> run(std::vector<Cplx> data, bool inverse) const;
  int h_, w_;
  Fft1d row_, col_;
};

}  // namespace raniqa
