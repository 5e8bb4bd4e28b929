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

#include "raniqa/image.hpp"

namespace raniqa {

// Peak signal-to-noise ratio in dB over all RGB channels on the 0..255
// scale. Identical inputs return +infinity.
double psnr(const ImagePlane& a, const ImagePlane& b);

// Structural similarity on Rec. 601 luma: 11x11 Gaussian window
// (sigma 1.5), K1 = 0.01, K2 = 0.03, dynamic range 255, averaged over valid
// window positions. Requires images at least 11x11.
double ssim(const ImagePlane& a, const ImagePlane& b);

struct FsimResult {
  double score = 0.0;    // in (0, 1]
  double pc_mass = 0.0;  // sum of max(PC_a, PC_b) over pixels
};

// Feature similarity on luma: phase congruency from a log-Gabor bank
// (4 scales from wavelength 6 at factor 2, radial sigma 0.55; 4 orientations
// with angular sigma 0.4 rad; median-based noise threshold) and Scharr
// gradient magnitude; S = S_PC * S_G with T1 = 0.85, T2 = 160, pooled by
// max(PC_a, PC_b). An all-constant pair has zero PC mass and scores 1.0 by
// convention. Requires images at least 32x32.
FsimResult fsim(const ImagePlane& a, const ImagePlane& b);

struct PatchLabel {
  double s0 = 0.0;  // pseudo quality score in (0, 1]
  double w0 = 0.0;  // pseudo significance weight >= 0
};

// FSIM-based supervision for one aligned patch pair: the score is the FSIM
// value, the weight is the PC mass normalized by pixel count so patches of
// any size are comparable.
PatchLabel patch_pseudo_labels(const ImagePlane& distorted,
                               const ImagePlane& pristine);

}  // namespace raniqa
