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

#include <array>
#include <string>

#include "raniqa/image.hpp"

namespace raniqa {

enum class DistortionFamily { kGaussianBlur, kWhiteNoise, kJpegLike, kJp2kLike };

constexpr int kDistortionFamilies = 4;
constexpr int kDistortionLevels = 5;

// Severity ladders, mild to severe, per level 1..5.
constexpr std::array<double, 5> kBlurSigma = {0.9, 1.7, 3.0, 5.0, 8.0};
constexpr std::array<double, 5> kNoiseSigma = {0.02, 0.045, 0.09, 0.18, 0.35};
constexpr std::array<int, 5> kJpegQuality = {85, 60, 35, 18, 8};
constexpr std::array<double, 5> kJp2kKeep = {0.2, 0.1, 0.05, 0.025, 0.012};

struct DistortionSpec {
  DistortionFamily family = DistortionFamily::kGaussianBlur;
  int level = 1;  // 1..5
  uint64_t seed = 0;
};

const char* family_name(DistortionFamily family);
DistortionFamily family_from_name(const std::string& name);
DistortionFamily family_by_index(int index);  // 0..3

// Separable Gaussian blur, kernel radius ceil(3 sigma), reflect padding.
// sigma = 0 is the identity.
ImagePlane gaussian_blur(const ImagePlane& img, double sigma);

// i.i.d. zero-mean Gaussian noise with the given std (in [0,1] units) added
// to every channel, clamped; deterministic per seed.
ImagePlane white_noise(const ImagePlane& img, double sigma, uint64_t seed);

// Block-DCT codec surrogate: YCbCr, per-channel 8x8 DCT, quantization by the
// standard luminance table scaled by the conventional quality factor, inverse
// transform, clamp. Edge blocks are padded by edge replication. No chroma
// subsampling or entropy coding.
ImagePlane jpeg_like(const ImagePlane& img, int quality);

// Wavelet codec surrogate: 4-level 2-D Haar per channel, keep the
// keep_fraction largest-magnitude coefficients (global threshold per
// channel), inverse transform, clamp. Non-multiple-of-16 extents are padded
// by edge replication and cropped back.
ImagePlane jp2k_like(const ImagePlane& img, double keep_fraction);

// Dispatch with level-resolved parameters from the severity tables.
ImagePlane apply_distortion(const DistortionSpec& spec, const ImagePlane& img);

}  // namespace raniqa
