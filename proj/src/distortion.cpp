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

#include "raniqa/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace raniqa {

const char* family_name(DistortionFamily family) {
  switch (family) {
    case DistortionFamily::kGaussianBlur:
      return "gblur";
    case DistortionFamily::kWhiteNoise:
      return "wnoise";
    case DistortionFamily::kJpegLike:
      return "jpeg";
    case DistortionFamily::kJp2kLike:
      return "jp2k";
  }
  throw ArgumentError("unknown distortion family");
}

DistortionFamily family_from_name(const std::string& name) {
  if (name == "gblur") return DistortionFamily::kGaussianBlur;
  if (name == "wnoise") return DistortionFamily::kWhiteNoise;
  if (name == "jpeg") return DistortionFamily::kJpegLike;
  if (name == "jp2k") return DistortionFamily::kJp2kLike;
  throw ArgumentError("unknown distortion family: " + name);
}

DistortionFamily family_by_index(int index) {
  switch (index) {
    case 0:
      return DistortionFamily::kGaussianBlur;
    case 1:
      return DistortionFamily::kWhiteNoise;
    case 2:
      return DistortionFamily::kJpegLike;
    case 3:
      return DistortionFamily::kJp2kLike;
    default:
      throw ArgumentError("distortion family index out of range");
  }
}

namespace {

int reflect_index(int i, int n) {
  // reflect without repeating the edge sample ((-1 -> 1, n -> n-2)
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

}  // namespace

ImagePlane gaussian_blur(const ImagePlane& img, double sigma) {
  if (sigma < 0.0) throw ArgumentError("blur sigma must be >= 0");
  if (sigma == 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(static_cast<double>(i) * i) /
                                  (2.0 * sigma * sigma));
    ksum += kernel[i + radius];
  }
  for (auto& v : kernel) v /= ksum;

  const int w = img.width, h = img.height;
  ImagePlane out = ImagePlane::create(w, h);
  std::vector<double> tmp(static_cast<size_t>(w) * h);
  for (int c = 0; c < 3; ++c) {
    // horizontal
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * img.at(c, y, reflect_index(x + i, w));
        tmp[static_cast<size_t>(y) * w + x] = acc;
      }
    // vertical
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] *
                 tmp[static_cast<size_t>(reflect_index(y + i, h)) * w + x];
        out.at(c, y, x) = static_cast<float>(std::min(std::max(acc, 0.0), 1.0));
      }
  }
  return out;
}

ImagePlane white_noise(const ImagePlane& img, double sigma, uint64_t seed) {
  if (sigma < 0.0) throw ArgumentError("noise sigma must be >= 0");
  if (sigma == 0.0) return img;
  Rng rng(seed);
  ImagePlane out = img;
  for (auto& v : out.values) {
    const double noisy = static_cast<double>(v) + rng.normal(0.0, sigma);
    v = static_cast<float>(std::min(std::max(noisy, 0.0), 1.0));
  }
  return out;
}

// ---- block-DCT codec ---------------------------------------------------------

namespace {

// Standard luminance quantization table, row-major zig-zag-free layout.
constexpr int kLumaQuant[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  //
    12, 12, 14, 19, 26,  58,  60,  55,  //
    14, 13, 16, 24, 40,  57,  69,  56,  //
    14, 17, 22, 29, 51,  87,  80,  62,  //
    18, 22, 37, 56, 68,  109, 103, 77,  //
    24, 35, 55, 64, 81,  104, 113, 92,  //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
};

void dct8(const double in[8], double out[8]) {
  for (int u = 0; u < 8; ++u) {
    double acc = 0.0;
    for (int x = 0; x < 8; ++x)
      acc += in[x] * std::cos((2 * x + 1) * u * M_PI / 16.0);
    const double cu = (u == 0) ? std::sqrt(0.5) : 1.0;
    out[u] = 0.5 * cu * acc;
  }
}

void idct8(const double in[8], double out[8]) {
  for (int x = 0; x < 8; ++x) {
    double acc = 0.0;
    for (int u = 0; u < 8; ++u) {
      const double cu = (u == 0) ? std::sqrt(0.5) : 1.0;
      acc += cu * in[u] * std::cos((2 * x + 1) * u * M_PI / 16.0);
    }
    out[x] = 0.5 * acc;
  }
}

void transform_block(double block[64], const int quant[64]) {
  double tmp[64], row[8], col[8];
  // 2-D DCT: rows then columns
  for (int y = 0; y < 8; ++y) dct8(block + 8 * y, tmp + 8 * y);
  for (int x = 0; x < 8; ++x) {
    for (int y = 0; y < 8; ++y) col[y] = tmp[8 * y + x];
    dct8(col, row);
    for (int y = 0; y < 8; ++y) tmp[8 * y + x] = row[y];
  }
  // quantize / dequantize
  for (int i = 0; i < 64; ++i)
    tmp[i] = std::round(tmp[i] / quant[i]) * quant[i];
  // inverse
  for (int x = 0; x < 8; ++x) {
    for (int y = 0; y < 8; ++y) col[y] = tmp[8 * y + x];
    idct8(col, row);
    for (int y = 0; y < 8; ++y) tmp[8 * y + x] = row[y];
  }
  for (int y = 0; y < 8; ++y) idct8(tmp + 8 * y, block + 8 * y);
}

}  // namespace

ImagePlane jpeg_like(const ImagePlane& img, int quality) {
  if (quality < 1 || quality > 100)
    throw ArgumentError("jpeg quality must be in 1..100");
  const double scale = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
  int quant[64];
  for (int i = 0; i < 64; ++i)
    quant[i] = std::max(1, static_cast<int>(std::lround(
                               kLumaQuant[i] * scale / 100.0)));

  const int w = img.width, h = img.height;
  const int pw = (w + 7) / 8 * 8, ph = (h + 7) / 8 * 8;
  const size_t plane = static_cast<size_t>(pw) * ph;

  // RGB -> YCbCr on the 0..255 scale, edge-replicated to block multiples
  std::vector<double> ycc(3 * plane);
  for (int y = 0; y < ph; ++y) {
    const int sy = std::min(y, h - 1);
    for (int x = 0; x < pw; ++x) {
      const int sx = std::min(x, w - 1);
      const double r = 255.0 * img.at(0, sy, sx);
      const double g = 255.0 * img.at(1, sy, sx);
      const double b = 255.0 * img.at(2, sy, sx);
      const size_t i = static_cast<size_t>(y) * pw + x;
      ycc[i] = 0.299 * r + 0.587 * g + 0.114 * b;
      ycc[plane + i] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
      ycc[2 * plane + i] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
    }
  }

  double block[64];
  for (int c = 0; c < 3; ++c) {
    double* ch = ycc.data() + c * plane;
    for (int by = 0; by < ph; by += 8)
      for (int bx = 0; bx < pw; bx += 8) {
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x)
            block[8 * y + x] =
                ch[static_cast<size_t>(by + y) * pw + bx + x] - 128.0;
        transform_block(block, quant);
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x)
            ch[static_cast<size_t>(by + y) * pw + bx + x] =
                block[8 * y + x] + 128.0;
      }
  }

  ImagePlane out = ImagePlane::create(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * pw + x;
      const double yv = ycc[i];
      const double cb = ycc[plane + i] - 128.0;
      const double cr = ycc[2 * plane + i] - 128.0;
      const double r = yv + 1.402 * cr;
      const double g = yv - 0.344136 * cb - 0.714136 * cr;
      const double b = yv + 1.772 * cb;
      out.at(0, y, x) =
          static_cast<float>(std::min(std::max(r / 255.0, 0.0), 1.0));
      out.at(1, y, x) =
          static_cast<float>(std::min(std::max(g / 255.0, 0.0), 1.0));
      out.at(2, y, x) =
          static_cast<float>(std::min(std::max(b / 255.0, 0.0), 1.0));
    }
  return out;
}

// ---- wavelet codec -------------------------------------------------------------

namespace {

constexpr int kWaveletLevels = 4;
constexpr double kInvSqrt2 = 0.70710678118654752440;

// One orthonormal Haar split along rows of the top-left n x m region.
void haar_rows(std::vector<double>& a, int stride, int rows, int cols) {
  std::vector<double> tmp(cols);
  for (int y = 0; y < rows; ++y) {
    double* row = a.data() + static_cast<size_t>(y) * stride;
    const int half = cols / 2;
    for (int x = 0; x < half; ++x) {
      tmp[x] = (row[2 * x] + row[2 * x + 1]) * kInvSqrt2;
      tmp[half + x] = (row[2 * x] - row[2 * x + 1]) * kInvSqrt2;
    }
    std::copy(tmp.begin(), tmp.begin() + cols, row);
  }
}

void haar_rows_inv(std::vector<double>& a, int stride, int rows, int cols) {
  std::vector<double> tmp(cols);
  for (int y = 0; y < rows; ++y) {
    double* row = a.data() + static_cast<size_t>(y) * stride;
    const int half = cols / 2;
    for (int x = 0; x < half; ++x) {
      tmp[2 * x] = (row[x] + row[half + x]) * kInvSqrt2;
      tmp[2 * x + 1] = (row[x] - row[half + x]) * kInvSqrt2;
    }
    std::copy(tmp.begin(), tmp.begin() + cols, row);
  }
}

void haar_cols(std::vector<double>& a, int stride, int rows, int cols) {
  std::vector<double> tmp(rows);
  for (int x = 0; x < cols; ++x) {
    const int half = rows / 2;
    for (int y = 0; y < half; ++y) {
      const double u = a[static_cast<size_t>(2 * y) * stride + x];
      const double v = a[static_cast<size_t>(2 * y + 1) * stride + x];
      tmp[y] = (u + v) * kInvSqrt2;
      tmp[half + y] = (u - v) * kInvSqrt2;
    }
    for (int y = 0; y < rows; ++y)
      a[static_cast<size_t>(y) * stride + x] = tmp[y];
  }
}

void haar_cols_inv(std::vector<double>& a, int stride, int rows, int cols) {
  std::vector<double> tmp(rows);
  for (int x = 0; x < cols; ++x) {
    const int half = rows / 2;
    for (int y = 0; y < half; ++y) {
      const double u = a[static_cast<size_t>(y) * stride + x];
      const double v = a[static_cast<size_t>(half + y) * stride + x];
      tmp[2 * y] = (u + v) * kInvSqrt2;
      tmp[2 * y + 1] = (u - v) * kInvSqrt2;
    }
    for (int y = 0; y < rows; ++y)
      a[static_cast<size_t>(y) * stride + x] = tmp[y];
  }
}

}  // namespace

ImagePlane jp2k_like(const ImagePlane& img, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ArgumentError("keep_fraction must be in (0, 1]");
  const int w = img.width, h = img.height;
  const int mult = 1 << kWaveletLevels;
  const int pw = (w + mult - 1) / mult * mult;
  const int ph = (h + mult - 1) / mult * mult;

  ImagePlane out = ImagePlane::create(w, h);
  std::vector<double> ch(static_cast<size_t>(pw) * ph);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < ph; ++y) {
      const int sy = std::min(y, h - 1);
      for (int x = 0; x < pw; ++x)
        ch[static_cast<size_t>(y) * pw + x] =
            img.at(c, sy, std::min(x, w - 1));
    }
    // forward: cascade on the LL quadrant
    for (int lvl = 0; lvl < kWaveletLevels; ++lvl) {
      const int rows = ph >> lvl, cols = pw >> lvl;
      haar_rows(ch, pw, rows, cols);
      haar_cols(ch, pw, rows, cols);
    }
    // global magnitude threshold keeping the top fraction
    if (keep_fraction < 1.0) {
      std::vector<double> mags(ch.size());
      for (size_t i = 0; i < ch.size(); ++i) mags[i] = std::abs(ch[i]);
      const size_t keep = std::max<size_t>(
          1, static_cast<size_t>(
                 std::llround(keep_fraction * static_cast<double>(ch.size()))));
      std::nth_element(mags.begin(), mags.begin() + (keep - 1), mags.end(),
                       std::greater<double>());
      const double threshold = mags[keep - 1];
      for (auto& v : ch)
        if (std::abs(v) < threshold) v = 0.0;
    }
    // inverse cascade
    for (int lvl = kWaveletLevels - 1; lvl >= 0; --lvl) {
      const int rows = ph >> lvl, cols = pw >> lvl;
      haar_cols_inv(ch, pw, rows, cols);
      haar_rows_inv(ch, pw, rows, cols);
    }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.at(c, y, x) = static_cast<float>(std::min(
            std::max(ch[static_cast<size_t>(y) * pw + x], 0.0), 1.0));
  }
  return out;
}

ImagePlane apply_distortion(const DistortionSpec& spec, const ImagePlane& img) {
  if (spec.level < 1 || spec.level > kDistortionLevels)
    throw ArgumentError("distortion level must be in 1..5");
  const int i = spec.level - 1;
  switch (spec.family) {
    case DistortionFamily::kGaussianBlur:
      return gaussian_blur(img, kBlurSigma[i]);
    case DistortionFamily::kWhiteNoise:
      return white_noise(img, kNoiseSigma[i], spec.seed);
    case DistortionFamily::kJpegLike:
      return jpeg_like(img, kJpegQuality[i]);
    case DistortionFamily::kJp2kLike:
      return jp2k_like(img, kJp2kKeep[i]);
  }
  throw ArgumentError("unknown distortion family");
}

}  // namespace raniqa
