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

#include <cmath>

#include "doctest.h"
#include "raniqa/dataset.hpp"
#include "raniqa/distortion.hpp"
#include "raniqa/metrics.hpp"

using namespace raniqa;

TEST_CASE("gaussian_blur: constant image unchanged; sigma 0 is identity") {
  ImagePlane constant = ImagePlane::create(32, 32, 0.4f);
  ImagePlane blurred = gaussian_blur(constant, 2.5);
  for (size_t i = 0; i < constant.values.size(); ++i)
    CHECK(blurred.values[i] == doctest::Approx(0.4f).epsilon(1e-6));

  ImagePlane img = gen_pristine_image(64, 3, 1);
  ImagePlane same = gaussian_blur(img, 0.0);
  CHECK(same.values == img.values);
}

TEST_CASE("gaussian_blur: impulse response equals the 1-D kernel outer product") {
  // oracle: build the normalized 1-D kernel independently
  const double sigma = 1.5;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-i * i / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;

  const int n = 33, c0 = 16;
  ImagePlane impulse = ImagePlane::create(n, n, 0.0f);
  for (int c = 0; c < 3; ++c) impulse.at(c, c0, c0) = 1.0f;
  const ImagePlane out = gaussian_blur(impulse, sigma);
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      const double expected = k[dy + radius] * k[dx + radius];
      CHECK(out.at(0, c0 + dy, c0 + dx) ==
            doctest::Approx(expected).epsilon(1e-5));
    }
}

TEST_CASE("white_noise: sigma 0 identity, determinism, sample std in band") {
  ImagePlane img = gen_pristine_image(64, 9, 0);
  CHECK(white_noise(img, 0.0, 1).values == img.values);
  CHECK(white_noise(img, 0.1, 42).values == white_noise(img, 0.1, 42).values);
  CHECK(white_noise(img, 0.1, 42).values != white_noise(img, 0.1, 43).values);

  ImagePlane gray = ImagePlane::create(512, 512, 0.5f);
  const ImagePlane noisy = white_noise(gray, 0.05, 7);
  double acc = 0.0, acc2 = 0.0;
  for (size_t i = 0; i < gray.values.size(); ++i) {
    const double d = noisy.values[i] - gray.values[i];
    acc += d;
    acc2 += d * d;
  }
  const double n = static_cast<double>(gray.values.size());
  const double std_hat = std::sqrt(acc2 / n - (acc / n) * (acc / n));
  CHECK(std_hat > 0.045);
  CHECK(std_hat < 0.055);
}

TEST_CASE("jpeg_like: quality bounds checked, top quality nearly lossless") {
  ImagePlane img = gen_pristine_image(96, 15, 2);
  CHECK_THROWS_AS(jpeg_like(img, 0), ArgumentError);
  CHECK_THROWS_AS(jpeg_like(img, 101), ArgumentError);
  CHECK(ssim(jpeg_like(img, 100), img) > 0.99);
}

TEST_CASE("jpeg_like: deterministic and quality-monotone on corpus average") {
  std::vector<ImagePlane> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back(gen_pristine_image(96, 50 + i, i));
  const ImagePlane once = jpeg_like(corpus[0], 35);
  const ImagePlane twice = jpeg_like(corpus[0], 35);
  CHECK(once.values == twice.values);

  double prev = 0.0;
  bool first = true;
  for (int q : kJpegQuality) {
    double mean_ssim = 0.0;
    for (const auto& img : corpus) mean_ssim += ssim(jpeg_like(img, q), img);
    mean_ssim /= corpus.size();
    if (!first) CHECK(mean_ssim < prev);
    prev = mean_ssim;
    first = false;
  }
}

TEST_CASE("jp2k_like: keep_fraction 1 reconstructs exactly") {
  ImagePlane img = gen_pristine_image(96, 77, 3);
  const ImagePlane out = jp2k_like(img, 1.0);
  for (size_t i = 0; i < img.values.size(); ++i)
    CHECK(out.values[i] == doctest::Approx(img.values[i]).epsilon(1e-6));
}

TEST_CASE("jp2k_like: constant image unchanged at any keep fraction") {
  ImagePlane constant = ImagePlane::create(64, 64, 0.7f);
  for (double keep : {0.2, 0.05, 0.012}) {
    const ImagePlane out = jp2k_like(constant, keep);
    for (size_t i = 0; i < constant.values.size(); ++i)
      CHECK(out.values[i] == doctest::Approx(0.7f).epsilon(1e-6));
  }
}

TEST_CASE("jp2k_like: non-multiple-of-16 extents are padded and cropped") {
  ImagePlane img = gen_pristine_image(70, 99, 1);  // 70 is not divisible by 16
  const ImagePlane out = jp2k_like(img, 0.1);
  CHECK(out.width == img.width);
  CHECK(out.height == img.height);
  const ImagePlane exact = jp2k_like(img, 1.0);
  for (size_t i = 0; i < img.values.size(); ++i)
    REQUIRE(exact.values[i] == doctest::Approx(img.values[i]).epsilon(1e-5));
}

TEST_CASE("jp2k_like: keep-fraction monotone on corpus average") {
  std::vector<ImagePlane> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back(gen_pristine_image(96, 150 + i, i));
  double prev = 0.0;
  bool first = true;
  for (double keep : kJp2kKeep) {
    double mean_ssim = 0.0;
    for (const auto& img : corpus) mean_ssim += ssim(jp2k_like(img, keep), img);
    mean_ssim /= corpus.size();
    if (!first) CHECK(mean_ssim < prev);
    prev = mean_ssim;
    first = false;
  }
}

TEST_CASE("apply_distortion: determinism and level ordering") {
  ImagePlane img = gen_pristine_image(96, 200, 2);
  const DistortionSpec spec{DistortionFamily::kWhiteNoise, 1, 99};
  CHECK(apply_distortion(spec, img).values ==
        apply_distortion(spec, img).values);

  for (int f = 0; f < kDistortionFamilies; ++f) {
    const DistortionSpec l1{family_by_index(f), 1, 5};
    const DistortionSpec l5{family_by_index(f), 5, 5};
    CHECK(ssim(apply_distortion(l5, img), img) <
          ssim(apply_distortion(l1, img), img));
  }
  CHECK_THROWS_AS(
      apply_distortion({DistortionFamily::kGaussianBlur, 0, 0}, img),
      ArgumentError);
  CHECK_THROWS_AS(
      apply_distortion({DistortionFamily::kGaussianBlur, 6, 0}, img),
      ArgumentError);
}

TEST_CASE("distortions preserve dims and the [0,1] range") {
  ImagePlane img = gen_pristine_image(80, 300, 4);
  for (int f = 0; f < kDistortionFamilies; ++f)
    for (int level = 1; level <= 5; ++level) {
      const ImagePlane d =
          apply_distortion({family_by_index(f), level, 11}, img);
      REQUIRE(d.width == img.width);
      REQUIRE(d.height == img.height);
      for (float v : d.values) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
      }
    }
}

TEST_CASE("family names round trip") {
  for (int f = 0; f < kDistortionFamilies; ++f) {
    const DistortionFamily fam = family_by_index(f);
    CHECK(family_from_name(family_name(fam)) == fam);
  }
  CHECK_THROWS_AS(family_from_name("sparkle"), ArgumentError);
}
