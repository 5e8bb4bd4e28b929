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

#include <cstdint>
#include <vector>

#include "raniqa/common.hpp"
#include "raniqa/tensor.hpp"

namespace raniqa {

// Canonical RGB image: float values in [0, 1], planar channel-major layout
// (values[c * h * w + y * w + x], c in 0..2). Patches are just small
// ImagePlanes.
struct ImagePlane {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // 3 * height * width

  static ImagePlane create(int width, int height, float fill = 0.0f) {
    if (width < 1 || height < 1)
      throw ArgumentError("image extents must be >= 1");
    ImagePlane img;
    img.width = width;
    img.height = height;
    img.values.assign(static_cast<size_t>(3) * width * height, fill);
    return img;
  }

  float& at(int c, int y, int x) {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
  const float& at(int c, int y, int x) const {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }

  size_t plane_size() const {
    return static_cast<size_t>(width) * height;
  }

  void clamp01() {
    for (auto& v : values) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  }

  bool same_dims(const ImagePlane& o) const {
    return width == o.width && height == o.height;
  }
};

// 8-bit planar image used for in-memory corpus caches; matches what a PPM
// round trip stores, so caching introduces no extra quantization.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> values;
};

inline uint8_t quantize8(float v) {
  const float s = v * 255.0f;
  const int q = static_cast<int>(s + 0.5f);  // round half up, v >= 0
  return static_cast<uint8_t>(q < 0 ? 0 : (q > 255 ? 255 : q));
}

inline Image8 to_image8(const ImagePlane& img) {
  Image8 out;
  out.width = img.width;
  out.height = img.height;
  out.values.resize(img.values.size());
  for (size_t i = 0; i < img.values.size(); ++i)
    out.values[i] = quantize8(img.values[i]);
  return out;
}

inline ImagePlane from_image8(const Image8& img) {
  ImagePlane out;
  out.width = img.width;
  out.height = img.height;
  out.values.resize(img.values.size());
  for (size_t i = 0; i < img.values.size(); ++i)
    out.values[i] = static_cast<float>(img.values[i]) / 255.0f;
  return out;
}

// Rec. 601 luma on the 0..255 scale, as the similarity metrics expect.
std::vector<double> luma255(const ImagePlane& img);

struct PatchGrid {
  int patch_size = 0;
  int rows = 0;
  int cols = 0;
  int count() const { return rows * cols; }
};

// Non-overlapping row-major patch grid; trailing partial rows/columns are
// dropped. Throws if the image holds no full patch.
PatchGrid patch_grid(const ImagePlane& img, int patch_size);
PatchGrid patch_grid(int width, int height, int patch_size);

// Copy out patch (row r, col c) of the grid.
ImagePlane extract_patch(const ImagePlane& img, const PatchGrid& grid, int r,
                         int c);
std::vector<ImagePlane> extract_patches(const ImagePlane& img, int patch_size);

// Crop directly from an 8-bit cache into float [0,1].
ImagePlane crop_patch8(const Image8& img, int x0, int y0, int patch_size);

// Batch conversion: N same-sized images -> (N, 3, H, W) tensor and back.
template <typename T>
Tensor<T> images_to_tensor(const std::vector<ImagePlane>& images);
template <typename T>
ImagePlane tensor_to_image(const Tensor<T>& batch, int64_t index);

}  // namespace raniqa
