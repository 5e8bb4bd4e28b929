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

#include "raniqa/image.hpp"

#include <cstring>

namespace raniqa {

std::vector<double> luma255(const ImagePlane& img) {
  const size_t n = img.plane_size();
  std::vector<double> y(n);
  const float* r = img.values.data();
  const float* g = r + n;
  const float* b = g + n;
  for (size_t i = 0; i < n; ++i)
    y[i] = 255.0 * (0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
  return y;
}

PatchGrid patch_grid(int width, int height, int patch_size) {
  if (patch_size < 1) throw ArgumentError("patch size must be >= 1");
  PatchGrid grid;
  grid.patch_size = patch_size;
  grid.rows = height / patch_size;
  grid.cols = width / patch_size;
  if (grid.rows < 1 || grid.cols < 1)
    throw ArgumentError("image " + std::to_string(width) + "x" +
                        std::to_string(height) +
                        " holds no full patch of size " +
                        std::to_string(patch_size));
  return grid;
}

PatchGrid patch_grid(const ImagePlane& img, int patch_size) {
  return patch_grid(img.width, img.height, patch_size);
}

ImagePlane extract_patch(const ImagePlane& img, const PatchGrid& grid, int r,
                         int c) {
  const int p = grid.patch_size;
  ImagePlane out = ImagePlane::create(p, p);
  const int y0 = r * p;
  const int x0 = c * p;
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y < p; ++y)
      std::memcpy(&out.at(ch, y, 0), &img.at(ch, y0 + y, x0),
                  sizeof(float) * p);
  return out;
}

std::vector<ImagePlane> extract_patches(const ImagePlane& img,
                                        int patch_size) {
  const PatchGrid grid = patch_grid(img, patch_size);
  std::vector<ImagePlane> out;
  out.reserve(static_cast<size_t>(grid.count()));
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c)
      out.push_back(extract_patch(img, grid, r, c));
  return out;
}

ImagePlane crop_patch8(const Image8& img, int x0, int y0, int patch_size) {
  if (x0 < 0 || y0 < 0 || x0 + patch_size > img.width ||
      y0 + patch_size > img.height)
    throw ArgumentError("patch crop out of bounds");
  ImagePlane out = ImagePlane::create(patch_size, patch_size);
  const size_t plane = static_cast<size_t>(img.width) * img.height;
  for (int ch = 0; ch < 3; ++ch) {
    const uint8_t* src = img.values.data() + ch * plane;
    for (int y = 0; y < patch_size; ++y) {
      const uint8_t* row = src + static_cast<size_t>(y0 + y) * img.width + x0;
      float* dst = &out.at(ch, y, 0);
      for (int x = 0; x < patch_size; ++x)
        dst[x] = static_cast<float>(row[x]) / 255.0f;
    }
  }
  return out;
}

template <typename T>
Tensor<T> images_to_tensor(const std::vector<ImagePlane>& images) {
  if (images.empty()) throw ArgumentError("empty image batch");
  const int w = images[0].width, h = images[0].height;
  Tensor<T> out = Tensor<T>::zeros(
      {static_cast<int64_t>(images.size()), 3, h, w});
  T* p = out.data();
  const size_t per_image = static_cast<size_t>(3) * w * h;
  for (size_t i = 0; i < images.size(); ++i) {
    if (images[i].width != w || images[i].height != h)
      throw ShapeError("mixed image sizes in batch");
    const float* src = images[i].values.data();
    T* dst = p + i * per_image;
    for (size_t j = 0; j < per_image; ++j) dst[j] = static_cast<T>(src[j]);
  }
  return out;
}

template <typename T>
ImagePlane tensor_to_image(const Tensor<T>& batch, int64_t index) {
  if (batch.rank() != 4 || batch.dim(1) != 3)
    throw ShapeError("expected an N x 3 x H x W tensor");
  if (index < 0 || index >= batch.dim(0))
    throw ArgumentError("batch index out of range");
  const int h = static_cast<int>(batch.dim(2));
  const int w = static_cast<int>(batch.dim(3));
  ImagePlane out = ImagePlane::create(w, h);
  const size_t per_image = static_cast<size_t>(3) * w * h;
  const T* src = batch.data() + index * per_image;
  for (size_t j = 0; j < per_image; ++j)
    out.values[j] = static_cast<float>(src[j]);
  return out;
}

template Tensor<float> images_to_tensor<float>(const std::vector<ImagePlane>&);
template Tensor<double> images_to_tensor<double>(
    const std::vector<ImagePlane>&);
template ImagePlane tensor_to_image<float>(const Tensor<float>&, int64_t);
template ImagePlane tensor_to_image<double>(const Tensor<double>&, int64_t);

}  // namespace raniqa
