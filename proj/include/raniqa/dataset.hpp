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

#include <optional>
#include <string>
#include <vector>

#include "raniqa/image.hpp"

namespace raniqa {

// ---- image codecs -------------------------------------------------------

// Binary PPM (P6, maxval 255). Bit-exact both ways at 8-bit precision.
ImagePlane load_ppm(const std::string& path);
void save_ppm(const ImagePlane& img, const std::string& path);

// True when the build carries PNG read support.
bool png_supported();
ImagePlane load_png(const std::string& path);  // FormatError if unsupported

// Dispatch by extension: .ppm always, .png behind the capability flag.
ImagePlane load_image(const std::string& path);
void save_image(const ImagePlane& img, const std::string& path);  // PPM

// ---- manifests ------------------------------------------------------------

struct ManifestRow {
  std::string distorted_path;
  std::string reference_path;
  std::string family;           // empty when not applicable
  int level = 0;                // 1..5 when family present, else 0
  std::optional<double> score;  // image-level quality label
  std::string split;            // optional split tag
};

// CSV with header: distorted_path,reference_path,family,level,score,split
std::vector<ManifestRow> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestRow>& rows,
                    const std::string& path);

// ---- synthetic corpus --------------------------------------------------------

// Procedural pristine image: smooth random fields, oriented sinusoids,
// piecewise-constant shapes, gradients, and mixtures, cycled by index.
// Guaranteed non-constant (pixel std > 0.02).
ImagePlane gen_pristine_image(int size, uint64_t seed, int variant);

// Emits under `root`: pristine/*.ppm, distorted/<family>/<level>/*.ppm and
// manifest.csv whose score column carries the full-image FSIM of each
// distorted image against its source. Fully deterministic per seed;
// per-image work is parallelized with derived seeds.
void gen_synthetic_corpus(const std::string& root, int n, int size,
                          uint64_t seed);

}  // namespace raniqa
