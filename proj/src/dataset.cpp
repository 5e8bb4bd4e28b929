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

#include "raniqa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "raniqa/distortion.hpp"
#include "raniqa/metrics.hpp"

#ifdef RANIQA_HAVE_PNG
#include <png.h>
#endif

namespace raniqa {

namespace {

// Reads one PNM token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw FormatError(path + ": truncated header");
  return tok;
}

int parse_dim(const std::string& tok, const std::string& path,
              const char* what) {
  try {
    size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size() || v < 1) throw std::invalid_argument("range");
    return v;
  } catch (const std::exception&) {
    throw FormatError(path + ": bad " + std::string(what) + " '" + tok + "'");
  }
}

}  // namespace

ImagePlane load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  const std::string magic = next_token(in, path);
  if (magic != "P6")
    throw FormatError(path + ": unsupported PNM magic '" + magic + "'");
  const int w = parse_dim(next_token(in, path), path, "width");
  const int h = parse_dim(next_token(in, path), path, "height");
  const int maxval = parse_dim(next_token(in, path), path, "maxval");
  if (maxval != 255)
    throw FormatError(path + ": unsupported maxval " + std::to_string(maxval) +
                      " (only 255)");
  // the single whitespace byte after maxval was consumed by the tokenizer
  const size_t count = static_cast<size_t>(3) * w * h;
  std::vector<unsigned char> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(count));
  if (static_cast<size_t>(in.gcount()) != count)
    throw FormatError(path + ": truncated pixel data (" +
                      std::to_string(in.gcount()) + " of " +
                      std::to_string(count) + " bytes)");
  ImagePlane img = ImagePlane::create(w, h);
  const size_t plane = img.plane_size();
  for (size_t i = 0; i < plane; ++i) {
    img.values[i] = static_cast<float>(raw[3 * i]) / 255.0f;
    img.values[plane + i] = static_cast<float>(raw[3 * i + 1]) / 255.0f;
    img.values[2 * plane + i] = static_cast<float>(raw[3 * i + 2]) / 255.0f;
  }
  return img;
}

void save_ppm(const ImagePlane& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  const size_t plane = img.plane_size();
  std::vector<unsigned char> raw(3 * plane);
  for (size_t i = 0; i < plane; ++i) {
    raw[3 * i] = quantize8(img.values[i]);
    raw[3 * i + 1] = quantize8(img.values[plane + i]);
    raw[3 * i + 2] = quantize8(img.values[2 * plane + i]);
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path);
}

bool png_supported() {
#ifdef RANIQA_HAVE_PNG
  return true;
#else
  return false;
#endif
}

#ifdef RANIQA_HAVE_PNG
ImagePlane load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open: " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("libpng initialization failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<unsigned char> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError(path + ": libpng decode error");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  // normalize anything to 8-bit RGB
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  pixels.resize(static_cast<size_t>(3) * w * h);
  row_ptrs.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    row_ptrs[y] = pixels.data() + static_cast<size_t>(3) * w * y;
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  ImagePlane img = ImagePlane::create(static_cast<int>(w), static_cast<int>(h));
  const size_t plane = img.plane_size();
  for (size_t i = 0; i < plane; ++i) {
    img.values[i] = static_cast<float>(pixels[3 * i]) / 255.0f;
    img.values[plane + i] = static_cast<float>(pixels[3 * i + 1]) / 255.0f;
    img.values[2 * plane + i] = static_cast<float>(pixels[3 * i + 2]) / 255.0f;
  }
  return img;
}
#else
ImagePlane load_png(const std::string& path) {
  throw FormatError(path + ": PNG support not built in");
}
#endif

ImagePlane load_image(const std::string& path) {
  auto ends_with = [&](const char* suffix) {
    const size_t n = std::strlen(suffix);
    return path.size() >= n &&
           std::equal(path.end() - n, path.end(), suffix, [](char a, char b) {
             return std::tolower(a) == b;
           });
  };
  if (ends_with(".ppm")) return load_ppm(path);
  if (ends_with(".png")) return load_png(path);
  throw FormatError(path + ": unsupported image format");
}

void save_image(const ImagePlane& img, const std::string& path) {
  save_ppm(img, path);
}

// ---- manifests ------------------------------------------------------------------

namespace {

constexpr const char* kManifestHeader =
    "distorted_path,reference_path,family,level,score,split";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty manifest");
  {
    std::string header = line;
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != kManifestHeader)
      throw FormatError(path + ": bad header, expected '" +
                        std::string(kManifestHeader) + "'");
  }
  std::vector<ManifestRow> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6)
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected 6 fields, got " +
                        std::to_string(fields.size()));
    ManifestRow row;
    row.distorted_path = fields[0];
    row.reference_path = fields[1];
    row.family = fields[2];
    if (row.distorted_path.empty() || row.reference_path.empty())
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": paths must be non-empty");
    if (!fields[3].empty()) {
      try {
        size_t pos = 0;
        row.level = std::stoi(fields[3], &pos);
        if (pos != fields[3].size()) throw std::invalid_argument("trail");
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(lineno) +
                          ": unparseable level '" + fields[3] + "'");
      }
      if (!row.family.empty() && (row.level < 1 || row.level > 5))
        throw FormatError(path + ":" + std::to_string(lineno) +
                          ": level out of range 1..5");
    }
    if (!fields[4].empty()) {
      try {
        size_t pos = 0;
        row.score = std::stod(fields[4], &pos);
        if (pos != fields[4].size()) throw std::invalid_argument("trail");
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(lineno) +
                          ": unparseable score '" + fields[4] + "'");
      }
      if (!std::isfinite(*row.score))
        throw FormatError(path + ":" + std::to_string(lineno) +
                          ": score must be finite");
    }
    row.split = fields[5];
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_manifest(const std::vector<ManifestRow>& rows,
                    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kManifestHeader << "\n";
  char buf[64];
  for (const auto& row : rows) {
    out << row.distorted_path << ',' << row.reference_path << ','
        << row.family << ',';
    if (row.level > 0) out << row.level;
    out << ',';
    if (row.score) {
      std::snprintf(buf, sizeof(buf), "%.6f", *row.score);
      out << buf;
    }
    out << ',' << row.split << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

// ---- synthetic corpus ----------------------------------------------------------

namespace {

uint64_t derive_seed(uint64_t seed, uint64_t stream, uint64_t index) {
  return splitmix64(splitmix64(seed + 0x1234567ULL * (stream + 1)) ^
                    splitmix64(index * 0x9e3779b97f4a7c15ULL + stream));
}

// Diamond-square style smooth random field on a size x size grid.
std::vector<float> plasma_field(int size, Rng& rng) {
  int grid = 1;
  while (grid < size) grid <<= 1;
  const int g = grid + 1;
  std::vector<float> f(static_cast<size_t>(g) * g, 0.0f);
  auto at = [&](int y, int x) -> float& {
    return f[static_cast<size_t>(y) * g + x];
  };
  at(0, 0) = static_cast<float>(rng.uniform());
  at(0, grid) = static_cast<float>(rng.uniform());
  at(grid, 0) = static_cast<float>(rng.uniform());
  at(grid, grid) = static_cast<float>(rng.uniform());
  float amp = 0.5f;
  for (int step = grid; step > 1; step /= 2, amp *= 0.55f) {
    const int half = step / 2;
    for (int y = half; y < g; y += step)
      for (int x = half; x < g; x += step) {
        const float avg = (at(y - half, x - half) + at(y - half, x + half) +
                           at(y + half, x - half) + at(y + half, x + half)) /
                          4.0f;
        at(y, x) = avg + amp * static_cast<float>(rng.uniform(-1.0, 1.0));
      }
    for (int y = 0; y < g; y += half)
      for (int x = (y / half) % 2 == 0 ? half : 0; x < g; x += step) {
        float acc = 0.0f;
        int cnt = 0;
        if (y >= half) acc += at(y - half, x), ++cnt;
        if (y + half < g) acc += at(y + half, x), ++cnt;
        if (x >= half) acc += at(y, x - half), ++cnt;
        if (x + half < g) acc += at(y, x + half), ++cnt;
        at(y, x) = acc / cnt + amp * static_cast<float>(rng.uniform(-1.0, 1.0));
      }
  }
  std::vector<float> out(static_cast<size_t>(size) * size);
  float lo = 1e9f, hi = -1e9f;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const float v = at(y, x);
      out[static_cast<size_t>(y) * size + x] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const float span = std::max(hi - lo, 1e-6f);
  for (auto& v : out) v = (v - lo) / span;
  return out;
}

std::vector<float> sinusoid_field(int size, Rng& rng) {
  std::vector<float> out(static_cast<size_t>(size) * size, 0.0f);
  const int waves = 3 + static_cast<int>(rng.below(3));
  for (int k = 0; k < waves; ++k) {
    const double freq = rng.uniform(1.5, 12.0);
    const double ang = rng.uniform(0.0, M_PI);
    const double fx = freq * std::cos(ang) / size;
    const double fy = freq * std::sin(ang) / size;
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const double amp = rng.uniform(0.3, 1.0) / waves;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        out[static_cast<size_t>(y) * size + x] += static_cast<float>(
            amp * std::sin(2.0 * M_PI * (fx * x + fy * y) + phase));
  }
  for (auto& v : out) v = 0.5f + 0.5f * v;
  return out;
}

void paint_shapes(ImagePlane& img, Rng& rng) {
  const int n = 6 + static_cast<int>(rng.below(8));
  for (int k = 0; k < n; ++k) {
    const bool ellipse = rng.uniform() < 0.5;
    const int cx = static_cast<int>(rng.below(img.width));
    const int cy = static_cast<int>(rng.below(img.height));
    const int rx = 4 + static_cast<int>(rng.below(img.width / 3));
    const int ry = 4 + static_cast<int>(rng.below(img.height / 3));
    const float col[3] = {static_cast<float>(rng.uniform()),
                          static_cast<float>(rng.uniform()),
                          static_cast<float>(rng.uniform())};
    const int y0 = std::max(0, cy - ry), y1 = std::min(img.height - 1, cy + ry);
    const int x0 = std::max(0, cx - rx), x1 = std::min(img.width - 1, cx + rx);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        if (ellipse) {
          const double dx = static_cast<double>(x - cx) / rx;
          const double dy = static_cast<double>(y - cy) / ry;
          if (dx * dx + dy * dy > 1.0) continue;
        }
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = col[c];
      }
  }
}

ImagePlane colorize(const std::vector<float>& field, int size, Rng& rng) {
  ImagePlane img = ImagePlane::create(size, size);
  for (int c = 0; c < 3; ++c) {
    const float base = static_cast<float>(rng.uniform(0.05, 0.35));
    const float gain = static_cast<float>(rng.uniform(0.4, 0.65));
    for (size_t i = 0; i < field.size(); ++i)
      img.values[c * field.size() + i] = base + gain * field[i];
  }
  img.clamp01();
  return img;
}

double pixel_std(const ImagePlane& img) {
  double s = 0.0, s2 = 0.0;
  for (float v : img.values) {
    s += v;
    s2 += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(img.values.size());
  const double m = s / n;
  return std::sqrt(std::max(s2 / n - m * m, 0.0));
}

}  // namespace

ImagePlane gen_pristine_image(int size, uint64_t seed, int variant) {
  if (size < 64) throw ArgumentError("pristine image size must be >= 64");
  Rng rng(seed);
  ImagePlane img;
  switch (variant % 5) {
    case 0:
      img = colorize(plasma_field(size, rng), size, rng);
      break;
    case 1:
      img = colorize(sinusoid_field(size, rng), size, rng);
      break;
    case 2: {
      img = colorize(plasma_field(size, rng), size, rng);
      paint_shapes(img, rng);
      break;
    }
    case 3: {
      // oriented gradient plus fine texture
      img = ImagePlane::create(size, size);
      const double ang = rng.uniform(0.0, 2.0 * M_PI);
      const double gx = std::cos(ang) / size, gy = std::sin(ang) / size;
      auto tex = sinusoid_field(size, rng);
      for (int c = 0; c < 3; ++c) {
        const float base = static_cast<float>(rng.uniform(0.1, 0.3));
        const float gain = static_cast<float>(rng.uniform(0.3, 0.5));
        for (int y = 0; y < size; ++y)
          for (int x = 0; x < size; ++x)
            img.at(c, y, x) = static_cast<float>(
                base + gain * (0.5 + 0.5 * (gx * x + gy * y)) +
                0.15 * (tex[static_cast<size_t>(y) * size + x] - 0.5f));
      }
      img.clamp01();
      break;
    }
    default: {
      auto a = plasma_field(size, rng);
      auto b = sinusoid_field(size, rng);
      for (size_t i = 0; i < a.size(); ++i) a[i] = 0.5f * (a[i] + b[i]);
      img = colorize(a, size, rng);
      paint_shapes(img, rng);
      break;
    }
  }
  // contrast floor so phase-congruency mass is nonzero
  const double sd = pixel_std(img);
  if (sd < 0.02) {
    double mean = 0.0;
    for (float v : img.values) mean += v;
    mean /= static_cast<double>(img.values.size());
    const double stretch = 0.05 / std::max(sd, 1e-6);
    for (auto& v : img.values)
      v = static_cast<float>(mean + (v - mean) * stretch);
    img.clamp01();
  }
  return img;
}

void gen_synthetic_corpus(const std::string& root, int n, int size,
                          uint64_t seed) {
  if (n < 1) throw ArgumentError("corpus needs at least one image");
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(root) / "pristine");
  for (int f = 0; f < kDistortionFamilies; ++f)
    for (int level = 1; level <= kDistortionLevels; ++level)
      fs::create_directories(fs::path(root) / "distorted" /
                             family_name(family_by_index(f)) /
                             std::to_string(level));

  std::vector<ManifestRow> rows(static_cast<size_t>(n) *
                                kDistortionFamilies * kDistortionLevels);
  char name[32];
#pragma omp parallel for schedule(dynamic) private(name)
  for (int i = 0; i < n; ++i) {
    std::snprintf(name, sizeof(name), "img%04d.ppm", i);
    const ImagePlane pristine =
        gen_pristine_image(size, derive_seed(seed, 0, i), i);
    const std::string rel_ref = std::string("pristine/") + name;
    save_ppm(pristine, (fs::path(root) / rel_ref).string());
    // labels are computed against the 8-bit file contents
    const ImagePlane pristine8 = from_image8(to_image8(pristine));
    for (int f = 0; f < kDistortionFamilies; ++f) {
      const DistortionFamily family = family_by_index(f);
      for (int level = 1; level <= kDistortionLevels; ++level) {
        DistortionSpec spec;
        spec.family = family;
        spec.level = level;
        spec.seed = derive_seed(seed, 1 + f * kDistortionLevels + level, i);
        const ImagePlane distorted = apply_distortion(spec, pristine8);
        const std::string rel_dist = std::string("distorted/") +
                                     family_name(family) + "/" +
                                     std::to_string(level) + "/" + name;
        save_ppm(distorted, (fs::path(root) / rel_dist).string());
        const ImagePlane distorted8 = from_image8(to_image8(distorted));
        ManifestRow row;
        row.distorted_path = rel_dist;
        row.reference_path = rel_ref;
        row.family = family_name(family);
        row.level = level;
        row.score = fsim(distorted8, pristine8).score;
        const size_t slot =
            (static_cast<size_t>(i) * kDistortionFamilies + f) *
                kDistortionLevels +
            (level - 1);
        rows[slot] = std::move(row);
      }
    }
  }
  write_manifest(rows, (fs::path(root) / "manifest.csv").string());
}

}  // namespace raniqa
