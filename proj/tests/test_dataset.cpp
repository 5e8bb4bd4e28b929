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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "raniqa/dataset.hpp"
#include "raniqa/distortion.hpp"

using namespace raniqa;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

}  // namespace

TEST_CASE("ppm: round trip is exact at 8 bits") {
  TempDir dir("raniqa_ppm_test");
  ImagePlane img = gen_pristine_image(64, 123, 2);
  const std::string path = (dir.path / "img.ppm").string();
  save_ppm(img, path);
  const ImagePlane loaded = load_ppm(path);
  REQUIRE(loaded.width == img.width);
  REQUIRE(loaded.height == img.height);
  for (size_t i = 0; i < img.values.size(); ++i)
    REQUIRE(quantize8(loaded.values[i]) == quantize8(img.values[i]));
  // save-load-save reproduces the file byte for byte
  const std::string path2 = (dir.path / "img2.ppm").string();
  save_ppm(loaded, path2);
  CHECK(file_bytes(path) == file_bytes(path2));
}

TEST_CASE("ppm: minimal P6 header parses") {
  TempDir dir("raniqa_ppm_hdr");
  const std::string path = (dir.path / "mini.ppm").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n2 2\n255\n";
    const unsigned char px[12] = {255, 0, 0, 0, 255, 0, 0, 0, 255, 9, 9, 9};
    out.write(reinterpret_cast<const char*>(px), 12);
  }
  const ImagePlane img = load_ppm(path);
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.at(0, 0, 0) == doctest::Approx(1.0f));
  CHECK(img.at(1, 0, 1) == doctest::Approx(1.0f));
  CHECK(img.at(2, 1, 0) == doctest::Approx(1.0f));
}

TEST_CASE("ppm: wrong maxval and truncation rejected") {
  TempDir dir("raniqa_ppm_bad");
  {
    std::ofstream out(dir.path / "m16.ppm", std::ios::binary);
    out << "P6\n2 2\n65535\n";
    out.write("\0\0\0\0\0\0\0\0\0\0\0\0", 12);
  }
  CHECK_THROWS_AS(load_ppm((dir.path / "m16.ppm").string()), FormatError);
  {
    std::ofstream out(dir.path / "short.ppm", std::ios::binary);
    out << "P6\n2 2\n255\n";
    out.write("\1\2\3", 3);
  }
  CHECK_THROWS_AS(load_ppm((dir.path / "short.ppm").string()), FormatError);
  CHECK_THROWS_AS(load_ppm((dir.path / "missing.ppm").string()), IoError);
}

TEST_CASE("manifest: round trip preserves rows and optional fields") {
  TempDir dir("raniqa_manifest");
  std::vector<ManifestRow> rows;
  ManifestRow r1;
  r1.distorted_path = "distorted/gblur/3/img0001.ppm";
  r1.reference_path = "pristine/img0001.ppm";
  r1.family = "gblur";
  r1.level = 3;
  r1.score = 0.731234;
  r1.split = "train";
  rows.push_back(r1);
  ManifestRow r2;
  r2.distorted_path = "d.ppm";
  r2.reference_path = "r.ppm";
  rows.push_back(r2);  // unscored, no family

  const std::string path = (dir.path / "manifest.csv").string();
  write_manifest(rows, path);
  const auto loaded = read_manifest(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].distorted_path == r1.distorted_path);
  CHECK(loaded[0].family == "gblur");
  CHECK(loaded[0].level == 3);
  REQUIRE(loaded[0].score.has_value());
  CHECK(*loaded[0].score == doctest::Approx(0.731234).epsilon(1e-9));
  CHECK(loaded[0].split == "train");
  CHECK_FALSE(loaded[1].score.has_value());
  CHECK(loaded[1].family.empty());
  CHECK(loaded[1].level == 0);
}

TEST_CASE("manifest: empty rows give a header-only file") {
  TempDir dir("raniqa_manifest_empty");
  const std::string path = (dir.path / "m.csv").string();
  write_manifest({}, path);
  CHECK(file_bytes(path) ==
        "distorted_path,reference_path,family,level,score,split\n");
  CHECK(read_manifest(path).empty());
}

TEST_CASE("manifest: malformed input rejected") {
  TempDir dir("raniqa_manifest_bad");
  auto write_file = [&](const char* name, const std::string& content) {
    std::ofstream out(dir.path / name);
    out << content;
    return (dir.path / name).string();
  };
  CHECK_THROWS_AS(
      read_manifest(write_file("h.csv", "wrong,header\na,b\n")), FormatError);
  CHECK_THROWS_AS(
      read_manifest(write_file(
          "lvl.csv",
          "distorted_path,reference_path,family,level,score,split\n"
          "a,b,gblur,nine,,\n")),
      FormatError);
  CHECK_THROWS_AS(
      read_manifest(write_file(
          "score.csv",
          "distorted_path,reference_path,family,level,score,split\n"
          "a,b,gblur,3,banana,\n")),
      FormatError);
  CHECK_THROWS_AS(
      read_manifest(write_file(
          "range.csv",
          "distorted_path,reference_path,family,level,score,split\n"
          "a,b,gblur,7,,\n")),
      FormatError);
}

TEST_CASE("pristine generator: textured, bounded, deterministic") {
  for (int variant = 0; variant < 5; ++variant) {
    const ImagePlane img = gen_pristine_image(96, 1000 + variant, variant);
    double s = 0.0, s2 = 0.0;
    for (float v : img.values) {
      REQUIRE(v >= 0.0f);
      REQUIRE(v <= 1.0f);
      s += v;
      s2 += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(img.values.size());
    const double stddev = std::sqrt(s2 / n - (s / n) * (s / n));
    CHECK(stddev > 0.02);
  }
  CHECK(gen_pristine_image(64, 5, 1).values ==
        gen_pristine_image(64, 5, 1).values);
  CHECK(gen_pristine_image(64, 5, 1).values !=
        gen_pristine_image(64, 6, 1).values);
}

TEST_CASE("synthetic corpus: layout, counts, determinism, scores") {
  TempDir dir_a("raniqa_corpus_a");
  TempDir dir_b("raniqa_corpus_b");
  const int n = 2, size = 64;
  gen_synthetic_corpus(dir_a.path.string(), n, size, 99);
  gen_synthetic_corpus(dir_b.path.string(), n, size, 99);

  const auto rows = read_manifest((dir_a.path / "manifest.csv").string());
  CHECK(rows.size() == static_cast<size_t>(n) * 20);  // 4 families x 5 levels

  size_t checked = 0;
  for (const auto& row : rows) {
    const fs::path dp = dir_a.path / row.distorted_path;
    const fs::path rp = dir_a.path / row.reference_path;
    REQUIRE(fs::exists(dp));
    REQUIRE(fs::exists(rp));
    REQUIRE(row.score.has_value());
    REQUIRE(*row.score > 0.0);
    REQUIRE(*row.score <= 1.0);
    ++checked;
  }
  CHECK(checked == rows.size());

  // byte-identical across runs with the same seed
  for (const auto& row : rows) {
    CHECK(file_bytes(dir_a.path / row.distorted_path) ==
          file_bytes(dir_b.path / row.distorted_path));
  }
  CHECK(file_bytes(dir_a.path / "manifest.csv") ==
        file_bytes(dir_b.path / "manifest.csv"));

  // per-family mean pseudo-score decreases with level
  for (int f = 0; f < kDistortionFamilies; ++f) {
    const std::string fam = family_name(family_by_index(f));
    double prev = 2.0;
    for (int level = 1; level <= 5; ++level) {
      double mean = 0.0;
      int count = 0;
      for (const auto& row : rows)
        if (row.family == fam && row.level == level) {
          mean += *row.score;
          ++count;
        }
      REQUIRE(count == n);
      mean /= count;
      CHECK(mean < prev);
      prev = mean;
    }
  }
}

TEST_CASE("png capability flag is consistent") {
  if (!png_supported()) {
    CHECK_THROWS_AS(load_png("nonexistent.png"), FormatError);
  } else {
    CHECK_THROWS_AS(load_png("nonexistent.png"), IoError);
  }
}
