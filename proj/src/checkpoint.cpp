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

#include "raniqa/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace raniqa {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kDtypeF32 = 0;

static_assert(sizeof(float) == 4, "float must be 32-bit");

// Little-endian byte stream helpers. The build targets little-endian
// platforms; the static check keeps the format honest elsewhere.
#if defined(__BYTE_ORDER__) && (__BYTE_ORDER__ != __ORDER_LITTLE_ENDIAN__)
#error "checkpoint format requires a little-endian target"
#endif

template <typename U>
void put(std::string& out, U value) {
  char buf[sizeof(U)];
  std::memcpy(buf, &value, sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  template <typename U>
  U get(const char* what) {
    if (pos_ + sizeof(U) > bytes_.size())
      throw FormatError(path_ + ": truncated while reading " +
                        std::string(what) + " at offset " +
                        std::to_string(pos_));
    U value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return value;
  }

  std::string get_bytes(size_t count, const char* what) {
    if (pos_ + count > bytes_.size())
      throw FormatError(path_ + ": truncated while reading " +
                        std::string(what) + " at offset " +
                        std::to_string(pos_));
    std::string s = bytes_.substr(pos_, count);
    pos_ += count;
    return s;
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ParamStore<float>& params,
                     const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kVersion);
  put<uint32_t>(out, static_cast<uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    put<uint32_t>(out, static_cast<uint32_t>(e.name.size()));
    out.append(e.name);
    const auto& dims = e.tensor.dims();
    put<uint32_t>(out, static_cast<uint32_t>(dims.size()));
    for (int64_t d : dims) put<uint64_t>(out, static_cast<uint64_t>(d));
    put<uint32_t>(out, kDtypeF32);
    out.append(reinterpret_cast<const char*>(e.tensor.data()),
               e.tensor.vec().size() * sizeof(float));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

ParamStore<float> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  Reader r(bytes, path);

  const std::string magic = r.get_bytes(sizeof(kMagic), "magic");
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path + ": bad magic at offset 0");
  const uint32_t version = r.get<uint32_t>("version");
  if (version != kVersion)
    throw FormatError(path + ": unsupported version " +
                      std::to_string(version) + " at offset 8");
  const uint32_t count = r.get<uint32_t>("entry count");

  ParamStore<float> store;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = r.get<uint32_t>("name length");
    const std::string name = r.get_bytes(name_len, "name");
    const uint32_t rank = r.get<uint32_t>("rank");
    Shape dims;
    dims.reserve(rank);
    uint64_t numel = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      const uint64_t extent = r.get<uint64_t>("dim");
      if (extent == 0 || extent > (1ULL << 40))
        throw FormatError(path + ": invalid extent at offset " +
                          std::to_string(r.pos() - 8));
      numel *= extent;
      if (numel > (1ULL << 40))
        throw FormatError(path + ": tensor too large at offset " +
                          std::to_string(r.pos() - 8));
      dims.push_back(static_cast<int64_t>(extent));
    }
    const uint32_t dtype = r.get<uint32_t>("dtype");
    if (dtype != kDtypeF32)
      throw FormatError(path + ": unsupported dtype code " +
                        std::to_string(dtype) + " at offset " +
                        std::to_string(r.pos() - 4));
    const std::string raw =
        r.get_bytes(static_cast<size_t>(numel) * sizeof(float), "tensor data");
    std::vector<float> data(static_cast<size_t>(numel));
    std::memcpy(data.data(), raw.data(), raw.size());
    if (store.has(name))
      throw FormatError(path + ": duplicate entry name '" + name + "'");
    store.add(name, Tensor<float>::from_data(std::move(dims), std::move(data)));
  }
  if (r.remaining() != 0)
    throw FormatError(path + ": trailing bytes at offset " +
                      std::to_string(r.pos()));
  return store;
}

}  // namespace raniqa
