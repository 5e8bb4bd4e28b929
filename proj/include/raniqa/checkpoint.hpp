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

#include <string>

#include "raniqa/params.hpp"

namespace raniqa {

// Binary checkpoint, little-endian:
//   magic "RANCKPT1" (8 bytes), u32 version = 1, u32 entry count;
//   per entry: u32 name length, UTF-8 name, u32 rank, rank x u64 dims,
//   u32 dtype code (0 = f32), raw f32 data.
// Round trips are bit-exact. Loading restores insertion order; trainable
// flags are runtime metadata and are reassigned by whoever binds the store.
void save_checkpoint(const ParamStore<float>& params, const std::string& path);
ParamStore<float> load_checkpoint(const std::string& path);

}  // namespace raniqa
