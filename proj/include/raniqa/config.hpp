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

#include <functional>
#include <string>
#include <vector>

#include "raniqa/nets.hpp"
#include "raniqa/pipeline.hpp"

namespace raniqa {

// Everything a run needs: network and training hyperparameters, splits, and
// paths. Populated from defaults, then a key=value config file with
// [sections], then per-key command-line flags.
struct RunConfig {
  NetworkConfig net;
  TrainConfig train;
  SplitSpec split;
  std::string corpus_dir;
  std::string manifest;
  std::string out_dir;
  std::string ckpt_dir;
};

struct ConfigKey {
  std::string name;         // e.g. "network.patch_size"
  std::string description;  // one-line help text
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

// The full key registry; stable order for help output.
const std::vector<ConfigKey>& config_keys();

// Sets one key; unknown keys are rejected.
void apply_key_value(RunConfig& cfg, const std::string& key,
                     const std::string& value);

// Flat key = value file with [section] headers and '#' comments. Keys are
// section-qualified ("[network]" + "patch_size" -> "network.patch_size").
void apply_config_file(RunConfig& cfg, const std::string& path);

}  // namespace raniqa
