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

#include "raniqa/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace raniqa {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trail");
    return x;
  } catch (const std::exception&) {
    throw ArgumentError(key + ": expected an integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trail");
    return static_cast<uint64_t>(x);
  } catch (const std::exception&) {
    throw ArgumentError(key + ": expected an unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trail");
    return x;
  } catch (const std::exception&) {
    throw ArgumentError(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ArgumentError(key + ": expected true/false, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(trim(item), key));
  if (out.empty()) throw ArgumentError(key + ": expected a list of integers");
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::string fmt_double(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

std::vector<ConfigKey> build_registry() {
  std::vector<ConfigKey> keys;
  auto add = [&](std::string name, std::string desc,
                 std::function<std::string(const RunConfig&)> get,
                 std::function<void(RunConfig&, const std::string&)> set) {
    keys.push_back(ConfigKey{std::move(name), std::move(desc), std::move(get),
                             std::move(set)});
  };

  // network
  add("network.patch_size", "patch edge length for all network I/O",
      [](const RunConfig& c) { return std::to_string(c.net.patch_size); },
      [](RunConfig& c, const std::string& v) {
        c.net.patch_size = parse_int(v, "network.patch_size");
      });
  add("network.slope", "leaky-ReLU negative slope",
      [](const RunConfig& c) { return fmt_double(c.net.slope); },
      [](RunConfig& c, const std::string& v) {
        c.net.slope = static_cast<float>(parse_double(v, "network.slope"));
      });
  add("network.lambda_per", "reconstruction-loss weight",
      [](const RunConfig& c) { return fmt_double(c.net.lambda_per); },
      [](RunConfig& c, const std::string& v) {
        c.net.lambda_per =
            static_cast<float>(parse_double(v, "network.lambda_per"));
      });
  add("network.lambda_adv", "adversarial-loss weight",
      [](const RunConfig& c) { return fmt_double(c.net.lambda_adv); },
      [](RunConfig& c, const std::string& v) {
        c.net.lambda_adv =
            static_cast<float>(parse_double(v, "network.lambda_adv"));
      });
  add("network.aggregate", "patch aggregation: weighted | mean",
      [](const RunConfig& c) {
        return c.net.aggregate == Aggregate::kWeighted ? "weighted" : "mean";
      },
      [](RunConfig& c, const std::string& v) {
        if (v == "weighted")
          c.net.aggregate = Aggregate::kWeighted;
        else if (v == "mean")
          c.net.aggregate = Aggregate::kMean;
        else
          throw ArgumentError("network.aggregate: expected weighted|mean");
      });
  add("network.adv_mode", "adversarial objective: wgan | loggan | none",
      [](const RunConfig& c) {
        switch (c.net.adv_mode) {
          case AdvMode::kWgan:
            return "wgan";
          case AdvMode::kLoggan:
            return "loggan";
          default:
            return "none";
        }
      },
      [](RunConfig& c, const std::string& v) {
        if (v == "wgan")
          c.net.adv_mode = AdvMode::kWgan;
        else if (v == "loggan")
          c.net.adv_mode = AdvMode::kLoggan;
        else if (v == "none")
          c.net.adv_mode = AdvMode::kNone;
        else
          throw ArgumentError("network.adv_mode: expected wgan|loggan|none");
      });
  add("network.rec_loss", "reconstruction objective: perceptual | l2",
      [](const RunConfig& c) {
        return c.net.rec_loss == RecLoss::kPerceptual ? "perceptual" : "l2";
      },
      [](RunConfig& c, const std::string& v) {
        if (v == "perceptual")
          c.net.rec_loss = RecLoss::kPerceptual;
        else if (v == "l2")
          c.net.rec_loss = RecLoss::kL2;
        else
          throw ArgumentError("network.rec_loss: expected perceptual|l2");
      });
  add("network.restorator.n_blocks", "residual block count",
      [](const RunConfig& c) {
        return std::to_string(c.net.restorator.n_blocks);
      },
      [](RunConfig& c, const std::string& v) {
        c.net.restorator.n_blocks =
            parse_int(v, "network.restorator.n_blocks");
      });
  add("network.restorator.channels", "residual trunk width",
      [](const RunConfig& c) {
        return std::to_string(c.net.restorator.channels);
      },
      [](RunConfig& c, const std::string& v) {
        c.net.restorator.channels =
            parse_int(v, "network.restorator.channels");
      });
  add("network.discriminator.channels",
      "critic conv stage widths (comma separated)",
      [](const RunConfig& c) { return join_ints(c.net.discriminator.channels); },
      [](RunConfig& c, const std::string& v) {
        c.net.discriminator.channels =
            parse_int_list(v, "network.discriminator.channels");
      });
  add("network.discriminator.fc", "critic head widths (comma separated)",
      [](const RunConfig& c) { return join_ints(c.net.discriminator.fc); },
      [](RunConfig& c, const std::string& v) {
        c.net.discriminator.fc = parse_int_list(v, "network.discriminator.fc");
      });
  add("network.evaluator.head", "evaluator head widths (comma separated)",
      [](const RunConfig& c) { return join_ints(c.net.evaluator.head); },
      [](RunConfig& c, const std::string& v) {
        c.net.evaluator.head = parse_int_list(v, "network.evaluator.head");
      });
  add("network.evaluator.shared_trunk",
      "share one trunk between the two evaluator inputs",
      [](const RunConfig& c) {
        return c.net.evaluator.shared_trunk ? "true" : "false";
      },
      [](RunConfig& c, const std::string& v) {
        c.net.evaluator.shared_trunk =
            parse_bool(v, "network.evaluator.shared_trunk");
      });
  add("network.feature_net.channels",
      "feature net stage widths (5 comma-separated values)",
      [](const RunConfig& c) { return join_ints(c.net.feature_net.channels); },
      [](RunConfig& c, const std::string& v) {
        c.net.feature_net.channels =
            parse_int_list(v, "network.feature_net.channels");
      });
  add("network.feature_net.seed", "frozen feature-net weight seed",
      [](const RunConfig& c) { return std::to_string(c.net.feature_net.seed); },
      [](RunConfig& c, const std::string& v) {
        c.net.feature_net.seed = parse_u64(v, "network.feature_net.seed");
      });

  // train
  auto add_int = [&](const char* name, const char* desc, int TrainConfig::*f) {
    add(name, desc,
        [f](const RunConfig& c) { return std::to_string(c.train.*f); },
        [f, name = std::string(name)](RunConfig& c, const std::string& v) {
          c.train.*f = parse_int(v, name);
        });
  };
  auto add_lr = [&](const char* name, const char* desc,
                    double TrainConfig::*f) {
    add(name, desc, [f](const RunConfig& c) { return fmt_double(c.train.*f); },
        [f, name = std::string(name)](RunConfig& c, const std::string& v) {
          c.train.*f = parse_double(v, name);
        });
  };
  add_int("train.phase1_iters", "restorator pretraining iterations",
          &TrainConfig::phase1_iters);
  add_int("train.phase2_iters_a", "adversarial iterations at the base rate",
          &TrainConfig::phase2_iters_a);
  add_int("train.phase2_iters_b", "adversarial iterations at the lower rate",
          &TrainConfig::phase2_iters_b);
  add_int("train.phase3_iters", "evaluator pretraining iterations",
          &TrainConfig::phase3_iters);
  add_int("train.phase4_iters", "evaluator finetuning iterations",
          &TrainConfig::phase4_iters);
  add_int("train.batch_size", "patch batch size", &TrainConfig::batch_size);
  add_int("train.critic_steps", "critic updates per restorator update",
          &TrainConfig::critic_steps);
  add_lr("train.lr_phase1", "phase 1 learning rate", &TrainConfig::lr_phase1);
  add_lr("train.lr_phase2a", "phase 2 first-half learning rate",
         &TrainConfig::lr_phase2a);
  add_lr("train.lr_phase2b", "phase 2 second-half learning rate",
         &TrainConfig::lr_phase2b);
  add_lr("train.lr_phase3", "phase 3 learning rate", &TrainConfig::lr_phase3);
  add_lr("train.lr_phase4", "phase 4 learning rate", &TrainConfig::lr_phase4);
  add_lr("train.clip_c", "critic weight-clipping bound", &TrainConfig::clip_c);
  add("train.seed", "master training seed",
      [](const RunConfig& c) { return std::to_string(c.train.seed); },
      [](RunConfig& c, const std::string& v) {
        c.train.seed = parse_u64(v, "train.seed");
      });
  add_int("train.phase4_batch_images", "images per phase-4 step",
          &TrainConfig::phase4_batch_images);
  add_int("train.phase4_val_every", "phase-4 validation interval",
          &TrainConfig::phase4_val_every);

  // split
  add("split.train_frac", "training fraction of reference images",
      [](const RunConfig& c) { return fmt_double(c.split.train_frac); },
      [](RunConfig& c, const std::string& v) {
        c.split.train_frac = parse_double(v, "split.train_frac");
      });
  add("split.val_frac", "validation fraction of reference images",
      [](const RunConfig& c) { return fmt_double(c.split.val_frac); },
      [](RunConfig& c, const std::string& v) {
        c.split.val_frac = parse_double(v, "split.val_frac");
      });
  add("split.test_frac", "test fraction of reference images",
      [](const RunConfig& c) { return fmt_double(c.split.test_frac); },
      [](RunConfig& c, const std::string& v) {
        c.split.test_frac = parse_double(v, "split.test_frac");
      });
  add("split.seed", "split shuffle seed",
      [](const RunConfig& c) { return std::to_string(c.split.seed); },
      [](RunConfig& c, const std::string& v) {
        c.split.seed = parse_u64(v, "split.seed");
      });

  // paths
  auto add_path = [&](const char* name, const char* desc,
                      std::string RunConfig::*f) {
    add(name, desc, [f](const RunConfig& c) { return c.*f; },
        [f](RunConfig& c, const std::string& v) { c.*f = v; });
  };
  add_path("paths.corpus", "corpus root directory", &RunConfig::corpus_dir);
  add_path("paths.manifest", "manifest CSV path", &RunConfig::manifest);
  add_path("paths.out", "output directory", &RunConfig::out_dir);
  add_path("paths.ckpt", "checkpoint directory", &RunConfig::ckpt_dir);
  return keys;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_registry();
  return keys;
}

void apply_key_value(RunConfig& cfg, const std::string& key,
                     const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw ArgumentError("unknown config key: " + key);
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    try {
      apply_key_value(cfg, key, value);
    } catch (const ArgumentError& e) {
      throw ArgumentError(path + ":" + std::to_string(lineno) + ": " +
                          e.what());
    }
  }
}

}  // namespace raniqa
