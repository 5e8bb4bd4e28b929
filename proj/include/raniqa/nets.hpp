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
#include <vector>

#include "raniqa/image.hpp"
#include "raniqa/ops.hpp"
#include "raniqa/params.hpp"

namespace raniqa {

enum class Aggregate { kWeighted, kMean };
enum class AdvMode { kWgan, kLoggan, kNone };
enum class RecLoss { kPerceptual, kL2 };

struct NetworkConfig {
  int patch_size = 64;
  struct {
    int n_blocks = 10;
    int channels = 64;
  } restorator;
  struct {
    std::vector<int> channels = {64, 64, 128, 128, 256, 256, 512, 512};
    std::vector<int> fc = {256, 1};
  } discriminator;
  struct {
    std::vector<int> head = {256, 1};
    bool shared_trunk = true;  // one trunk applied to both inputs
  } evaluator;
  struct {
    std::vector<int> channels = {8, 16, 32, 64, 64};
    uint64_t seed = 901;  // frozen-weight seed
  } feature_net;
  float slope = 0.2f;       // leaky-ReLU negative slope
  float lambda_per = 1.0f;  // reconstruction-term weight
  float lambda_adv = 1.0f;  // adversarial-term weight
  Aggregate aggregate = Aggregate::kWeighted;
  AdvMode adv_mode = AdvMode::kWgan;
  RecLoss rec_loss = RecLoss::kPerceptual;

  void validate() const;
};

// A small fully trained/inferable net binds layer handles onto a ParamStore.
// Construction either creates and initializes entries (fresh store) or binds
// to existing ones (loaded checkpoint), validating shapes.

namespace layers {

template <typename T>
struct Conv {
  Tensor<T> w, b;
  int stride = 1;
  Tensor<T> operator()(const Tensor<T>& x) const {
    return conv2d(x, w, b, stride, Padding::kSame);
  }
};

template <typename T>
struct Bn {
  Tensor<T> gamma, beta;
  BatchNormState<T> state;
  T momentum = T(0.9), eps = T(1e-5);
  Tensor<T> operator()(const Tensor<T>& x, BnMode mode) {
    return batch_norm(x, gamma, beta, state, mode, momentum, eps);
  }
};

template <typename T>
struct Dense {
  Tensor<T> w, b;
  Tensor<T> operator()(const Tensor<T>& x) const { return dense(x, w, b); }
};

// Create-or-bind helpers; `rng` may be null when binding a loaded store that
// is expected to be complete.
template <typename T>
Conv<T> conv(ParamStore<T>& store, const std::string& name, int in_c,
             int out_c, int stride, Rng* rng, bool trainable = true);
template <typename T>
Bn<T> bn(ParamStore<T>& store, const std::string& name, int channels, Rng* rng,
         bool trainable = true);
template <typename T>
Dense<T> fc(ParamStore<T>& store, const std::string& name, int in_f, int out_f,
            Rng* rng, bool trainable = true);

}  // namespace layers

// Residual restoration network: entry conv + L-ReLU, n residual blocks
// (conv-BN-LReLU-conv-BN plus identity), exit conv to 3 channels. Linear
// output in train mode; clamped to [0,1] in infer mode.
template <typename T>
class Restorator {
 public:
  Restorator(ParamStore<T>& store, const NetworkConfig& cfg, Rng* rng);
  Tensor<T> forward(const Tensor<T>& x, BnMode mode);

 private:
  T slope_;
  layers::Conv<T> entry_, exit_;
  struct Block {
    layers::Conv<T> conv1, conv2;
    layers::Bn<T> bn1, bn2;
  };
  std::vector<Block> blocks_;
};

// Strided-convolution critic: conv stages alternating stride 1/2, each
// conv -> L-ReLU -> BN; global average pool; fully connected head with a
// linear (unsquashed) scalar output.
template <typename T>
class Discriminator {
 public:
  Discriminator(ParamStore<T>& store, const NetworkConfig& cfg, Rng* rng,
                const std::string& prefix = "discriminator");
  // -> (N, 1) realness scores
  Tensor<T> forward(const Tensor<T>& x, BnMode mode);
  int trunk_width() const { return trunk_width_; }

 private:
  T slope_;
  struct Stage {
    layers::Conv<T> conv;
    layers::Bn<T> bn;
  };
  std::vector<Stage> stages_;
  std::vector<layers::Dense<T>> head_;
  int trunk_width_ = 0;
};

template <typename T>
struct EvaluatorOut {
  Tensor<T> score;   // (N, 1)
  Tensor<T> weight;  // (N, 1), strictly positive (softplus + 1e-3)
};

// Quality evaluator: shared conv trunk (critic layout through global average
// pool) applied to the distorted and restored patches, features concatenated,
// then separate score and weight heads.
template <typename T>
class Evaluator {
 public:
  Evaluator(ParamStore<T>& store, const NetworkConfig& cfg, Rng* rng);
  EvaluatorOut<T> forward(const Tensor<T>& distorted, const Tensor<T>& restored,
                          BnMode mode);
  int fused_width() const { return fused_width_; }

 private:
  T slope_;
  struct Stage {
    layers::Conv<T> conv;
    layers::Bn<T> bn;
  };
  std::vector<Stage> trunk_a_, trunk_b_;  // trunk_b_ empty when shared
  bool shared_trunk_ = true;
  std::vector<layers::Dense<T>> score_head_, weight_head_;
  int fused_width_ = 0;

  Tensor<T> run_trunk(std::vector<Stage>& trunk, const Tensor<T>& x,
                      BnMode mode);
};

// Frozen random multi-scale feature extractor: five stages of
// conv(s1) -> L-ReLU (tap) -> conv(s2); weights drawn once from the
// configured seed and never trained.
template <typename T>
class FeatureNet {
 public:
  FeatureNet(ParamStore<T>& store, const NetworkConfig& cfg);
  std::vector<Tensor<T>> taps(const Tensor<T>& x) const;
  size_t n_taps() const { return stages_.size(); }

 private:
  T slope_;
  struct Stage {
    layers::Conv<T> conv_a, conv_b;
  };
  std::vector<Stage> stages_;
};

// ---- losses -----------------------------------------------------------------

// Multi-scale feature distance, averaged over the batch: for each tap i,
// (1 / (Wi*Hi*Ci)) * ||taps_i(target) - taps_i(restored)||^2, summed over taps.
template <typename T>
Tensor<T> perceptual_loss(const FeatureNet<T>& featnet, const Tensor<T>& target,
                          const Tensor<T>& restored);

template <typename T>
struct AdvLosses {
  Tensor<T> critic_loss;
  Tensor<T> restorator_adv_loss;
};

// Adversarial pair. Wasserstein mode: critic minimizes
// mean D(fake) - mean D(real); the restorator minimizes -mean D(fake).
// Log mode applies a sigmoid and uses the standard cross-entropy objectives.
// Mode none returns detached zeros.
template <typename T>
AdvLosses<T> adversarial_losses(Discriminator<T>& critic, const Tensor<T>& real,
                                const Tensor<T>& fake, AdvMode mode,
                                BnMode bn_mode);

// Patch-supervised evaluator loss: sum |s - s0| + sum |w - w0|.
template <typename T>
Tensor<T> evaluator_loss_patchwise(const Tensor<T>& s, const Tensor<T>& w,
                                   const Tensor<T>& s0, const Tensor<T>& w0);

// Image-supervised evaluator loss: | sum(s*w)/sum(w) - target |.
template <typename T>
Tensor<T> evaluator_loss_imagewise(const Tensor<T>& s, const Tensor<T>& w,
                                   T target);

// ---- scoring -----------------------------------------------------------------

struct PatchScore {
  double s = 0.0;
  double w = 0.0;
};

struct QualityReport {
  std::string image_id;
  int patch_size = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<PatchScore> patches;  // row-major grid order
  Aggregate aggregate = Aggregate::kWeighted;
  double q = 0.0;
};

// Weighted aggregation sum(s*w)/sum(w), or the plain mean.
double aggregate_scores(const std::vector<PatchScore>& patches, Aggregate mode);

// Plain-arithmetic loss mirrors for reports and tests.
double patchwise_loss_value(const std::vector<PatchScore>& preds,
                            const std::vector<PatchScore>& labels);
double imagewise_loss_value(const std::vector<PatchScore>& preds,
                            double target);

// Full no-reference scoring of one image: non-overlapping patches, restore,
// evaluate (distorted, restored) pairs, aggregate.
QualityReport score_image(Evaluator<float>& evaluator,
                          Restorator<float>& restorator, const ImagePlane& img,
                          const NetworkConfig& cfg,
                          const std::string& image_id = "");

}  // namespace raniqa
