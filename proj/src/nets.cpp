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

#include "raniqa/nets.hpp"

#include <cmath>

namespace raniqa {

void NetworkConfig::validate() const {
  if (patch_size < 1) throw ArgumentError("patch_size must be >= 1");
  if (restorator.n_blocks < 1)
    throw ArgumentError("restorator.n_blocks must be >= 1");
  if (restorator.channels < 1)
    throw ArgumentError("restorator.channels must be >= 1");
  if (discriminator.channels.empty())
    throw ArgumentError("discriminator needs at least one conv stage");
  if (discriminator.fc.empty() || discriminator.fc.back() != 1)
    throw ArgumentError("discriminator head must end in width 1");
  if (evaluator.head.empty() || evaluator.head.back() != 1)
    throw ArgumentError("evaluator heads must end in width 1");
  if (feature_net.channels.size() != 5)
    throw ArgumentError("feature net must have exactly 5 tap points");
  if (!(slope >= 0.0f && slope < 1.0f))
    throw ArgumentError("slope must be in [0, 1)");
  if (lambda_per < 0.0f || lambda_adv < 0.0f)
    throw ArgumentError("loss weights must be >= 0");
}

namespace layers {

namespace {

template <typename T>
Tensor<T>& bind_param(ParamStore<T>& store, const std::string& name, Shape dims,
                bool trainable,
                const std::function<void(std::vector<T>&)>& init,
                bool allow_create) {
  if (store.has(name)) {
    auto& e = store.entry(name);
    if (e.tensor.dims() != dims)
      throw ShapeError("parameter " + name + " has shape " +
                       shape_str(e.tensor.dims()) + ", expected " +
                       shape_str(dims));
    e.trainable = trainable;
    e.tensor.set_requires_grad(trainable);
    return e.tensor;
  }
  if (!allow_create)
    throw StateError("parameter " + name + " missing from loaded store");
  Tensor<T> t = Tensor<T>::zeros(dims);
  if (init) init(t.vec());
  return store.add(name, std::move(t), trainable);
}

// He-style fan-in normal initialization.
template <typename T>
std::function<void(std::vector<T>&)> he_init(Rng* rng, int64_t fan_in) {
  if (!rng) return nullptr;
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  return [rng, stddev](std::vector<T>& v) {
    for (auto& x : v) x = static_cast<T>(rng->normal(0.0, stddev));
  };
}

}  // namespace

template <typename T>
Conv<T> conv(ParamStore<T>& store, const std::string& name, int in_c,
             int out_c, int stride, Rng* rng, bool trainable) {
  Conv<T> layer;
  layer.stride = stride;
  layer.w = bind_param(store, name + "/w", Shape{out_c, in_c, 3, 3}, trainable,
                 he_init<T>(rng, static_cast<int64_t>(in_c) * 9),
                 rng != nullptr);
  layer.b = bind_param(store, name + "/b", Shape{out_c}, trainable,
                 std::function<void(std::vector<T>&)>{}, rng != nullptr);
  return layer;
}

template <typename T>
Bn<T> bn(ParamStore<T>& store, const std::string& name, int channels,
         Rng* rng, bool trainable) {
  Bn<T> layer;
  const bool create = rng != nullptr;
  auto ones = [](std::vector<T>& v) {
    for (auto& x : v) x = T(1);
  };
  layer.gamma = bind_param(store, name + "/gamma", Shape{channels}, trainable,
                     std::function<void(std::vector<T>&)>(ones), create);
  layer.beta = bind_param(store, name + "/beta", Shape{channels}, trainable,
                    std::function<void(std::vector<T>&)>{}, create);
  layer.state.running_mean =
      bind_param(store, name + "/running_mean", Shape{channels}, false,
           std::function<void(std::vector<T>&)>{}, create);
  layer.state.running_var =
      bind_param(store, name + "/running_var", Shape{channels}, false,
           std::function<void(std::vector<T>&)>(ones), create);
  layer.state.steps = bind_param(store, name + "/steps", Shape{1}, false,
                           std::function<void(std::vector<T>&)>{}, create);
  return layer;
}

template <typename T>
Dense<T> fc(ParamStore<T>& store, const std::string& name, int in_f, int out_f,
            Rng* rng, bool trainable) {
  Dense<T> layer;
  layer.w = bind_param(store, name + "/w", Shape{out_f, in_f}, trainable,
                 he_init<T>(rng, in_f), rng != nullptr);
  layer.b = bind_param(store, name + "/b", Shape{out_f}, trainable,
                 std::function<void(std::vector<T>&)>{}, rng != nullptr);
  return layer;
}

#define RANIQA_INSTANTIATE_LAYERS(T)                                           \
  template Conv<T> conv(ParamStore<T>&, const std::string&, int, int, int,    \
                        Rng*, bool);                                           \
  template Bn<T> bn(ParamStore<T>&, const std::string&, int, Rng*, bool);     \
  template Dense<T> fc(ParamStore<T>&, const std::string&, int, int, Rng*,    \
                       bool);

RANIQA_INSTANTIATE_LAYERS(float)
RANIQA_INSTANTIATE_LAYERS(double)
#undef RANIQA_INSTANTIATE_LAYERS

}  // namespace layers

// ---- restorator -------------------------------------------------------------

template <typename T>
Restorator<T>::Restorator(ParamStore<T>& store, const NetworkConfig& cfg,
                          Rng* rng)
    : slope_(static_cast<T>(cfg.slope)) {
  cfg.validate();
  const int c = cfg.restorator.channels;
  entry_ = layers::conv(store, "restorator/entry", 3, c, 1, rng);
  blocks_.resize(cfg.restorator.n_blocks);
  for (int i = 0; i < cfg.restorator.n_blocks; ++i) {
    const std::string p = "restorator/block" + std::to_string(i);
    blocks_[i].conv1 = layers::conv(store, p + "/conv1", c, c, 1, rng);
    blocks_[i].bn1 = layers::bn(store, p + "/bn1", c, rng);
    blocks_[i].conv2 = layers::conv(store, p + "/conv2", c, c, 1, rng);
    blocks_[i].bn2 = layers::bn(store, p + "/bn2", c, rng);
  }
  exit_ = layers::conv(store, "restorator/exit", c, 3, 1, rng);
}

template <typename T>
Tensor<T> Restorator<T>::forward(const Tensor<T>& x, BnMode mode) {
  Tensor<T> h = leaky_relu(entry_(x), slope_);
  for (auto& blk : blocks_) {
    Tensor<T> t = blk.bn1(blk.conv1(h), mode);
    t = leaky_relu(t, slope_);
    t = blk.bn2(blk.conv2(t), mode);
    h = residual_add(h, t);
  }
  Tensor<T> out = exit_(h);
  if (mode == BnMode::kInfer) out = clamp_data(out, T(0), T(1));
  out.assert_finite("restorator output");
  return out;
}

// ---- discriminator ------------------------------------------------------------

template <typename T>
Discriminator<T>::Discriminator(ParamStore<T>& store, const NetworkConfig& cfg,
                                Rng* rng, const std::string& prefix)
    : slope_(static_cast<T>(cfg.slope)) {
  cfg.validate();
  const auto& chans = cfg.discriminator.channels;
  int in_c = 3;
  for (size_t i = 0; i < chans.size(); ++i) {
    const std::string p = prefix + "/stage" + std::to_string(i);
    const int stride = (i % 2 == 0) ? 1 : 2;  // alternate 1, 2, 1, 2, ...
    Stage st;
    st.conv = layers::conv(store, p + "/conv", in_c, chans[i], stride, rng);
    st.bn = layers::bn(store, p + "/bn", chans[i], rng);
    stages_.push_back(std::move(st));
    in_c = chans[i];
  }
  trunk_width_ = in_c;
  int in_f = in_c;
  for (size_t i = 0; i < cfg.discriminator.fc.size(); ++i) {
    const std::string p = prefix + "/fc" + std::to_string(i);
    head_.push_back(layers::fc(store, p, in_f, cfg.discriminator.fc[i], rng));
    in_f = cfg.discriminator.fc[i];
  }
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& x, BnMode mode) {
  Tensor<T> h = x;
  for (auto& st : stages_) {
    h = st.conv(h);
    h = leaky_relu(h, slope_);
    h = st.bn(h, mode);
  }
  h = global_avg_pool(h);
  for (size_t i = 0; i < head_.size(); ++i) {
    h = head_[i](h);
    if (i + 1 < head_.size()) h = leaky_relu(h, slope_);
  }
  h.assert_finite("discriminator output");
  return h;  // linear: no squashing
}

// ---- evaluator -----------------------------------------------------------------

template <typename T>
Evaluator<T>::Evaluator(ParamStore<T>& store, const NetworkConfig& cfg,
                        Rng* rng)
    : slope_(static_cast<T>(cfg.slope)),
      shared_trunk_(cfg.evaluator.shared_trunk) {
  cfg.validate();
  const auto& chans = cfg.discriminator.channels;
  auto build_trunk = [&](const std::string& prefix,
                         std::vector<Stage>& trunk) {
    int in_c = 3;
    for (size_t i = 0; i < chans.size(); ++i) {
      const std::string p = prefix + "/stage" + std::to_string(i);
      const int stride = (i % 2 == 0) ? 1 : 2;
      Stage st;
      st.conv = layers::conv(store, p + "/conv", in_c, chans[i], stride, rng);
      st.bn = layers::bn(store, p + "/bn", chans[i], rng);
      trunk.push_back(std::move(st));
      in_c = chans[i];
    }
  };
  build_trunk("evaluator/trunk", trunk_a_);
  if (!shared_trunk_) build_trunk("evaluator/trunk2", trunk_b_);
  fused_width_ = 2 * chans.back();
  auto build_head = [&](const std::string& prefix,
                        std::vector<layers::Dense<T>>& head) {
    int in_f = fused_width_;
    for (size_t i = 0; i < cfg.evaluator.head.size(); ++i) {
      head.push_back(layers::fc(store, prefix + std::to_string(i), in_f,
                                cfg.evaluator.head[i], rng));
      in_f = cfg.evaluator.head[i];
    }
  };
  build_head("evaluator/score/fc", score_head_);
  build_head("evaluator/weight/fc", weight_head_);
}

template <typename T>
Tensor<T> Evaluator<T>::run_trunk(std::vector<Stage>& trunk, const Tensor<T>& x,
                                  BnMode mode) {
  Tensor<T> h = x;
  for (auto& st : trunk) {
    h = st.conv(h);
    h = leaky_relu(h, slope_);
    h = st.bn(h, mode);
  }
  return global_avg_pool(h);
}

template <typename T>
EvaluatorOut<T> Evaluator<T>::forward(const Tensor<T>& distorted,
                                      const Tensor<T>& restored, BnMode mode) {
  Tensor<T> fa = run_trunk(trunk_a_, distorted, mode);
  Tensor<T> fb = run_trunk(shared_trunk_ ? trunk_a_ : trunk_b_, restored, mode);
  Tensor<T> fused = concat_channels(fa, fb);
  auto run_head = [&](std::vector<layers::Dense<T>>& head) {
    Tensor<T> h = fused;
    for (size_t i = 0; i < head.size(); ++i) {
      h = head[i](h);
      if (i + 1 < head.size()) h = leaky_relu(h, slope_);
    }
    return h;
  };
  EvaluatorOut<T> out;
  out.score = run_head(score_head_);
  // strictly positive weights keep the aggregation denominator away from 0
  out.weight = add_scalar(softplus(run_head(weight_head_)), T(1e-3));
  out.score.assert_finite("evaluator score");
  out.weight.assert_finite("evaluator weight");
  return out;
}

// ---- feature net ----------------------------------------------------------------

template <typename T>
FeatureNet<T>::FeatureNet(ParamStore<T>& store, const NetworkConfig& cfg)
    : slope_(static_cast<T>(cfg.slope)) {
  cfg.validate();
  Rng rng(cfg.feature_net.seed);
  int in_c = 3;
  for (size_t i = 0; i < cfg.feature_net.channels.size(); ++i) {
    const int c = cfg.feature_net.channels[i];
    const std::string p = "featnet/stage" + std::to_string(i);
    Stage st;
    st.conv_a = layers::conv(store, p + "/conv_a", in_c, c, 1, &rng, false);
    st.conv_b = layers::conv(store, p + "/conv_b", c, c, 2, &rng, false);
    stages_.push_back(std::move(st));
    in_c = c;
  }
}

template <typename T>
std::vector<Tensor<T>> FeatureNet<T>::taps(const Tensor<T>& x) const {
  std::vector<Tensor<T>> out;
  out.reserve(stages_.size());
  Tensor<T> h = x;
  for (const auto& st : stages_) {
    Tensor<T> tap = leaky_relu(st.conv_a(h), slope_);
    out.push_back(tap);
    h = st.conv_b(tap);
  }
  return out;
}

// ---- losses ----------------------------------------------------------------------

template <typename T>
Tensor<T> perceptual_loss(const FeatureNet<T>& featnet, const Tensor<T>& target,
                          const Tensor<T>& restored) {
  if (target.dims() != restored.dims())
    throw ShapeError("perceptual_loss: patch batches must have equal dims");
  const auto t_taps = featnet.taps(target);
  const auto r_taps = featnet.taps(restored);
  const T batch = static_cast<T>(target.dim(0));
  Tensor<T> total;
  for (size_t i = 0; i < t_taps.size(); ++i) {
    const auto& d = t_taps[i].dims();  // (N, C, H, W)
    const T norm = T(1) / (static_cast<T>(d[1] * d[2] * d[3]) * batch);
    Tensor<T> diff = sub(t_taps[i], r_taps[i]);
    Tensor<T> term = mul_scalar(sum(mul(diff, diff)), norm);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

template <typename T>
AdvLosses<T> adversarial_losses(Discriminator<T>& critic, const Tensor<T>& real,
                                const Tensor<T>& fake, AdvMode mode,
                                BnMode bn_mode) {
  if (real.dim(0) < 1 || fake.dim(0) < 1)
    throw ArgumentError("adversarial_losses: empty batch");
  AdvLosses<T> out;
  if (mode == AdvMode::kNone) {
    out.critic_loss = Tensor<T>::scalar(T(0));
    out.restorator_adv_loss = Tensor<T>::scalar(T(0));
    return out;
  }
  Tensor<T> d_real = critic.forward(real, bn_mode);
  Tensor<T> d_fake = critic.forward(fake, bn_mode);
  if (mode == AdvMode::kWgan) {
    out.critic_loss = sub(mean(d_fake), mean(d_real));
    out.restorator_adv_loss = neg(mean(d_fake));
  } else {
    // cross-entropy with sigmoid:  -log s(x) == softplus(-x)
    Tensor<T> loss_real = mean(softplus(neg(d_real)));
    Tensor<T> loss_fake = mean(softplus(d_fake));
    out.critic_loss = add(loss_real, loss_fake);
    out.restorator_adv_loss = mean(softplus(neg(d_fake)));
  }
  return out;
}

template <typename T>
Tensor<T> evaluator_loss_patchwise(const Tensor<T>& s, const Tensor<T>& w,
                                   const Tensor<T>& s0, const Tensor<T>& w0) {
  if (s.numel() != s0.numel() || w.numel() != w0.numel())
    throw ShapeError("evaluator_loss_patchwise: prediction/label length mismatch");
  Tensor<T> ls = sum(abs_val(sub(s, s0)));
  Tensor<T> lw = sum(abs_val(sub(w, w0)));
  return add(ls, lw);
}

template <typename T>
Tensor<T> evaluator_loss_imagewise(const Tensor<T>& s, const Tensor<T>& w,
                                   T target) {
  if (s.numel() < 1) throw ArgumentError("evaluator_loss_imagewise: no patches");
  Tensor<T> q = div(sum(mul(s, w)), sum(w));
  return abs_val(sub(q, Tensor<T>::scalar(target)));
}

// ---- scoring ----------------------------------------------------------------------

double aggregate_scores(const std::vector<PatchScore>& patches,
                        Aggregate mode) {
  if (patches.empty()) throw ArgumentError("no patch scores to aggregate");
  if (mode == Aggregate::kMean) {
    double acc = 0.0;
    for (const auto& p : patches) acc += p.s;
    return acc / static_cast<double>(patches.size());
  }
  double num = 0.0, den = 0.0;
  for (const auto& p : patches) {
    num += p.s * p.w;
    den += p.w;
  }
  if (den <= 0.0)
    throw StateError("aggregate weight mass is not positive");
  return num / den;
}

double patchwise_loss_value(const std::vector<PatchScore>& preds,
                            const std::vector<PatchScore>& labels) {
  if (preds.size() != labels.size())
    throw ArgumentError("prediction/label count mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < preds.size(); ++i)
    acc += std::abs(preds[i].s - labels[i].s) +
           std::abs(preds[i].w - labels[i].w);
  return acc;
}

double imagewise_loss_value(const std::vector<PatchScore>& preds,
                            double target) {
  return std::abs(aggregate_scores(preds, Aggregate::kWeighted) - target);
}

QualityReport score_image(Evaluator<float>& evaluator,
                          Restorator<float>& restorator, const ImagePlane& img,
                          const NetworkConfig& cfg,
                          const std::string& image_id) {
  const PatchGrid grid = patch_grid(img, cfg.patch_size);
  std::vector<ImagePlane> patches = extract_patches(img, cfg.patch_size);
  Tensor<float> distorted = images_to_tensor<float>(patches);
  Tensor<float> restored = restorator.forward(distorted, BnMode::kInfer);
  EvaluatorOut<float> out =
      evaluator.forward(distorted, restored, BnMode::kInfer);

  QualityReport report;
  report.image_id = image_id;
  report.patch_size = cfg.patch_size;
  report.grid_rows = grid.rows;
  report.grid_cols = grid.cols;
  report.aggregate = cfg.aggregate;
  report.patches.resize(patches.size());
  for (size_t i = 0; i < patches.size(); ++i) {
    report.patches[i].s = static_cast<double>(out.score.data()[i]);
    report.patches[i].w = static_cast<double>(out.weight.data()[i]);
  }
  report.q = aggregate_scores(report.patches, cfg.aggregate);
  return report;
}

// ---- explicit instantiations ---------------------------------------------------------

#define RANIQA_INSTANTIATE_NETS(T)                                            \
  template class Restorator<T>;                                               \
  template class Discriminator<T>;                                            \
  template class Evaluator<T>;                                                \
  template class FeatureNet<T>;                                               \
  template Tensor<T> perceptual_loss(const FeatureNet<T>&, const Tensor<T>&,  \
                                     const Tensor<T>&);                       \
  template AdvLosses<T> adversarial_losses(Discriminator<T>&,                 \
                                           const Tensor<T>&, const Tensor<T>&,\
                                           AdvMode, BnMode);                  \
  template Tensor<T> evaluator_loss_patchwise(const Tensor<T>&,               \
                                              const Tensor<T>&,               \
                                              const Tensor<T>&,               \
                                              const Tensor<T>&);              \
  template Tensor<T> evaluator_loss_imagewise(const Tensor<T>&,               \
                                              const Tensor<T>&, T);

RANIQA_INSTANTIATE_NETS(float)
RANIQA_INSTANTIATE_NETS(double)
#undef RANIQA_INSTANTIATE_NETS

}  // namespace raniqa
