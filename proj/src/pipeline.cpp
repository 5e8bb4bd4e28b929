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

#include "raniqa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "raniqa/checkpoint.hpp"
#include "raniqa/distortion.hpp"

namespace raniqa {

namespace fs = std::filesystem;

TrainConfig TrainConfig::full_scale() {
  TrainConfig cfg;
  cfg.phase1_iters = 300000;
  cfg.phase2_iters_a = 300000;
  cfg.phase2_iters_b = 300000;
  cfg.phase3_iters = 300000;
  cfg.phase4_iters = 20000;
  return cfg;
}

void TrainConfig::validate() const {
  if (phase1_iters < 1 || phase2_iters_a < 1 || phase2_iters_b < 0 ||
      phase3_iters < 1 || phase4_iters < 1)
    throw ArgumentError("phase iteration counts must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (critic_steps < 1) throw ArgumentError("critic_steps must be >= 1");
  if (lr_phase1 <= 0 || lr_phase2a <= 0 || lr_phase2b <= 0 || lr_phase3 <= 0 ||
      lr_phase4 <= 0)
    throw ArgumentError("learning rates must be positive");
  if (clip_c <= 0) throw ArgumentError("clip bound must be positive");
  if (phase4_batch_images < 1)
    throw ArgumentError("phase4_batch_images must be >= 1");
  if (phase4_val_every < 1)
    throw ArgumentError("phase4_val_every must be >= 1");
}

void SplitSpec::validate() const {
  if (train_frac <= 0 || val_frac < 0 || test_frac < 0)
    throw ArgumentError("split fractions must be positive");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw ArgumentError("split fractions must sum to 1");
}

// ---- corpus --------------------------------------------------------------

Corpus Corpus::load(const std::string& manifest_path) {
  Corpus corpus;
  corpus.rows_ = read_manifest(manifest_path);
  corpus.root_ = fs::path(manifest_path).parent_path().string();
  if (corpus.rows_.empty())
    throw ArgumentError(manifest_path + ": manifest has no rows");
  return corpus;
}

const Image8& Corpus::cached(const std::string& rel_path) {
  auto it = cache_.find(rel_path);
  if (it != cache_.end()) return it->second;
  const fs::path full = fs::path(root_) / rel_path;
  Image8 img = to_image8(load_image(full.string()));
  return cache_.emplace(rel_path, std::move(img)).first->second;
}

const Image8& Corpus::distorted_image(size_t row) {
  accessed_.insert(row);
  return cached(rows_.at(row).distorted_path);
}

const Image8& Corpus::pristine_image(size_t row) {
  accessed_.insert(row);
  return cached(rows_.at(row).reference_path);
}

// ---- splits ----------------------------------------------------------------

std::vector<SplitTag> split_by_reference(const std::vector<ManifestRow>& rows,
                                         const SplitSpec& spec) {
  spec.validate();
  std::vector<std::string> refs;
  for (const auto& row : rows)
    if (std::find(refs.begin(), refs.end(), row.reference_path) == refs.end())
      refs.push_back(row.reference_path);
  // Fisher-Yates with the pinned generator
  Rng rng(spec.seed);
  for (size_t i = refs.size(); i > 1; --i)
    std::swap(refs[i - 1], refs[rng.below(i)]);
  const size_t n = refs.size();
  const size_t n_train = static_cast<size_t>(std::floor(spec.train_frac * n));
  const size_t n_val = static_cast<size_t>(std::floor(spec.val_frac * n));
  std::map<std::string, SplitTag> tag_of;
  for (size_t i = 0; i < n; ++i) {
    SplitTag tag = SplitTag::kTest;
    if (i < n_train)
      tag = SplitTag::kTrain;
    else if (i < n_train + n_val)
      tag = SplitTag::kVal;
    tag_of[refs[i]] = tag;
  }
  std::vector<SplitTag> out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i)
    out[i] = tag_of.at(rows[i].reference_path);
  return out;
}

std::vector<size_t> rows_with_tag(const std::vector<SplitTag>& tags,
                                  SplitTag tag) {
  std::vector<size_t> out;
  for (size_t i = 0; i < tags.size(); ++i)
    if (tags[i] == tag) out.push_back(i);
  return out;
}

// ---- patch sampling -----------------------------------------------------------

PatchSampler::PatchSampler(Corpus& corpus, std::vector<size_t> row_indices,
                           int patch_size)
    : corpus_(corpus), rows_(std::move(row_indices)), patch_size_(patch_size) {
  if (rows_.empty()) throw ArgumentError("patch sampler needs at least one row");
  if (patch_size_ < 1) throw ArgumentError("patch size must be >= 1");
}

PatchGrid PatchSampler::grid_of(size_t row) {
  const Image8& img = corpus_.distorted_image(row);
  return patch_grid(img.width, img.height, patch_size_);
}

void PatchSampler::sample_batch(Rng& rng, int n, Tensor<float>* distorted,
                                Tensor<float>* pristine,
                                std::vector<PatchRef>* refs) {
  std::vector<ImagePlane> d_patches, p_patches;
  d_patches.reserve(n);
  p_patches.reserve(n);
  if (refs) refs->clear();
  for (int i = 0; i < n; ++i) {
    const size_t row = rows_[rng.below(rows_.size())];
    const Image8& dimg = corpus_.distorted_image(row);
    const Image8& pimg = corpus_.pristine_image(row);
    if (dimg.width != pimg.width || dimg.height != pimg.height)
      throw ConsistencyError("distorted/reference image size mismatch");
    const PatchGrid grid = patch_grid(dimg.width, dimg.height, patch_size_);
    const int cell = static_cast<int>(rng.below(grid.count()));
    const int x0 = (cell % grid.cols) * patch_size_;
    const int y0 = (cell / grid.cols) * patch_size_;
    d_patches.push_back(crop_patch8(dimg, x0, y0, patch_size_));
    p_patches.push_back(crop_patch8(pimg, x0, y0, patch_size_));
    if (refs) refs->push_back(PatchRef{row, cell});
  }
  *distorted = images_to_tensor<float>(d_patches);
  *pristine = images_to_tensor<float>(p_patches);
}

void PatchSampler::full_grid(size_t row, Tensor<float>* distorted,
                             Tensor<float>* pristine) {
  const Image8& dimg = corpus_.distorted_image(row);
  const Image8& pimg = corpus_.pristine_image(row);
  const PatchGrid grid = patch_grid(dimg.width, dimg.height, patch_size_);
  std::vector<ImagePlane> d_patches, p_patches;
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      d_patches.push_back(
          crop_patch8(dimg, c * patch_size_, r * patch_size_, patch_size_));
      p_patches.push_back(
          crop_patch8(pimg, c * patch_size_, r * patch_size_, patch_size_));
    }
  *distorted = images_to_tensor<float>(d_patches);
  *pristine = images_to_tensor<float>(p_patches);
}

PatchLabel PatchLabelCache::get(Corpus& corpus,
                                const PatchSampler::PatchRef& ref,
                                int patch_size) {
  const auto key = std::make_pair(ref.row, ref.patch_index);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const Image8& dimg = corpus.distorted_image(ref.row);
  const Image8& pimg = corpus.pristine_image(ref.row);
  const PatchGrid grid = patch_grid(dimg.width, dimg.height, patch_size);
  const int x0 = (ref.patch_index % grid.cols) * patch_size;
  const int y0 = (ref.patch_index / grid.cols) * patch_size;
  const PatchLabel label = patch_pseudo_labels(
      crop_patch8(dimg, x0, y0, patch_size), crop_patch8(pimg, x0, y0, patch_size));
  cache_.emplace(key, label);
  return label;
}

void write_curve_csv(const std::vector<CurvePoint>& curve,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "iteration,value\n";
  char buf[64];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%lld,%.8g",
                  static_cast<long long>(p.iteration), p.value);
    out << buf << "\n";
  }
}

// ---- pipeline -------------------------------------------------------------------

Pipeline::Pipeline(const NetworkConfig& net_cfg, const TrainConfig& train_cfg)
    : net_cfg_(net_cfg), train_cfg_(train_cfg), rng_(train_cfg.seed) {
  net_cfg_.validate();
  train_cfg_.validate();
  restorator_ = std::make_unique<Restorator<float>>(r_store_, net_cfg_, &rng_);
  critic_ = std::make_unique<Discriminator<float>>(d_store_, net_cfg_, &rng_);
  evaluator_ = std::make_unique<Evaluator<float>>(e_store_, net_cfg_, &rng_);
  featnet_ = std::make_unique<FeatureNet<float>>(f_store_, net_cfg_);
}

Tensor<float> Pipeline::reconstruction_loss(const Tensor<float>& pristine,
                                            const Tensor<float>& restored) {
  if (net_cfg_.rec_loss == RecLoss::kPerceptual)
    return perceptual_loss(*featnet_, pristine, restored);
  Tensor<float> diff = sub(restored, pristine);
  return mean(mul(diff, diff));
}

PhaseResult Pipeline::run_phase1(PatchSampler& sampler) {
  PhaseResult result;
  Tensor<float> distorted, pristine;
  for (int it = 0; it < train_cfg_.phase1_iters; ++it) {
    sampler.sample_batch(rng_, train_cfg_.batch_size, &distorted, &pristine);
    Tensor<float> restored = restorator_->forward(distorted, BnMode::kTrain);
    Tensor<float> loss = reconstruction_loss(pristine, restored);
    GradReport<float> grads = backward(loss, r_store_);
    optimizer_step(OptimizerKind::kAdam, r_store_, grads,
                   train_cfg_.lr_phase1);
    result.loss_curve.push_back({it, grads.loss});
    if (it == 0) result.first_loss = grads.loss;
    result.final_loss = grads.loss;
  }
  return result;
}

Phase2Stats Pipeline::run_phase2(PatchSampler& sampler) {
  Phase2Stats stats;
  const int total = train_cfg_.phase2_iters_a + train_cfg_.phase2_iters_b;
  const bool with_critic = net_cfg_.adv_mode != AdvMode::kNone;
  const float clip_bound = static_cast<float>(train_cfg_.clip_c);
  stats.clip_bound = static_cast<double>(clip_bound);
  Tensor<float> distorted, pristine;
  for (int it = 0; it < total; ++it) {
    const bool second_half = it >= train_cfg_.phase2_iters_a;
    if (second_half && stats.lr_switch_iteration < 0)
      stats.lr_switch_iteration = it;
    const double lr =
        second_half ? train_cfg_.lr_phase2b : train_cfg_.lr_phase2a;

    if (with_critic) {
      for (int j = 0; j < train_cfg_.critic_steps; ++j) {
        sampler.sample_batch(rng_, train_cfg_.batch_size, &distorted,
                             &pristine);
        Tensor<float> fake =
            restorator_->forward(distorted, BnMode::kTrain).detach();
        AdvLosses<float> adv = adversarial_losses(
            *critic_, pristine, fake, net_cfg_.adv_mode, BnMode::kTrain);
        GradReport<float> grads = backward(adv.critic_loss, d_store_);
        optimizer_step(OptimizerKind::kRmsProp, d_store_, grads, lr);
        if (net_cfg_.adv_mode == AdvMode::kWgan)
          clip_weights(d_store_, clip_bound);
        ++stats.critic_updates;
        const double max_abs = max_abs_weight(d_store_);
        stats.max_abs_critic_param =
            std::max(stats.max_abs_critic_param, max_abs);
        if (net_cfg_.adv_mode == AdvMode::kWgan && max_abs > stats.clip_bound)
          stats.clip_ok_after_every_update = false;
        stats.critic_curve.push_back(
            {static_cast<int64_t>(stats.critic_updates), grads.loss});
      }
    }

    sampler.sample_batch(rng_, train_cfg_.batch_size, &distorted, &pristine);
    Tensor<float> restored = restorator_->forward(distorted, BnMode::kTrain);
    Tensor<float> loss = mul_scalar(reconstruction_loss(pristine, restored),
                                    net_cfg_.lambda_per);
    if (with_critic) {
      AdvLosses<float> adv = adversarial_losses(
          *critic_, pristine, restored, net_cfg_.adv_mode, BnMode::kTrain);
      loss = add(loss,
                 mul_scalar(adv.restorator_adv_loss, net_cfg_.lambda_adv));
    }
    GradReport<float> grads = backward(loss, r_store_);
    optimizer_step(OptimizerKind::kRmsProp, r_store_, grads, lr);
    ++stats.restorator_updates;
    stats.restorator_curve.push_back(
        {static_cast<int64_t>(stats.restorator_updates), grads.loss});
  }

  // end-of-phase separation measurement on a fresh batch
  if (with_critic) {
    sampler.sample_batch(rng_, train_cfg_.batch_size, &distorted, &pristine);
    Tensor<float> fake =
        restorator_->forward(distorted, BnMode::kTrain).detach();
    Tensor<float> d_real = critic_->forward(pristine, BnMode::kTrain);
    Tensor<float> d_fake = critic_->forward(fake, BnMode::kTrain);
    stats.final_mean_d_real = mean(d_real).item();
    stats.final_mean_d_fake = mean(d_fake).item();
  }
  return stats;
}

PhaseResult Pipeline::run_phase3(PatchSampler& sampler,
                                 PatchLabelCache& labels) {
  PhaseResult result;
  Tensor<float> distorted, pristine;
  std::vector<PatchSampler::PatchRef> refs;
  // the corpus the sampler draws from provides the pseudo-labels
  for (int it = 0; it < train_cfg_.phase3_iters; ++it) {
    sampler.sample_batch(rng_, train_cfg_.batch_size, &distorted, &pristine,
                         &refs);
    Tensor<float> restored =
        restorator_->forward(distorted, BnMode::kInfer);  // frozen, clamped
    EvaluatorOut<float> out =
        evaluator_->forward(distorted, restored, BnMode::kTrain);
    std::vector<float> s0(refs.size()), w0(refs.size());
    for (size_t i = 0; i < refs.size(); ++i) {
      const PatchLabel label =
          labels.get(sampler.corpus(), refs[i], sampler.patch_size());
      s0[i] = static_cast<float>(label.s0);
      w0[i] = static_cast<float>(label.w0);
    }
    Tensor<float> s0t = Tensor<float>::from_data(
        {static_cast<int64_t>(refs.size()), 1}, std::move(s0));
    Tensor<float> w0t = Tensor<float>::from_data(
        {static_cast<int64_t>(refs.size()), 1}, std::move(w0));
    Tensor<float> loss =
        evaluator_loss_patchwise(out.score, out.weight, s0t, w0t);
    GradReport<float> grads = backward(loss, e_store_);
    optimizer_step(OptimizerKind::kAdam, e_store_, grads,
                   train_cfg_.lr_phase3);
    result.loss_curve.push_back({it, grads.loss});
    if (it == 0) result.first_loss = grads.loss;
    result.final_loss = grads.loss;
  }
  return result;
}

namespace {

void copy_store_data(ParamStore<float>& dst, const ParamStore<float>& src) {
  for (const auto& e : src.entries()) dst.at(e.name).vec() = e.tensor.vec();
}

}  // namespace

Phase4Result Pipeline::run_phase4(Corpus& corpus,
                                  const std::vector<size_t>& train_rows,
                                  const std::vector<size_t>& val_rows) {
  if (train_rows.empty()) throw ArgumentError("phase 4 needs training rows");
  for (size_t row : train_rows)
    if (!corpus.row(row).score)
      throw ArgumentError("phase 4 manifest rows must carry scores");
  Phase4Result result;
  ParamStore<float> best = e_store_.clone();

  auto validate_now = [&]() -> std::optional<double> {
    if (val_rows.size() < 3) return std::nullopt;
    std::vector<double> q, target;
    for (size_t row : val_rows) {
      if (!corpus.row(row).score) continue;
      const ImagePlane img = from_image8(corpus.distorted_image(row));
      const QualityReport report =
          score_image(*evaluator_, *restorator_, img, net_cfg_,
                      corpus.row(row).distorted_path);
      q.push_back(report.q);
      target.push_back(*corpus.row(row).score);
    }
    if (q.size() < 3) return std::nullopt;
    try {
      return srocc(ScorePairs{q, target});
    } catch (const UndefinedStatError&) {
      return std::nullopt;
    }
  };

  for (int it = 0; it < train_cfg_.phase4_iters; ++it) {
    std::vector<size_t> batch(train_cfg_.phase4_batch_images);
    for (auto& row : batch) row = train_rows[rng_.below(train_rows.size())];
    const double loss = image_batch_loss_and_step(
        corpus, batch, net_cfg_.patch_size, train_cfg_.lr_phase4);
    result.loss_curve.push_back({it, loss});
    if ((it + 1) % train_cfg_.phase4_val_every == 0 ||
        it + 1 == train_cfg_.phase4_iters) {
      const std::optional<double> val = validate_now();
      if (val) {
        result.val_curve.push_back({it, *val});
        if (result.best_iteration < 0 || *val > result.best_val_srocc) {
          result.best_val_srocc = *val;
          result.best_iteration = it;
          best = e_store_.clone();
        }
      }
    }
  }
  if (result.best_iteration >= 0) copy_store_data(e_store_, best);
  return result;
}

double Pipeline::image_batch_loss_and_step(Corpus& corpus,
                                           const std::vector<size_t>& rows,
                                           int patch_size, double lr) {
  Tensor<float> total;
  for (size_t row : rows) {
    const Image8& dimg = corpus.distorted_image(row);
    const PatchGrid grid = patch_grid(dimg.width, dimg.height, patch_size);
    std::vector<ImagePlane> patches;
    patches.reserve(static_cast<size_t>(grid.count()));
    for (int r = 0; r < grid.rows; ++r)
      for (int c = 0; c < grid.cols; ++c)
        patches.push_back(
            crop_patch8(dimg, c * patch_size, r * patch_size, patch_size));
    Tensor<float> distorted = images_to_tensor<float>(patches);
    Tensor<float> restored = restorator_->forward(distorted, BnMode::kInfer);
    EvaluatorOut<float> out =
        evaluator_->forward(distorted, restored, BnMode::kTrain);
    Tensor<float> li = evaluator_loss_imagewise(
        out.score, out.weight, static_cast<float>(*corpus.row(row).score));
    total = total.defined() ? add(total, li) : li;
  }
  Tensor<float> loss =
      mul_scalar(total, 1.0f / static_cast<float>(rows.size()));
  GradReport<float> grads = backward(loss, e_store_);
  optimizer_step(OptimizerKind::kAdam, e_store_, grads, lr);
  return grads.loss;
}

void Pipeline::save(const std::string& dir) const {
  fs::create_directories(dir);
  save_checkpoint(r_store_, (fs::path(dir) / "restorator.ckpt").string());
  save_checkpoint(d_store_, (fs::path(dir) / "discriminator.ckpt").string());
  save_checkpoint(e_store_, (fs::path(dir) / "evaluator.ckpt").string());
  save_checkpoint(f_store_, (fs::path(dir) / "featnet.ckpt").string());
}

void Pipeline::load(const std::string& dir) {
  auto load_into = [&](ParamStore<float>& store, const char* name) {
    const ParamStore<float> loaded =
        load_checkpoint((fs::path(dir) / name).string());
    for (const auto& e : loaded.entries()) {
      if (!store.has(e.name))
        throw FormatError(std::string(name) + ": unexpected entry " + e.name);
      if (store.at(e.name).dims() != e.tensor.dims())
        throw ShapeError(std::string(name) + ": shape mismatch for " + e.name);
      store.at(e.name).vec() = e.tensor.vec();
    }
    if (loaded.size() != store.size())
      throw FormatError(std::string(name) + ": entry count mismatch");
  };
  load_into(r_store_, "restorator.ckpt");
  load_into(d_store_, "discriminator.ckpt");
  load_into(e_store_, "evaluator.ckpt");
  load_into(f_store_, "featnet.ckpt");
}

// ---- GoR ------------------------------------------------------------------------

int GorReport::monotone_family_count(const std::string& metric) const {
  const auto& table = metric == "psnr" ? psnr_monotone : ssim_monotone;
  int count = 0;
  for (const auto& kv : table) count += kv.second ? 1 : 0;
  return count;
}

GorReport gor_experiment(Restorator<float>& restorator,
                         const std::vector<ImagePlane>& pristine,
                         const std::vector<int>& levels, uint64_t seed) {
  if (pristine.empty()) throw ArgumentError("gor needs at least one image");
  if (levels.empty()) throw ArgumentError("gor needs at least one level");
  GorReport report;
  report.levels = levels;
  for (int f = 0; f < kDistortionFamilies; ++f) {
    const DistortionFamily family = family_by_index(f);
    std::vector<double> psnr_means, ssim_means;
    for (size_t li = 0; li < levels.size(); ++li) {
      const int level = levels[li];
      std::vector<double> psnr_vals, ssim_vals;
      for (size_t i = 0; i < pristine.size(); ++i) {
        DistortionSpec spec;
        spec.family = family;
        spec.level = level;
        spec.seed = splitmix64(seed ^ (i * 977 + f * 31 + level));
        const ImagePlane distorted = apply_distortion(spec, pristine[i]);
        Tensor<float> x = images_to_tensor<float>({distorted});
        Tensor<float> y = restorator.forward(x, BnMode::kInfer);
        const ImagePlane restored = tensor_to_image(y, 0);
        psnr_vals.push_back(psnr(distorted, restored));
        ssim_vals.push_back(ssim(distorted, restored));
      }
      GorAggregate agg;
      agg.family = family_name(family);
      agg.level = level;
      agg.n = static_cast<int>(pristine.size());
      auto mean_std = [](const std::vector<double>& v, double* m, double* s) {
        double acc = 0;
        for (double x : v) acc += x;
        *m = acc / v.size();
        double var = 0;
        for (double x : v) var += (x - *m) * (x - *m);
        *s = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
      };
      mean_std(psnr_vals, &agg.psnr_mean, &agg.psnr_std);
      mean_std(ssim_vals, &agg.ssim_mean, &agg.ssim_std);
      report.aggregates.push_back(agg);
      psnr_means.push_back(agg.psnr_mean);
      ssim_means.push_back(agg.ssim_mean);
    }
    // similarity between distorted and restored must strictly decrease with
    // level (larger gain of restoration)
    auto strictly_decreasing = [](const std::vector<double>& v) {
      for (size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
      return true;
    };
    report.psnr_monotone[family_name(family)] =
        strictly_decreasing(psnr_means);
    report.ssim_monotone[family_name(family)] =
        strictly_decreasing(ssim_means);
  }
  return report;
}

void write_gor_csv(const GorReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "family,level,metric,mean,std,n\n";
  char buf[128];
  for (const auto& agg : report.aggregates) {
    std::snprintf(buf, sizeof(buf), "%s,%d,psnr,%.6f,%.6f,%d",
                  agg.family.c_str(), agg.level, agg.psnr_mean, agg.psnr_std,
                  agg.n);
    out << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%s,%d,ssim,%.6f,%.6f,%d",
                  agg.family.c_str(), agg.level, agg.ssim_mean, agg.ssim_std,
                  agg.n);
    out << buf << "\n";
  }
}

// ---- benchmark evaluation ----------------------------------------------------------

EvalResult eval_from_pairs(const ScorePairs& pairs) {
  EvalResult result;
  result.n = static_cast<int>(pairs.size());
  result.srocc = srocc(pairs);
  result.plcc_fitted = plcc(pairs, true);
  return result;
}

EvalResult eval_benchmark(Evaluator<float>& evaluator,
                          Restorator<float>& restorator, Corpus& corpus,
                          const std::vector<size_t>& test_rows,
                          const NetworkConfig& cfg) {
  if (test_rows.empty()) throw ArgumentError("empty test split");
  ScorePairs pairs;
  for (size_t row : test_rows) {
    if (!corpus.row(row).score)
      throw ArgumentError("test rows must carry scores");
    const ImagePlane img = from_image8(corpus.distorted_image(row));
    const QualityReport report = score_image(evaluator, restorator, img, cfg,
                                             corpus.row(row).distorted_path);
    pairs.predictions.push_back(report.q);
    pairs.targets.push_back(*corpus.row(row).score);
  }
  return eval_from_pairs(pairs);
}

SignificanceReport repeated_splits_ttest(const std::vector<EvalResult>& a,
                                         const std::vector<EvalResult>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw ArgumentError("need at least 2 runs per model");
  std::vector<double> sa, sb, pa, pb;
  for (const auto& r : a) {
    sa.push_back(r.srocc);
    pa.push_back(r.plcc_fitted);
  }
  for (const auto& r : b) {
    sb.push_back(r.srocc);
    pb.push_back(r.plcc_fitted);
  }
  SignificanceReport report;
  report.srocc_test = ttest_two_sided(sa, sb);
  report.plcc_test = ttest_two_sided(pa, pb);
  report.n_a = a.size();
  report.n_b = b.size();
  return report;
}

std::vector<EvalResult> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "split,srocc,plcc")
    throw FormatError(path + ": expected header 'split,srocc,plcc'");
  std::vector<EvalResult> out;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    EvalResult r;
    int split_index = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf", &split_index, &r.srocc,
                    &r.plcc_fitted) != 3)
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected 'split,srocc,plcc' numbers");
    out.push_back(r);
  }
  return out;
}

void write_results_csv(const std::vector<EvalResult>& results,
                       const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "split,srocc,plcc\n";
  char buf[96];
  for (size_t i = 0; i < results.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.8f,%.8f", i, results[i].srocc,
                  results[i].plcc_fitted);
    out << buf << "\n";
  }
}

}  // namespace raniqa
