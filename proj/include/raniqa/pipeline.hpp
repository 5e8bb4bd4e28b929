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

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "raniqa/dataset.hpp"
#include "raniqa/metrics.hpp"
#include "raniqa/nets.hpp"
#include "raniqa/stats.hpp"

namespace raniqa {

struct TrainConfig {
  // Iteration counts. Desk-scale defaults; the full-scale recipe
  // (300k / 300k + 300k / 300k / 20k) is reachable via paper_scale().
  int phase1_iters = 3000;
  int phase2_iters_a = 3000;  // first adversarial half
  int phase2_iters_b = 3000;  // second adversarial half, lower rate
  int phase3_iters = 3000;
  int phase4_iters = 1000;
  int batch_size = 16;
  double lr_phase1 = 1e-4;
  double lr_phase2a = 1e-4;
  double lr_phase2b = 1e-5;
  double lr_phase3 = 1e-4;
  double lr_phase4 = 1e-4;
  int critic_steps = 5;   // critic updates per restorator update
  double clip_c = 0.05;   // critic weight-clipping bound
  uint64_t seed = 1234;
  int phase4_batch_images = 4;
  int phase4_val_every = 50;

  static TrainConfig full_scale();
  void validate() const;
};

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  uint64_t seed = 7;
  void validate() const;
};

enum class SplitTag { kTrain, kVal, kTest };

// In-memory corpus over a manifest: rows, 8-bit image cache, and an access
// log so the protocol tests can prove the test split was never touched.
class Corpus {
 public:
  static Corpus load(const std::string& manifest_path);

  size_t rows() const { return rows_.size(); }
  const ManifestRow& row(size_t i) const { return rows_.at(i); }
  const std::string& root() const { return root_; }

  const Image8& distorted_image(size_t row);
  const Image8& pristine_image(size_t row);

  const std::set<size_t>& accessed_rows() const { return accessed_; }
  void reset_access_log() { accessed_.clear(); }

 private:
  std::vector<ManifestRow> rows_;
  std::string root_;
  std::map<std::string, Image8> cache_;
  std::set<size_t> accessed_;

  const Image8& cached(const std::string& rel_path);
};

// Deterministic split grouped by reference image: every distorted image
// lands in the split of its reference.
std::vector<SplitTag> split_by_reference(const std::vector<ManifestRow>& rows,
                                         const SplitSpec& spec);
std::vector<size_t> rows_with_tag(const std::vector<SplitTag>& tags,
                                  SplitTag tag);

// Aligned (distorted, pristine) patch-pair sampler over a row subset.
class PatchSampler {
 public:
  PatchSampler(Corpus& corpus, std::vector<size_t> row_indices,
               int patch_size);

  struct PatchRef {
    size_t row = 0;
    int patch_index = 0;
  };

  // Fills N x 3 x P x P batches; refs identifies the sampled grid cells.
  void sample_batch(Rng& rng, int n, Tensor<float>* distorted,
                    Tensor<float>* pristine,
                    std::vector<PatchRef>* refs = nullptr);

  // All grid patches of one row, in row-major order.
  void full_grid(size_t row, Tensor<float>* distorted,
                 Tensor<float>* pristine);

  int patch_size() const { return patch_size_; }
  const std::vector<size_t>& row_indices() const { return rows_; }
  Corpus& corpus() { return corpus_; }
  PatchGrid grid_of(size_t row);

 private:
  Corpus& corpus_;
  std::vector<size_t> rows_;
  int patch_size_;
};

// Patch pseudo-label cache keyed by (row, grid cell).
class PatchLabelCache {
 public:
  PatchLabel get(Corpus& corpus, const PatchSampler::PatchRef& ref,
                 int patch_size);

 private:
  std::map<std::pair<size_t, int>, PatchLabel> cache_;
};

struct CurvePoint {
  int64_t iteration = 0;
  double value = 0.0;
};

void write_curve_csv(const std::vector<CurvePoint>& curve,
                     const std::string& path);

struct PhaseResult {
  std::vector<CurvePoint> loss_curve;
  double first_loss = 0.0;
  double final_loss = 0.0;
};

struct Phase2Stats {
  int64_t critic_updates = 0;
  int64_t restorator_updates = 0;
  bool clip_ok_after_every_update = true;  // all critic params within [-c, c]
  double max_abs_critic_param = 0.0;       // largest magnitude seen post-clip
  double clip_bound = 0.0;  // the f32 bound actually applied (c as float)
  int64_t lr_switch_iteration = -1;
  double final_mean_d_real = 0.0;
  double final_mean_d_fake = 0.0;
  std::vector<CurvePoint> critic_curve;
  std::vector<CurvePoint> restorator_curve;
};

struct Phase4Result {
  std::vector<CurvePoint> loss_curve;
  std::vector<CurvePoint> val_curve;  // iteration vs validation SROCC
  double best_val_srocc = 0.0;
  int64_t best_iteration = -1;
};

// The four-phase schedule. Owns the networks and their parameter stores;
// phases mutate only the stores they are allowed to touch.
class Pipeline {
 public:
  Pipeline(const NetworkConfig& net_cfg, const TrainConfig& train_cfg);

  // restorator reconstruction pretraining (Adam)
  PhaseResult run_phase1(PatchSampler& sampler);
  // adversarial training (RMSProp), critic_steps critic updates per
  // restorator update, weight clipping after every critic update
  Phase2Stats run_phase2(PatchSampler& sampler);
  // evaluator pretraining on patch pseudo-labels; restorator and critic
  // stores are never written
  PhaseResult run_phase3(PatchSampler& sampler, PatchLabelCache& labels);
  // evaluator finetuning on image-level scores, best-validation checkpoint
  Phase4Result run_phase4(Corpus& corpus,
                          const std::vector<size_t>& train_rows,
                          const std::vector<size_t>& val_rows);

  void save(const std::string& dir) const;
  void load(const std::string& dir);

  Restorator<float>& restorator() { return *restorator_; }
  Discriminator<float>& critic() { return *critic_; }
  Evaluator<float>& evaluator() { return *evaluator_; }
  FeatureNet<float>& featnet() { return *featnet_; }
  ParamStore<float>& restorator_store() { return r_store_; }
  ParamStore<float>& critic_store() { return d_store_; }
  ParamStore<float>& evaluator_store() { return e_store_; }
  ParamStore<float>& featnet_store() { return f_store_; }
  const NetworkConfig& net_config() const { return net_cfg_; }
  const TrainConfig& train_config() const { return train_cfg_; }

 private:
  NetworkConfig net_cfg_;
  TrainConfig train_cfg_;
  ParamStore<float> r_store_, d_store_, e_store_, f_store_;
  std::unique_ptr<Restorator<float>> restorator_;
  std::unique_ptr<Discriminator<float>> critic_;
  std::unique_ptr<Evaluator<float>> evaluator_;
  std::unique_ptr<FeatureNet<float>> featnet_;
  Rng rng_;

  Tensor<float> reconstruction_loss(const Tensor<float>& pristine,
                                    const Tensor<float>& restored);
  double image_batch_loss_and_step(Corpus& corpus,
                                   const std::vector<size_t>& rows,
                                   int patch_size, double lr);
};

// ---- measurement ------------------------------------------------------------

struct GorAggregate {
  std::string family;
  int level = 0;
  double psnr_mean = 0.0, psnr_std = 0.0;
  double ssim_mean = 0.0, ssim_std = 0.0;
  int n = 0;
};

struct GorReport {
  std::vector<int> levels;                 // e.g. {1, 3, 5}
  std::vector<GorAggregate> aggregates;    // families x levels rows
  // per family: similarity strictly decreasing with level
  std::map<std::string, bool> psnr_monotone;
  std::map<std::string, bool> ssim_monotone;
  int monotone_family_count(const std::string& metric) const;
};

// Distort each pristine image at the given levels, restore, and measure
// PSNR/SSIM between distorted and restored. A random restorator is allowed;
// the verdicts simply come out false.
GorReport gor_experiment(Restorator<float>& restorator,
                         const std::vector<ImagePlane>& pristine,
                         const std::vector<int>& levels, uint64_t seed);

// CSV: family,level,metric,mean,std,n (both metrics per aggregate row).
void write_gor_csv(const GorReport& report, const std::string& path);

struct EvalResult {
  double srocc = 0.0;
  double plcc_fitted = 0.0;
  int n = 0;
};

// Scores every given row with the full patch pipeline and correlates
// against the manifest scores.
EvalResult eval_benchmark(Evaluator<float>& evaluator,
                          Restorator<float>& restorator, Corpus& corpus,
                          const std::vector<size_t>& test_rows,
                          const NetworkConfig& cfg);

EvalResult eval_from_pairs(const ScorePairs& pairs);

struct SignificanceReport {
  TTestResult srocc_test;
  TTestResult plcc_test;
  size_t n_a = 0, n_b = 0;
};

// Two-sided t-tests over per-split SROCC and PLCC result lists.
SignificanceReport repeated_splits_ttest(const std::vector<EvalResult>& a,
                                         const std::vector<EvalResult>& b);

// Per-split result CSV: split,srocc,plcc
std::vector<EvalResult> read_results_csv(const std::string& path);
void write_results_csv(const std::vector<EvalResult>& results,
                       const std::string& path);

}  // namespace raniqa
