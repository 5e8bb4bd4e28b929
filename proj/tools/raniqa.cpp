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

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"
#include "raniqa/checkpoint.hpp"
#include "raniqa/config.hpp"
#include "raniqa/dataset.hpp"
#include "raniqa/distortion.hpp"
#include "raniqa/gradcheck.hpp"
#include "raniqa/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace raniqa;

namespace {

struct CliState {
  RunConfig cfg;
  std::string config_path;
  std::map<std::string, std::string> overrides;

  // defaults -> config file -> per-key flags
  void finalize() {
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& [key, value] : overrides) apply_key_value(cfg, key, value);
  }
};

void require_checkpoints(const std::string& dir, const char* needed_by) {
  for (const char* name : {"restorator.ckpt", "discriminator.ckpt",
                           "evaluator.ckpt", "featnet.ckpt"}) {
    if (!fs::exists(fs::path(dir) / name))
      throw StateError(std::string(needed_by) + ": missing checkpoint " +
                       (fs::path(dir) / name).string());
  }
}

int cmd_synth(const std::string& out, int n, int size, uint64_t seed) {
  gen_synthetic_corpus(out, n, size, seed);
  std::cout << "corpus written to " << out << " (" << n << " pristine, "
            << n * kDistortionFamilies * kDistortionLevels << " distorted)\n";
  return 0;
}

int cmd_train(CliState& state, const std::string& phase,
              const std::string& out) {
  RunConfig& cfg = state.cfg;
  if (cfg.manifest.empty())
    throw ArgumentError("train: set paths.manifest (corpus manifest CSV)");
  fs::create_directories(out);

  Corpus corpus = Corpus::load(cfg.manifest);
  std::vector<ManifestRow> rows;
  for (size_t i = 0; i < corpus.rows(); ++i) rows.push_back(corpus.row(i));
  const auto tags = split_by_reference(rows, cfg.split);
  const auto train_rows = rows_with_tag(tags, SplitTag::kTrain);
  const auto val_rows = rows_with_tag(tags, SplitTag::kVal);
  if (train_rows.empty()) throw ArgumentError("train split is empty");

  Pipeline pipe(cfg.net, cfg.train);
  const bool all = phase == "all";
  if (!all && phase != "1") {
    require_checkpoints(out, "train");
    pipe.load(out);
  }
  PatchSampler sampler(corpus, train_rows, cfg.net.patch_size);

  if (all || phase == "1") {
    const PhaseResult r = pipe.run_phase1(sampler);
    write_curve_csv(r.loss_curve, (fs::path(out) / "phase1_loss.csv").string());
    std::cout << "phase 1 done: loss " << r.first_loss << " -> "
              << r.final_loss << "\n";
    pipe.save(out);
  }
  if (all || phase == "2") {
    const Phase2Stats stats = pipe.run_phase2(sampler);
    write_curve_csv(stats.critic_curve,
                    (fs::path(out) / "phase2_critic.csv").string());
    write_curve_csv(stats.restorator_curve,
                    (fs::path(out) / "phase2_restorator.csv").string());
    std::cout << "phase 2 done: " << stats.critic_updates << " critic / "
              << stats.restorator_updates << " restorator updates, max |w| "
              << stats.max_abs_critic_param << ", D(real)-D(fake) "
              << stats.final_mean_d_real - stats.final_mean_d_fake << "\n";
    pipe.save(out);
  }
  if (all || phase == "3") {
    PatchLabelCache labels;
    const PhaseResult r = pipe.run_phase3(sampler, labels);
    write_curve_csv(r.loss_curve, (fs::path(out) / "phase3_loss.csv").string());
    std::cout << "phase 3 done: loss " << r.first_loss << " -> "
              << r.final_loss << "\n";
    pipe.save(out);
  }
  if (all || phase == "4") {
    const Phase4Result r = pipe.run_phase4(corpus, train_rows, val_rows);
    write_curve_csv(r.loss_curve, (fs::path(out) / "phase4_loss.csv").string());
    write_curve_csv(r.val_curve,
                    (fs::path(out) / "phase4_val_srocc.csv").string());
    std::cout << "phase 4 done: best validation SROCC " << r.best_val_srocc
              << " at iteration " << r.best_iteration << "\n";
    pipe.save(out);
  }
  return 0;
}

int cmd_score(CliState& state, const std::string& ckpt,
              const std::string& image_path, const std::string& aggregate) {
  RunConfig& cfg = state.cfg;
  if (aggregate == "mean")
    cfg.net.aggregate = Aggregate::kMean;
  else if (aggregate == "weighted")
    cfg.net.aggregate = Aggregate::kWeighted;
  else if (!aggregate.empty())
    throw ArgumentError("score: --aggregate expects weighted|mean");
  require_checkpoints(ckpt, "score");
  Pipeline pipe(cfg.net, cfg.train);
  pipe.load(ckpt);
  const ImagePlane img = load_image(image_path);
  const QualityReport report =
      score_image(pipe.evaluator(), pipe.restorator(), img, cfg.net,
                  fs::path(image_path).filename().string());
  json patches = json::array();
  for (size_t i = 0; i < report.patches.size(); ++i) {
    const int r = static_cast<int>(i) / report.grid_cols;
    const int c = static_cast<int>(i) % report.grid_cols;
    patches.push_back({{"index", i},
                       {"x", c * report.patch_size},
                       {"y", r * report.patch_size},
                       {"s", report.patches[i].s},
                       {"w", report.patches[i].w}});
  }
  const json doc = {
      {"image", report.image_id},
      {"patch_size", report.patch_size},
      {"grid", {{"rows", report.grid_rows}, {"cols", report.grid_cols}}},
      {"aggregate",
       report.aggregate == Aggregate::kWeighted ? "weighted" : "mean"},
      {"patches", patches},
      {"Q", report.q}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_gor(CliState& state, const std::string& ckpt,
            const std::string& corpus_dir, const std::string& out_csv) {
  RunConfig& cfg = state.cfg;
  require_checkpoints(ckpt, "gor");
  Pipeline pipe(cfg.net, cfg.train);
  pipe.load(ckpt);
  std::vector<ImagePlane> pristine;
  std::vector<fs::path> files;
  const fs::path dir = fs::path(corpus_dir) / "pristine";
  if (!fs::is_directory(dir))
    throw IoError("gor: no pristine/ directory under " + corpus_dir);
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".ppm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) pristine.push_back(load_image(f.string()));
  if (pristine.empty()) throw IoError("gor: no pristine images found");

  const GorReport report =
      gor_experiment(pipe.restorator(), pristine, {1, 3, 5}, cfg.train.seed);
  write_gor_csv(report, out_csv);
  std::printf("%-8s %-6s %12s %12s %6s\n", "family", "level", "psnr(d,r)",
              "ssim(d,r)", "n");
  for (const auto& agg : report.aggregates)
    std::printf("%-8s %-6d %12.4f %12.6f %6d\n", agg.family.c_str(), agg.level,
                agg.psnr_mean, agg.ssim_mean, agg.n);
  for (const char* metric : {"psnr", "ssim"})
    std::printf("monotone families (%s): %d of %d\n", metric,
                report.monotone_family_count(metric), kDistortionFamilies);
  std::cout << "csv written to " << out_csv << "\n";
  return 0;
}

int cmd_eval(CliState& state, const std::string& ckpt,
             const std::string& manifest, uint64_t split_seed,
             bool inject_targets) {
  RunConfig& cfg = state.cfg;
  cfg.split.seed = split_seed;
  Corpus corpus = Corpus::load(manifest);
  std::vector<ManifestRow> rows;
  for (size_t i = 0; i < corpus.rows(); ++i) rows.push_back(corpus.row(i));
  const auto tags = split_by_reference(rows, cfg.split);
  const auto test_rows = rows_with_tag(tags, SplitTag::kTest);
  if (test_rows.empty()) throw ArgumentError("eval: empty test split");

  EvalResult result;
  if (inject_targets) {
    // test hook: predictions forced equal to targets
    ScorePairs pairs;
    for (size_t row : test_rows) {
      if (!corpus.row(row).score)
        throw ArgumentError("eval: test rows must carry scores");
      pairs.predictions.push_back(*corpus.row(row).score);
      pairs.targets.push_back(*corpus.row(row).score);
    }
    result = eval_from_pairs(pairs);
  } else {
    require_checkpoints(ckpt, "eval");
    Pipeline pipe(cfg.net, cfg.train);
    pipe.load(ckpt);
    result = eval_benchmark(pipe.evaluator(), pipe.restorator(), corpus,
                            test_rows, cfg.net);
  }
  const json doc = {
      {"srocc", result.srocc}, {"plcc", result.plcc_fitted}, {"n", result.n}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_ttest(const std::string& a_path, const std::string& b_path) {
  const auto a = read_results_csv(a_path);
  const auto b = read_results_csv(b_path);
  const SignificanceReport report = repeated_splits_ttest(a, b);
  const json doc = {{"srocc",
                     {{"t", report.srocc_test.t},
                      {"p", report.srocc_test.p},
                      {"df", report.srocc_test.df}}},
                    {"plcc",
                     {{"t", report.plcc_test.t},
                      {"p", report.plcc_test.p},
                      {"df", report.plcc_test.df}}},
                    {"n_a", report.n_a},
                    {"n_b", report.n_b}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_gradcheck(int n_seeds) {
  const auto results = run_gradcheck_suite(n_seeds);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-30s max_rel_err %.3e (tol %.0e) %s\n", r.name.c_str(),
                r.max_rel_err, r.tolerance, r.pass ? "pass" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  if (!all_pass) throw ValidationError("gradient checks failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "raniqa: no-reference image quality assessment through restoration"};
  app.require_subcommand(1);
  CliState state;
  app.add_option("--config", state.config_path,
                 "key = value config file with [sections]");
  for (const auto& key : config_keys()) {
    const std::string name = "--" + key.name;
    app.add_option_function<std::string>(
           name,
           [&state, k = key.name](const std::string& v) {
             state.overrides[k] = v;
           },
           key.description)
        ->default_str(key.get(state.cfg))
        ->take_last();
  }

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_out;
  int synth_n = 10, synth_size = 192;
  uint64_t synth_seed = 1;
  synth->add_option("--out", synth_out, "corpus root directory")->required();
  synth->add_option("--n", synth_n, "pristine image count")
      ->capture_default_str();
  synth->add_option("--size", synth_size, "pristine image edge length")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "corpus seed")
      ->capture_default_str();
  synth->fallthrough();

  auto* train = app.add_subcommand("train", "run training phases");
  std::string train_phase = "all", train_out;
  train->add_option("--phase", train_phase, "1|2|3|4|all")
      ->check(CLI::IsMember({"1", "2", "3", "4", "all"}))
      ->capture_default_str();
  train->add_option("--out", train_out, "checkpoint/curve output directory")
      ->required();
  train->fallthrough();

  auto* score = app.add_subcommand("score", "score one image");
  std::string score_ckpt, score_image_path, score_aggregate;
  score->add_option("--ckpt", score_ckpt, "checkpoint directory")->required();
  score->add_option("--image", score_image_path, "image to score")->required();
  score->add_option("--aggregate", score_aggregate, "weighted|mean");
  score->fallthrough();

  auto* gor = app.add_subcommand("gor", "gain-of-restoration experiment");
  std::string gor_ckpt, gor_corpus, gor_out;
  gor->add_option("--ckpt", gor_ckpt, "checkpoint directory")->required();
  gor->add_option("--corpus", gor_corpus, "corpus root with pristine/")
      ->required();
  gor->add_option("--out", gor_out, "output CSV path")->required();
  gor->fallthrough();

  auto* eval = app.add_subcommand("eval", "SROCC/PLCC on the test split");
  std::string eval_ckpt, eval_manifest;
  uint64_t eval_split_seed = 7;
  bool eval_inject = false;
  eval->add_option("--ckpt", eval_ckpt, "checkpoint directory");
  eval->add_option("--manifest", eval_manifest, "manifest CSV")->required();
  eval->add_option("--split-seed", eval_split_seed, "split shuffle seed")
      ->capture_default_str();
  eval->add_flag("--inject-targets", eval_inject,
                 "test hook: use targets as predictions");
  eval->fallthrough();

  auto* ttest = app.add_subcommand("ttest", "two-sided t-test on result CSVs");
  std::string ttest_a, ttest_b;
  ttest->add_option("--a", ttest_a, "per-split results CSV (model A)")
      ->required();
  ttest->add_option("--b", ttest_b, "per-split results CSV (model B)")
      ->required();
  ttest->fallthrough();

  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient suite");
  int gradcheck_seeds = 5;
  gradcheck->add_option("--seeds", gradcheck_seeds, "number of random seeds")
      ->capture_default_str();
  gradcheck->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    state.finalize();
    if (synth->parsed())
      return cmd_synth(synth_out, synth_n, synth_size, synth_seed);
    if (train->parsed()) return cmd_train(state, train_phase, train_out);
    if (score->parsed())
      return cmd_score(state, score_ckpt, score_image_path, score_aggregate);
    if (gor->parsed()) return cmd_gor(state, gor_ckpt, gor_corpus, gor_out);
    if (eval->parsed())
      return cmd_eval(state, eval_ckpt, eval_manifest, eval_split_seed,
                      eval_inject);
    if (ttest->parsed()) return cmd_ttest(ttest_a, ttest_b);
    if (gradcheck->parsed()) return cmd_gradcheck(gradcheck_seeds);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
