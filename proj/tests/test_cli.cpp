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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "raniqa/dataset.hpp"

using namespace raniqa;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string binary() {
  const char* env = std::getenv("RANIQA_BIN");
  REQUIRE_MESSAGE(env != nullptr, "RANIQA_BIN must point at the CLI binary");
  return env;
}

struct RunOutput {
  int exit_code = -1;
  std::string stdout_text;
};

RunOutput run(const std::string& args) {
  static int counter = 0;
  const fs::path out_file =
      fs::temp_directory_path() / ("raniqa_cli_out_" +
                                   std::to_string(counter++) + ".txt");
  const std::string cmd =
      binary() + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunOutput result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  result.stdout_text = ss.str();
  fs::remove(out_file);
  return result;
}

// tiny-network flags shared by the training-dependent cases
const char* kNetFlags =
    "--network.restorator.n_blocks 1 "
    "--network.restorator.channels 8 --network.discriminator.channels "
    "8,8,16,16 --network.discriminator.fc 16,1 --network.evaluator.head 16,1 "
    "--network.feature_net.channels 4,8,8,8,8";

struct CliWorkspace {
  fs::path dir;
  CliWorkspace() : dir(fs::temp_directory_path() / "raniqa_cli_ws") {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~CliWorkspace() { fs::remove_all(dir); }
};

// one workspace with corpus + checkpoints, built once
const CliWorkspace& workspace() {
  static CliWorkspace ws = [] {
    CliWorkspace w;
    const std::string corpus = (w.dir / "corpus").string();
    RunOutput synth = run("synth --out " + corpus + " --n 3 --size 128 --seed 5");
    REQUIRE(synth.exit_code == 0);
    const std::string train_cmd =
        "train --out " + (w.dir / "ckpt").string() + " --paths.manifest " +
        corpus + "/manifest.csv " + kNetFlags +
        " --network.patch_size 32 --train.phase1_iters 8 --train.phase2_iters_a 2 "
        "--train.phase2_iters_b 2 --train.phase3_iters 8 "
        "--train.phase4_iters 4 --train.batch_size 4 "
        "--train.phase4_val_every 2 --split.train_frac 0.67 "
        "--split.val_frac 0.33 --split.test_frac 0.0";
    RunOutput train = run(train_cmd);
    REQUIRE_MESSAGE(train.exit_code == 0, train.stdout_text);
    return w;
  }();
  return ws;
}

}  // namespace

TEST_CASE("cli: help enumerates config keys with defaults") {
  const RunOutput r = run("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("--network.patch_size") != std::string::npos);
  CHECK(r.stdout_text.find("[64]") != std::string::npos);
  CHECK(r.stdout_text.find("--train.clip_c") != std::string::npos);
  CHECK(r.stdout_text.find("[0.05]") != std::string::npos);
  CHECK(r.stdout_text.find("--split.seed") != std::string::npos);
}

TEST_CASE("cli: synth is deterministic per seed") {
  const auto& ws = workspace();
  const std::string again = (ws.dir / "corpus_again").string();
  REQUIRE(run("synth --out " + again + " --n 3 --size 128 --seed 5").exit_code ==
          0);
  auto bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  CHECK(bytes(ws.dir / "corpus" / "manifest.csv") ==
        bytes(fs::path(again) / "manifest.csv"));
  CHECK(bytes(ws.dir / "corpus" / "pristine" / "img0000.ppm") ==
        bytes(fs::path(again) / "pristine" / "img0000.ppm"));
}

TEST_CASE("cli: score prints 4 patches and an aggregate Q on a 128x128 image") {
  const auto& ws = workspace();
  const std::string cmd =
      "score --ckpt " + (ws.dir / "ckpt").string() + " --image " +
      (ws.dir / "corpus" / "distorted" / "jpeg" / "3" / "img0000.ppm")
          .string() +
      " " + kNetFlags + " --network.patch_size 64";
  const RunOutput r = run(cmd);
  REQUIRE_MESSAGE(r.exit_code == 0, r.stdout_text);
  const json doc = json::parse(r.stdout_text);
  CHECK(doc["patches"].size() == 4);
  CHECK(doc["grid"]["rows"] == 2);
  CHECK(doc["grid"]["cols"] == 2);
  CHECK(doc.contains("Q"));
  CHECK(doc["aggregate"] == "weighted");

  // mean aggregation flag switches the mode
  const RunOutput m = run(cmd + " --aggregate mean");
  REQUIRE(m.exit_code == 0);
  CHECK(json::parse(m.stdout_text)["aggregate"] == "mean");
}

TEST_CASE("cli: gor emits 12 aggregate rows and a CSV") {
  const auto& ws = workspace();
  const std::string out_csv = (ws.dir / "gor.csv").string();
  const RunOutput r = run("gor --ckpt " + (ws.dir / "ckpt").string() +
                          " --corpus " + (ws.dir / "corpus").string() +
                          " --out " + out_csv + " " + kNetFlags);
  REQUIRE_MESSAGE(r.exit_code == 0, r.stdout_text);
  int aggregate_rows = 0;
  std::stringstream ss(r.stdout_text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("gblur", 0) == 0 || line.rfind("wnoise", 0) == 0 ||
        line.rfind("jpeg", 0) == 0 || line.rfind("jp2k", 0) == 0)
      ++aggregate_rows;
  }
  CHECK(aggregate_rows == 12);  // 4 families x 3 levels

  std::ifstream csv(out_csv);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "family,level,metric,mean,std,n");
  int csv_rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++csv_rows;
  CHECK(csv_rows == 24);  // both metrics per aggregate
}

TEST_CASE("cli: eval with injected targets reports perfect correlation") {
  const auto& ws = workspace();
  const RunOutput r =
      run("eval --manifest " + (ws.dir / "corpus" / "manifest.csv").string() +
          " --split-seed 3 --inject-targets --split.train_frac 0.34 "
          "--split.val_frac 0.33 --split.test_frac 0.33");
  REQUIRE_MESSAGE(r.exit_code == 0, r.stdout_text);
  const json doc = json::parse(r.stdout_text);
  CHECK(doc["srocc"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(doc["plcc"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(doc["n"].get<int>() == 40);  // 2 of 3 references land in test
}

TEST_CASE("cli: ttest consumes per-split result CSVs") {
  const auto& ws = workspace();
  const std::string a = (ws.dir / "a.csv").string();
  const std::string b = (ws.dir / "b.csv").string();
  {
    std::ofstream fa(a), fb(b);
    fa << "split,srocc,plcc\n0,0.91,0.90\n1,0.92,0.89\n2,0.90,0.91\n";
    fb << "split,srocc,plcc\n0,0.91,0.90\n1,0.92,0.89\n2,0.90,0.91\n";
  }
  const RunOutput r = run("ttest --a " + a + " --b " + b);
  REQUIRE_MESSAGE(r.exit_code == 0, r.stdout_text);
  const json doc = json::parse(r.stdout_text);
  CHECK(doc["srocc"]["p"].get<double>() == doctest::Approx(1.0));
  CHECK(doc["srocc"]["t"].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("cli: exit codes follow the error taxonomy") {
  const auto& ws = workspace();
  // unknown config key -> validation failure (1)
  CHECK(run("synth --out /tmp/raniqa_never --n 1 --size 64 --seed 1 "
            "--network.no_such_key 5")
            .exit_code != 0);
  // missing manifest file -> io error (2)
  CHECK(run("eval --manifest /nonexistent/manifest.csv --inject-targets")
            .exit_code == 2);
  // malformed manifest -> format error (2)
  const std::string bad = (ws.dir / "bad.csv").string();
  {
    std::ofstream f(bad);
    f << "not,the,right,header\n";
  }
  CHECK(run("eval --manifest " + bad + " --inject-targets").exit_code == 2);
  // missing checkpoints -> validation failure (1)
  CHECK(run("score --ckpt " + (ws.dir / "no_ckpt").string() + " --image " +
            (ws.dir / "corpus" / "pristine" / "img0000.ppm").string())
            .exit_code == 1);
  // bad config-file value -> validation failure (1)
  const std::string cfgf = (ws.dir / "bad.cfg").string();
  {
    std::ofstream f(cfgf);
    f << "[network]\npatch_size = banana\n";
  }
  CHECK(run("synth --out /tmp/raniqa_never --n 1 --size 64 --seed 1 --config " +
            cfgf)
            .exit_code == 1);
}

TEST_CASE("cli: config file applies and flags override it") {
  const auto& ws = workspace();
  const std::string cfgf = (ws.dir / "ok.cfg").string();
  {
    std::ofstream f(cfgf);
    f << "# comment\n[network]\npatch_size = 64\n[train]\nseed = 42\n";
  }
  // config sets patch 64 -> 4 patches on 128^2; flag overrides to 32 -> 16
  const std::string base =
      "score --ckpt " + (ws.dir / "ckpt").string() + " --image " +
      (ws.dir / "corpus" / "pristine" / "img0001.ppm").string() + " " +
      kNetFlags;
  const RunOutput with_cfg = run(base + " --config " + cfgf);
  REQUIRE_MESSAGE(with_cfg.exit_code == 0, with_cfg.stdout_text);
  CHECK(json::parse(with_cfg.stdout_text)["patches"].size() == 4);
  const RunOutput with_flag =
      run(base + " --config " + cfgf + " --network.patch_size 32");
  REQUIRE(with_flag.exit_code == 0);
  CHECK(json::parse(with_flag.stdout_text)["patches"].size() == 16);
}

TEST_CASE("cli: gradcheck subcommand runs a reduced suite") {
  const RunOutput r = run("gradcheck --seeds 1");
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("conv2d/stride1_same") != std::string::npos);
  CHECK(r.stdout_text.find("FAIL") == std::string::npos);
}
