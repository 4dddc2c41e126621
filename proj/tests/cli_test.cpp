// Copyright 2026 The segens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "segens/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "segens/checkpoint.hpp"
#include "segens/experiment.hpp"
#include "segens/rng.hpp"

namespace segens {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "segens");
  std::ostringstream out, err;
  RunResult r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("segens_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json tiny_config() {
  return {
      {"seed", 7},
      {"dataset", {{"kind", "MSCD_like"}, {"n_images", 20}, {"hw", 16}, {"base_images", 10}}},
      {"model", {{"depth", 2}, {"base_width", 4}}},
      {"ensemble", {{"roles", {"C_c_E", "C_c_L"}}, {"strategy", "MUNE"}, {"meta_depth", 2},
                    {"meta_width", 4}}},
      {"train", {{"epochs", 2}, {"lr", 0.005}}},
  };
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

// Hash of every file below `root`, keyed by relative path; provenance records
// hold absolute paths and are skipped.
std::map<std::string, std::uint64_t> tree_hashes(const fs::path& root) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).string();
    if (rel.rfind("provenance", 0) == 0) continue;
    out[rel] = file_hash(e.path());
  }
  return out;
}

const std::vector<std::string> kSequence = {"C_c_E", "C_c_L", "W_k", "C_nl", "S_bs", "W_bl"};

// One tiny end-to-end run shared by the tests below.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("pipeline");
    cfg_ = write_config(dir_, tiny_config()).string();
    out_ = (dir_ / "run").string();
    auto step = [](std::vector<std::string> args) {
      args.insert(args.begin(), {"--config", cfg_, "--out", out_, "--quiet"});
      const RunResult r = run(args);
      steps_.push_back(r);
      return r;
    };
    step({"gen-data"});
    step({"train-base", "--role", "C_c_E"});
    step({"train-base", "--role", "C_c_L"});
    premature_ablate_ = step({"ablate"});
    for (std::size_t i = 2; i < kSequence.size(); ++i) step({"train-base", "--role", kSequence[i]});
    step({"train-meta", "--strategy", "MUNE"});
    step({"distill"});
    step({"ablate", "--repeats", "3"});
    step({"report"});
  }

  static fs::path out() { return out_; }

  static fs::path dir_;
  static std::string cfg_;
  static std::string out_;
  static std::vector<RunResult> steps_;
  static RunResult premature_ablate_;
};
fs::path Pipeline::dir_;
std::string Pipeline::cfg_;
std::string Pipeline::out_;
std::vector<RunResult> Pipeline::steps_;
RunResult Pipeline::premature_ablate_;

TEST_F(Pipeline, EveryStepSucceeds) {
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (&steps_[i] - &steps_[0] == 3) continue;  // the deliberate early ablate
    EXPECT_EQ(steps_[i].code, 0) << "step " << i << ": " << steps_[i].err;
  }
}

TEST_F(Pipeline, GenDataSplitsAndCounts) {
  const fs::path data = out() / "data" / "MSCD_like";
  const auto m = nlohmann::json::parse(std::ifstream(data / "manifest.json"));
  EXPECT_EQ(m["splits"]["train"].size(), 14u);
  EXPECT_EQ(m["splits"]["val"].size(), 3u);
  EXPECT_EQ(m["splits"]["test"].size(), 3u);
  for (const auto& r : kSequence) EXPECT_TRUE(fs::is_directory(out() / "data" / ("base_" + r))) << r;
  EXPECT_TRUE(contains(steps_[0].out, "MSCD_like: train=14 val=3 test=3"));
}

TEST_F(Pipeline, GenDataIsByteIdenticalOnRerun) {
  const fs::path again = scratch("regen");
  ASSERT_EQ(run({"--config", cfg_, "--out", again.string(), "gen-data", "--quiet"}).code, 0);
  auto a = tree_hashes(out() / "data");
  auto b = tree_hashes(again / "data");
  EXPECT_EQ(a, b);
  EXPECT_GT(a.size(), 100u);
  fs::remove_all(again);
}

TEST_F(Pipeline, BaseLogsAndCheckpoints) {
  for (const auto& r : kSequence) {
    const CsvData log = read_csv(out() / "bases" / (r + "_log.csv"));
    EXPECT_EQ(log.header, (std::vector<std::string>{"epoch", "loss", "val_iou"}));
    EXPECT_EQ(log.rows.size(), 2u) << r;
    EXPECT_NO_THROW(load_checkpoint(out() / "bases" / (r + ".sgns")));
  }
}

TEST_F(Pipeline, BaseTrainingIsSeedDeterministic) {
  const fs::path a = scratch("seed_a");
  for (const std::string seed : {"7", "8"}) {
    const fs::path d = a / seed;
    ASSERT_EQ(run({"--config", cfg_, "--out", d.string(), "--seed", seed, "--quiet", "gen-data"}).code, 0);
    ASSERT_EQ(run({"--config", cfg_, "--out", d.string(), "--seed", seed, "--quiet", "train-base",
                   "--role", "C_c_E"})
                  .code,
              0);
  }
  const auto h = [](const fs::path& p) { return checkpoint_payload_hash(p); };
  EXPECT_EQ(h(a / "7" / "bases" / "C_c_E.sgns"), h(out() / "bases" / "C_c_E.sgns"));
  EXPECT_NE(h(a / "8" / "bases" / "C_c_E.sgns"), h(out() / "bases" / "C_c_E.sgns"));
  fs::remove_all(a);
}

TEST_F(Pipeline, MetaMetricsTable) {
  const CsvData m = read_csv(out() / "metrics_MUNE.csv");
  EXPECT_EQ(m.header, (std::vector<std::string>{"model", "fwIOU", "mIOU", "IOU_Non-Canola",
                                                "IOU_Canola"}));
  ASSERT_EQ(m.rows.size(), 4u);
  EXPECT_EQ(m.rows[0][0], "beta_C_c_E");
  EXPECT_EQ(m.rows[1][0], "beta_C_c_L");
  EXPECT_EQ(m.rows[2][0], "ABE");
  EXPECT_EQ(m.rows[3][0], "MUNE");
  for (const auto& row : m.rows) {
    for (std::size_t i = 1; i < row.size(); ++i) {
      const double v = std::stod(row[i]);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  const CsvData log = read_csv(out() / "meta" / "MUNE_log.csv");
  EXPECT_EQ(log.header, (std::vector<std::string>{"epoch", "loss", "val_miou"}));
  EXPECT_TRUE(fs::is_regular_file(out() / "teacher_MUNE.json"));
  EXPECT_TRUE(fs::is_regular_file(out() / "ensemble.json"));
}

TEST_F(Pipeline, DistillOutputs) {
  const CsvData rep = read_csv(out() / "distill_report.csv");
  EXPECT_EQ(rep.header,
            (std::vector<std::string>{"epoch", "distill_loss", "agreement", "seconds"}));
  EXPECT_EQ(rep.rows.size(), 2u);
  const auto s = nlohmann::json::parse(std::ifstream(out() / "distill_summary.json"));
  for (const char* key : {"agreement", "epochs", "student_flops", "teacher_flops", "student_params",
                          "teacher_params", "flops_ratio", "speedup"}) {
    EXPECT_TRUE(s.contains(key)) << key;
  }
  EXPECT_LT(s["student_flops"].get<long long>(), s["teacher_flops"].get<long long>());
  EXPECT_NO_THROW(load_checkpoint(out() / "student" / "student.sgns"));
}

TEST_F(Pipeline, DistillWithZeroEpochs) {
  const fs::path d = scratch("distill0");
  fs::copy(out(), d / "run", fs::copy_options::recursive);
  const RunResult r =
      run({"--config", cfg_, "--out", (d / "run").string(), "--quiet", "distill", "--epochs", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const CsvData rep = read_csv(d / "run" / "distill_report.csv");
  EXPECT_TRUE(rep.rows.empty());
  const auto s = nlohmann::json::parse(std::ifstream(d / "run" / "distill_summary.json"));
  EXPECT_EQ(s["epochs"], 0);
  fs::remove_all(d);
}

TEST_F(Pipeline, AblationTables) {
  EXPECT_EQ(premature_ablate_.code, 3);
  EXPECT_TRUE(contains(premature_ablate_.err, "W_k")) << premature_ablate_.err;

  const CsvData t = read_csv(out() / "ablation" / "ablation.csv");
  ASSERT_EQ(t.rows.size(), 5u);
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), name) -
                                    t.header.begin());
  };
  ASSERT_LT(col("mIOU_var"), t.header.size());
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& row = t.rows[i];
    EXPECT_EQ(row[col("config")], "M" + std::to_string(i + 1));
    std::string roles = kSequence[0];
    for (std::size_t j = 1; j < i + 2; ++j) roles += "+" + kSequence[j];
    EXPECT_EQ(row[col("roles")], roles);
    EXPECT_EQ(row[col("n_models")], std::to_string(i + 2));
    EXPECT_EQ(row[col("repeats")], "3");
    EXPECT_FALSE(row[col("mIOU_var")].empty());
    EXPECT_GE(std::stod(row[col("mIOU_var")]), 0.0);
  }
  const CsvData e = read_csv(out() / "ablation" / "efficiency.csv");
  ASSERT_EQ(e.rows.size(), 5u);
  for (std::size_t i = 1; i < 5; ++i) {
    EXPECT_GT(std::stoll(e.rows[i][2]), std::stoll(e.rows[i - 1][2]));
  }
}

TEST_F(Pipeline, AblationIndependentOfWorkerCount) {
  const fs::path d = scratch("threads");
  fs::copy(out(), d / "run", fs::copy_options::recursive);
  ::setenv("SEGENS_THREADS", "3", 1);
  const RunResult r =
      run({"--config", cfg_, "--out", (d / "run").string(), "--quiet", "--repeats", "3", "ablate"});
  ::unsetenv("SEGENS_THREADS");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_csv(d / "run" / "ablation" / "ablation.csv").rows,
            read_csv(out() / "ablation" / "ablation.csv").rows);
  fs::remove_all(d);
}

TEST_F(Pipeline, EvalIsReadOnly) {
  const auto before = tree_hashes(out() / "data");
  const auto ckpt_before = file_hash(out() / "student" / "student.sgns");
  const RunResult r = run({"--config", cfg_, "--out", out_, "--quiet", "eval", "--checkpoint",
                           (out() / "student" / "student.sgns").string(), "--name", "stud"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(tree_hashes(out() / "data"), before);
  EXPECT_EQ(file_hash(out() / "student" / "student.sgns"), ckpt_before);
  const CsvData t = read_csv(out() / "eval_stud.csv");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "stud");
  const RunResult m = run({"--config", cfg_, "--out", out_, "--quiet", "eval", "--manifest",
                           (out() / "teacher_MUNE.json").string(), "--split", "val"});
  EXPECT_EQ(m.code, 0) << m.err;
  EXPECT_TRUE(fs::is_regular_file(out() / "eval_teacher_MUNE.csv"));
  EXPECT_EQ(run({"--out", out_, "eval"}).code, 2);
  EXPECT_EQ(run({"--out", out_, "eval", "--checkpoint", "nope.sgns"}).code, 3);
}

TEST_F(Pipeline, ReportHasOneTablePerCsv) {
  const std::string md = [] {
    std::ifstream in(out() / "report.md");
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();
  int csvs = 0;
  for (const auto& e : fs::recursive_directory_iterator(out())) {
    if (e.path().extension() == ".csv") ++csvs;
  }
  int tables = 0;
  for (std::size_t p = md.find("## "); p != std::string::npos; p = md.find("## ", p + 3)) ++tables;
  // eval_*.csv files written by a later test may be present already.
  EXPECT_GE(tables, 10);
  EXPECT_LE(tables, csvs);
  EXPECT_TRUE(contains(md, "## ablation/ablation.csv"));
  EXPECT_TRUE(contains(md, "| config |"));
}

TEST_F(Pipeline, ProvenanceRecords) {
  int found = 0;
  for (const auto& e : fs::directory_iterator(out() / "provenance")) {
    const fs::path rj = e.path() / "run.json";
    ASSERT_TRUE(fs::is_regular_file(rj)) << e.path();
    const auto j = nlohmann::json::parse(std::ifstream(rj));
    EXPECT_TRUE(j.contains("seed"));
    EXPECT_TRUE(j.contains("config"));
    for (const auto& [path, hash] : j["artifacts"].items()) {
      if (fs::is_regular_file(path)) {
        EXPECT_EQ(hash.get<std::string>().size(), 16u);
      }
    }
    ++found;
  }
  EXPECT_GE(found, 5);
}

// A base trained well past convergence on its own training images.
TEST(CliOverfit, BaseScoresHighOnItsTrainingSplit) {
  const fs::path d = scratch("overfit");
  auto cfg = tiny_config();
  cfg["model"]["base_width"] = 8;
  const std::string c = write_config(d, cfg).string();
  const std::string o = (d / "run").string();
  ASSERT_EQ(run({"--config", c, "--out", o, "--quiet", "gen-data"}).code, 0);
  ASSERT_EQ(run({"--config", c, "--out", o, "--quiet", "train-base", "--role", "S_bs", "--epochs",
                 "150"})
                .code,
            0);
  const RunResult r = run({"--config", c, "--out", o, "--quiet", "eval", "--checkpoint",
                           (d / "run" / "bases" / "S_bs.sgns").string(), "--dataset", "base_S_bs",
                           "--split", "train", "--name", "fit"});
  ASSERT_EQ(r.code, 0) << r.err;
  const CsvData t = read_csv(d / "run" / "eval_fit.csv");
  EXPECT_GE(std::stod(t.rows[0][2]), 0.95) << "mIOU";
  fs::remove_all(d);
}

TEST(CliErrors, MissingConfigNamesPath) {
  const RunResult r = run({"--config", "/nonexistent/cfg.json", "gen-data"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "/nonexistent/cfg.json")) << r.err;
}

TEST(CliErrors, UnknownConfigKeyIsRejected) {
  const fs::path d = scratch("badkey");
  auto cfg = tiny_config();
  cfg["train"]["epoch"] = 3;
  const RunResult r = run({"--config", write_config(d, cfg).string(), "gen-data"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "train.epoch")) << r.err;
  cfg = tiny_config();
  cfg["dataset"]["hw"] = 20;
  EXPECT_EQ(run({"--config", write_config(d, cfg).string(), "gen-data"}).code, 2);
  fs::remove_all(d);
}

TEST(CliErrors, RolesAndStrategies) {
  const fs::path d = scratch("roles");
  const RunResult bad = run({"--out", d.string(), "train-base", "--role", "X_y"});
  EXPECT_EQ(bad.code, 2);
  for (const auto& r : kSequence) EXPECT_TRUE(contains(bad.err, r)) << bad.err;
  const RunResult abe = run({"--out", d.string(), "train-meta", "--strategy", "ABE"});
  EXPECT_EQ(abe.code, 2);
  EXPECT_TRUE(contains(abe.err, "rule-based")) << abe.err;
  EXPECT_EQ(run({"--out", d.string(), "train-meta", "--strategy", "XYZ"}).code, 2);
  const RunResult nodata = run({"--out", d.string(), "train-base", "--role", "W_k"});
  EXPECT_EQ(nodata.code, 3);
  EXPECT_TRUE(contains(nodata.err, "gen-data")) << nodata.err;
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"--repeats", "0", "ablate"}).code, 2);
  fs::remove_all(d);
}

TEST(CliErrors, CorruptManifestIsDataError) {
  const fs::path d = scratch("manifest");
  std::ofstream(d / "m.json") << "{ broken";
  const RunResult r = run({"--out", d.string(), "eval", "--manifest", (d / "m.json").string()});
  EXPECT_NE(r.code, 0);
  fs::create_directories(d / "data" / "MSCD_like");
  std::ofstream(d / "data" / "MSCD_like" / "manifest.json") << "{ broken";
  const RunResult r2 = run({"--out", d.string(), "eval", "--manifest", (d / "m.json").string()});
  EXPECT_EQ(r2.code, 3) << r2.err;
  fs::remove_all(d);
}

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig a = parse_config(nlohmann::json::object());
  EXPECT_EQ(a.seed, 7u);
  EXPECT_EQ(a.ensemble.ablation_sequence.size(), 6u);
  const ExperimentConfig b = parse_config(to_json(a));
  EXPECT_EQ(to_json(b), to_json(a));
  const ExperimentConfig t = parse_config(tiny_config());
  EXPECT_EQ(t.dataset.hw, 16);
  EXPECT_EQ(t.meta_epochs(), 2);
  EXPECT_EQ(parse_config(to_json(t)).ensemble.roles, t.ensemble.roles);
  auto with_nulls = tiny_config();
  with_nulls["train"]["meta_epochs"] = nullptr;
  with_nulls["distill"] = {{"warm_start", nullptr}};
  const ExperimentConfig n = parse_config(with_nulls);
  EXPECT_FALSE(n.train.meta_epochs.has_value());
  EXPECT_FALSE(n.distill.warm_start.has_value());
}

TEST(Config, ValidationErrors) {
  const auto bad = [](const std::string& ptr, nlohmann::json v) {
    nlohmann::json j = tiny_config();
    j[nlohmann::json::json_pointer(ptr)] = std::move(v);
    EXPECT_THROW(parse_config(j), ConfigError) << ptr;
  };
  bad("/dataset/n_images", 5);
  bad("/dataset/kind", "KWD");
  bad("/model/depth", 0);
  bad("/ensemble/roles", nlohmann::json::array({"C_c_E"}));
  bad("/ensemble/roles", nlohmann::json::array({"C_c_E", "C_c_E"}));
  bad("/ensemble/abe_threshold", 1.5);
  bad("/train/split", nlohmann::json::array({70, 20, 20}));
  bad("/train/epochs", "ten");
  bad("/distill/out_channels", 3);
  bad("/extra", 1);
}

TEST(Csv, QuotingRoundTrip) {
  const fs::path d = scratch("csv");
  SplitMix64 g(12);
  const std::string alphabet = "ab,\"\n\r x;";
  for (int t = 0; t < 50; ++t) {
    const int cols = g.uniform_int(1, 4);
    std::vector<std::string> header;
    for (int c = 0; c < cols; ++c) header.push_back("h" + std::to_string(c));
    CsvTable table(header);
    std::vector<std::vector<std::string>> rows;
    for (int r = g.uniform_int(0, 4); r > 0; --r) {
      std::vector<std::string> row;
      for (int c = 0; c < cols; ++c) {
        std::string cell;
        for (int k = g.uniform_int(0, 6); k > 0; --k) {
          cell += alphabet[static_cast<std::size_t>(g.uniform_int(0, 8))];
        }
        row.push_back(cell);
      }
      rows.push_back(row);
      table.add_row(row);
    }
    table.write(d / "t.csv");
    const CsvData back = read_csv(d / "t.csv");
    ASSERT_EQ(back.header, header);
    ASSERT_EQ(back.rows, rows) << t;
  }
  CsvTable t({"a", "b"});
  EXPECT_THROW(t.add_row({"1"}), std::logic_error);
  fs::remove_all(d);
}

TEST(Csv, Formatting) {
  EXPECT_EQ(format_double(0.5), "0.500000");
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

}  // namespace
}  // namespace segens
