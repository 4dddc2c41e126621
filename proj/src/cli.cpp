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
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "segens/checkpoint.hpp"
#include "segens/dataset_io.hpp"
#include "segens/distill.hpp"
#include "segens/ensemble.hpp"
#include "segens/experiment.hpp"
#include "segens/metrics.hpp"
#include "segens/netpbm.hpp"
#include "segens/rng.hpp"
#include "segens/training.hpp"

namespace segens {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int repeats = 1;
  bool quiet = false;
};

struct Context {
  ExperimentConfig cfg;
  fs::path out;
  int repeats = 1;
  bool quiet = false;
  std::vector<std::string> args;
  std::ostream* out_stream = nullptr;
  std::ostream* err_stream = nullptr;

  std::ostream& log() const { return *err_stream; }
  std::ostream& print() const { return *out_stream; }
};

Context make_context(const Globals& g, const std::vector<std::string>& args, std::ostream& out,
                     std::ostream& err) {
  Context ctx;
  ctx.cfg = g.config.empty() ? parse_config(json::object()) : load_config(g.config);
  if (g.seed_set) ctx.cfg.seed = g.seed;
  if (!g.out.empty()) ctx.cfg.output = g.out;
  if (g.repeats < 1) throw ConfigError("--repeats must be >= 1");
  ctx.out = ctx.cfg.output;
  ctx.repeats = g.repeats;
  ctx.quiet = g.quiet;
  ctx.args = args;
  ctx.out_stream = &out;
  ctx.err_stream = &err;
  return ctx;
}

std::string sym(RoleId r) { return std::string(role_info(r).symbol); }

fs::path eval_data_dir(const Context& c) { return c.out / "data" / c.cfg.dataset.kind; }
fs::path base_data_dir(const Context& c, RoleId r) { return c.out / "data" / ("base_" + sym(r)); }
fs::path base_ckpt(const Context& c, RoleId r) { return c.out / "bases" / (sym(r) + ".sgns"); }

std::uint64_t role_stream(RoleId r) { return static_cast<std::uint64_t>(r); }

TrainConfig train_config(const Context& c, int epochs, std::uint64_t stream) {
  TrainConfig t;
  t.epochs = epochs;
  t.lr = c.cfg.train.lr;
  t.batch = c.cfg.train.batch;
  t.seed = derive_seed(c.cfg.seed, stream);
  return t;
}

Dataset load_dataset_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw DataError("missing dataset directory " + dir.string() + " (run gen-data first)");
  }
  try {
    return read_dataset(dir);
  } catch (const NetpbmError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("cannot read dataset: ") + e.what());
  }
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw DataError("missing " + what + ": " + p.string());
}

std::vector<std::string> score_header(const std::vector<std::string>& classes) {
  std::vector<std::string> h = {"model", "fwIOU", "mIOU"};
  for (const auto& name : classes) h.push_back("IOU_" + name);
  return h;
}

std::vector<std::string> score_row(const std::string& name, const SegmentationScores& s) {
  std::vector<std::string> row = {name, format_double(s.fwiou), format_double(s.miou)};
  for (double v : s.iou) row.push_back(format_double(v));
  return row;
}

std::vector<RoleId> unique_roles(const std::vector<RoleId>& a, const std::vector<RoleId>& b) {
  std::vector<RoleId> out;
  for (const auto* list : {&a, &b}) {
    for (RoleId r : *list) {
      if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
    }
  }
  return out;
}

void provenance(const Context& c, const std::string& tag, const std::vector<fs::path>& artifacts) {
  write_provenance(c.out / "provenance" / tag, c.args.empty() ? "" : c.args.at(1 < c.args.size() ? 1 : 0),
                   c.args, c.cfg, artifacts);
}

EpochHook progress(const Context& c, const std::string& what, int epochs,
                   const std::string& metric) {
  if (c.quiet) return {};
  return [&c, what, epochs, metric](const EpochRecord& r) {
    c.log() << "[" << what << "] epoch " << r.epoch << "/" << epochs << " loss="
            << format_double(r.loss) << " " << metric << "=" << format_double(r.val_metric)
            << "\n";
  };
}

// gen-data ---------------------------------------------------------------

int cmd_gen_data(const Context& c) {
  const auto& cfg = c.cfg;
  const int val = cfg.train.split[1];
  const int test = cfg.train.split[2];
  std::vector<fs::path> written;
  auto report = [&](const fs::path& dir, const Dataset& ds) {
    write_dataset(dir, ds);
    written.push_back(dir / "manifest.json");
    c.print() << ds.name << ": train=" << ds.train.size() << " val=" << ds.val.size()
              << " test=" << ds.test.size() << " -> " << dir.string() << "\n";
  };
  const Dataset eval = make_multiclass_eval_set(cfg.eval_kind(), cfg.dataset.n_images,
                                                derive_seed(cfg.seed, 1), cfg.dataset.hw, val, test);
  report(eval_data_dir(c), eval);
  for (RoleId r : unique_roles(cfg.ensemble.roles, cfg.ensemble.ablation_sequence)) {
    const Dataset ds = make_binary_dataset(r, cfg.dataset.base_images,
                                           derive_seed(cfg.seed, 10 + role_stream(r)), cfg.dataset.hw,
                                           val, test);
    report(base_data_dir(c, r), ds);
  }
  provenance(c, "gen-data", written);
  return kExitOk;
}

// train-base -------------------------------------------------------------

int cmd_train_base(const Context& c, const std::string& role_name, std::optional<int> epochs) {
  RoleId role;
  try {
    role = role_from_symbol(role_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const Dataset ds = load_dataset_dir(base_data_dir(c, role));
  ModelSpec spec;
  spec.arch = Arch::kSegNet;
  spec.in_channels = 3;
  spec.out_channels = 1;
  spec.depth = c.cfg.model.depth;
  spec.base_width = c.cfg.model.base_width;
  spec.seed = derive_seed(c.cfg.seed, 100 + role_stream(role));
  const int n_epochs = epochs.value_or(c.cfg.train.epochs);
  const TrainConfig tc = train_config(c, n_epochs, 150 + role_stream(role));
  const BaseTrainResult res = train_base(ds, spec, tc, progress(c, "train-base " + sym(role), n_epochs, "val_iou"));

  const fs::path ckpt = base_ckpt(c, role);
  fs::create_directories(ckpt.parent_path());
  save_checkpoint(res.net, ckpt);
  CsvTable log({"epoch", "loss", "val_iou"});
  for (const auto& e : res.report.epochs) {
    log.add_row({std::to_string(e.epoch), format_double(e.loss), format_double(e.val_metric)});
  }
  const fs::path log_path = c.out / "bases" / (sym(role) + "_log.csv");
  log.write(log_path);
  c.print() << "base " << sym(role) << ": best_epoch=" << res.report.best_epoch
            << " val_iou=" << format_double(res.report.best_val) << " -> " << ckpt.string() << "\n";
  provenance(c, "train-base_" + sym(role), {ckpt, log_path});
  return kExitOk;
}

// ensembles ----------------------------------------------------------------

EnsembleManifest default_manifest(const Context& c, const std::vector<std::string>& classes) {
  EnsembleManifest m;
  m.classes = classes;
  m.strategy = FusionKind::kABE;
  m.abe_threshold = c.cfg.ensemble.abe_threshold;
  for (RoleId r : c.cfg.ensemble.roles) {
    require_file(base_ckpt(c, r), "base checkpoint for role " + sym(r));
    m.bases.push_back({r, fs::path("bases") / (sym(r) + ".sgns"), c.cfg.class_of(r)});
  }
  return m;
}

void check_manifest_files(const EnsembleManifest& m, const fs::path& dir) {
  for (const auto& b : m.bases) {
    require_file(dir / b.checkpoint, "base checkpoint for role " + sym(b.role));
  }
  if (m.meta_checkpoint) require_file(dir / *m.meta_checkpoint, "meta checkpoint");
}

struct LoadedManifest {
  EnsembleManifest manifest;
  fs::path dir;
  Teacher teacher;
};

LoadedManifest load_manifest_file(const fs::path& path) {
  require_file(path, "ensemble manifest");
  LoadedManifest lm;
  try {
    lm.manifest = read_manifest(path);
  } catch (const std::exception& e) {
    throw DataError("invalid ensemble manifest " + path.string() + ": " + e.what());
  }
  lm.dir = path.parent_path();
  check_manifest_files(lm.manifest, lm.dir);
  lm.teacher = load_teacher(lm.manifest, lm.dir);
  return lm;
}

ConfusionAccumulator eval_teacher(const Teacher& t, std::span<const Sample> samples) {
  return evaluate([&](const Tensor<float>& x) { return teacher_forward(t, x).class_map; }, samples,
                  t.k_classes);
}

Teacher with_abe(const Teacher& t) {
  Teacher abe = t;
  abe.strategy = FusionStrategy{};
  return abe;
}

int cmd_train_meta(const Context& c, const std::string& strategy_name,
                   const std::string& manifest_arg, std::optional<int> epochs) {
  FusionKind kind;
  try {
    kind = fusion_from_name(strategy_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(e.what()) + "; choose MCE, MSNE or MUNE");
  }
  if (kind == FusionKind::kABE) {
    throw ConfigError(
        "ABE is rule-based (per-pixel max over base outputs) and has no trainable parameters; "
        "choose MCE, MSNE or MUNE");
  }
  const Dataset ds = load_dataset_dir(eval_data_dir(c));

  fs::path manifest_path = manifest_arg;
  if (manifest_arg.empty()) {
    manifest_path = c.out / "ensemble.json";
    write_manifest(manifest_path, default_manifest(c, ds.class_names));
  }
  LoadedManifest lm = load_manifest_file(manifest_path);
  if (lm.teacher.k_classes != static_cast<int>(ds.class_names.size())) {
    throw DataError("manifest has " + std::to_string(lm.teacher.k_classes) +
                    " classes but the dataset has " + std::to_string(ds.class_names.size()));
  }
  const int k = lm.teacher.k_classes;
  const int n = static_cast<int>(lm.teacher.bases.size());
  const std::string name(fusion_name(kind));
  const int n_epochs = epochs.value_or(c.cfg.meta_epochs());

  FusionStrategy strat =
      build_meta(kind, n, k, derive_seed(c.cfg.seed, 200 + static_cast<int>(kind)),
                 {c.cfg.ensemble.meta_depth, c.cfg.ensemble.meta_width});
  const MetaReport rep =
      train_meta(strat, lm.teacher.bases, k, ds, train_config(c, n_epochs, 250 + static_cast<int>(kind)),
                 progress(c, "train-meta " + name, n_epochs, "val_miou"));

  const fs::path meta_dir = c.out / "meta";
  fs::create_directories(meta_dir);
  const fs::path meta_ckpt = meta_dir / (name + ".sgns");
  save_checkpoint(*strat.meta, meta_ckpt);
  CsvTable log({"epoch", "loss", "val_miou"});
  for (const auto& e : rep.train.epochs) {
    log.add_row({std::to_string(e.epoch), format_double(e.loss), format_double(e.val_metric)});
  }
  const fs::path log_path = meta_dir / (name + "_log.csv");
  log.write(log_path);

  // Manifest of the trained teacher, relative to the output directory.
  EnsembleManifest tm = lm.manifest;
  for (auto& b : tm.bases) {
    b.checkpoint = fs::relative(fs::absolute(lm.dir / b.checkpoint), fs::absolute(c.out));
  }
  tm.strategy = kind;
  tm.meta_checkpoint = fs::path("meta") / (name + ".sgns");
  tm.meta_roles = strat.trained_roles;
  const fs::path teacher_path = c.out / ("teacher_" + name + ".json");
  write_manifest(teacher_path, tm);

  Teacher trained = lm.teacher;
  trained.strategy = strat;
  CsvTable metrics(score_header(ds.class_names));
  for (const BaseModel& b : trained.bases) {
    const auto acc = evaluate(
        [&](const Tensor<float>& x) { return single_base_class_map(b, x, trained.abe_threshold); },
        ds.test, k);
    metrics.add_row(score_row("beta_" + sym(b.role), scores(acc)));
  }
  metrics.add_row(score_row("ABE", scores(eval_teacher(with_abe(trained), ds.test))));
  const SegmentationScores s = scores(eval_teacher(trained, ds.test));
  metrics.add_row(score_row(name, s));
  const fs::path metrics_path = c.out / ("metrics_" + name + ".csv");
  metrics.write(metrics_path);
  metrics.write(c.print());

  std::vector<fs::path> artifacts = {meta_ckpt, log_path, teacher_path, metrics_path};
  for (const auto& b : lm.manifest.bases) artifacts.push_back(lm.dir / b.checkpoint);
  provenance(c, "train-meta_" + name, artifacts);
  return kExitOk;
}

// distill ------------------------------------------------------------------

std::vector<Tensor<float>> images_of(std::span<const Sample> a, std::span<const Sample> b = {}) {
  std::vector<Tensor<float>> out;
  for (const auto* s : {&a, &b}) {
    for (const Sample& x : *s) out.push_back(x.image);
  }
  return out;
}

int cmd_distill(const Context& c, const std::string& manifest_arg, std::optional<int> epochs,
                const std::string& warm_arg) {
  const fs::path manifest_path =
      manifest_arg.empty() ? c.out / ("teacher_" + std::string(fusion_name(c.cfg.ensemble.strategy)) + ".json")
                           : fs::path(manifest_arg);
  const LoadedManifest lm = load_manifest_file(manifest_path);
  const Teacher& teacher = lm.teacher;
  const Dataset ds = load_dataset_dir(eval_data_dir(c));
  const std::vector<Tensor<float>> train_images = images_of(ds.train, ds.val);
  const std::vector<Tensor<float>> held_out = images_of(ds.test);
  if (train_images.empty() || held_out.empty()) throw DataError("distill needs train and test images");

  DistillConfig dc;
  dc.student_spec.arch = Arch::kSegNet;
  dc.student_spec.in_channels = 3;
  dc.student_spec.out_channels =
      c.cfg.distill.out_channels == 0 ? teacher.k_classes : c.cfg.distill.out_channels;
  dc.student_spec.depth = c.cfg.model.depth;
  dc.student_spec.base_width = c.cfg.model.base_width;
  dc.student_spec.seed = derive_seed(c.cfg.seed, 400);
  dc.soft_targets = c.cfg.distill.soft_targets;
  const int n_epochs = epochs.value_or(c.cfg.distill_epochs());
  dc.train = train_config(c, n_epochs, 450);
  const std::string warm = !warm_arg.empty() ? warm_arg : c.cfg.distill.warm_start.value_or("");
  if (!warm.empty()) {
    require_file(warm, "warm-start checkpoint");
    dc.warm_start = load_checkpoint(warm);
  }

  DistillResult res = distill_student(teacher, dc, train_images, held_out);
  if (!c.quiet) {
    for (const auto& e : res.report.epochs) {
      c.log() << "[distill] epoch " << e.epoch << "/" << n_epochs << " loss=" << format_double(e.loss)
              << " agreement=" << format_double(e.agreement) << "\n";
    }
  }

  const fs::path dir = c.out / "student";
  fs::create_directories(dir);
  const fs::path ckpt = dir / "student.sgns";
  save_checkpoint(res.student, ckpt);
  CsvTable log({"epoch", "distill_loss", "agreement", "seconds"});
  for (const auto& e : res.report.epochs) {
    log.add_row({std::to_string(e.epoch), format_double(e.loss), format_double(e.agreement),
                 format_double(e.seconds)});
  }
  const fs::path log_path = c.out / "distill_report.csv";
  log.write(log_path);

  const int h = ds.height, w = ds.width;
  const std::int64_t student_flops = flops_count(res.student.spec(), h, w).total();
  const std::int64_t t_flops = teacher_flops(teacher, h, w);
  const Tensor<float>& probe = held_out.front();
  const TimingStats ts = benchmark_inference(
      [&] {
        NoGradGuard ng;
        (void)res.student.probabilities(probe);
      },
      5);
  const TimingStats tt = benchmark_inference([&] { (void)teacher_forward(teacher, probe); }, 5);
  json summary = {
      {"agreement", res.report.final_agreement},
      {"epochs", n_epochs},
      {"student_flops", student_flops},
      {"teacher_flops", t_flops},
      {"student_params", param_count(res.student)},
      {"teacher_params", teacher_param_count(teacher)},
      {"flops_ratio", static_cast<double>(t_flops) / static_cast<double>(student_flops)},
      {"student_time_mean_s", ts.mean_seconds},
      {"teacher_time_mean_s", tt.mean_seconds},
      {"speedup", ts.mean_seconds > 0 ? tt.mean_seconds / ts.mean_seconds : 0.0},
  };
  const fs::path summary_path = c.out / "distill_summary.json";
  {
    std::ofstream os(summary_path);
    if (!os) throw DataError("cannot write " + summary_path.string());
    os << summary.dump(2) << "\n";
  }
  c.print() << summary.dump(2) << "\n";
  std::vector<fs::path> artifacts = {ckpt, log_path, manifest_path};
  for (const auto& b : lm.manifest.bases) artifacts.push_back(lm.dir / b.checkpoint);
  provenance(c, "distill", artifacts);
  return kExitOk;
}

// eval ---------------------------------------------------------------------

fs::path resolve_dataset(const Context& c, const std::string& arg) {
  if (arg.empty()) return eval_data_dir(c);
  const fs::path p(arg);
  if (fs::is_directory(p)) return p;
  if (fs::is_directory(c.out / "data" / p)) return c.out / "data" / p;
  throw DataError("missing dataset directory " + p.string());
}

int cmd_eval(const Context& c, const std::string& checkpoint, const std::string& manifest,
             const std::string& dataset_arg, const std::string& split, std::string name) {
  if (checkpoint.empty() == manifest.empty()) {
    throw ConfigError("eval needs exactly one of --checkpoint or --manifest");
  }
  const fs::path data_dir = resolve_dataset(c, dataset_arg);
  const Dataset ds = load_dataset_dir(data_dir);
  const std::vector<Sample>* samples = nullptr;
  if (split == "train") samples = &ds.train;
  else if (split == "val") samples = &ds.val;
  else if (split == "test") samples = &ds.test;
  else throw ConfigError("--split must be train, val or test");
  if (samples->empty()) throw DataError("split '" + split + "' of " + data_dir.string() + " is empty");
  const int k = static_cast<int>(ds.class_names.size());

  std::vector<fs::path> inputs = {data_dir / "manifest.json"};
  ConfusionAccumulator acc(k);
  if (!checkpoint.empty()) {
    require_file(checkpoint, "checkpoint");
    inputs.push_back(checkpoint);
    Network net = load_checkpoint(checkpoint);
    net.freeze();
    const int out = net.spec().out_channels;
    if (out != 1 && out != k) {
      throw DataError("checkpoint predicts " + std::to_string(out) + " channels but the dataset has " +
                      std::to_string(k) + " classes");
    }
    acc = evaluate([&](const Tensor<float>& x) { return student_class_map(net, x, 1); }, *samples, k);
    if (name.empty()) name = fs::path(checkpoint).stem().string();
  } else {
    const LoadedManifest lm = load_manifest_file(manifest);
    inputs.push_back(manifest);
    for (const auto& b : lm.manifest.bases) inputs.push_back(lm.dir / b.checkpoint);
    if (lm.teacher.k_classes != k) throw DataError("manifest and dataset class counts differ");
    acc = eval_teacher(lm.teacher, *samples);
    if (name.empty()) name = fs::path(manifest).stem().string();
  }
  CsvTable table(score_header(ds.class_names));
  table.add_row(score_row(name, scores(acc)));
  const fs::path path = c.out / ("eval_" + name + ".csv");
  table.write(path);
  table.write(c.print());
  inputs.push_back(path);
  provenance(c, "eval_" + name, inputs);
  return kExitOk;
}

// ablate -------------------------------------------------------------------

constexpr int kTimingRounds = 10;

int worker_count() {
  const char* env = std::getenv("SEGENS_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("SEGENS_THREADS must be a positive integer");
  return static_cast<int>(v);
}

struct MeanVar {
  double mean = 0;
  std::optional<double> var;  // sample variance; undefined for one repeat
};

MeanVar mean_var(const std::vector<double>& xs) {
  MeanVar mv;
  mv.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - mv.mean) * (x - mv.mean);
    mv.var = ss / static_cast<double>(xs.size() - 1);
  }
  return mv;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string join_roles(std::span<const RoleId> roles) {
  std::string s;
  for (RoleId r : roles) {
    if (!s.empty()) s += "+";
    s += sym(r);
  }
  return s;
}

int cmd_ablate(const Context& c, std::optional<int> epochs) {
  const auto& seq = c.cfg.ensemble.ablation_sequence;
  for (RoleId r : seq) require_file(base_ckpt(c, r), "base checkpoint for role " + sym(r));
  const Dataset ds = load_dataset_dir(eval_data_dir(c));
  const int k = static_cast<int>(ds.class_names.size());

  std::vector<BaseModel> bases;
  for (RoleId r : seq) {
    Network net = load_checkpoint(base_ckpt(c, r));
    net.freeze();
    bases.push_back({r, std::move(net), c.cfg.class_of(r)});
  }
  const int n_configs = static_cast<int>(seq.size()) - 1;
  const int n_epochs = epochs.value_or(c.cfg.meta_epochs());
  const MetaArchitecture arch{c.cfg.ensemble.meta_depth, c.cfg.ensemble.meta_width};

  struct Job {
    int config;  // number of models = config + 2
    int repeat;
    SegmentationScores scores;
    FusionStrategy strategy;
  };
  std::vector<Job> jobs;
  for (int i = 0; i < n_configs; ++i) {
    for (int r = 0; r < c.repeats; ++r) jobs.push_back({i, r, {}, {}});
  }

  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      Job& job = jobs[j];
      try {
        const int n = job.config + 2;
        const std::span<const BaseModel> subset(bases.data(), static_cast<std::size_t>(n));
        const std::uint64_t stream = 1000 + 100 * static_cast<std::uint64_t>(job.repeat) + n;
        FusionStrategy strat = build_meta(FusionKind::kMUNE, n, k, derive_seed(c.cfg.seed, stream), arch);
        train_meta(strat, subset, k, ds, train_config(c, n_epochs, stream + 50));
        Teacher t;
        t.bases.assign(subset.begin(), subset.end());
        t.k_classes = k;
        t.strategy = strat;
        t.abe_threshold = c.cfg.ensemble.abe_threshold;
        job.scores = scores(eval_teacher(t, ds.test));
        job.strategy = std::move(strat);
        if (!c.quiet) {
          std::lock_guard lock(log_mu);
          c.log() << "[ablate] M" << job.config + 1 << " repeat " << job.repeat + 1 << "/" << c.repeats
                  << " mIOU=" << format_double(job.scores.miou) << "\n";
        }
      } catch (...) {
        std::lock_guard lock(log_mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
        return;
      }
    }
  };
  const int n_workers = std::min<int>(worker_count(), static_cast<int>(jobs.size()));
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<std::string> header = {"config", "roles", "n_models", "repeats",
                                     "fwIOU_mean", "fwIOU_var", "mIOU_mean", "mIOU_var"};
  for (const auto& cls : ds.class_names) {
    header.push_back("IOU_" + cls + "_mean");
    header.push_back("IOU_" + cls + "_var");
  }
  CsvTable table(header);
  CsvTable series({"n_models", "mIOU_mean", "mIOU_var"});
  CsvTable efficiency({"config", "n_models", "teacher_flops", "teacher_params", "student_flops",
                       "student_params", "time_mean_s", "time_std_s"});
  ModelSpec student_spec;
  student_spec.out_channels = c.cfg.distill.out_channels == 0 ? k : c.cfg.distill.out_channels;
  student_spec.depth = c.cfg.model.depth;
  student_spec.base_width = c.cfg.model.base_width;
  const Tensor<float>& probe = ds.test.front().image;
  std::vector<Teacher> teachers;

  for (int i = 0; i < n_configs; ++i) {
    const int n = i + 2;
    std::vector<double> fw, mi;
    std::vector<std::vector<double>> per(k);
    const FusionStrategy* first = nullptr;
    for (const Job& job : jobs) {
      if (job.config != i) continue;
      if (!first) first = &job.strategy;
      fw.push_back(job.scores.fwiou);
      mi.push_back(job.scores.miou);
      for (int cl = 0; cl < k; ++cl) per[cl].push_back(job.scores.iou[cl]);
    }
    const MeanVar f = mean_var(fw), m = mean_var(mi);
    std::vector<std::string> row = {"M" + std::to_string(i + 1),
                                    join_roles(std::span(seq).first(n)),
                                    std::to_string(n),
                                    std::to_string(c.repeats),
                                    format_double(f.mean),
                                    fmt_opt(f.var),
                                    format_double(m.mean),
                                    fmt_opt(m.var)};
    for (int cl = 0; cl < k; ++cl) {
      const MeanVar p = mean_var(per[cl]);
      row.push_back(format_double(p.mean));
      row.push_back(fmt_opt(p.var));
    }
    table.add_row(row);
    series.add_row({std::to_string(n), format_double(m.mean), fmt_opt(m.var)});

    Teacher& t = teachers.emplace_back();
    t.bases.assign(bases.begin(), bases.begin() + n);
    t.k_classes = k;
    t.strategy = *first;
    t.abe_threshold = c.cfg.ensemble.abe_threshold;
  }
  // Rounds alternate between configurations so load drift hits all alike.
  std::vector<std::vector<double>> samples(teachers.size());
  for (int round = 0; round < kTimingRounds; ++round) {
    for (std::size_t i = 0; i < teachers.size(); ++i) {
      const TimingStats ts =
          benchmark_inference([&] { (void)teacher_forward(teachers[i], probe); }, 3);
      samples[i].insert(samples[i].end(), ts.samples.begin(), ts.samples.end());
    }
  }
  for (std::size_t i = 0; i < teachers.size(); ++i) {
    const Teacher& t = teachers[i];
    const TimingStats ts = summarize_timings(samples[i]);
    efficiency.add_row({"E" + std::to_string(i + 1), std::to_string(t.bases.size()),
                        std::to_string(teacher_flops(t, ds.height, ds.width)),
                        std::to_string(teacher_param_count(t)),
                        std::to_string(flops_count(student_spec, ds.height, ds.width).total()),
                        std::to_string(param_count(student_spec)), format_double(ts.mean_seconds),
                        format_double(ts.std_seconds)});
  }
  const fs::path dir = c.out / "ablation";
  table.write(dir / "ablation.csv");
  series.write(dir / "ablation_series.csv");
  efficiency.write(dir / "efficiency.csv");
  table.write(c.print());
  std::vector<fs::path> artifacts = {dir / "ablation.csv", dir / "ablation_series.csv",
                                     dir / "efficiency.csv"};
  for (RoleId r : seq) artifacts.push_back(base_ckpt(c, r));
  provenance(c, "ablate", artifacts);
  return kExitOk;
}

// report -------------------------------------------------------------------

std::string md_escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    if (ch == '|') o += "\\|";
    else if (ch == '\n' || ch == '\r') o += ' ';
    else o += ch;
  }
  return o;
}

int cmd_report(const Context& c, const std::string& dir_arg) {
  const fs::path dir = dir_arg.empty() ? c.out : fs::path(dir_arg);
  if (!fs::is_directory(dir)) throw DataError("missing run directory " + dir.string());
  std::vector<fs::path> csvs;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
  }
  std::sort(csvs.begin(), csvs.end());
  std::ostringstream md;
  md << "# Run report: " << dir.filename().string() << "\n";
  if (csvs.empty()) md << "\nNo CSV files found.\n";
  for (const auto& p : csvs) {
    const CsvData data = read_csv(p);
    md << "\n## " << fs::relative(p, dir).generic_string() << "\n\n";
    if (data.header.empty()) {
      md << "(empty)\n";
      continue;
    }
    md << "|";
    for (const auto& h : data.header) md << " " << md_escape(h) << " |";
    md << "\n|";
    for (std::size_t i = 0; i < data.header.size(); ++i) md << " --- |";
    md << "\n";
    for (const auto& row : data.rows) {
      md << "|";
      for (std::size_t i = 0; i < data.header.size(); ++i) {
        md << " " << (i < row.size() ? md_escape(row[i]) : "") << " |";
      }
      md << "\n";
    }
  }
  const fs::path out_path = dir / "report.md";
  std::ofstream os(out_path);
  if (!os) throw DataError("cannot write " + out_path.string());
  os << md.str();
  c.print() << md.str();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"segens: stacked segmentation ensembles with distillation", "segens"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "experiment config (JSON)");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { g.seed = s; g.seed_set = true; }, "master seed");
  app.add_option("--out", g.out, "output directory (overrides config)");
  app.add_option("--repeats", g.repeats, "seeds per ablation row")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "suppress per-epoch progress");

  std::optional<int> epochs;
  auto epochs_opt = [&](CLI::App* sub) {
    sub->add_option_function<int>("--epochs", [&](const int& e) { epochs = e; }, "override epoch budget")
        ->check(CLI::NonNegativeNumber);
  };

  auto* gen = app.add_subcommand("gen-data", "generate synthetic datasets");
  std::string role;
  auto* tb = app.add_subcommand("train-base", "train one binary base model");
  tb->add_option("--role", role, "role id")->required();
  epochs_opt(tb);
  std::string strategy, manifest;
  auto* tm = app.add_subcommand("train-meta", "train a meta-architecture over frozen bases");
  tm->add_option("--strategy", strategy, "MCE, MSNE or MUNE")->required();
  tm->add_option("--manifest", manifest, "ensemble manifest (default: built from config)");
  epochs_opt(tm);
  std::string warm;
  auto* ds = app.add_subcommand("distill", "distill a teacher into a student network");
  ds->add_option("--manifest", manifest, "teacher manifest (default: teacher_<strategy>.json)");
  ds->add_option("--warm-start", warm, "initialize the student from this checkpoint");
  epochs_opt(ds);
  std::string checkpoint, dataset, split = "test", name;
  auto* ev = app.add_subcommand("eval", "score a checkpoint or ensemble on a dataset split");
  ev->add_option("--checkpoint", checkpoint, "single network checkpoint");
  ev->add_option("--manifest", manifest, "ensemble manifest");
  ev->add_option("--dataset", dataset, "dataset directory or name under <out>/data");
  ev->add_option("--split", split, "train, val or test");
  ev->add_option("--name", name, "row and file name");
  auto* ab = app.add_subcommand("ablate", "MUNE over growing base-model sets");
  epochs_opt(ab);
  std::string dir;
  auto* rp = app.add_subcommand("report", "render every CSV in a run directory as markdown");
  rp->add_option("--dir", dir, "run directory (default: --out)");
  for (auto* sub : {gen, tb, tm, ds, ev, ab, rp}) sub->fallthrough();

  try {
    std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const Context ctx = make_context(g, args, out, err);
    if (*gen) return cmd_gen_data(ctx);
    if (*tb) return cmd_train_base(ctx, role, epochs);
    if (*tm) return cmd_train_meta(ctx, strategy, manifest, epochs);
    if (*ds) return cmd_distill(ctx, manifest, epochs, warm);
    if (*ev) return cmd_eval(ctx, checkpoint, manifest, dataset, split, name);
    if (*ab) return cmd_ablate(ctx, epochs);
    if (*rp) return cmd_report(ctx, dir);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NetpbmError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}

}  // namespace segens
