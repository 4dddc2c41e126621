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

#include "segens/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "segens/checkpoint.hpp"

namespace segens {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename V>
void read_field(const json& obj, const char* key, V& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<V>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

RoleId parse_role(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ": role ids must be strings");
  try {
    return role_from_symbol(v.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::vector<RoleId> parse_roles(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of role ids");
  std::vector<RoleId> out;
  std::set<RoleId> seen;
  for (const auto& r : v) {
    const RoleId id = parse_role(r, where);
    if (!seen.insert(id).second) throw ConfigError(where + ": duplicate role");
    out.push_back(id);
  }
  return out;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

int ExperimentConfig::class_of(RoleId role) const {
  auto it = ensemble.role_to_class.find(role);
  return it != ensemble.role_to_class.end() ? it->second : eval_class_of(eval_kind(), role);
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  check_keys(j, {"seed", "dataset", "model", "ensemble", "train", "distill", "output"}, "");
  read_field(j, "seed", c.seed, "");
  read_field(j, "output", c.output, "");
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, {"kind", "n_images", "hw", "base_images"}, "dataset");
    read_field(d, "kind", c.dataset.kind, "dataset");
    read_field(d, "n_images", c.dataset.n_images, "dataset");
    read_field(d, "hw", c.dataset.hw, "dataset");
    read_field(d, "base_images", c.dataset.base_images, "dataset");
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, {"depth", "base_width"}, "model");
    read_field(m, "depth", c.model.depth, "model");
    read_field(m, "base_width", c.model.base_width, "model");
  }
  if (j.contains("ensemble")) {
    const json& e = j.at("ensemble");
    check_keys(e, {"roles", "strategy", "role_to_class", "ablation_sequence", "meta_depth",
                   "meta_width", "abe_threshold"},
               "ensemble");
    if (e.contains("roles")) c.ensemble.roles = parse_roles(e.at("roles"), "ensemble.roles");
    if (e.contains("ablation_sequence")) {
      c.ensemble.ablation_sequence =
          parse_roles(e.at("ablation_sequence"), "ensemble.ablation_sequence");
    }
    if (e.contains("strategy")) {
      std::string s;
      read_field(e, "strategy", s, "ensemble");
      try {
        c.ensemble.strategy = fusion_from_name(s);
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("ensemble.strategy: ") + ex.what());
      }
    }
    if (e.contains("role_to_class")) {
      const json& m = e.at("role_to_class");
      require(m.is_object(), "ensemble.role_to_class: expected an object");
      for (const auto& [role, cls] : m.items()) {
        require(cls.is_number_integer(), "ensemble.role_to_class." + role + ": expected an integer");
        c.ensemble.role_to_class[parse_role(json(role), "ensemble.role_to_class")] = cls.get<int>();
      }
    }
    read_field(e, "meta_depth", c.ensemble.meta_depth, "ensemble");
    read_field(e, "meta_width", c.ensemble.meta_width, "ensemble");
    read_field(e, "abe_threshold", c.ensemble.abe_threshold, "ensemble");
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, {"epochs", "lr", "batch", "split", "meta_epochs", "distill_epochs"}, "train");
    read_field(t, "epochs", c.train.epochs, "train");
    read_field(t, "lr", c.train.lr, "train");
    read_field(t, "batch", c.train.batch, "train");
    read_field(t, "split", c.train.split, "train");
    // null leaves the field unset.
    if (t.contains("meta_epochs") && !t.at("meta_epochs").is_null()) {
      int v = 0;
      read_field(t, "meta_epochs", v, "train");
      c.train.meta_epochs = v;
    }
    if (t.contains("distill_epochs") && !t.at("distill_epochs").is_null()) {
      int v = 0;
      read_field(t, "distill_epochs", v, "train");
      c.train.distill_epochs = v;
    }
  }
  if (j.contains("distill")) {
    const json& d = j.at("distill");
    check_keys(d, {"soft_targets", "out_channels", "warm_start"}, "distill");
    read_field(d, "soft_targets", c.distill.soft_targets, "distill");
    read_field(d, "out_channels", c.distill.out_channels, "distill");
    if (d.contains("warm_start") && !d.at("warm_start").is_null()) {
      std::string s;
      read_field(d, "warm_start", s, "distill");
      c.distill.warm_start = s;
    }
  }

  try {
    (void)c.eval_kind();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("dataset.kind: ") + e.what());
  }
  require(c.dataset.n_images >= 10, "dataset.n_images: must be >= 10");
  require(c.dataset.base_images >= 4, "dataset.base_images: must be >= 4");
  require(c.model.depth >= 1 && c.model.depth <= 6, "model.depth: must be in [1,6]");
  require(c.model.base_width >= 1, "model.base_width: must be >= 1");
  require(c.ensemble.meta_depth >= 1 && c.ensemble.meta_depth <= 6, "ensemble.meta_depth: must be in [1,6]");
  require(c.ensemble.meta_width >= 1, "ensemble.meta_width: must be >= 1");
  const int mult = 1 << std::max(c.model.depth, c.ensemble.meta_depth);
  require(c.dataset.hw > 0 && c.dataset.hw % std::max(8, mult) == 0,
          "dataset.hw: must be a positive multiple of " + std::to_string(std::max(8, mult)));
  require(c.ensemble.roles.size() >= 2, "ensemble.roles: at least 2 base models required");
  require(c.ensemble.ablation_sequence.size() >= 2, "ensemble.ablation_sequence: need at least 2 roles");
  require(c.ensemble.abe_threshold >= 0 && c.ensemble.abe_threshold <= 1,
          "ensemble.abe_threshold: must lie in [0,1]");
  for (const auto& [role, cls] : c.ensemble.role_to_class) {
    require(cls >= 0 && cls < 2, "ensemble.role_to_class: class index must be 0 or 1");
  }
  require(c.train.epochs >= 0, "train.epochs: must be >= 0");
  require(c.train.lr > 0, "train.lr: must be > 0");
  require(c.train.batch >= 1, "train.batch: must be >= 1");
  require(c.train.split.size() == 3 && c.train.split[0] + c.train.split[1] + c.train.split[2] == 100 &&
              c.train.split[0] > 0 && c.train.split[1] >= 0 && c.train.split[2] >= 0,
          "train.split: expected [train, val, test] percentages summing to 100");
  require(c.meta_epochs() >= 0, "train.meta_epochs: must be >= 0");
  require(c.distill_epochs() >= 0, "train.distill_epochs: must be >= 0");
  require(c.distill.out_channels == 0 || c.distill.out_channels == 1 || c.distill.out_channels == 2,
          "distill.out_channels: must be 0 (one per class), 1 or 2");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  auto roles = [](const std::vector<RoleId>& rs) {
    json a = json::array();
    for (RoleId r : rs) a.push_back(std::string(role_info(r).symbol));
    return a;
  };
  json rtc = json::object();
  for (const auto& [role, cls] : c.ensemble.role_to_class) rtc[std::string(role_info(role).symbol)] = cls;
  json train = {{"epochs", c.train.epochs}, {"lr", c.train.lr}, {"batch", c.train.batch},
                {"split", c.train.split}};
  if (c.train.meta_epochs) train["meta_epochs"] = *c.train.meta_epochs;
  if (c.train.distill_epochs) train["distill_epochs"] = *c.train.distill_epochs;
  json distill = {{"soft_targets", c.distill.soft_targets}, {"out_channels", c.distill.out_channels}};
  if (c.distill.warm_start) distill["warm_start"] = *c.distill.warm_start;
  return {
      {"seed", c.seed},
      {"dataset",
       {{"kind", c.dataset.kind}, {"n_images", c.dataset.n_images}, {"hw", c.dataset.hw},
        {"base_images", c.dataset.base_images}}},
      {"model", {{"depth", c.model.depth}, {"base_width", c.model.base_width}}},
      {"ensemble",
       {{"roles", roles(c.ensemble.roles)},
        {"strategy", std::string(fusion_name(c.ensemble.strategy))},
        {"role_to_class", rtc},
        {"ablation_sequence", roles(c.ensemble.ablation_sequence)},
        {"meta_depth", c.ensemble.meta_depth},
        {"meta_width", c.ensemble.meta_width},
        {"abe_threshold", c.ensemble.abe_threshold}}},
      {"train", train},
      {"distill", distill},
      {"output", c.output},
  };
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw std::logic_error("CSV row has " + std::to_string(row.size()) + " fields, header has " +
                           std::to_string(header_.size()));
  }
  rows_.push_back(std::move(row));
}

namespace {
void write_field(std::ostream& os, const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    os << f;
    return;
  }
  os << '"';
  for (char ch : f) {
    if (ch == '"') os << '"';
    os << ch;
  }
  os << '"';
}

void write_record(std::ostream& os, const std::vector<std::string>& fields) {
  // A lone empty field would otherwise read back as a blank line.
  if (fields.size() == 1 && fields[0].empty()) {
    os << "\"\"\r\n";
    return;
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    write_field(os, fields[i]);
  }
  os << "\r\n";
}
}  // namespace

void CsvTable::write(std::ostream& os) const {
  write_record(os, header_);
  for (const auto& r : rows_) write_record(os, r);
}

void CsvTable::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write(out);
}

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      field.clear();
      record.clear();
      any = false;
    } else {
      field += ch;
      any = true;
    }
  }
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  CsvData data;
  if (records.empty()) return data;
  data.header = std::move(records.front());
  data.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return data;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
  return fnv1a64(bytes);
}

void write_provenance(const std::filesystem::path& dir, const std::string& command,
                      const std::vector<std::string>& args, const ExperimentConfig& config,
                      const std::vector<std::filesystem::path>& artifacts) {
  json j;
  j["command"] = command;
  j["args"] = args;
  j["seed"] = config.seed;
  j["config"] = to_json(config);
  j["artifacts"] = json::object();
  for (const auto& p : artifacts) {
    if (std::filesystem::is_regular_file(p)) j["artifacts"][p.generic_string()] = hex64(file_hash(p));
  }
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "run.json");
  if (!out) throw DataError("cannot write " + (dir / "run.json").string());
  out << j.dump(2) << "\n";
}

}  // namespace segens
