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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "segens/ensemble.hpp"
#include "segens/roles.hpp"
#include "segens/synthdata.hpp"

namespace segens {

/// Invalid configuration or command-line usage (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or malformed input artifacts (exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

struct ExperimentConfig {
  std::uint64_t seed = 7;

  struct DatasetBlock {
    std::string kind = "MSCD_like";
    int n_images = 60;
    int hw = 64;
    int base_images = 60;
  } dataset;

  struct ModelBlock {
    int depth = 3;
    int base_width = 16;
  } model;

  struct EnsembleBlock {
    std::vector<RoleId> roles = {RoleId::kCanolaEarly, RoleId::kCanolaLate};
    FusionKind strategy = FusionKind::kMUNE;
    // Roles not listed map to the eval set's default class for that role.
    std::map<RoleId, int> role_to_class;
    std::vector<RoleId> ablation_sequence = {RoleId::kCanolaEarly, RoleId::kCanolaLate,
                                             RoleId::kKochia,      RoleId::kNarrowLeafCrop,
                                             RoleId::kBareSoil,    RoleId::kBroadleafWeed};
    int meta_depth = 3;
    int meta_width = 16;
    double abe_threshold = 0.5;
  } ensemble;

  struct TrainBlock {
    int epochs = 30;
    double lr = 0.001;
    int batch = 2;
    std::vector<int> split = {70, 15, 15};  // train / val / test percent
    std::optional<int> meta_epochs;
    std::optional<int> distill_epochs;
  } train;

  struct DistillBlock {
    bool soft_targets = true;
    // 0 means one channel per teacher class.
    int out_channels = 0;
    std::optional<std::string> warm_start;
  } distill;

  std::string output = "runs/default";

  EvalKind eval_kind() const { return eval_kind_from_name(dataset.kind); }
  int class_of(RoleId role) const;
  int meta_epochs() const { return train.meta_epochs.value_or(train.epochs); }
  int distill_epochs() const { return train.distill_epochs.value_or(train.epochs); }
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// RFC-4180 table writer.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row);
  void write(const std::filesystem::path& path) const;
  void write(std::ostream& os) const;
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvData read_csv(const std::filesystem::path& path);

std::string format_double(double v);
std::string hex64(std::uint64_t v);
/// FNV-1a of a file's bytes.
std::uint64_t file_hash(const std::filesystem::path& path);

/// Writes `<dir>/run.json` with the command line, config, seed and hashes.
void write_provenance(const std::filesystem::path& dir, const std::string& command,
                      const std::vector<std::string>& args, const ExperimentConfig& config,
                      const std::vector<std::filesystem::path>& artifacts);

}  // namespace segens
