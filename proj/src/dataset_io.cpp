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

#include "segens/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "segens/netpbm.hpp"

namespace segens {
namespace {

std::string numbered(const char* prefix, int id, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05d.%s", prefix, id, ext);
  return buf;
}

}  // namespace

void write_dataset(const std::filesystem::path& root, const Dataset& ds) {
  namespace fs = std::filesystem;
  const std::pair<const char*, std::pair<const std::vector<Sample>*, const std::vector<int>*>>
      splits[] = {{"train", {&ds.train, &ds.train_ids}},
                  {"val", {&ds.val, &ds.val_ids}},
                  {"test", {&ds.test, &ds.test_ids}}};
  nlohmann::json manifest;
  manifest["name"] = ds.name;
  manifest["classes"] = ds.class_names;
  manifest["seed"] = ds.seed;
  manifest["hw"] = {ds.height, ds.width};
  for (const auto& [split, data] : splits) {
    const auto& [samples, ids] = data;
    fs::create_directories(root / split);
    for (std::size_t i = 0; i < samples->size(); ++i) {
      write_image_ppm(root / split / numbered("img", (*ids)[i], "ppm"), (*samples)[i].image);
      write_mask_pgm(root / split / numbered("msk", (*ids)[i], "pgm"), (*samples)[i].mask);
    }
    manifest["splits"][split] = *ids;
  }
  std::ofstream out(root / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (root / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

Dataset read_dataset(const std::filesystem::path& root) {
  const auto manifest_path = root / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("dataset manifest not found: " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed dataset manifest " + manifest_path.string() + ": " +
                             e.what());
  }
  Dataset ds;
  ds.name = manifest.at("name").get<std::string>();
  ds.class_names = manifest.at("classes").get<std::vector<std::string>>();
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.height = manifest.at("hw").at(0).get<int>();
  ds.width = manifest.at("hw").at(1).get<int>();
  const std::pair<const char*, std::pair<std::vector<Sample>*, std::vector<int>*>> splits[] = {
      {"train", {&ds.train, &ds.train_ids}},
      {"val", {&ds.val, &ds.val_ids}},
      {"test", {&ds.test, &ds.test_ids}}};
  for (const auto& [split, data] : splits) {
    const auto& [samples, ids] = data;
    *ids = manifest.at("splits").at(split).get<std::vector<int>>();
    for (int id : *ids) {
      Sample s{read_image_ppm(root / split / numbered("img", id, "ppm")),
               read_mask_pgm(root / split / numbered("msk", id, "pgm"))};
      samples->push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace segens
