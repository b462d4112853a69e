#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronodce/sequence.hpp"

namespace chronodce {

struct Dataset {
  std::vector<SkeletonSequence> samples;
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return class_names.size(); }
};

// On disk a dataset is a directory of canonical sequence files plus
// manifest.json listing file names, labels, and class names.
inline void save_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["version"] = 1;
  manifest["class_names"] = ds.class_names;
  auto& files = manifest["files"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "seq_%05zu.json", i);
    save_sequence(ds.samples[i], (fs::path(dir) / name).string());
    files.push_back({{"file", name}, {"label", ds.samples[i].label}});
  }
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("save_dataset: cannot write manifest in " + dir);
  out << manifest.dump(2);
}

inline Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: no manifest.json in " + dir);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_dataset: bad manifest in " + dir + ": " + e.what());
  }
  if (!manifest.contains("version") || manifest["version"] != 1)
    throw std::runtime_error("load_dataset: unsupported manifest version in " + dir);
  Dataset ds;
  ds.class_names = manifest.at("class_names").get<std::vector<std::string>>();
  for (const auto& entry : manifest.at("files")) {
    const std::string file = entry.at("file");
    SkeletonSequence seq = load_sequence((fs::path(dir) / file).string());
    const int label = entry.at("label");
    if (seq.label != label)
      throw std::runtime_error("load_dataset: label mismatch for " + file);
    if (label < 0 || static_cast<std::size_t>(label) >= ds.class_names.size())
      throw std::runtime_error("load_dataset: label out of range for " + file);
    ds.samples.push_back(std::move(seq));
  }
  return ds;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Deterministic stratified split: within each class (indices in dataset
// order) every k-th sample goes to validation, k = round(1/val_fraction).
inline Split stratified_split(const Dataset& ds, double val_fraction = 0.2) {
  if (val_fraction <= 0.0 || val_fraction >= 1.0)
    throw std::invalid_argument("stratified_split: val_fraction must lie in (0, 1)");
  const std::size_t k = std::max<std::size_t>(2, static_cast<std::size_t>(1.0 / val_fraction + 0.5));
  std::vector<std::size_t> per_class_count(ds.num_classes(), 0);
  Split split;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const std::size_t c = static_cast<std::size_t>(ds.samples[i].label);
    const std::size_t pos = per_class_count[c]++;
    if (pos % k == k - 1) split.val.push_back(i);
    else split.train.push_back(i);
  }
  return split;
}

inline Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.class_names = ds.class_names;
  out.samples.reserve(idx.size());
  for (std::size_t i : idx) out.samples.push_back(ds.samples[i]);
  return out;
}

}  // namespace chronodce
