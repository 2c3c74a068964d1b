#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace forge::pipeline {

struct ItemOutputs {
  /// Paths relative to the manifest directory.
  std::string slices;
  std::vector<std::string> slice_renders;
  std::string keyframe;
  std::string event_graph;
  std::string rgb_graph;
  std::string fused;
  std::string items;

  friend bool operator==(const ItemOutputs&, const ItemOutputs&) = default;
};

struct ManifestItem {
  std::string item_id;
  std::string sequence_id;
  std::optional<std::string> condition;
  std::int64_t keyframe_ts = 0;
  std::vector<std::string> source_files;
  std::string pipeline_version;
  std::string config_hash;
  std::string audit_status = "unaudited";
  ItemOutputs outputs;

  friend bool operator==(const ManifestItem&, const ManifestItem&) = default;
};

struct DatasetManifest {
  std::string dataset;
  std::string pipeline_version;
  std::string config_hash;
  /// Item count per split name; sums to items.size().
  std::map<std::string, std::size_t> split_counts;
  /// Sorted by item_id.
  std::vector<ManifestItem> items;

  bool counts_consistent() const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

nlohmann::json to_json(const DatasetManifest& m);
/// Throws forge::SchemaError.
DatasetManifest manifest_from_json(const nlohmann::json& j);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

struct SplitResult {
  DatasetManifest train;
  DatasetManifest test;
};

/// Assigns whole sequences to train or test. round(train_frac * sequences) goes to train,
/// clamped so both sides get at least one. With `stratify`, the rule applies within each
/// condition tag. Throws std::invalid_argument for fewer than two sequences or a fraction
/// outside (0, 1).
SplitResult split_dataset(const DatasetManifest& manifest, double train_frac, std::uint64_t seed, bool stratify = false);

}  // namespace forge::pipeline
