#include "forge/pipeline/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "forge/common/error.hpp"
#include "forge/common/fileio.hpp"

namespace forge::pipeline {

using nlohmann::json;

bool DatasetManifest::counts_consistent() const {
  std::size_t sum = 0;
  for (const auto& [_, n] : split_counts) sum += n;
  return sum == items.size();
}

json to_json(const DatasetManifest& m) {
  json items = json::array();
  for (const auto& it : m.items) {
    items.push_back({{"item_id", it.item_id},
                     {"sequence_id", it.sequence_id},
                     {"condition", it.condition ? json(*it.condition) : json(nullptr)},
                     {"keyframe_ts", it.keyframe_ts},
                     {"source_files", it.source_files},
                     {"pipeline_version", it.pipeline_version},
                     {"config_hash", it.config_hash},
                     {"audit_status", it.audit_status},
                     {"outputs",
                      {{"slices", it.outputs.slices},
                       {"slice_renders", it.outputs.slice_renders},
                       {"keyframe", it.outputs.keyframe},
                       {"event_graph", it.outputs.event_graph},
                       {"rgb_graph", it.outputs.rgb_graph},
                       {"fused", it.outputs.fused},
                       {"items", it.outputs.items}}}});
  }
  return {{"schema", "forge.manifest/1"},
          {"dataset", m.dataset},
          {"pipeline_version", m.pipeline_version},
          {"config_hash", m.config_hash},
          {"split_counts", m.split_counts},
          {"items", items}};
}

DatasetManifest manifest_from_json(const json& j) {
  try {
    DatasetManifest m;
    m.dataset = j.at("dataset").get<std::string>();
    m.pipeline_version = j.at("pipeline_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.split_counts = j.at("split_counts").get<std::map<std::string, std::size_t>>();
    for (const auto& ji : j.at("items")) {
      ManifestItem it;
      it.item_id = ji.at("item_id").get<std::string>();
      it.sequence_id = ji.at("sequence_id").get<std::string>();
      if (!ji.at("condition").is_null()) it.condition = ji.at("condition").get<std::string>();
      it.keyframe_ts = ji.at("keyframe_ts").get<std::int64_t>();
      it.source_files = ji.at("source_files").get<std::vector<std::string>>();
      it.pipeline_version = ji.at("pipeline_version").get<std::string>();
      it.config_hash = ji.at("config_hash").get<std::string>();
      it.audit_status = ji.at("audit_status").get<std::string>();
      const json& o = ji.at("outputs");
      it.outputs.slices = o.at("slices").get<std::string>();
      it.outputs.slice_renders = o.at("slice_renders").get<std::vector<std::string>>();
      it.outputs.keyframe = o.at("keyframe").get<std::string>();
      it.outputs.event_graph = o.at("event_graph").get<std::string>();
      it.outputs.rgb_graph = o.at("rgb_graph").get<std::string>();
      it.outputs.fused = o.at("fused").get<std::string>();
      it.outputs.items = o.at("items").get<std::string>();
      m.items.push_back(std::move(it));
    }
    if (!m.counts_consistent()) throw SchemaError("$.split_counts", "counts do not sum to the item count");
    return m;
  } catch (const json::exception& e) {
    throw SchemaError("$", std::string("bad manifest: ") + e.what());
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw SchemaError("$", "manifest is not JSON: " + path.string());
  return manifest_from_json(j);
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  write_file_atomic(path, to_json(m).dump(2) + "\n");
}

SplitResult split_dataset(const DatasetManifest& manifest, double train_frac, std::uint64_t seed, bool stratify) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw std::invalid_argument("split: train_frac must lie in (0, 1)");

  // Sequences grouped by condition tag (one group unless stratifying), each list sorted.
  std::map<std::string, std::set<std::string>> groups;
  std::set<std::string> all;
  for (const auto& it : manifest.items) {
    all.insert(it.sequence_id);
    groups[stratify ? it.condition.value_or("") : ""].insert(it.sequence_id);
  }
  if (all.size() < 2) throw std::invalid_argument("split: need at least two sequences, got " + std::to_string(all.size()));

  std::mt19937_64 rng(seed);
  std::set<std::string> train_seqs;
  for (const auto& [_, seqs] : groups) {
    std::vector<std::string> order(seqs.begin(), seqs.end());
    // Modulo draw instead of a distribution object keeps the order identical across standard libraries.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    const auto n = static_cast<long long>(order.size());
    long long k = std::llround(train_frac * static_cast<double>(n));
    if (n >= 2) k = std::clamp(k, 1LL, n - 1);
    else k = std::clamp(k, 0LL, n);
    train_seqs.insert(order.begin(), order.begin() + k);
  }
  // A single-sequence stratum can land everything on one side.
  if (train_seqs.size() == all.size()) train_seqs.erase(*train_seqs.rbegin());
  if (train_seqs.empty()) train_seqs.insert(*all.begin());

  SplitResult out;
  for (auto* m : {&out.train, &out.test}) {
    m->dataset = manifest.dataset;
    m->pipeline_version = manifest.pipeline_version;
    m->config_hash = manifest.config_hash;
  }
  for (const auto& it : manifest.items) (train_seqs.count(it.sequence_id) ? out.train : out.test).items.push_back(it);
  out.train.split_counts["train"] = out.train.items.size();
  out.test.split_counts["test"] = out.test.items.size();
  return out;
}

}  // namespace forge::pipeline
