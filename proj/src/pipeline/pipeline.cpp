#include "forge/pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include "forge/common/error.hpp"
#include "forge/common/fileio.hpp"
#include "forge/common/hash.hpp"
#include "forge/common/tensor_archive.hpp"
#include "forge/event/event_stream.hpp"
#include "forge/event/render.hpp"
#include "forge/event/slice_stack.hpp"
#include "forge/event/window.hpp"
#include "forge/fusion/fused_json.hpp"
#include "forge/fusion/fusion.hpp"
#include "forge/graph/caption_parser.hpp"
#include "forge/graph/graph_json.hpp"
#include "forge/synth/synthesis.hpp"

namespace forge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    std::string cell(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(std::move(cell));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

std::vector<KeyframeEntry> parse_keyframe_index(std::string_view csv) {
  static const std::vector<std::string> kRequired = {"item_id", "sequence_id", "keyframe_ts", "events",
                                                     "rgb",     "event_hints", "rgb_hints"};
  std::vector<KeyframeEntry> out;
  std::map<std::string, std::size_t> column;
  std::size_t line_no = 0, pos = 0;
  std::set<std::string> ids;
  while (pos < csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    const auto line = csv.substr(pos, end - pos);
    const std::size_t offset = pos;
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos || line.front() == '#') continue;
    auto cells = split_csv_line(line);
    if (column.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) column[cells[i]] = i;
      for (const auto& r : kRequired)
        if (!column.count(r)) throw ParseError("keyframe index lacks column '" + r + "'", line_no, offset);
      continue;
    }
    if (cells.size() != column.size()) throw ParseError("keyframe index row has the wrong column count", line_no, offset);
    auto cell = [&](const std::string& name) -> const std::string& { return cells[column.at(name)]; };
    KeyframeEntry e;
    e.item_id = cell("item_id");
    e.sequence_id = cell("sequence_id");
    if (e.item_id.empty() || e.sequence_id.empty()) throw ParseError("empty item_id or sequence_id", line_no, offset);
    if (!ids.insert(e.item_id).second) throw ParseError("duplicate item_id '" + e.item_id + "'", line_no, offset);
    try {
      std::size_t used = 0;
      e.keyframe_ts = std::stoll(cell("keyframe_ts"), &used);
      if (used != cell("keyframe_ts").size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError("keyframe_ts is not an integer", line_no, offset);
    }
    e.events = cell("events");
    e.rgb = cell("rgb");
    e.event_hints = cell("event_hints");
    e.rgb_hints = cell("rgb_hints");
    if (column.count("condition") && !cell("condition").empty()) e.condition = cell("condition");
    out.push_back(std::move(e));
  }
  if (column.empty()) throw ParseError("keyframe index is empty", 1, 0);
  return out;
}

TensorArchive slice_archive(const event::SliceStack& stack, const event::EventWindow& window) {
  TensorArchive ar;
  ar.put(NamedArray::from<std::uint32_t>("counts", {stack.n_slices(), 2, stack.height(), stack.width()},
                                         std::span<const std::uint32_t>(stack.counts())));
  const std::int64_t w[3] = {window.t_start, window.t_end, window.keyframe_t};
  ar.put(NamedArray::from<std::int64_t>("window", {3}, std::span<const std::int64_t>(w)));
  const std::int64_t meta[3] = {stack.t_start, stack.slice_us, stack.pad_us};
  ar.put(NamedArray::from<std::int64_t>("slice_meta", {3}, std::span<const std::int64_t>(meta)));
  return ar;
}

std::shared_ptr<gateway::Transport> make_transport(const PipelineConfig& config) {
  if (config.gateway_mode == "mock") return std::make_shared<gateway::MockTransport>();
  return std::make_shared<gateway::HttpTransport>(config.base_url);
}

namespace {

/// Failure tagged with the pipeline stage that raised it.
struct StageError : Error {
  StageError(std::string stage, const std::string& what) : Error(what), stage(std::move(stage)) {}
  std::string stage;
};

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

json slice_stats(const event::SliceStack& s) {
  json slices = json::array();
  for (std::uint32_t k = 0; k < s.n_slices(); ++k) {
    std::uint64_t pos = 0, neg = 0;
    double sx = 0, sy = 0;
    for (std::uint32_t y = 0; y < s.height(); ++y)
      for (std::uint32_t x = 0; x < s.width(); ++x) {
        const auto p = s.at(k, 0, y, x), n = s.at(k, 1, y, x);
        pos += p;
        neg += n;
        sx += static_cast<double>(p + n) * x;
        sy += static_cast<double>(p + n) * y;
      }
    const double total = static_cast<double>(pos + neg);
    slices.push_back({{"positive", pos},
                      {"negative", neg},
                      {"cx", total > 0 ? json(sx / total) : json(nullptr)},
                      {"cy", total > 0 ? json(sy / total) : json(nullptr)}});
  }
  return {{"width", s.width()}, {"height", s.height()}, {"slices", slices}};
}

std::string caption_prompt(std::string_view modality, const std::string& hints, const std::string& stats_tag,
                           const json& stats) {
  std::string p = "Describe the scene as structured lines: predicates Verb(role=value, ...), entity attributes "
                  "e.key=value, deg(entity, kind, mild|severe) and rel(a, kind, b).\n";
  p += gateway::prompt_block("modality", modality);
  p += gateway::prompt_block("hints", hints);
  p += gateway::prompt_block(stats_tag, stats.dump());
  return p;
}

graph::SceneGraph caption_to_graph(gateway::Gateway& gw, const PipelineConfig& cfg, graph::Modality modality,
                                   const std::string& caption_prompt_text, std::int64_t frame_ref) {
  const gateway::GenerationParams params{cfg.temperature, cfg.max_tokens, cfg.model};
  const std::string caption = gw.complete({gateway::Task::caption, caption_prompt_text, params});
  std::string parse_prompt = "Rewrite the caption as grammar-valid scene-graph lines only.\n";
  parse_prompt += gateway::prompt_block("caption", caption);
  const std::string lines = gw.complete({gateway::Task::graph_parse, parse_prompt, params});
  return graph::parse_caption_to_graph(lines, modality, frame_ref);
}

std::string content_path(const fs::path& root, const std::string& dir, const std::string& contents,
                         const std::string& ext) {
  const std::string rel = "stages/" + dir + "/" + sha256_hex(contents) + ext;
  const fs::path full = root / rel;
  if (!fs::exists(full)) write_file_atomic(full, contents);
  return rel;
}

std::string read_optional(const fs::path& root, const std::string& rel) {
  return rel.empty() ? std::string() : read_file(root / rel);
}

json item_to_json(const ManifestItem& it) {
  DatasetManifest m;
  m.items = {it};
  m.split_counts["all"] = 1;
  return to_json(m).at("items").at(0);
}

ManifestItem item_from_json(const json& j) {
  json m = {{"dataset", ""}, {"pipeline_version", ""}, {"config_hash", ""}, {"split_counts", {{"all", 1}}},
            {"items", json::array({j})}};
  return manifest_from_json(m).items.at(0);
}

class Runner {
 public:
  Runner(const PipelineConfig& cfg, gateway::Gateway& gw)
      : cfg_(cfg), gw_(gw), out_(cfg.output_root()), in_(cfg.input_root()), config_hash_(cfg.hash()) {}

  std::optional<ManifestItem> run(const KeyframeEntry& e, bool& skipped) {
    const fs::path marker = out_ / "state" / (e.item_id + ".json");
    const fs::path failed = out_ / "failed" / (e.item_id + ".json");
    try {
      const std::string input_hash = stage("inputs", [&] { return hash_inputs(e); });
      if (auto done = completed(marker, input_hash)) {
        skipped = true;
        return done;
      }
      ManifestItem item = stage("output", [&] { return process(e); });
      write_file_atomic(marker, json{{"input_hash", input_hash}, {"item", item_to_json(item)}}.dump(2) + "\n");
      fs::remove(failed);
      return item;
    } catch (const StageError& err) {
      quarantine(e.item_id, marker, failed, err.stage, err.what());
    } catch (const std::exception& err) {
      quarantine(e.item_id, marker, failed, "output", err.what());
    }
    return std::nullopt;
  }

  void quarantine(const std::string& id, const fs::path& marker, const fs::path& failed, const std::string& stage_name,
                  const std::string& what) {
    std::error_code ec;
    fs::remove(marker, ec);
    write_file_atomic(failed, json{{"item_id", id}, {"stage", stage_name}, {"error", what}}.dump(2) + "\n");
    std::lock_guard lock(mu_);
    failures_.push_back({id, stage_name, what});
  }

  std::vector<ItemFailure> failures() {
    std::lock_guard lock(mu_);
    auto f = failures_;
    std::sort(f.begin(), f.end(), [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
    return f;
  }

  const std::string& config_hash() const { return config_hash_; }

 private:
  std::string hash_inputs(const KeyframeEntry& e) const {
    std::string acc = config_hash_ + "\n" + e.item_id + "\n" + e.sequence_id + "\n" + std::to_string(e.keyframe_ts) +
                      "\n" + e.condition.value_or("") + "\n";
    for (const auto* rel : {&e.events, &e.rgb, &e.event_hints, &e.rgb_hints})
      acc += *rel + ":" + (rel->empty() ? std::string() : sha256_hex(read_file(in_ / *rel))) + "\n";
    return sha256_hex(acc);
  }

  std::optional<ManifestItem> completed(const fs::path& marker, const std::string& input_hash) const {
    if (!fs::exists(marker)) return std::nullopt;
    auto j = json::parse(read_file(marker), nullptr, false);
    if (j.is_discarded() || j.value("input_hash", "") != input_hash) return std::nullopt;
    try {
      ManifestItem item = item_from_json(j.at("item"));
      const auto& o = item.outputs;
      for (const auto* rel : {&o.slices, &o.keyframe, &o.event_graph, &o.rgb_graph, &o.fused, &o.items})
        if (!fs::exists(out_ / *rel)) return std::nullopt;
      return item;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  ManifestItem process(const KeyframeEntry& e) {
    ManifestItem item;
    item.item_id = e.item_id;
    item.sequence_id = e.sequence_id;
    item.condition = e.condition;
    item.keyframe_ts = e.keyframe_ts;
    item.pipeline_version = std::string(kPipelineVersion);
    item.config_hash = config_hash_;
    for (const auto* rel : {&e.events, &e.rgb, &e.event_hints, &e.rgb_hints})
      if (!rel->empty()) item.source_files.push_back(*rel);

    const auto stream = stage("events", [&] {
      const fs::path path = in_ / e.events;
      const auto format = event::parse_format(path.extension() == ".evs" ? "evs" : "csv");
      return event::parse_event_stream(read_file(path), format, {cfg_.regression_tolerance_us, false});
    });
    const auto window = stage("window", [&] { return event::select_window(stream, e.keyframe_ts, cfg_.n, cfg_.frame_ms); });
    const auto stack =
        stage("slices", [&] { return event::accumulate_slices(window, cfg_.n_slices, stream.height, stream.width); });
    stage("slices", [&] {
      item.outputs.slices = content_path(out_, "slices", slice_archive(stack, window).serialize(), ".tns");
      for (std::uint32_t k = 0; k < stack.n_slices(); ++k) {
        const std::string rel = "renders/" + e.item_id + "/slice_" + std::to_string(k) + ".png";
        write_file_atomic(out_ / rel, event::render_slice_png(stack, k));
        item.outputs.slice_renders.push_back(rel);
      }
      return 0;
    });

    const auto keyframe = stage("rgb", [&] {
      const std::string bytes = read_file(in_ / e.rgb);
      auto img = event::decode_png_rgb(bytes);
      item.outputs.keyframe = "keyframes/" + e.item_id + ".png";
      write_file_atomic(out_ / item.outputs.keyframe, bytes);
      return img;
    });

    const auto g_e = stage("event_graph", [&] {
      const auto prompt = caption_prompt("event", read_optional(in_, e.event_hints), "slice_stats", slice_stats(stack));
      return caption_to_graph(gw_, cfg_, graph::Modality::event, prompt, e.keyframe_ts);
    });
    const auto g_r = stage("rgb_graph", [&] {
      const json stats = {{"width", keyframe.width}, {"height", keyframe.height}, {"mean_luma", keyframe.mean_luma()}};
      const auto prompt = caption_prompt("rgb", read_optional(in_, e.rgb_hints), "image_stats", stats);
      return caption_to_graph(gw_, cfg_, graph::Modality::rgb, prompt, e.keyframe_ts);
    });
    item.outputs.event_graph = content_path(out_, "graphs", graph::serialize_graph(g_e), ".json");
    item.outputs.rgb_graph = content_path(out_, "graphs", graph::serialize_graph(g_r), ".json");

    const auto fused = stage("fuse", [&] { return fusion::fuse_graphs(g_e, g_r, {cfg_.tau}); });
    item.outputs.fused = content_path(out_, "fused", fusion::serialize_fused(fused), ".json");

    stage("synth", [&] {
      const auto mode = synth::parse_generator(cfg_.synth_mode);
      std::string lines;
      for (const auto& r : synth::synthesize_records(fused, mode, &gw_, e.item_id)) lines += r.dump() + "\n";
      item.outputs.items = content_path(out_, "items", lines, ".jsonl");
      return 0;
    });
    return item;
  }

  const PipelineConfig& cfg_;
  gateway::Gateway& gw_;
  fs::path out_;
  fs::path in_;
  std::string config_hash_;
  std::mutex mu_;
  std::vector<ItemFailure> failures_;
};

}  // namespace

RunResult run_pipeline(const PipelineConfig& config, gateway::Gateway& gw) {
  config.validate();
  std::vector<KeyframeEntry> entries;
  try {
    entries = parse_keyframe_index(read_file(config.index_path()));
  } catch (const ParseError& e) {
    throw ConfigError(std::string("keyframe index: ") + e.what());
  }

  const std::size_t calls_before = gw.stats().upstream_calls;
  Runner runner(config, gw);
  std::vector<std::optional<ManifestItem>> results(entries.size());
  std::vector<char> skipped(entries.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      bool s = false;
      results[i] = runner.run(entries[i], s);
      skipped[i] = s;
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_workers = std::min(config.workers, std::max<std::size_t>(entries.size(), 1));
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  RunResult result;
  result.manifest.dataset = config.dataset_name;
  result.manifest.pipeline_version = std::string(kPipelineVersion);
  result.manifest.config_hash = runner.config_hash();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!results[i]) continue;
    result.manifest.items.push_back(std::move(*results[i]));
    ++(skipped[i] ? result.skipped : result.processed);
  }
  std::sort(result.manifest.items.begin(), result.manifest.items.end(),
            [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
  result.manifest.split_counts["all"] = result.manifest.items.size();
  result.failures = runner.failures();
  result.gateway_calls = gw.stats().upstream_calls - calls_before;
  save_manifest(result.manifest, config.output_root() / "manifest.json");
  return result;
}

}  // namespace forge::pipeline
