// forge: command-line front end for the dataset toolkit.
#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forge/common/error.hpp"
#include "forge/common/fileio.hpp"
#include "forge/common/tensor_archive.hpp"
#include "forge/eval/metrics.hpp"
#include "forge/event/event_stream.hpp"
#include "forge/event/render.hpp"
#include "forge/event/slice_stack.hpp"
#include "forge/event/window.hpp"
#include "forge/fusion/fused_json.hpp"
#include "forge/gateway/gateway.hpp"
#include "forge/graph/caption_parser.hpp"
#include "forge/graph/graph_json.hpp"
#include "forge/pipeline/pipeline.hpp"
#include "forge/review/review.hpp"
#include "forge/stam/kernel.hpp"
#include "forge/synth/synthesis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") std::cout << text;
  else forge::write_file_atomic(out_path, text);
}

std::vector<std::string> read_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
  return lines;
}

struct GatewayFlags {
  std::string mode = "mock";
  std::string base_url;
  std::string model = "mock";
  std::string cache_dir;

  std::unique_ptr<forge::gateway::Gateway> make() const {
    std::shared_ptr<forge::gateway::Transport> t;
    if (mode == "mock") t = std::make_shared<forge::gateway::MockTransport>();
    else if (mode == "http" && !base_url.empty()) t = std::make_shared<forge::gateway::HttpTransport>(base_url);
    else throw forge::ConfigError("--gateway must be mock, or http with --base-url");
    forge::gateway::GatewayOptions o;
    if (!cache_dir.empty()) o.cache_dir = cache_dir;
    else if (const char* env = std::getenv("FORGE_CACHE_DIR"); env && *env) o.cache_dir = env;
    return std::make_unique<forge::gateway::Gateway>(t, o);
  }

  void add(CLI::App* app) {
    app->add_option("--gateway", mode, "mock or http")->check(CLI::IsMember({"mock", "http"}));
    app->add_option("--base-url", base_url, "OpenAI-compatible endpoint (http mode; key from FORGE_LLM_KEY)");
    app->add_option("--model", model, "Model id sent upstream");
    app->add_option("--cache-dir", cache_dir, "Response cache (default FORGE_CACHE_DIR or ./cache)");
  }
};

// ---- ingest ---------------------------------------------------------------

struct IngestArgs {
  std::string events, format, out, renders;
  std::int64_t keyframe = 0;
  std::uint32_t n = forge::event::kDefaultWindowFrames;
  std::uint32_t frame_ms = forge::event::kDefaultFrameMs;
  std::uint32_t slices = forge::event::kDefaultSlices;
  std::uint64_t tolerance_us = 0;
  bool sort = false;
};

int cmd_ingest(const IngestArgs& a) {
  std::string format = a.format;
  if (format.empty()) format = fs::path(a.events).extension() == ".evs" ? "evs" : "csv";
  const auto stream = forge::event::parse_event_stream(forge::read_file(a.events), forge::event::parse_format(format),
                                                       {a.tolerance_us, a.sort});
  const auto window = forge::event::select_window(stream, a.keyframe, a.n, a.frame_ms);
  for (const auto& w : window.warnings) std::cerr << "warning: " << w << "\n";
  const auto stack = forge::event::accumulate_slices(window, a.slices, stream.height, stream.width);
  forge::write_file_atomic(a.out, forge::pipeline::slice_archive(stack, window).serialize());
  if (!a.renders.empty()) {
    for (std::uint32_t k = 0; k < stack.n_slices(); ++k)
      forge::write_file_atomic(fs::path(a.renders) / ("slice_" + std::to_string(k) + ".png"),
                               forge::event::render_slice_png(stack, k));
  }
  json summary = {{"events_in_stream", stream.events.size()},
                  {"events_in_window", window.events.size()},
                  {"window", {window.t_start, window.t_end}},
                  {"slice_us", stack.slice_us},
                  {"pad_us", stack.pad_us},
                  {"total_counts", stack.total()},
                  {"warnings", window.warnings}};
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// ---- graph / fuse / synth -------------------------------------------------

int cmd_graph(const std::string& caption, const std::string& modality, std::int64_t frame_ref, const std::string& out) {
  const auto g = forge::graph::parse_caption_to_graph(forge::read_file(caption), forge::graph::parse_modality(modality),
                                                      frame_ref);
  emit(out, forge::graph::serialize_graph(g));
  return kExitOk;
}

int cmd_fuse(const std::string& ge, const std::string& gr, double tau, const std::string& out, const std::string& trace) {
  const auto g_e = forge::graph::deserialize_graph(forge::read_file(ge));
  const auto g_r = forge::graph::deserialize_graph(forge::read_file(gr));
  const auto fused = forge::fusion::fuse_graphs(g_e, g_r, {tau});
  emit(out, forge::fusion::serialize_fused(fused));
  if (!trace.empty()) forge::write_file_atomic(trace, forge::fusion::trace_to_json(fused).dump(2) + "\n");
  return kExitOk;
}

int cmd_synth(const std::string& fused_path, const std::string& mode, const GatewayFlags& gflags,
              const std::string& item_id, const std::string& out) {
  const auto fused = forge::fusion::deserialize_fused(forge::read_file(fused_path));
  const auto gen = forge::synth::parse_generator(mode);
  std::unique_ptr<forge::gateway::Gateway> gw;
  if (gen == forge::synth::Generator::external) gw = gflags.make();
  std::string lines;
  for (const auto& r : forge::synth::synthesize_records(fused, gen, gw.get(), item_id)) lines += r.dump() + "\n";
  emit(out, lines);
  return kExitOk;
}

// ---- eval / audit-stats ---------------------------------------------------

int cmd_eval(const std::string& records_path, bool pooled, const std::string& out) {
  std::vector<forge::eval::EvalRecord> records;
  std::size_t n = 0;
  for (const auto& line : read_lines(forge::read_file(records_path))) {
    ++n;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw forge::ParseError("record is not JSON", n, 0);
    records.push_back(forge::eval::eval_record_from_json(j));
  }
  const auto report = forge::eval::aggregate_scores(
      records, pooled ? forge::eval::AccAveraging::pooled : forge::eval::AccAveraging::per_item);
  emit(out, forge::eval::to_json(report).dump(2) + "\n");
  return kExitOk;
}

int cmd_audit_stats(const std::string& audits_path) {
  const auto audits = forge::eval::read_audit_log(forge::read_file(audits_path));
  const auto rate = forge::eval::correction_rate(audits);
  std::cout << json{{"correction_rate", rate.percent}, {"count", rate.count}, {"total", rate.total}}.dump(2) << "\n";
  return kExitOk;
}

// ---- split / run / serve --------------------------------------------------

int cmd_split(const std::string& manifest, double frac, std::uint64_t seed, bool stratify, const std::string& out_dir) {
  const auto m = forge::pipeline::load_manifest(manifest);
  const auto split = forge::pipeline::split_dataset(m, frac, seed, stratify);
  const fs::path dir = out_dir.empty() ? fs::path(manifest).parent_path() : fs::path(out_dir);
  forge::pipeline::save_manifest(split.train, dir / "manifest.train.json");
  forge::pipeline::save_manifest(split.test, dir / "manifest.test.json");
  std::cout << json{{"train_items", split.train.items.size()}, {"test_items", split.test.items.size()}}.dump() << "\n";
  return kExitOk;
}

int cmd_run(const std::string& config_path) {
  auto cfg = forge::pipeline::load_config(config_path);
  cfg.validate();
  forge::gateway::GatewayOptions o;
  o.cache_dir = cfg.cache_root();
  o.max_in_flight = cfg.max_in_flight;
  forge::gateway::Gateway gw(forge::pipeline::make_transport(cfg), o);
  const auto result = forge::pipeline::run_pipeline(cfg, gw);
  json failures = json::array();
  for (const auto& f : result.failures) {
    failures.push_back({{"item_id", f.item_id}, {"stage", f.stage}, {"error", f.error}});
    std::cerr << "quarantined " << f.item_id << " (" << f.stage << "): " << f.error << "\n";
  }
  std::cout << json{{"manifest", (cfg.output_root() / "manifest.json").string()},
                    {"config_hash", result.manifest.config_hash},
                    {"items", result.manifest.items.size()},
                    {"processed", result.processed},
                    {"skipped", result.skipped},
                    {"gateway_calls", result.gateway_calls},
                    {"failures", failures}}
                   .dump(2)
            << "\n";
  return result.exit_code() == 0 ? kExitOk : kExitPartial;
}

forge::review::ReviewServer* g_server = nullptr;

int cmd_serve(const std::string& manifest, const std::string& host, int port, const std::string& audit_log,
              const std::string& ui) {
  const fs::path mpath = fs::is_directory(manifest) ? fs::path(manifest) / "manifest.json" : fs::path(manifest);
  const fs::path root = mpath.has_parent_path() ? mpath.parent_path() : fs::path(".");
  forge::review::ReviewStore store(forge::review::load_review_items(mpath),
                                   audit_log.empty() ? root / "audits.jsonl" : fs::path(audit_log));
  forge::review::ReviewServer server(store, {host, port, root, ui});
  const int bound = server.bind();
  if (bound < 0) throw forge::ConfigError("cannot bind " + host + ":" + std::to_string(port));
  std::cerr << "serving " << mpath << " on http://" << host << ":" << bound << "\n";
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

// ---- stam -----------------------------------------------------------------

using R = forge::Real;

forge::stam::FeatureGrid<R> grid_from_archive(const std::string& path) {
  const auto ar = forge::TensorArchive::parse(forge::read_file(path));
  if (!ar.contains("features")) throw forge::Error(path + ": no 'features' array");
  const auto& a = ar.get("features");
  if (a.dims.size() != 4) throw forge::Error(path + ": 'features' must be [t,h,w,d]");
  forge::stam::FeatureGrid<R> g(a.dims[0], a.dims[1], a.dims[2], a.dims[3]);
  g.data() = a.as<R>();
  return g;
}

struct StamArgs {
  std::string rgb_features, event_features, event_slices, out, maps;
  std::vector<std::string> rgb_images;
  std::size_t patch = 4, dim = 8;
  std::size_t tc = 0, hc = 0, wc = 0;
  std::uint64_t seed = 7;
  double lambda = forge::stam::kDefaultLambda;
  double l_llm = 0.0;
};

int cmd_stam(const StamArgs& a) {
  using namespace forge::stam;
  FeatureGrid<R> rgb, event;
  json notes = json::array();
  if (!a.rgb_features.empty() || !a.event_features.empty()) {
    if (a.rgb_features.empty() || a.event_features.empty())
      throw forge::ConfigError("--rgb and --event go together");
    rgb = grid_from_archive(a.rgb_features);
    event = grid_from_archive(a.event_features);
  } else {
    if (a.rgb_images.empty() || a.event_slices.empty())
      throw forge::ConfigError("give feature archives, or --rgb-image and --event-slices");
    std::vector<Image<R>> frames;
    for (const auto& p : a.rgb_images) {
      const auto img = forge::event::decode_png_rgb(forge::read_file(p));
      Image<R> f(img.height, img.width, 3);
      for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = static_cast<R>(img.pixels[i] / 255.0);
      frames.push_back(std::move(f));
    }
    rgb = PatchEncoder<R>(3, a.dim, a.patch, a.seed).encode(frames);

    const auto ar = forge::TensorArchive::parse(forge::read_file(a.event_slices));
    const auto& counts = ar.get("counts");
    if (counts.dims.size() != 4 || counts.dims[1] != 2) throw forge::Error("counts must be [N,2,H,W]");
    const auto n = counts.dims[0], h = counts.dims[2], w = counts.dims[3];
    const auto values = counts.as<double>();
    double peak = 0;
    for (double v : values) peak = std::max(peak, v);
    std::vector<Image<R>> slices;
    for (std::size_t s = 0; s < n; ++s) {
      Image<R> img(h, w, 2);
      for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            img(y, x, c) = static_cast<R>(peak > 0 ? values[((s * 2 + c) * h + y) * w + x] / peak : 0.0);
      slices.push_back(std::move(img));
    }
    event = PatchEncoder<R>(2, a.dim, a.patch, a.seed + 1).encode(slices);
    event = temporal_multiscale_dwconv(event, TemporalConv<R>::initialized(a.dim));
    event = se_temporal_weighting(event, TemporalSE<R>::random(event.t()));
    notes.push_back("features from the seeded toy patch encoder; not a trained backbone");
  }

  LatticeSize size = default_lattice(rgb, event);
  if (a.tc) size.t = a.tc;
  if (a.hc) size.h = a.hc;
  if (a.wc) size.w = a.wc;
  const auto pair = resample_to_lattice(rgb, event, size);
  const auto importance = stam_importance(pair);
  const auto disc = discrepancy_map(pair);
  const R l_cawtd = ca_wtd_loss(importance.weights, disc);
  const auto loss = total_loss(static_cast<R>(a.l_llm), l_cawtd, static_cast<R>(a.lambda));

  json frames = json::array();
  for (std::size_t t = 0; t < importance.weights.t(); ++t) {
    const R* wt = importance.weights.frame(t);
    const R* dt = disc.frame(t);
    R wmax = 0, dmean = 0;
    for (std::size_t i = 0; i < disc.frame_size(); ++i) {
      wmax = std::max(wmax, wt[i]);
      dmean += dt[i];
    }
    frames.push_back({{"max_weight", wmax}, {"mean_discrepancy", dmean / static_cast<R>(disc.frame_size())}});
  }
  json report = {{"scalar", sizeof(R) == 8 ? "f64" : "f32"},
                 {"rgb_shape", rgb.shape_string()},
                 {"event_shape", event.shape_string()},
                 {"lattice", pair.rgb.shape_string()},
                 {"l_cawtd", loss.l_cawtd},
                 {"lambda", loss.lambda},
                 {"l_llm", loss.l_llm},
                 {"total", loss.total},
                 {"frames", frames},
                 {"warnings", importance.warnings},
                 {"notes", notes}};
  emit(a.out, report.dump(2) + "\n");

  if (!a.maps.empty()) {
    forge::TensorArchive ar;
    const std::vector<std::uint64_t> dims = {importance.weights.t(), importance.weights.h(), importance.weights.w()};
    ar.put(forge::NamedArray::from<R>("weights", dims, std::span<const R>(importance.weights.data())));
    ar.put(forge::NamedArray::from<R>("discrepancy", dims, std::span<const R>(disc.data())));
    forge::write_file_atomic(a.maps, ar.serialize());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forge: event/RGB instruction-data toolkit"};
  app.require_subcommand(1);
  int code = kExitOk;

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Window, slice and archive an event stream around a keyframe");
  c_ingest->add_option("--input,--events", ingest.events, "Event file (.csv or .evs)")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--format", ingest.format, "csv or evs (default: from extension)")
      ->check(CLI::IsMember({"csv", "evs"}));
  c_ingest->add_option("--keyframe-ts,--keyframe", ingest.keyframe, "Keyframe timestamp in microseconds")->required();
  c_ingest->add_option("--n", ingest.n, "Frames per window")->capture_default_str();
  c_ingest->add_option("--frame-ms", ingest.frame_ms, "Frame period in ms")->capture_default_str();
  c_ingest->add_option("--slices", ingest.slices, "Temporal slices")->capture_default_str();
  c_ingest->add_option("--tolerance-us", ingest.tolerance_us, "Tolerated timestamp regression");
  c_ingest->add_flag("--sort", ingest.sort, "Sort out-of-order input instead of failing");
  c_ingest->add_option("--out", ingest.out, "Output TNS1 archive")->required();
  c_ingest->add_option("--renders", ingest.renders, "Directory for per-slice PNG renders");
  c_ingest->callback([&] { code = cmd_ingest(ingest); });

  std::string caption, modality, graph_out;
  std::int64_t frame_ref = 0;
  auto* c_graph = app.add_subcommand("graph", "Parse a structured caption into a canonical scene graph");
  c_graph->add_option("--caption", caption)->required()->check(CLI::ExistingFile);
  c_graph->add_option("--modality", modality)->required()->check(CLI::IsMember({"event", "rgb"}));
  c_graph->add_option("--frame-ref", frame_ref);
  c_graph->add_option("--out", graph_out, "Output JSON (default stdout)");
  c_graph->callback([&] { code = cmd_graph(caption, modality, frame_ref, graph_out); });

  std::string ge, gr, fused_out, trace_out;
  double tau = 0.3;
  auto* c_fuse = app.add_subcommand("fuse", "Fuse an event graph and an RGB graph");
  c_fuse->add_option("--event-graph", ge)->required()->check(CLI::ExistingFile);
  c_fuse->add_option("--rgb-graph", gr)->required()->check(CLI::ExistingFile);
  c_fuse->add_option("--tau", tau, "Degraded-fraction threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c_fuse->add_option("--out", fused_out, "Fused graph JSON (default stdout)");
  c_fuse->add_option("--trace", trace_out, "Policy trace JSON");
  c_fuse->callback([&] { code = cmd_fuse(ge, gr, tau, fused_out, trace_out); });

  std::string fused_in, synth_mode = "template", synth_out, item_id;
  GatewayFlags synth_gw;
  auto* c_synth = app.add_subcommand("synth", "Generate caption and QA records from a fused graph");
  c_synth->add_option("--fused", fused_in)->required()->check(CLI::ExistingFile);
  c_synth->add_option("--mode", synth_mode)->check(CLI::IsMember({"template", "external"}))->capture_default_str();
  c_synth->add_option("--item-id", item_id);
  c_synth->add_option("--out", synth_out, "JSONL output (default stdout)");
  synth_gw.add(c_synth);
  c_synth->callback([&] { code = cmd_synth(fused_in, synth_mode, synth_gw, item_id, synth_out); });

  std::string records, eval_out;
  bool pooled = false;
  auto* c_eval = app.add_subcommand("eval", "Aggregate judge scores and attribute accuracy");
  c_eval->add_option("--records", records)->required()->check(CLI::ExistingFile);
  c_eval->add_flag("--pooled", pooled, "Pool attributes across items instead of averaging per item");
  c_eval->add_option("--out", eval_out, "Report JSON (default stdout)");
  c_eval->callback([&] { code = cmd_eval(records, pooled, eval_out); });

  std::string audits;
  auto* c_stats = app.add_subcommand("audit-stats", "Correction rate of an audit log");
  c_stats->add_option("--audits", audits)->required()->check(CLI::ExistingFile);
  c_stats->callback([&] { code = cmd_audit_stats(audits); });

  std::string split_manifest, split_out;
  double train_frac = 0.8;
  std::uint64_t split_seed = 0;
  bool stratify = false;
  auto* c_split = app.add_subcommand("split", "Sequence-level train/test split of a manifest");
  c_split->add_option("--manifest", split_manifest)->required()->check(CLI::ExistingFile);
  c_split->add_option("--train-frac", train_frac)->capture_default_str();
  c_split->add_option("--seed", split_seed)->capture_default_str();
  c_split->add_flag("--stratify", stratify, "Split within each condition tag");
  c_split->add_option("--out-dir", split_out, "Directory for manifest.train.json and manifest.test.json");
  c_split->callback([&] { code = cmd_split(split_manifest, train_frac, split_seed, stratify, split_out); });

  std::string config;
  auto* c_run = app.add_subcommand("run", "Run the whole pipeline from a TOML config");
  c_run->add_option("--config", config)->required();
  c_run->callback([&] { code = cmd_run(config); });

  std::string serve_manifest, host = "127.0.0.1", audit_log, ui;
  int port = 8630;
  auto* c_serve = app.add_subcommand("serve", "Serve items and record audits over HTTP");
  c_serve->add_option("--manifest", serve_manifest, "manifest.json or its directory")->required();
  c_serve->add_option("--host", host)->capture_default_str();
  c_serve->add_option("--port", port)->capture_default_str();
  c_serve->add_option("--audit-log", audit_log, "JSONL audit log (default <manifest dir>/audits.jsonl)");
  c_serve->add_option("--ui", ui, "Static UI bundle directory");
  c_serve->callback([&] { code = cmd_serve(serve_manifest, host, port, audit_log, ui); });

  StamArgs stam;
  auto* c_stam = app.add_subcommand("stam", "Importance maps and alignment loss for an RGB/event feature pair");
  c_stam->add_option("--rgb,--rgb-features", stam.rgb_features, "TNS1 archive with 'features' [t,h,w,d]");
  c_stam->add_option("--event,--event-features", stam.event_features, "TNS1 archive with 'features' [t,h,w,d]");
  c_stam->add_option("--rgb-image", stam.rgb_images, "RGB keyframe PNG (repeatable)");
  c_stam->add_option("--event-slices", stam.event_slices, "Slice archive from `forge ingest`");
  c_stam->add_option("--patch", stam.patch)->capture_default_str();
  c_stam->add_option("--dim", stam.dim)->capture_default_str();
  c_stam->add_option("--seed", stam.seed)->capture_default_str();
  c_stam->add_option("--lambda", stam.lambda)->capture_default_str();
  c_stam->add_option("--l-llm", stam.l_llm, "Language-model loss to combine with")->capture_default_str();
  c_stam->add_option("--maps", stam.maps, "Write weights and discrepancy maps to a TNS1 archive");
  c_stam->add_option("--tc", stam.tc, "Lattice time steps (default: event grid length)");
  c_stam->add_option("--hc", stam.hc, "Lattice height (default: smaller grid height)");
  c_stam->add_option("--wc", stam.wc, "Lattice width (default: smaller grid width)");
  c_stam->add_option("--report,--out", stam.out, "Report JSON (default stdout)");
  c_stam->callback([&] { code = cmd_stam(stam); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  } catch (const forge::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return code;
}
