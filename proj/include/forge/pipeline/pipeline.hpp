#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/gateway/gateway.hpp"
#include "forge/pipeline/config.hpp"
#include "forge/pipeline/manifest.hpp"

namespace forge::pipeline {

/// One row of the keyframe index CSV
/// (`item_id,sequence_id,keyframe_ts,events,rgb,event_hints,rgb_hints[,condition]`).
struct KeyframeEntry {
  std::string item_id;
  std::string sequence_id;
  std::int64_t keyframe_ts = 0;
  std::string events;
  std::string rgb;
  std::string event_hints;
  std::string rgb_hints;
  std::optional<std::string> condition;
};

/// Throws forge::ParseError with the line number.
std::vector<KeyframeEntry> parse_keyframe_index(std::string_view csv);

struct ItemFailure {
  std::string item_id;
  std::string stage;
  std::string error;
};

struct RunResult {
  DatasetManifest manifest;
  std::vector<ItemFailure> failures;
  std::size_t processed = 0;
  std::size_t skipped = 0;
  std::size_t gateway_calls = 0;

  int exit_code() const { return failures.empty() ? 0 : 2; }
};

/// Builds the transport named by the config (mock or http).
std::shared_ptr<gateway::Transport> make_transport(const PipelineConfig& config);

/// Runs every keyframe through window, slices, captions, graphs, fusion and synthesis.
/// Writes `<output>/manifest.json`; failed items go to `<output>/failed/<id>.json` and are
/// left out of the manifest. Completed items are skipped on rerun.
RunResult run_pipeline(const PipelineConfig& config, gateway::Gateway& gw);

}  // namespace forge::pipeline

namespace forge::event {
class SliceStack;
struct EventWindow;
}  // namespace forge::event

namespace forge {
class TensorArchive;
}

namespace forge::pipeline {

/// TNS1 archive holding `counts` (u32 [N,2,H,W]), `window` (i64 [t_start, t_end, keyframe])
/// and `slice_meta` (i64 [t_start, slice_us, pad_us]).
TensorArchive slice_archive(const event::SliceStack& stack, const event::EventWindow& window);

}  // namespace forge::pipeline
