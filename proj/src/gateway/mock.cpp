#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "forge/gateway/gateway.hpp"
#include "forge/graph/caption_parser.hpp"

namespace forge::gateway {

using nlohmann::json;

namespace {

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

int likert(double ratio) { return static_cast<int>(std::lround(5.0 * std::clamp(ratio, 0.0, 1.0))); }

std::string mock_judge(std::string_view prompt) {
  const auto reference = extract_block(prompt, "reference").value_or("");
  const auto candidate = extract_block(prompt, "candidate").value_or("");
  const auto gold = json::parse(extract_block(prompt, "gold").value_or("{}"));

  const auto cw = words(candidate);
  const std::set<std::string> ref_set = [&] {
    auto w = words(reference);
    return std::set<std::string>(w.begin(), w.end());
  }();
  const std::set<std::string> cand_set(cw.begin(), cw.end());

  std::size_t common = 0;
  for (const auto& w : cand_set) common += ref_set.count(w);
  const double precision = cand_set.empty() ? 0.0 : static_cast<double>(common) / cand_set.size();
  const double recall = ref_set.empty() ? 0.0 : static_cast<double>(common) / ref_set.size();
  const double f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);

  json acc = json::object();
  for (auto it = gold.begin(); it != gold.end(); ++it) {
    const auto value_words = words(it.value().get<std::string>());
    bool stated = !value_words.empty();
    for (const auto& w : value_words) stated = stated && cand_set.count(w) > 0;
    acc[it.key()] = stated;
  }
  json reply = {{"ci", likert(precision)}, {"do", likert(recall)}, {"cu", likert(f1)}, {"acc_attrs", acc}};
  return reply.dump();
}

// Keeps, in order, each line that still parses when appended to the lines kept so far.
std::string mock_graph_parse(std::string_view prompt) {
  const std::string caption = extract_block(prompt, "caption").value_or("");
  std::istringstream in(caption);
  std::string line;
  std::string kept;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string trial = kept + line + "\n";
    try {
      graph::parse_caption_to_graph(trial, graph::Modality::rgb);
      kept = trial;
    } catch (const Error&) {
    }
  }
  return kept;
}

std::string luma_degradation(double mean_luma) {
  if (mean_luma < 40.0) return "deg(scene, low_light, severe)\n";
  if (mean_luma < 80.0) return "deg(scene, low_light, mild)\n";
  if (mean_luma > 225.0) return "deg(scene, overexposure, severe)\n";
  if (mean_luma > 200.0) return "deg(scene, overexposure, mild)\n";
  return {};
}

// Draft caption in the line grammar: the hint lines, plus a frame-level degradation read
// off the RGB brightness statistics.
std::string mock_caption(std::string_view prompt) {
  std::string out = extract_block(prompt, "hints").value_or("");
  if (!out.empty() && out.back() != '\n') out += "\n";
  if (extract_block(prompt, "modality").value_or("") == "rgb") {
    if (auto stats = extract_block(prompt, "image_stats")) {
      const auto j = json::parse(*stats, nullptr, false);
      if (j.is_object() && j.contains("mean_luma") && j["mean_luma"].is_number())
        out += luma_degradation(j["mean_luma"].get<double>());
    }
  }
  return out;
}

std::string mock_paraphrase(std::string_view prompt) {
  std::string text = extract_block(prompt, "text").value_or("");
  if (text.empty()) return text;
  text[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(text[0])));
  return "In this frame, " + text;
}

}  // namespace

void MockTransport::inject_failures(std::vector<int> statuses) {
  std::lock_guard lock(mu_);
  failures_.insert(failures_.end(), statuses.begin(), statuses.end());
}

TransportResponse MockTransport::send(const GatewayRequest& req) {
  ++calls_;
  {
    std::lock_guard lock(mu_);
    if (!failures_.empty()) {
      const int status = failures_.front();
      failures_.pop_front();
      return {status, "injected failure"};
    }
  }
  if (mode_ == Mode::malformed) return {200, "Scores: CI=four, DO=?, CU=unknown"};
  switch (req.task) {
    case Task::caption: return {200, mock_caption(req.prompt)};
    case Task::graph_parse: return {200, mock_graph_parse(req.prompt)};
    case Task::paraphrase: return {200, mock_paraphrase(req.prompt)};
    case Task::judge: return {200, mock_judge(req.prompt)};
  }
  return {400, "unknown task"};
}

}  // namespace forge::gateway
