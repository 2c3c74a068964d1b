#include "forge/graph/canonical.hpp"

#include <algorithm>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "forge/common/error.hpp"

namespace forge::graph {

namespace {

// Plural -> singular for nouns common in driving and street scenes. No value is also a key,
// which keeps singularization idempotent.
const std::unordered_map<std::string_view, std::string_view>& plural_table() {
  static const std::unordered_map<std::string_view, std::string_view> table = {
      {"animals", "animal"},   {"bags", "bag"},           {"balls", "ball"},
      {"barriers", "barrier"}, {"benches", "bench"},      {"bicycles", "bicycle"},
      {"bikes", "bike"},       {"birds", "bird"},         {"boxes", "box"},
      {"bridges", "bridge"},   {"buildings", "building"}, {"buses", "bus"},
      {"busses", "bus"},       {"cars", "car"},           {"cats", "cat"},
      {"chairs", "chair"},     {"children", "child"},     {"clouds", "cloud"},
      {"cones", "cone"},       {"cows", "cow"},           {"crosswalks", "crosswalk"},
      {"curbs", "curb"},       {"cyclists", "cyclist"},   {"dogs", "dog"},
      {"doors", "door"},       {"faces", "face"},         {"feet", "foot"},
      {"fences", "fence"},     {"flowers", "flower"},     {"geese", "goose"},
      {"glasses", "glass"},    {"hands", "hand"},         {"horses", "horse"},
      {"houses", "house"},     {"intersections", "intersection"},
      {"knives", "knife"},     {"lamps", "lamp"},         {"lanes", "lane"},
      {"leaves", "leaf"},      {"lights", "light"},       {"lines", "line"},
      {"markings", "marking"}, {"men", "man"},            {"mice", "mouse"},
      {"motorcycles", "motorcycle"},                      {"mountains", "mountain"},
      {"objects", "object"},   {"pedestrians", "pedestrian"},
      {"people", "person"},    {"persons", "person"},     {"plants", "plant"},
      {"poles", "pole"},       {"riders", "rider"},       {"roads", "road"},
      {"scooters", "scooter"}, {"shelves", "shelf"},      {"sidewalks", "sidewalk"},
      {"signals", "signal"},   {"signs", "sign"},         {"streets", "street"},
      {"stripes", "stripe"},   {"strollers", "stroller"}, {"tables", "table"},
      {"taxis", "taxi"},       {"teeth", "tooth"},        {"trains", "train"},
      {"trees", "tree"},       {"trucks", "truck"},       {"tunnels", "tunnel"},
      {"umbrellas", "umbrella"},                          {"vans", "van"},
      {"vehicles", "vehicle"}, {"walls", "wall"},         {"wheels", "wheel"},
      {"windows", "window"},   {"women", "woman"},
  };
  return table;
}

bool is_article(std::string_view w) { return w == "the" || w == "a" || w == "an"; }

}  // namespace

std::string canonicalize_entity(std::string_view surface) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char raw : surface) {
    const auto c = static_cast<unsigned char>(raw);
    if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      current.push_back(static_cast<char>(c));
    } else if (c == '\'') {
      // possessive marker: "driver's" -> "drivers"
    } else {
      flush();
    }
  }
  flush();

  auto first = std::find_if_not(words.begin(), words.end(), [](const std::string& w) { return is_article(w); });
  words.erase(words.begin(), first);
  if (words.empty()) throw Error("canonicalize_entity: '" + std::string(surface) + "' is empty after normalization");

  const auto& table = plural_table();
  if (auto it = table.find(words.back()); it != table.end()) words.back() = std::string(it->second);

  std::string out = words.front();
  for (std::size_t i = 1; i < words.size(); ++i) {
    out += '_';
    out += words[i];
  }
  return out;
}

}  // namespace forge::graph
