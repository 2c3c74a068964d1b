#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "forge/common/fileio.hpp"
#include "forge/fusion/fused_json.hpp"
#include "forge/graph/caption_parser.hpp"
#include "forge/graph/graph_json.hpp"
#include "support/caption_gen.hpp"
#include "support/fusion_oracle.hpp"

using nlohmann::json;
using namespace forge;

namespace {

// Checks the subset of JSON Schema the shipped files use: object keys against
// required/properties/additionalProperties, array items, enum, const, and $ref into either file.
class SubsetChecker {
 public:
  SubsetChecker() {
    docs_["urn:forge:scene_graph:1"] = load("scene_graph.schema.json");
    docs_["urn:forge:fused_graph:1"] = load("fused_graph.schema.json");
  }

  std::vector<std::string> check(const std::string& doc_id, const json& instance) {
    errors_.clear();
    walk(doc_id, docs_.at(doc_id), instance, "$");
    return errors_;
  }

 private:
  static json load(const std::string& name) {
    return json::parse(forge::read_file(std::string(FORGE_SCHEMA_DIR) + "/" + name));
  }

  void walk(const std::string& doc, const json& s, const json& v, const std::string& path) {
    if (s.contains("$ref")) {
      std::string ref = s["$ref"], target = doc;
      const auto hash = ref.find('#');
      if (hash > 0) target = ref.substr(0, hash);
      const json& node = docs_.at(target).at(json::json_pointer(ref.substr(hash + 1)));
      walk(target, node, v, path);
      return;
    }
    if (s.contains("const") && v != s["const"]) errors_.push_back(path + ": const");
    if (s.contains("enum") && std::find(s["enum"].begin(), s["enum"].end(), v) == s["enum"].end())
      errors_.push_back(path + ": enum " + v.dump());
    if (v.is_object()) {
      for (const auto& r : s.value("required", json::array()))
        if (!v.contains(r.get<std::string>())) errors_.push_back(path + ": missing " + r.get<std::string>());
      const json props = s.value("properties", json::object());
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (props.contains(it.key()))
          walk(doc, props[it.key()], it.value(), path + "." + it.key());
        else if (s.value("additionalProperties", json(true)) == json(false))
          errors_.push_back(path + ": unexpected " + it.key());
        else if (s.contains("additionalProperties") && s["additionalProperties"].is_object())
          walk(doc, s["additionalProperties"], it.value(), path + "." + it.key());
      }
    }
    if (v.is_array() && s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) walk(doc, s["items"], v[i], path + "[" + std::to_string(i) + "]");
  }

  std::map<std::string, json> docs_;
  std::vector<std::string> errors_;
};

}  // namespace

TEST(Schemas, GeneratedSceneGraphsConform) {
  SubsetChecker checker;
  fixtures::CaptionGenerator gen(77);
  for (int i = 0; i < 200; ++i) {
    auto g = forge::graph::parse_caption_to_graph(gen.next().text, forge::graph::Modality::rgb);
    const auto errs = checker.check("urn:forge:scene_graph:1", forge::graph::to_json(g));
    ASSERT_TRUE(errs.empty()) << errs.front();
  }
}

TEST(Schemas, FusedGraphsFromEveryCellConform) {
  SubsetChecker checker;
  for (const auto& c : fixtures::all_cells()) {
    auto cg = fixtures::build_cell(c);
    const auto fused = forge::fusion::fuse_graphs(cg.g_e, cg.g_r);
    const auto errs = checker.check("urn:forge:fused_graph:1", forge::fusion::to_json(fused));
    EXPECT_TRUE(errs.empty()) << c.name() << ": " << errs.front();
    for (const auto* g : {&cg.g_e, &cg.g_r}) {
      const auto e2 = checker.check("urn:forge:scene_graph:1", forge::graph::to_json(*g));
      EXPECT_TRUE(e2.empty()) << c.name() << ": " << e2.front();
    }
  }
}

TEST(Schemas, CheckerRejectsDrift) {
  SubsetChecker checker;
  auto j = forge::graph::to_json(
      forge::graph::parse_caption_to_graph("Move(subject=car, motion=forward)\n", forge::graph::Modality::event));
  j["extra"] = 1;
  j["entities"][0].erase("place");
  j["modality"] = "lidar";
  EXPECT_EQ(checker.check("urn:forge:scene_graph:1", j).size(), 3u);
}
