#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <random>

#include "forge/common/error.hpp"
#include "forge/common/fileio.hpp"
#include "forge/graph/canonical.hpp"
#include "forge/graph/caption_parser.hpp"
#include "forge/graph/graph_json.hpp"
#include "support/caption_gen.hpp"

using namespace forge;
using namespace forge::graph;

TEST(Canonical, Rules) {
  EXPECT_EQ(canonicalize_entity("The City Bus"), "city_bus");
  EXPECT_EQ(canonicalize_entity("cars"), "car");
  EXPECT_EQ(canonicalize_entity("the car"), "car");
  EXPECT_EQ(canonicalize_entity("  Traffic   Lights "), "traffic_light");
  EXPECT_EQ(canonicalize_entity("PEOPLE"), "person");
  EXPECT_THROW(canonicalize_entity("the"), Error);
  EXPECT_THROW(canonicalize_entity("  "), Error);
}

TEST(Canonical, IdempotentAndCaseInsensitiveOverFuzz) {
  std::mt19937_64 rng(1);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJ_ -'0123456789";
  const std::vector<std::string> seeds{"the cars", "A Dog", "buses", "an apple", "The Traffic Lights", "people"};
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    std::string w = i < int(seeds.size()) ? seeds[i] : "";
    const int len = 1 + int(rng() % 14);
    while (int(w.size()) < len) w.push_back(alphabet[rng() % alphabet.size()]);
    std::string once;
    try {
      once = canonicalize_entity(w);
    } catch (const Error&) {
      continue;
    }
    ++checked;
    EXPECT_EQ(canonicalize_entity(once), once) << w;
    std::string upper = w;
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    EXPECT_EQ(canonicalize_entity(upper), once) << w;
  }
  EXPECT_GT(checked, 400);
}

TEST(Predicate, LiteralMoveExample) {
  auto p = parse_predicate("Move(subject=car, motion=forward, place=lane_center)");
  EXPECT_EQ(p.verb, "Move");
  EXPECT_EQ(p.args, (std::map<std::string, std::string>{{"subject", "car"}, {"motion", "forward"},
                                                         {"place", "lane_center"}}));
  EXPECT_TRUE(p.attrs.empty());
}

TEST(Predicate, MinimalAndExtras) {
  auto p = parse_predicate("Stand(subject=pedestrian)");
  EXPECT_EQ(p.args.size(), 1u);
  auto q = parse_predicate("Wait(speed=slow, subject=bus)");
  EXPECT_EQ(q.attrs.at("speed"), "slow");
  EXPECT_EQ(render_predicate(q), "Wait(subject=bus, speed=slow)");
}

TEST(Predicate, ErrorsCarryOffsets) {
  try {
    parse_predicate("Move(subject=car, subject=bus)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 18u);
  }
  try {
    parse_predicate("Move(subject=car");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 16u);
  }
  EXPECT_THROW(parse_predicate("Move(motion=forward)"), ParseError);
  EXPECT_THROW(parse_predicate("Move(Subject=car)"), ParseError);
}

TEST(Caption, Composition) {
  auto g = parse_caption_to_graph("Move(subject=car, motion=forward, place=lane_center)\ncar.color=white\n",
                                  Modality::event);
  ASSERT_EQ(g.entities().size(), 1u);
  EXPECT_EQ(g.entities()[0].attributes.at("color"), "white");
  ASSERT_EQ(g.predicates().size(), 1u);
  EXPECT_EQ(g.predicates()[0].temporal_index, 0);
}

TEST(Caption, SceneDegradation) {
  auto g = parse_caption_to_graph("deg(scene, overexposure, severe)\n", Modality::rgb);
  const auto* s = g.find("scene");
  ASSERT_NE(s, nullptr);
  ASSERT_EQ(s->degradations.size(), 1u);
  EXPECT_EQ(s->degradations[0], (DegradationLabel{DegradationKind::overexposure, "", Severity::severe}));
}

TEST(Caption, UnknownDegradationKindIsTagged) {
  auto g = parse_caption_to_graph("deg(scene, rain, mild)\n", Modality::rgb);
  EXPECT_EQ(g.find("scene")->degradations[0].kind, DegradationKind::other);
  EXPECT_EQ(g.find("scene")->degradations[0].tag, "rain");
}

TEST(Caption, ErrorsCarryLine) {
  try {
    parse_caption_to_graph("car.color=red\nrel(car, spatial, ghost)\n", Modality::rgb);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    parse_caption_to_graph("car.color=red\n\ncar.color=blue\n", Modality::rgb);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_caption_to_graph("rel(car, beside, bus)\n", Modality::rgb), ParseError);
  EXPECT_THROW(parse_caption_to_graph("deg(car, glare, extreme)\n", Modality::rgb), ParseError);
}

TEST(Caption, GoldenFixture) {
  const std::string dir = FORGE_TEST_DATA;
  auto g = parse_caption_to_graph(read_file(dir + "/golden_caption.txt"), Modality::event, 1'000'000);
  EXPECT_EQ(serialize_graph(g), read_file(dir + "/golden_graph.json"));
}

TEST(Caption, GeneratedDocumentsRoundTrip) {
  fixtures::CaptionGenerator gen(2024);
  for (int i = 0; i < 1000; ++i) {
    auto doc = gen.next();
    SceneGraph g;
    ASSERT_NO_THROW(g = parse_caption_to_graph(doc.text, Modality::event)) << doc.text;
    ASSERT_EQ(render_caption(g), doc.canonical) << doc.text;
    auto again = parse_caption_to_graph(render_caption(g), Modality::event);
    EXPECT_EQ(serialize_graph(again), serialize_graph(g));
  }
}

TEST(Caption, MutationFuzzParsesOrPositions) {
  fixtures::CaptionGenerator gen(7);
  std::mt19937_64 rng(8);
  const std::string junk = "(),=._ #aZ9\n";
  for (int i = 0; i < 500; ++i) {
    std::string text = gen.next().text;
    if (text.empty()) continue;
    const std::size_t at = rng() % text.size();
    if (rng() % 2) text[at] = junk[rng() % junk.size()];
    else text.erase(at, 1);
    try {
      auto g = parse_caption_to_graph(text, Modality::rgb);
      for (const auto& e : g.edges()) EXPECT_NE(g.find(e.from_id), nullptr);
    } catch (const ParseError& e) {
      EXPECT_GE(e.line(), 1u);
    }
  }
}

TEST(GraphJson, EmptyGraphDocument) {
  auto g = SceneGraph::create(Modality::rgb, {}, {}, {});
  EXPECT_EQ(serialize_graph(g),
            "{\n  \"edges\": [],\n  \"entities\": [],\n  \"frame_ref\": 0,\n  \"modality\": \"rgb\",\n"
            "  \"predicates\": [],\n  \"schema\": \"forge.scene_graph/1\"\n}\n");
  EXPECT_EQ(deserialize_graph(serialize_graph(g)), g);
}

TEST(GraphJson, RoundTripGeneratedGraphs) {
  fixtures::CaptionGenerator gen(99);
  for (int i = 0; i < 1000; ++i) {
    auto g = parse_caption_to_graph(gen.next().text, i % 2 ? Modality::rgb : Modality::event, i * 1000);
    const std::string once = serialize_graph(g);
    EXPECT_EQ(deserialize_graph(once), g);
    EXPECT_EQ(serialize_graph(deserialize_graph(once)), once);
  }
}

TEST(GraphJson, SchemaErrorsNamePaths) {
  auto doc = nlohmann::json::parse(read_file(std::string(FORGE_TEST_DATA) + "/golden_graph.json"));
  auto bad = doc;
  bad["entities"][1]["degradations"][0]["severity"] = "extreme";
  try {
    graph_from_json(bad);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.path(), "$.entities[1].degradations[0].severity");
  }
  bad = doc;
  bad["edges"][0]["to"] = "ghost";
  EXPECT_THROW(graph_from_json(bad), SchemaError);
  bad = doc;
  bad["entities"][0]["canonical_name"] = "Bus";
  EXPECT_THROW(graph_from_json(bad), SchemaError);
  EXPECT_THROW(deserialize_graph("{not json"), SchemaError);
}

TEST(SceneGraph, ReferentialIntegrityEnforced) {
  EntityNode car{"car", "car", "", {}, std::nullopt, {}};
  Predicate p{"Move", {{"subject", "bus"}}, {}, std::nullopt};
  EXPECT_THROW(SceneGraph::create(Modality::event, {car}, {p}, {}), SchemaError);
  EXPECT_THROW(SceneGraph::create(Modality::event, {car, car}, {}, {}), SchemaError);
  RelationEdge e{"car", "bus", RelationKind::spatial, "spatial", {}};
  EXPECT_THROW(SceneGraph::create(Modality::event, {car}, {}, {e}), SchemaError);
}
