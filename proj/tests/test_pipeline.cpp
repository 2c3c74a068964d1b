#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "forge/common/error.hpp"
#include "forge/common/fileio.hpp"
#include "forge/common/tensor_archive.hpp"
#include "forge/fusion/fused_json.hpp"
#include "forge/pipeline/config.hpp"
#include "forge/pipeline/manifest.hpp"
#include "forge/pipeline/pipeline.hpp"
#include "support/pipeline_fixture.hpp"
#include "support/temp_dir.hpp"

using namespace forge;
using namespace forge::pipeline;
namespace fs = std::filesystem;

namespace {

struct MockRun {
  std::shared_ptr<gateway::MockTransport> mock = std::make_shared<gateway::MockTransport>();
  std::unique_ptr<gateway::Gateway> gw;

  explicit MockRun(const PipelineConfig& cfg) {
    gateway::GatewayOptions opt;
    opt.cache_dir = cfg.cache_root();
    opt.sleep = [](std::chrono::milliseconds) {};
    gw = std::make_unique<gateway::Gateway>(mock, opt);
  }
};

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override { ::unsetenv("FORGE_CACHE_DIR"); }
  fixtures::TempDir dir{"forge_pipe"};
};

DatasetManifest manifest_of(std::vector<std::pair<std::string, std::string>> item_seq) {
  DatasetManifest m;
  m.dataset = "d";
  m.pipeline_version = std::string(kPipelineVersion);
  m.config_hash = "h";
  for (auto& [item, seq] : item_seq) {
    ManifestItem it;
    it.item_id = item;
    it.sequence_id = seq;
    m.items.push_back(it);
  }
  m.split_counts["all"] = m.items.size();
  return m;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  auto c = parse_config("[window]\nn = 6\n[fusion]\ntau = 0.5\n[synth]\nmode = \"external\"\n", "/base");
  EXPECT_EQ(c.n, 6u);
  EXPECT_EQ(c.frame_ms, 33u);
  EXPECT_DOUBLE_EQ(c.tau, 0.5);
  EXPECT_EQ(c.synth_mode, "external");
  EXPECT_EQ(c.index_path(), fs::path("/base/keyframes.csv"));
  EXPECT_EQ(c.resolve("/abs/x"), fs::path("/abs/x"));
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("[nope]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[window]\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[window]\nn = \"four\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[window]\nn = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("[window\n"), ConfigError);
  EXPECT_THROW(parse_config("top = 1\n"), ConfigError);
}

TEST_F(PipelineTest, ValidationRejectsBadValues) {
  const auto path = fixtures::write_pipeline_fixture(dir.path());
  auto ok = load_config(path);
  EXPECT_NO_THROW(ok.validate());
  auto bad = ok;
  bad.tau = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.n_slices = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.gateway_mode = "http";
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.index = "missing.csv";
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Config, HashIgnoresKeyOrderAndWorkers) {
  auto a = parse_config("[window]\nn = 4\nframe_ms = 33\n[run]\nworkers = 1\n");
  auto b = parse_config("[run]\nworkers = 8\n[window]\nframe_ms = 33\nn = 4\n", "/elsewhere");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 64u);
  auto c = parse_config("[window]\nn = 5\n");
  EXPECT_NE(a.hash(), c.hash());
}

TEST(KeyframeIndex, Parse) {
  auto rows = parse_keyframe_index(
      "# comment\nitem_id,sequence_id,keyframe_ts,events,rgb,event_hints,rgb_hints,condition\n"
      "a,s1,1000,e.csv,r.png,,,night\r\n\nb,s2,2000,e.evs,r.png,eh,rh,\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].condition, "night");
  EXPECT_EQ(rows[0].keyframe_ts, 1000);
  EXPECT_FALSE(rows[1].condition);
  EXPECT_EQ(rows[1].rgb_hints, "rh");
}

TEST(KeyframeIndex, ErrorsCarryLine) {
  const std::string header = "item_id,sequence_id,keyframe_ts,events,rgb,event_hints,rgb_hints\n";
  auto line_of = [](const std::string& csv) -> std::size_t {
    try {
      parse_keyframe_index(csv);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("item_id,keyframe_ts\n"), 1u);
  EXPECT_EQ(line_of(header + "a,s,12x,e,r,,\n"), 2u);
  EXPECT_EQ(line_of(header + "a,s,1,e,r,,\nb,s,1,e\n"), 3u);
  EXPECT_EQ(line_of(header + "a,s,1,e,r,,\na,s,2,e,r,,\n"), 3u);
  EXPECT_EQ(line_of(""), 1u);
}

TEST(Split, TenSequences) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (int s = 0; s < 10; ++s)
    for (int k = 0; k <= s % 3; ++k) rows.push_back({"s" + std::to_string(s) + "_" + std::to_string(k), "s" + std::to_string(s)});
  auto m = manifest_of(rows);
  auto r = split_dataset(m, 0.8, 1);
  std::set<std::string> tr, te;
  for (auto& it : r.train.items) tr.insert(it.sequence_id);
  for (auto& it : r.test.items) te.insert(it.sequence_id);
  EXPECT_EQ(tr.size(), 8u);
  EXPECT_EQ(te.size(), 2u);
  EXPECT_EQ(r.train.items.size() + r.test.items.size(), m.items.size());
  EXPECT_TRUE(r.train.counts_consistent());
  EXPECT_TRUE(r.test.counts_consistent());
}

TEST(Split, DisjointOverSeeds) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::vector<std::pair<std::string, std::string>> rows;
    const int n_seq = 2 + int(rng() % 12);
    const char* conds[] = {"day", "night", "fog"};
    for (int i = 0; i < 40; ++i) {
      const int s = int(rng() % n_seq);
      rows.push_back({"i" + std::to_string(i), "seq" + std::to_string(s)});
    }
    auto m = manifest_of(rows);
    for (auto& it : m.items) it.condition = conds[std::stoi(it.sequence_id.substr(3)) % 3];
    for (bool stratify : {false, true}) {
      const double frac = 0.1 + 0.8 * double(rng() % 100) / 100.0;
      auto r = split_dataset(m, frac, seed, stratify);
      std::set<std::string> tr, te;
      for (auto& it : r.train.items) tr.insert(it.sequence_id);
      for (auto& it : r.test.items) te.insert(it.sequence_id);
      for (auto& s : tr) EXPECT_FALSE(te.count(s)) << s;
      EXPECT_FALSE(r.train.items.empty());
      EXPECT_FALSE(r.test.items.empty());
      EXPECT_EQ(r.train.items.size() + r.test.items.size(), m.items.size());
      EXPECT_EQ(to_json(split_dataset(m, frac, seed, stratify).train), to_json(r.train));
    }
  }
}

TEST(Split, Errors) {
  auto one = manifest_of({{"a", "s"}, {"b", "s"}});
  EXPECT_THROW(split_dataset(one, 0.8, 1), std::invalid_argument);
  auto two = manifest_of({{"a", "s"}, {"b", "t"}});
  EXPECT_THROW(split_dataset(two, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(split_dataset(two, 0.0, 1), std::invalid_argument);
}

TEST(Manifest, JsonRoundTripAndCounts) {
  auto m = manifest_of({{"a", "s"}, {"b", "t"}});
  m.items[0].condition = "night";
  m.items[0].outputs.slice_renders = {"r/0.png"};
  EXPECT_EQ(manifest_from_json(to_json(m)), m);
  auto j = to_json(m);
  j["split_counts"]["all"] = 5;
  EXPECT_THROW(manifest_from_json(j), SchemaError);
  EXPECT_THROW(manifest_from_json(nlohmann::json::object()), SchemaError);
}

TEST_F(PipelineTest, EndToEndMock) {
  auto cfg = load_config(fixtures::write_pipeline_fixture(dir.path()));
  MockRun run(cfg);
  auto r = run_pipeline(cfg, *run.gw);
  EXPECT_EQ(r.exit_code(), 0);
  ASSERT_EQ(r.manifest.items.size(), 3u);
  EXPECT_EQ(r.processed, 3u);
  EXPECT_GT(r.gateway_calls, 0u);
  // Frozen after inspecting the first run: the config hash depends only on effective settings.
  EXPECT_EQ(r.manifest.config_hash, cfg.hash());
  EXPECT_EQ(cfg.hash(), "a76afb2c3d70e40cbd7c78dde712e21310ed59ea95802543f68fb2973a7f0c2a");
  // Content-addressed item files, frozen from the same inspected run.
  EXPECT_EQ(r.manifest.items[0].outputs.items,
            "stages/items/81fedff8312a540ec3b3545fea1233a7a838d0c45c0f9fcdda8c3350f8592d14.jsonl");
  EXPECT_EQ(r.manifest.items[1].outputs.items,
            "stages/items/d133ec32f77695236dc1454aeeac0dd972b5c96405797faae7c72992ef531f84.jsonl");
  EXPECT_EQ(r.manifest.items[2].outputs.items,
            "stages/items/c68c76ccb2e505e12e8e48328fbd6973e07b755c2d320f59f5d680600d60872a.jsonl");

  const auto out = cfg.output_root();
  const auto on_disk = load_manifest(out / "manifest.json");
  EXPECT_EQ(on_disk, r.manifest);
  for (const auto& it : on_disk.items) {
    for (const auto& rel : {it.outputs.slices, it.outputs.keyframe, it.outputs.event_graph, it.outputs.rgb_graph,
                            it.outputs.fused, it.outputs.items})
      EXPECT_TRUE(fs::exists(out / rel)) << rel;
    EXPECT_EQ(it.outputs.slice_renders.size(), 3u);
    EXPECT_EQ(it.source_files.size(), 4u);
  }

  // The dark keyframe: low light reported, event motion and colour anchor the fused graph.
  const auto& night = on_disk.items[1];
  ASSERT_EQ(night.item_id, "seq_a_001");
  const auto fused = fusion::deserialize_fused(read_file(out / night.outputs.fused));
  EXPECT_TRUE(fused.report.severe);
  const auto* color = fused.find_fact("attr:car.color@G_e");
  ASSERT_NE(color, nullptr);
  EXPECT_EQ(color->confidence, fusion::Confidence::high);
  const std::string items = read_file(out / night.outputs.items);
  EXPECT_NE(items.find("black car"), std::string::npos) << items;

  // Unchanged rerun: everything skipped, no upstream traffic.
  MockRun again(cfg);
  auto r2 = run_pipeline(cfg, *again.gw);
  EXPECT_EQ(r2.gateway_calls, 0u);
  EXPECT_EQ(again.mock->calls(), 0u);
  EXPECT_EQ(r2.skipped, 3u);
  EXPECT_EQ(r2.manifest, r.manifest);
}

TEST_F(PipelineTest, FreshOutputReusesGatewayCache) {
  auto cfg = load_config(fixtures::write_pipeline_fixture(dir.path()));
  cfg.cache_dir = (dir / "shared_cache").string();
  MockRun first(cfg);
  run_pipeline(cfg, *first.gw);
  fs::remove_all(cfg.output_root());
  MockRun second(cfg);
  auto r = run_pipeline(cfg, *second.gw);
  EXPECT_EQ(r.processed, 3u);
  EXPECT_EQ(r.gateway_calls, 0u);
}

TEST_F(PipelineTest, CorruptedInputIsQuarantined) {
  auto cfg = load_config(fixtures::write_pipeline_fixture(dir.path()));
  write_file_atomic(dir / "inputs/seq_b_000.csv", "t,x,y,p\n10,1,1,1\nnot,an,event,row\n");
  MockRun run(cfg);
  auto r = run_pipeline(cfg, *run.gw);
  EXPECT_EQ(r.exit_code(), 2);
  EXPECT_EQ(r.manifest.items.size(), 2u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].item_id, "seq_b_000");
  EXPECT_EQ(r.failures[0].stage, "events");
  const auto failed = nlohmann::json::parse(read_file(cfg.output_root() / "failed/seq_b_000.json"));
  EXPECT_EQ(failed["stage"], "events");

  // Repairing the input lets a rerun finish only that item.
  fixtures::write_pipeline_fixture(dir.path());
  MockRun again(cfg);
  auto r2 = run_pipeline(cfg, *again.gw);
  EXPECT_EQ(r2.exit_code(), 0);
  EXPECT_EQ(r2.processed, 1u);
  EXPECT_EQ(r2.skipped, 2u);
  EXPECT_FALSE(fs::exists(cfg.output_root() / "failed/seq_b_000.json"));
}

TEST_F(PipelineTest, UndecodableKeyframeFailsAtRgbStage) {
  auto cfg = load_config(fixtures::write_pipeline_fixture(dir.path()));
  write_file_atomic(dir / "inputs/seq_a_000.png", "not a png");
  MockRun run(cfg);
  auto r = run_pipeline(cfg, *run.gw);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].stage, "rgb");
}

TEST_F(PipelineTest, SliceArchiveLayout) {
  auto cfg = load_config(fixtures::write_pipeline_fixture(dir.path()));
  MockRun run(cfg);
  auto r = run_pipeline(cfg, *run.gw);
  const auto ar = TensorArchive::parse(read_file(cfg.output_root() / r.manifest.items[0].outputs.slices));
  const auto& counts = ar.get("counts");
  EXPECT_EQ(counts.dims, (std::vector<std::uint64_t>{3, 2, 24, 32}));
  const auto window = ar.get("window").as<std::int64_t>();
  EXPECT_EQ(window[0], 1'000'000 - 66'000);
  EXPECT_EQ(window[1], 1'000'000 + 66'000);
}
