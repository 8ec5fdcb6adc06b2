#include <doctest.h>

#include "sunn/image_io.hpp"
#include "sunn/pipeline.hpp"
#include "sunn/synthetic.hpp"
#include "temp_dir.hpp"

using namespace sunn;
using sunn::testing::TempDir;

namespace {

const std::set<Stage> kAll = {Stage::Edges, Stage::PRMap, Stage::Popout, Stage::Saliency, Stage::Bilayer};

PipelineConfig small_config() {
  PipelineConfig c;
  c.topology.radius = 3;
  c.topology.seed = 11;
  return c;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("square fixture writes the full artifact set") {
    TempDir tmp;
    const auto signals = synthetic::bright_square();
    ScalarField gray(signals.dims);
    gray.values = signals.values;
    io::save_map(gray, tmp / "square.pgm", io::MapFormat::Gray8);
    PipelineConfig config;
    OutputOptions out{tmp / "out", true, true};
    const auto m = run_pipeline(config, tmp / "square.pgm", kAll, out);
    CHECK(m.iterations_run >= 1);
    CHECK(m.iterations_run <= 50);
    CHECK(m.input_sha256 == io::sha256_file(tmp / "square.pgm"));
    CHECK(m.config.topology.connections_per_neuron == 40);
    for (const char* name : {"cmap", "edges", "prmap", "trace", "popout_0", "saliency", "saliency_mask", "foreground",
                             "background", "topology", "prmap_image"}) {
      INFO(name);
      REQUIRE(m.find(name) != nullptr);
      CHECK(std::filesystem::exists(m.find(name)->path));
    }
    CHECK(std::filesystem::exists(tmp / "out" / "manifest.json"));
    const auto prmap = io::load_raw(m.find("prmap")->path);
    CHECK(prmap.dims == signals.dims);
    CHECK(io::load_mask(m.find("popout_0")->path).count() > 0);
  }

  TEST_CASE("identical seed and config give identical raw artifacts") {
    TempDir tmp;
    const auto signals = synthetic::random_field({24, 20}, 1, 9);
    auto config = small_config();
    const auto a = run_pipeline(config, signals, "field", "", kAll, {tmp / "a", true, false});
    config.threads = 3;
    const auto b = run_pipeline(config, signals, "field", "", kAll, {tmp / "b", true, false});
    REQUIRE(a.artifacts.size() == b.artifacts.size());
    for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
      INFO(a.artifacts[i].name);
      CHECK(a.artifacts[i].name == b.artifacts[i].name);
      if (a.artifacts[i].raw) CHECK(a.artifacts[i].sha256 == b.artifacts[i].sha256);
    }
  }

  TEST_CASE("different seeds change the topology") {
    TempDir tmp;
    const auto signals = synthetic::random_field({16, 16}, 1, 2);
    auto config = small_config();
    const auto a = run_pipeline(config, signals, "f", "", {Stage::Edges}, {tmp / "a", true, false});
    config.topology.seed = 12;
    const auto b = run_pipeline(config, signals, "f", "", {Stage::Edges}, {tmp / "b", true, false});
    CHECK(a.find("topology")->sha256 != b.find("topology")->sha256);
  }

  TEST_CASE("edges-only run skips the leaky stage") {
    TempDir tmp;
    const auto m = run_pipeline(small_config(), synthetic::random_field({12, 12}, 1, 1), "f", "", {Stage::Edges},
                                {tmp / "o", false, false});
    CHECK(m.find("edges") != nullptr);
    CHECK(m.find("prmap") == nullptr);
    CHECK(m.find("trace") == nullptr);
    CHECK(m.iterations_run == 0);
    CHECK_FALSE(std::filesystem::exists(tmp / "o" / "prmap.raw"));
    for (const auto& t : m.timings) CHECK(t.stage != "leaky");
  }

  TEST_CASE("dependencies are added") {
    const auto s = with_dependencies({Stage::Bilayer});
    CHECK(s.count(Stage::PRMap) == 1);
    CHECK(s.count(Stage::Edges) == 0);
    CHECK(stage_from_string("saliency") == Stage::Saliency);
    CHECK_THROWS_AS(stage_from_string("blur"), Error);
  }

  TEST_CASE("manifest round-trip reproduces the run") {
    TempDir tmp;
    const auto signals = synthetic::random_field({20, 18}, 1, 5);
    auto config = small_config();
    config.leak.symmetrization = Symmetrization::Max;
    config.leak.ground_conductance = 0.5;
    config.topology.border_policy = BorderPolicy::Clamp;
    config.popout.max_levels = 2;
    const auto first = run_pipeline(config, signals, "f", "abc", kAll, {tmp / "a", false, false});
    const auto text = io::read_file(tmp / "a" / "manifest.json");
    const auto parsed = manifest_from_json(std::string(text.begin(), text.end()));
    CHECK(parsed.input_sha256 == "abc");
    CHECK(parsed.iterations_run == first.iterations_run);
    CHECK(parsed.thresholds == first.thresholds);
    CHECK(parsed.config.leak.symmetrization == Symmetrization::Max);
    CHECK(parsed.config.topology.border_policy == BorderPolicy::Clamp);
    CHECK(parsed.artifacts.size() == first.artifacts.size());
    const auto second = run_pipeline(parsed.config, signals, "f", "abc", kAll, {tmp / "b", false, false});
    for (const auto& art : first.artifacts) {
      INFO(art.name);
      REQUIRE(second.find(art.name) != nullptr);
      CHECK(second.find(art.name)->sha256 == art.sha256);
    }
    CHECK(manifest_to_json(manifest_from_json(manifest_to_json(first))) == manifest_to_json(first));
  }

  TEST_CASE("errors name the failing stage") {
    SignalField bad({8, 8}, 1, 0.5);
    bad.values[3] = 2.0;
    try {
      execute(small_config(), bad, {Stage::Edges});
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidInput);
      CHECK(std::string(e.what()).find("stage 'weights'") != std::string::npos);
    }
    try {
      execute(small_config(), SignalField({1, 1}, 1, 0.5), {Stage::Edges});
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InfeasibleConfig);
      CHECK(std::string(e.what()).find("stage 'topology'") != std::string::npos);
    }
    auto config = small_config();
    config.leak.sink = SinkKind::Custom;
    config.leak.custom_sink = Mask({3, 3});
    try {
      execute(config, SignalField({8, 8}, 1, 0.5), {Stage::PRMap});
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("stage 'leaky'") != std::string::npos);
    }
    try {
      run_pipeline(small_config(), std::filesystem::path("/nonexistent/in.png"), {Stage::Edges}, {"/tmp/x", false});
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
      CHECK(std::string(e.what()).find("stage 'load'") != std::string::npos);
    }
  }

  TEST_CASE("invalid configuration is rejected before any work") {
    auto config = small_config();
    config.leak.leak_rate = 1.5;
    CHECK_THROWS_AS(config.validate(), Error);
    config = small_config();
    config.channels = 2;
    CHECK_THROWS_AS(execute(config, SignalField({4, 4}, 1, 0.5), {Stage::Edges}), Error);
  }

  TEST_CASE("robustness with zero noise reproduces the clean mask") {
    const auto signals = synthetic::bright_square({32, 12, 0.1, 0.9});
    auto config = small_config();
    const auto r = robustness_experiment(signals, config, 0.0, 3);
    CHECK(r.iou == 1.0);
    CHECK(r.clean == r.noisy);
    const auto noisy = robustness_experiment(signals, config, 0.05, 3);
    CHECK(noisy.iou >= 0.0);
    CHECK(noisy.iou <= 1.0);
  }

  TEST_CASE("color input runs with three channels") {
    SignalField rgb({16, 16}, 3, 0.2);
    for (std::uint32_t y = 6; y < 10; ++y)
      for (std::uint32_t x = 6; x < 10; ++x) rgb.values[3 * (y * 16 + x)] = 0.9;
    auto config = small_config();
    config.channels = 3;
    const auto r = execute(config, rgb, {Stage::Edges});
    REQUIRE(r.edges);
    CHECK(r.edges->at(0, 0) == 0.0);
    CHECK(r.edges->at(6, 6) > 0.0);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("partial config documents keep defaults") {
    const auto c = config_from_json(R"({"topology": {"radius": 3}, "leak": {"sink": "none"}, "threads": 2})");
    CHECK(c.topology.radius == 3);
    CHECK(c.topology.seed == PipelineConfig{}.topology.seed);
    CHECK(c.leak.sink == SinkKind::None);
    CHECK(c.leak.leak_rate == 0.5);
    CHECK(c.threads == 2);
    CHECK_THROWS_AS(config_from_json("[1, 2"), Error);
    CHECK_THROWS_AS(config_from_json(R"({"leak": {"sink": "drain"}})"), Error);
    PipelineConfig custom;
    custom.gaussian.sigma = 0.25;
    RunManifest m;
    m.config = custom;
    CHECK(config_from_json(manifest_to_json(m)).gaussian.sigma == 0.25);
  }
}
