#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "sunn/leaky.hpp"
#include "sunn/synthetic.hpp"

using namespace sunn;

namespace {

struct Net {
  RandomTopology topology;
  WeightField weights;
};

Net random_net(GridDims d, std::uint64_t seed, std::uint32_t radius = 2, std::uint32_t channels = 1) {
  TopologyConfig tc;
  tc.radius = radius;
  tc.seed = seed;
  Net n{build_random_topology(d, tc), {}};
  n.weights = compute_weights(synthetic::random_field(d, channels, seed + 1000), n.topology, {0.3});
  return n;
}

WeightField uniform_weights(const RandomTopology& topo, double value) {
  WeightField w;
  w.dims = topo.dims();
  w.offsets.assign(topo.offsets().begin(), topo.offsets().end());
  w.values.assign(topo.edge_count(), value);
  return w;
}

// 1x3 chain with unit weights between neighbors.
Net chain() {
  Net n{make_topology({3, 1}, {{1}, {0, 2}, {1}}), {}};
  n.weights = uniform_weights(n.topology, 1.0);
  return n;
}

LeakConfig chain_config() {
  LeakConfig c;
  c.sink = SinkKind::Custom;
  Mask ends({3, 1});
  ends.set(0, true);
  ends.set(2, true);
  c.custom_sink = ends;
  c.ground_conductance = 1.0;
  c.leak_rate = 0.5;
  return c;
}

}  // namespace

TEST_SUITE("leaky") {
  TEST_CASE("normalization of a non-sink neuron and a sink neuron") {
    for (auto norm : {Normalization::Conductance, Normalization::RandomWalk}) {
      // Neuron 0 has weights {1, 1} to neurons 1, 2 (which link back).
      auto topo = make_topology({3, 1}, {{1, 2}, {0}, {0}});
      LeakConfig cfg;
      cfg.sink = SinkKind::None;
      cfg.normalization = norm;
      const auto k = normalize_weights(uniform_weights(topo, 1.0), topo, cfg);
      const auto p = k.outflow_fractions(0);
      REQUIRE(p.size() == 2);
      CHECK(p[0] == 0.5);
      CHECK(p[1] == 0.5);
      CHECK(k.ground_fraction(0) == 0.0);

      auto pair = make_topology({2, 1}, {{1}, {0}});
      LeakConfig sink_cfg;
      sink_cfg.sink = SinkKind::Custom;
      Mask m({2, 1});
      m.set(0, true);
      sink_cfg.custom_sink = m;
      sink_cfg.normalization = norm;
      const auto ks = normalize_weights(uniform_weights(pair, 1.0), pair, sink_cfg);
      const auto ps = ks.outflow_fractions(0);
      REQUIRE(ps.size() == 1);
      CHECK(ps[0] == 0.5);
      CHECK(ks.ground_fraction(0) == 0.5);
      CHECK(ks.retained_fraction(0) == 0.0);
    }
  }

  TEST_CASE("conductance normalization keeps the remainder at the neuron") {
    auto pair = make_topology({2, 1}, {{1}, {0}});
    LeakConfig cfg;
    cfg.sink = SinkKind::Custom;
    Mask m({2, 1});
    m.set(0, true);
    cfg.custom_sink = m;
    const auto k = normalize_weights(uniform_weights(pair, 1.0), pair, cfg);
    // Strengths are 2 and 1, so the global normalizer is 2.
    CHECK(k.outflow_fractions(1)[0] == 0.5);
    CHECK(k.retained_fraction(1) == 0.5);
    cfg.normalization = Normalization::RandomWalk;
    const auto rw = normalize_weights(uniform_weights(pair, 1.0), pair, cfg);
    CHECK(rw.outflow_fractions(1)[0] == 1.0);
    CHECK(rw.retained_fraction(1) == 0.0);
  }

  TEST_CASE("fractions sum to one for every non-isolated neuron") {
    for (auto norm : {Normalization::Conductance, Normalization::RandomWalk}) {
      for (auto sym : {Symmetrization::Average, Symmetrization::Max, Symmetrization::Directed}) {
        const auto net = random_net({9, 7}, 31);
        LeakConfig cfg;
        cfg.normalization = norm;
        cfg.symmetrization = sym;
        const auto k = normalize_weights(net.weights, net.topology, cfg);
        for (NeuronIndex i = 0; i < k.neuron_count(); ++i) {
          double s = k.ground_fraction(i) + k.retained_fraction(i);
          for (double p : k.outflow_fractions(i)) {
            CHECK(p >= 0.0);
            s += p;
          }
          CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("isolated neuron keeps its potential") {
    auto topo = make_topology({2, 1}, {{1}, {0}});
    LeakConfig cfg;
    cfg.sink = SinkKind::None;
    const auto k = normalize_weights(uniform_weights(topo, 0.0), topo, cfg);
    CHECK(k.isolated(0));
    CHECK(k.outflow_fractions(0).empty());
    ScalarField v({2, 1});
    v.values = {0.3, 0.8};
    const auto next = leaky_step(k, v, 1.0);
    CHECK(next[0] == 0.3);
    CHECK(next[1] == 0.8);
  }

  TEST_CASE("full redistribution on a symmetric pair swaps potentials") {
    auto topo = make_topology({2, 1}, {{1}, {0}});
    LeakConfig cfg;
    cfg.sink = SinkKind::None;
    cfg.leak_rate = 1.0;
    const auto k = normalize_weights(uniform_weights(topo, 1.0), topo, cfg);
    ScalarField v({2, 1});
    v.values = {0.25, 0.75};
    const auto next = leaky_step(k, v, 1.0);
    CHECK(next[0] == 0.75);
    CHECK(next[1] == 0.25);
  }

  TEST_CASE("1x3 chain with grounded ends matches exact values") {
    // Exact rational values of M^t (1,1,1) with
    // M = [[1/2, 1/4, 0], [1/4, 1/2, 1/4], [0, 1/4, 1/2]].
    const auto net = chain();
    const auto cfg = chain_config();
    const auto k = normalize_weights(net.weights, net.topology, cfg);
    ScalarField v({3, 1}, 1.0);
    v = leaky_step(k, v, 0.5);
    CHECK(v[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(v[2] == doctest::Approx(0.75).epsilon(1e-15));
    for (int t = 2; t <= 10; ++t) v = leaky_step(k, v, 0.5);
    CHECK(std::abs(v[0] - 5741.0 / 32768) < 1e-9);
    CHECK(std::abs(v[1] - 8119.0 / 32768) < 1e-9);
    CHECK(std::abs(v[2] - 5741.0 / 32768) < 1e-9);

    const auto dense = oracle::dense_leaky(net.weights, net.topology, cfg);
    const auto ref = dense.run({1, 1, 1}, 10);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(ref[std::size_t(i)] - v[std::size_t(i)]) < 1e-9);
  }

  TEST_CASE("sparse iteration matches the dense oracle for every mode") {
    for (auto norm : {Normalization::Conductance, Normalization::RandomWalk}) {
      for (auto sym : {Symmetrization::Average, Symmetrization::Max, Symmetrization::Directed}) {
        for (auto sink : {SinkKind::Border, SinkKind::None}) {
          const auto net = random_net({7, 6}, 77);
          LeakConfig cfg;
          cfg.normalization = norm;
          cfg.symmetrization = sym;
          cfg.sink = sink;
          cfg.ground_conductance = 0.7;
          cfg.leak_rate = 0.6;
          const auto k = normalize_weights(net.weights, net.topology, cfg);
          const auto dense = oracle::dense_leaky(net.weights, net.topology, cfg);
          ScalarField v(net.topology.dims(), 1.0);
          std::vector<double> ref(v.size(), 1.0);
          for (int t = 1; t <= 30; ++t) {
            v = leaky_step(k, v, cfg.leak_rate);
            ref = dense.step(ref);
          }
          for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(v[i] - ref[i]) < 1e-9);
        }
      }
    }
  }

  TEST_CASE("conservation without a sink and ground accounting with one") {
    const auto net = random_net({16, 16}, 5, 3);
    LeakConfig cfg;
    cfg.sink = SinkKind::None;
    auto k = normalize_weights(net.weights, net.topology, cfg);
    ScalarField v(net.topology.dims(), 1.0);
    for (int t = 0; t < 50; ++t) {
      const double before = total_potential(v);
      v = leaky_step(k, v, cfg.leak_rate);
      CHECK(std::abs(total_potential(v) - before) <= 1e-12 * before);
    }
    cfg.sink = SinkKind::Border;
    k = normalize_weights(net.weights, net.topology, cfg);
    v = ScalarField(net.topology.dims(), 1.0);
    for (int t = 0; t < 50; ++t) {
      const double before = total_potential(v);
      const double grounded = ground_outflow(k, v, cfg.leak_rate);
      v = leaky_step(k, v, cfg.leak_rate);
      CHECK(std::abs((before - total_potential(v)) - grounded) <= 1e-10 * before);
    }
  }

  TEST_CASE("isolated component without a sink keeps its total forever") {
    // Two 3-neuron cliques with no links between them; only the first
    // touches ground.
    auto topo = make_topology({6, 1}, {{1, 2}, {0, 2}, {0, 1}, {4, 5}, {3, 5}, {3, 4}});
    LeakConfig cfg;
    cfg.sink = SinkKind::Custom;
    Mask sink({6, 1});
    sink.set(0, true);
    cfg.custom_sink = sink;
    WeightField w = uniform_weights(topo, 1.0);
    for (std::size_t e = 6; e < 12; ++e) w.values[e] = 0.3 + 0.1 * double(e % 3);
    const auto k = normalize_weights(w, topo, cfg);
    ScalarField v({6, 1}, 1.0);
    for (int t = 0; t < 500; ++t) v = leaky_step(k, v, cfg.leak_rate);
    CHECK(v[3] + v[4] + v[5] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(v[0] + v[1] + v[2] < 0.1);
  }

  TEST_CASE("run_leaky on a frozen system converges at iteration 1") {
    const auto net = random_net({8, 8}, 3);
    LeakConfig cfg;
    cfg.sink = SinkKind::None;
    const auto pr = run_leaky(uniform_weights(net.topology, 0.0), net.topology, cfg);
    CHECK(pr.converged);
    CHECK(pr.iterations_run == 1);
    for (double x : pr.residue.values) CHECK(x == 1.0);
    CHECK(pr.isolated_neurons == 64);
  }

  TEST_CASE("trace is non-increasing and bounded by max_iterations") {
    const auto net = random_net({12, 12}, 8);
    LeakConfig cfg;
    cfg.max_iterations = 20;
    const auto pr = run_leaky(net.weights, net.topology, cfg);
    CHECK(pr.iterations_run <= 20);
    REQUIRE(pr.trace.size() == pr.iterations_run + 1);
    CHECK(pr.trace.front().total == 144.0);
    for (std::size_t t = 1; t < pr.trace.size(); ++t) CHECK(pr.trace[t].total <= pr.trace[t - 1].total);
  }

  TEST_CASE("constant image drains through the border") {
    // Total residue at a fixed iteration count is taken from the dense oracle
    // and the sparse run has to agree with it.
    SignalField constant({32, 32}, 1, 0.5);
    TopologyConfig tc;
    tc.seed = 42;
    const auto topo = build_random_topology(constant.dims, tc);
    const auto w = compute_weights(constant, topo, {});
    LeakConfig cfg;
    cfg.max_iterations = 200;
    cfg.tolerance = 1e-300;
    const auto pr = run_leaky(w, topo, cfg);
    const auto dense = oracle::dense_leaky(w, topo, cfg);
    const auto ref = dense.run(std::vector<double>(1024, 1.0), 200);
    double ref_total = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(std::abs(pr.residue[i] - ref[i]) < 1e-9);
      ref_total += ref[i];
    }
    CHECK(std::abs(pr.trace.back().total - ref_total) < 1e-7);
    for (std::size_t t = 1; t < pr.trace.size(); ++t) CHECK(pr.trace[t].total < pr.trace[t - 1].total);

    // In the limit the whole net drains.
    cfg.max_iterations = 20000;
    cfg.tolerance = 1e-9;
    const auto long_run = run_leaky(w, topo, cfg);
    CHECK(long_run.trace.back().total < 0.1 * 1024);
  }

  TEST_CASE("bright square retains more residue than the drained ground") {
    synthetic::SquareSpec spec{32, 12, 0.1, 0.9};
    const auto img = synthetic::bright_square(spec);
    const auto truth = synthetic::square_mask(spec);
    TopologyConfig tc;
    tc.seed = 42;
    const auto topo = build_random_topology(img.dims, tc);
    const auto w = compute_weights(img, topo, {});
    LeakConfig cfg;
    cfg.max_iterations = 100000;
    const auto pr = run_leaky(w, topo, cfg);
    CHECK(pr.converged);
    double in = 0, out = 0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t k = 0; k < truth.bits.size(); ++k) {
      if (truth[k]) {
        in += pr.residue[k];
        ++n_in;
      } else {
        out += pr.residue[k];
        ++n_out;
      }
    }
    CHECK(in / double(n_in) > 2.0 * out / double(n_out));

    // Same field from the dense oracle after a fixed number of steps.
    cfg.max_iterations = 300;
    cfg.tolerance = 1e-300;
    const auto partial = run_leaky(w, topo, cfg);
    const auto ref = oracle::dense_leaky(w, topo, cfg).run(std::vector<double>(img.dims.size(), 1.0), 300);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(partial.residue[i] - ref[i]) < 1e-9);
  }

  TEST_CASE("thread count does not change the result") {
    const auto net = random_net({40, 30}, 12, 5);
    LeakConfig cfg;
    const auto a = run_leaky(net.weights, net.topology, cfg, 1);
    const auto b = run_leaky(net.weights, net.topology, cfg, 4);
    CHECK(a.residue.values == b.residue.values);
    CHECK(a.iterations_run == b.iterations_run);
  }

  TEST_CASE("config validation") {
    LeakConfig cfg;
    cfg.leak_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.ground_conductance = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.sink = SinkKind::Custom;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }

  TEST_CASE("min-max normalization") {
    ScalarField f({3, 1});
    f.values = {2.0, 4.0, 3.0};
    const auto n = normalize_min_max(f);
    CHECK(n[0] == 0.0);
    CHECK(n[1] == 1.0);
    CHECK(n[2] == 0.5);
    ScalarField c({2, 2}, 7.0);
    for (double v : normalize_min_max(c).values) CHECK(v == 0.0);
  }
}
