#include <doctest.h>

#include <sstream>

#include "sunn/evaluation.hpp"
#include "sunn/rng.hpp"
#include "sunn/synthetic.hpp"

using namespace sunn;

namespace {

Mask mask_of(GridDims d, std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> on) {
  Mask m(d);
  for (auto [x, y] : on) m.set(d.index(x, y), true);
  return m;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("precision and recall arithmetic") {
    const Confusion c{5, 5, 5};
    CHECK(precision(c) == 0.5);
    CHECK(recall(c) == 0.5);
    CHECK(precision(Confusion{0, 0, 3}) == 1.0);
    CHECK(recall(Confusion{0, 0, 3}) == 0.0);
  }

  TEST_CASE("object-mask confusion counts exact overlap") {
    const GridDims d{4, 1};
    const GroundTruth gt{mask_of(d, {{0, 0}, {1, 0}}), GroundTruthKind::ObjectMask};
    const auto c = confusion(mask_of(d, {{1, 0}, {2, 0}, {3, 0}}), gt);
    CHECK(c.tp == 1);
    CHECK(c.fp == 2);
    CHECK(c.fn == 1);
  }

  TEST_CASE("edge matching within tolerance is one-to-one") {
    const GridDims d{10, 10};
    // Horizontal ground-truth line at y = 4.
    Mask line(d);
    for (std::uint32_t x = 0; x < 10; ++x) line.set(d.index(x, 4), true);
    const GroundTruth gt{line, GroundTruthKind::EdgePixels};
    Mask shifted(d);
    for (std::uint32_t x = 0; x < 10; ++x) shifted.set(d.index(x, 6), true);
    auto c = confusion(shifted, gt, 2);
    CHECK(c.tp == 10);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    c = confusion(shifted, gt, 1);
    CHECK(c.tp == 0);
    // Two parallel predicted lines compete for the same ground truth.
    Mask doubled = shifted;
    for (std::uint32_t x = 0; x < 10; ++x) doubled.set(d.index(x, 5), true);
    c = confusion(doubled, gt, 2);
    CHECK(c.tp == 10);
    CHECK(c.fp == 10);
    CHECK(c.fn == 0);
  }

  TEST_CASE("maximum matching beats greedy nearest-first assignment") {
    // p0 is nearest to g0 but can also reach g1; p1 only reaches g0.
    const GridDims d{8, 1};
    const GroundTruth gt{mask_of(d, {{2, 0}, {4, 0}}), GroundTruthKind::EdgePixels};
    const auto c = confusion(mask_of(d, {{3, 0}, {1, 0}}), gt, 1);
    CHECK(c.tp == 2);
  }

  TEST_CASE("PR curve of a perfect predictor") {
    const auto truth = synthetic::square_mask({32, 10, 0, 1});
    ScalarField score(truth.dims);
    for (std::size_t k = 0; k < score.size(); ++k) score[k] = truth[k] ? 0.8 : 0.2;
    const auto curve = binary_pr(score, {truth, GroundTruthKind::ObjectMask}, 11);
    bool perfect = false;
    for (const auto& p : curve.points) perfect = perfect || (p.precision == 1.0 && p.recall == 1.0);
    CHECK(perfect);
    CHECK(curve.best_f1() == 1.0);
    for (std::size_t i = 1; i < curve.points.size(); ++i)
      CHECK(curve.points[i].threshold > curve.points[i - 1].threshold);
  }

  TEST_CASE("empty ground truth invalidates the curve; empty predictions are precision 1") {
    ScalarField score({4, 4}, 0.5);
    score[0] = 1.0;
    try {
      binary_pr(score, {Mask({4, 4}), GroundTruthKind::ObjectMask}, 4);
      FAIL("expected curve-invalid");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::CurveInvalid);
    }
    // A constant score map sweeps past its only value, leaving empty predictions.
    Mask gt({4, 4});
    gt.set(5, true);
    const auto curve = binary_pr(ScalarField({4, 4}, 0.3), {gt, GroundTruthKind::ObjectMask}, 3);
    CHECK_FALSE(curve.points[0].empty_prediction);
    CHECK(curve.points[1].empty_prediction);
    CHECK(curve.points[1].precision == 1.0);
    CHECK(curve.points[1].recall == 0.0);
  }

  TEST_CASE("random scores against a 10% mask have precision near the base rate") {
    const GridDims d{256, 256};
    auto rng = SplitMix64::stream(12345, 0);
    ScalarField score(d);
    Mask gt(d);
    for (std::size_t k = 0; k < d.size(); ++k) {
      score[k] = rng.uniform();
      gt.set(k, rng.uniform() < 0.1);
    }
    const auto curve = binary_pr(score, {gt, GroundTruthKind::ObjectMask}, 101);
    for (const auto& p : curve.points) {
      if (p.threshold < 0.2 || p.threshold > 0.8) continue;
      CHECK(p.precision == doctest::Approx(0.10).epsilon(0.2));
    }
  }

  TEST_CASE("precision and recall stay in range, recall and FP fall with the threshold") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto f = synthetic::random_field({30, 20}, 1, seed);
      ScalarField score(f.dims);
      score.values = f.values;
      Mask gt(f.dims);
      auto rng = SplitMix64::stream(seed, 9);
      for (std::size_t k = 0; k < gt.bits.size(); ++k) gt.set(k, rng.uniform() < 0.2);
      for (auto kind : {GroundTruthKind::ObjectMask, GroundTruthKind::EdgePixels}) {
        const auto curve = binary_pr(score, {gt, kind}, 25);
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
          const auto& p = curve.points[i];
          CHECK(p.precision >= 0.0);
          CHECK(p.precision <= 1.0);
          CHECK(p.recall >= 0.0);
          CHECK(p.recall <= 1.0);
          if (i > 0) {
            CHECK(p.recall <= curve.points[i - 1].recall);
            if (kind == GroundTruthKind::ObjectMask) CHECK(p.counts.fp <= curve.points[i - 1].counts.fp);
          }
        }
      }
    }
  }

  TEST_CASE("csv output") {
    PRCurve curve;
    curve.points.push_back({0.5, 0.25, 1.0, {}, false});
    std::ostringstream os;
    curve.write_csv(os);
    CHECK(os.str() == "threshold,precision,recall\n0.5,0.25,1\n");
  }

  TEST_CASE("iou identities") {
    const GridDims d{4, 1};
    const auto a = mask_of(d, {{0, 0}, {1, 0}});
    const auto b = mask_of(d, {{1, 0}, {2, 0}});
    const auto c = mask_of(d, {{3, 0}});
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, c) == 0.0);
    CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0));
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(Mask(d), Mask(d)) == 1.0);
    CHECK_THROWS_AS(iou(a, Mask({2, 2})), Error);
  }

  TEST_CASE("weight perturbation") {
    WeightField w;
    w.dims = {2, 1};
    w.offsets = {0, 2, 4};
    w.values = {1.0, 0.5, 0.0, 0.9};
    CHECK(perturb_weights(w, 0.0, 1).values == w.values);
    const auto a = perturb_weights(w, 0.1, 7);
    const auto b = perturb_weights(w, 0.1, 7);
    CHECK(a.values == b.values);
    CHECK(a.values != perturb_weights(w, 0.1, 8).values);
    for (std::size_t i = 0; i < w.values.size(); ++i) {
      CHECK(a.values[i] >= 0.0);
      CHECK(a.values[i] <= 1.0);
      CHECK(std::abs(a.values[i] - w.values[i]) <= 0.1 * w.values[i] + 1e-15);
    }
    CHECK(a.values[2] == 0.0);  // multiplicative noise keeps zeros
    const auto add = perturb_weights(w, 1.0, 3, NoiseMode::Additive);
    for (double v : add.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK_THROWS_AS(perturb_weights(w, 1.5, 1), Error);
  }

  TEST_CASE("perturbed weight 1 with positive noise clamps to 1") {
    WeightField w;
    w.dims = {1, 1};
    w.offsets = {0, 64};
    w.values.assign(64, 1.0);
    const auto p = perturb_weights(w, 0.1, 4);
    bool saw_clamp = false;
    for (double v : p.values) {
      CHECK(v <= 1.0);
      saw_clamp = saw_clamp || v == 1.0;
    }
    CHECK(saw_clamp);
  }

  TEST_CASE("gradient baselines") {
    const auto img = synthetic::bright_square({32, 10, 0.1, 0.9});
    for (auto op : {GradientOperator::Sobel, GradientOperator::Prewitt}) {
      const auto g = gradient_magnitude(img, op);
      CHECK(g.at(0, 0) == 0.0);
      CHECK(g.at(16, 16) == 0.0);
      CHECK(g.at(11, 16) > 0.5);
    }
  }
}
