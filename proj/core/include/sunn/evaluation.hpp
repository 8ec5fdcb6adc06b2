#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sunn/grid.hpp"
#include "sunn/smart_neuron.hpp"

namespace sunn {

enum class GroundTruthKind { EdgePixels, ObjectMask };

struct GroundTruth {
  Mask mask;
  GroundTruthKind kind = GroundTruthKind::ObjectMask;
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Precision is 1 when nothing is predicted (no false positives); recall is
/// 0 for empty ground truth.
double precision(const Confusion& c) noexcept;
double recall(const Confusion& c) noexcept;

/// Exact overlap for object masks. For edge pixels a prediction is a true
/// positive when it is matched one-to-one to a ground-truth pixel within
/// Chebyshev distance `tolerance_px`; the matching is maximum cardinality.
Confusion confusion(const Mask& prediction, const GroundTruth& gt, std::uint32_t tolerance_px = 2);

struct PRPoint {
  double threshold;
  double precision;
  double recall;
  Confusion counts;
  bool empty_prediction;
};

struct PRCurve {
  std::vector<PRPoint> points;  // thresholds strictly increasing

  /// Maximum F-measure over the curve (beta^2 = 1).
  double best_f1() const noexcept;
  /// "threshold,precision,recall" with a header line.
  void write_csv(std::ostream& os) const;
};

/// Threshold sweep over [min, max] of the score map; a pixel is predicted
/// when score >= threshold. Throws CurveInvalid for empty ground truth.
PRCurve binary_pr(const ScalarField& score, const GroundTruth& gt, std::size_t n_thresholds = 64,
                  std::uint32_t match_tolerance_px = 2);

/// |a & b| / |a | b|; 1 when both are empty.
double iou(const Mask& a, const Mask& b);

enum class NoiseMode { Multiplicative, Additive };

/// phi' = clamp(phi * (1 + u), 0, 1) (or clamp(phi + u, 0, 1) when additive)
/// with u ~ U[-noise_fraction, noise_fraction] drawn per connection from the
/// (seed, neuron) stream.
WeightField perturb_weights(const WeightField& weights, double noise_fraction, std::uint64_t seed,
                            NoiseMode mode = NoiseMode::Multiplicative);

enum class GradientOperator { Sobel, Prewitt };

/// Baseline edge strength: gradient magnitude of the channel mean, with
/// replicated borders, scaled to [0, 1].
ScalarField gradient_magnitude(const SignalField& signals, GradientOperator op);

}  // namespace sunn
