#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sunn/grid.hpp"
#include "sunn/leaky.hpp"

namespace sunn {

struct Histogram {
  std::vector<double> edges;  // bins + 1, strictly increasing
  std::vector<std::size_t> counts;
  bool degenerate = false;  // constant input; all mass in one bin

  std::size_t bins() const noexcept { return counts.size(); }
  double bin_width() const noexcept { return edges[1] - edges[0]; }
};

/// Uniform-bin histogram over [min, max] of the field.
Histogram histogram(const ScalarField& field, std::size_t bins = 64);
inline Histogram pr_histogram(const PRMap& pr, std::size_t bins = 64) { return histogram(pr.residue, bins); }

/// Width-3 moving average; end bins average over the bins that exist.
std::vector<double> smooth_counts(const std::vector<std::size_t>& counts);

enum class ThresholdMethod { None, Valley, Otsu };

struct ThresholdSet {
  std::vector<double> values;  // strictly increasing
  /// Index of the most significant threshold (deepest valley, or the best
  /// single Otsu split). Meaningless when values is empty.
  std::size_t primary = 0;
  ThresholdMethod method = ThresholdMethod::None;

  bool empty() const noexcept { return values.empty(); }
};

/// Thresholds at the deepest valleys between peaks of the smoothed
/// histogram, at most max_levels of them. Falls back to multi-level Otsu when
/// no valley is found; empty for degenerate histograms.
ThresholdSet find_thresholds(const Histogram& hist, std::size_t max_levels);

/// Exact multi-level Otsu: the `levels` cut points (bin indices, a cut at b
/// means bins < b vs >= b) maximizing between-class variance.
std::vector<std::size_t> otsu_cuts(const std::vector<std::size_t>& counts, std::size_t levels);

struct Popout {
  /// Loosest (largest) first; masks[j+1] is a subset of masks[j].
  std::vector<Mask> masks;
  /// Set when no thresholds were given and the mean-split mask was used.
  bool fallback = false;
};

Popout popout_components(const ScalarField& residue, const ThresholdSet& thresholds);
inline Popout popout_components(const PRMap& pr, const ThresholdSet& thresholds) {
  return popout_components(pr.residue, thresholds);
}

/// Residue >= t.
Mask threshold_mask(const ScalarField& field, double t);

/// Primary popout mask: the mask at thresholds.primary, or the mean-split
/// mask when there are no thresholds.
Mask primary_mask(const ScalarField& residue, const ThresholdSet& thresholds);

struct Bilayer {
  Mask foreground;
  Mask background;
  double threshold = 0.0;
  bool degenerate = false;
};

Bilayer bilayer_segment(const ScalarField& residue, std::size_t bins = 64);
inline Bilayer bilayer_segment(const PRMap& pr, std::size_t bins = 64) { return bilayer_segment(pr.residue, bins); }

/// Normalized residue times a radial center prior exp(-strength * r^2), r
/// being the distance to the image center over the half-diagonal.
ScalarField center_fusion(const ScalarField& residue, double strength);
inline ScalarField center_fusion(const PRMap& pr, double strength) { return center_fusion(pr.residue, strength); }

/// Drops 8-connected components smaller than min_area pixels.
Mask filter_small_components(const Mask& mask, std::size_t min_area);

}  // namespace sunn
