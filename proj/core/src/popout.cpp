#include "sunn/popout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sunn {

Histogram histogram(const ScalarField& field, std::size_t bins) {
  if (bins < 2) throw Error(ErrorKind::InvalidConfig, "histogram needs at least 2 bins");
  if (field.values.empty()) throw Error(ErrorKind::InvalidInput, "empty field");
  Histogram h;
  h.counts.assign(bins, 0);
  const auto [lo_it, hi_it] = std::minmax_element(field.values.begin(), field.values.end());
  const double lo = *lo_it;
  double range = *hi_it - lo;
  if (!(range > 0.0)) {
    h.degenerate = true;
    range = 1.0;
  }
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + range * double(i) / double(bins);
  for (double v : field.values) {
    auto b = std::size_t(std::floor((v - lo) / range * double(bins)));
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

std::vector<double> smooth_counts(const std::vector<std::size_t>& counts) {
  const std::size_t n = counts.size();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    int taken = 0;
    for (std::size_t j = (i == 0 ? 0 : i - 1); j <= std::min(n - 1, i + 1); ++j) {
      sum += double(counts[j]);
      ++taken;
    }
    s[i] = sum / taken;
  }
  return s;
}

std::vector<std::size_t> otsu_cuts(const std::vector<std::size_t>& counts, std::size_t levels) {
  const std::size_t n = counts.size();
  levels = std::min(levels, n - 1);
  if (levels == 0) return {};
  // Prefix sums of weight and first moment; the class score w * mu^2 = m^2 / w
  // is maximized over contiguous partitions by dynamic programming.
  std::vector<double> w(n + 1, 0.0), m(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    w[i + 1] = w[i] + double(counts[i]);
    m[i + 1] = m[i] + double(counts[i]) * double(i);
  }
  auto score = [&](std::size_t a, std::size_t b) {  // bins [a, b)
    const double ww = w[b] - w[a];
    if (ww <= 0.0) return 0.0;
    const double mm = m[b] - m[a];
    return mm * mm / ww;
  };
  const std::size_t classes = levels + 1;
  const double neg = -std::numeric_limits<double>::infinity();
  // best[c][b]: best score splitting bins [0, b) into c non-empty-range classes.
  std::vector<std::vector<double>> best(classes + 1, std::vector<double>(n + 1, neg));
  std::vector<std::vector<std::size_t>> arg(classes + 1, std::vector<std::size_t>(n + 1, 0));
  best[0][0] = 0.0;
  for (std::size_t c = 1; c <= classes; ++c) {
    for (std::size_t b = c; b <= n; ++b) {
      for (std::size_t a = c - 1; a < b; ++a) {
        if (best[c - 1][a] == neg) continue;
        const double v = best[c - 1][a] + score(a, b);
        if (v > best[c][b]) {
          best[c][b] = v;
          arg[c][b] = a;
        }
      }
    }
  }
  std::vector<std::size_t> cuts(levels);
  std::size_t b = n;
  for (std::size_t c = classes; c > 1; --c) {
    b = arg[c][b];
    cuts[c - 2] = b;
  }
  return cuts;
}

namespace {

struct Valley {
  double position;  // fractional bin coordinate of the valley center
  double depth;
};

std::vector<Valley> find_valleys(const std::vector<double>& s) {
  // Collapse plateaus into runs so flat stretches count as one extremum.
  struct Run {
    std::size_t first, last;
    double value;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!runs.empty() && runs.back().value == s[i]) runs.back().last = i;
    else runs.push_back({i, i, s[i]});
  }
  std::vector<std::size_t> peaks;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const bool left_ok = r == 0 || runs[r - 1].value < runs[r].value;
    const bool right_ok = r + 1 == runs.size() || runs[r + 1].value < runs[r].value;
    if (left_ok && right_ok) peaks.push_back(r);
  }
  std::vector<Valley> valleys;
  for (std::size_t p = 0; p + 1 < peaks.size(); ++p) {
    std::size_t lowest = peaks[p] + 1;
    for (std::size_t r = peaks[p] + 1; r < peaks[p + 1]; ++r)
      if (runs[r].value < runs[lowest].value) lowest = r;
    const double depth = std::min(runs[peaks[p]].value, runs[peaks[p + 1]].value) - runs[lowest].value;
    valleys.push_back({0.5 * double(runs[lowest].first + runs[lowest].last), depth});
  }
  return valleys;
}

}  // namespace

ThresholdSet find_thresholds(const Histogram& hist, std::size_t max_levels) {
  if (max_levels < 1) throw Error(ErrorKind::InvalidConfig, "max_levels must be >= 1");
  ThresholdSet set;
  const auto occupied = std::count_if(hist.counts.begin(), hist.counts.end(), [](std::size_t c) { return c > 0; });
  if (hist.degenerate || occupied < 2) return set;

  const auto smoothed = smooth_counts(hist.counts);
  const double tallest = *std::max_element(smoothed.begin(), smoothed.end());
  auto valleys = find_valleys(smoothed);
  // Dips shallower than 5% of the tallest peak are treated as noise.
  std::erase_if(valleys, [&](const Valley& v) { return v.depth < 0.05 * tallest; });

  const double lo = hist.edges.front();
  const double width = hist.bin_width();
  if (!valleys.empty()) {
    std::stable_sort(valleys.begin(), valleys.end(), [](const Valley& a, const Valley& b) { return a.depth > b.depth; });
    if (valleys.size() > max_levels) valleys.resize(max_levels);
    const double deepest = valleys.front().position;
    std::sort(valleys.begin(), valleys.end(), [](const Valley& a, const Valley& b) { return a.position < b.position; });
    for (const auto& v : valleys) {
      set.values.push_back(lo + (v.position + 0.5) * width);
      if (v.position == deepest) set.primary = set.values.size() - 1;
    }
    set.method = ThresholdMethod::Valley;
    return set;
  }

  const auto cuts = otsu_cuts(hist.counts, max_levels);
  const auto single = otsu_cuts(hist.counts, 1);
  for (auto c : cuts) {
    const double t = lo + double(c) * width;
    if (set.values.empty() || t > set.values.back()) set.values.push_back(t);
    if (!single.empty() && c == single.front()) set.primary = set.values.size() - 1;
  }
  set.method = ThresholdMethod::Otsu;
  return set;
}

Mask threshold_mask(const ScalarField& field, double t) {
  Mask m(field.dims);
  for (std::size_t k = 0; k < field.size(); ++k) m.set(k, field[k] >= t);
  return m;
}

namespace {

Mask mean_split(const ScalarField& residue) {
  const double mean = residue.values.empty() ? 0.0
                                             : std::accumulate(residue.values.begin(), residue.values.end(), 0.0) /
                                                   double(residue.size());
  Mask m(residue.dims);
  for (std::size_t k = 0; k < residue.size(); ++k) m.set(k, residue[k] > mean);
  return m;
}

}  // namespace

Popout popout_components(const ScalarField& residue, const ThresholdSet& thresholds) {
  Popout out;
  if (thresholds.empty()) {
    out.masks.push_back(mean_split(residue));
    out.fallback = true;
    return out;
  }
  for (std::size_t j = 0; j < thresholds.values.size(); ++j) {
    if (j > 0 && !(thresholds.values[j] > thresholds.values[j - 1]))
      throw Error(ErrorKind::InvalidInput, "thresholds must be strictly increasing");
    out.masks.push_back(threshold_mask(residue, thresholds.values[j]));
  }
  return out;
}

Mask primary_mask(const ScalarField& residue, const ThresholdSet& thresholds) {
  if (thresholds.empty()) return mean_split(residue);
  return threshold_mask(residue, thresholds.values[thresholds.primary]);
}

Bilayer bilayer_segment(const ScalarField& residue, std::size_t bins) {
  Bilayer b;
  const auto set = find_thresholds(histogram(residue, bins), 1);
  if (set.empty()) {
    b.foreground = Mask(residue.dims);
    b.background = Mask(residue.dims, true);
    b.degenerate = true;
    b.threshold = residue.values.empty() ? 0.0 : residue[0];
    return b;
  }
  b.threshold = set.values[set.primary];
  b.foreground = threshold_mask(residue, b.threshold);
  b.background = Mask(residue.dims);
  for (std::size_t k = 0; k < residue.size(); ++k) b.background.set(k, !b.foreground[k]);
  return b;
}

ScalarField center_fusion(const ScalarField& residue, double strength) {
  if (!(strength >= 0.0)) throw Error(ErrorKind::InvalidConfig, "center fusion strength must be >= 0");
  ScalarField s = normalize_min_max(residue);
  const auto& d = s.dims;
  const double cx = 0.5 * (double(d.width) - 1.0);
  const double cy = 0.5 * (double(d.height) - 1.0);
  const double half_diag_sq = cx * cx + cy * cy;
  if (strength == 0.0 || half_diag_sq == 0.0) return s;
  for (std::uint32_t y = 0; y < d.height; ++y) {
    for (std::uint32_t x = 0; x < d.width; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double r_sq = (dx * dx + dy * dy) / half_diag_sq;
      s[d.index(x, y)] *= std::exp(-strength * r_sq);
    }
  }
  return s;
}

Mask filter_small_components(const Mask& mask, std::size_t min_area) {
  const auto& d = mask.dims;
  Mask out(d);
  std::vector<std::uint8_t> visited(d.size(), 0);
  std::vector<NeuronIndex> stack, component;
  for (NeuronIndex start = 0; start < d.size(); ++start) {
    if (!mask[start] || visited[start]) continue;
    component.clear();
    stack.assign(1, start);
    visited[start] = 1;
    while (!stack.empty()) {
      const NeuronIndex k = stack.back();
      stack.pop_back();
      component.push_back(k);
      const int x = int(d.x_of(k)), y = int(d.y_of(k));
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= int(d.width) || ny >= int(d.height)) continue;
          const auto j = d.index(std::uint32_t(nx), std::uint32_t(ny));
          if (mask[j] && !visited[j]) {
            visited[j] = 1;
            stack.push_back(j);
          }
        }
      }
    }
    if (component.size() >= min_area)
      for (auto k : component) out.set(k, true);
  }
  return out;
}

}  // namespace sunn
