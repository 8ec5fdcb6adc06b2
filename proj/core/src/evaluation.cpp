#include "sunn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>

#include "sunn/leaky.hpp"
#include "sunn/rng.hpp"

namespace sunn {

namespace {

constexpr std::uint64_t kPerturbSalt = 0x6e6f697365ULL;

// Hopcroft-Karp maximum bipartite matching between predicted pixels (left)
// and ground-truth pixels (right).
class BipartiteMatcher {
 public:
  BipartiteMatcher(std::size_t left, std::size_t right, std::vector<std::size_t> offsets,
                   std::vector<std::uint32_t> adj)
      : left_(left), offsets_(std::move(offsets)), adj_(std::move(adj)), match_l_(left, kFree), match_r_(right, kFree),
        dist_(left) {}

  std::size_t run() {
    std::size_t matched = 0;
    while (bfs()) {
      for (std::uint32_t u = 0; u < left_; ++u)
        if (match_l_[u] == kFree && dfs(u)) ++matched;
    }
    return matched;
  }

 private:
  static constexpr std::uint32_t kFree = std::numeric_limits<std::uint32_t>::max();
  static constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();

  bool bfs() {
    std::queue<std::uint32_t> q;
    for (std::uint32_t u = 0; u < left_; ++u) {
      if (match_l_[u] == kFree) {
        dist_[u] = 0;
        q.push(u);
      } else {
        dist_[u] = kInf;
      }
    }
    bool found = false;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (std::size_t e = offsets_[u]; e < offsets_[u + 1]; ++e) {
        const auto w = match_r_[adj_[e]];
        if (w == kFree) {
          found = true;
        } else if (dist_[w] == kInf) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  // Iterative DFS along the BFS layering.
  bool dfs(std::uint32_t root) {
    struct Frame {
      std::uint32_t u;
      std::size_t e;
    };
    std::vector<Frame> stack{{root, offsets_[root]}};
    while (!stack.empty()) {
      auto& f = stack.back();
      if (f.e == offsets_[f.u + 1]) {
        dist_[f.u] = kInf;
        stack.pop_back();
        continue;
      }
      const auto v = adj_[f.e];
      const auto w = match_r_[v];
      if (w == kFree) {
        // Augment along the stack.
        for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
          const auto rv = adj_[it->e];
          match_l_[it->u] = rv;
          match_r_[rv] = it->u;
        }
        return true;
      }
      if (dist_[w] == dist_[f.u] + 1) {
        stack.push_back({w, offsets_[w]});
        continue;
      }
      ++f.e;
    }
    return false;
  }

  std::size_t left_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> adj_;
  std::vector<std::uint32_t> match_l_, match_r_, dist_;
};

}  // namespace

double precision(const Confusion& c) noexcept {
  const auto predicted = c.tp + c.fp;
  return predicted == 0 ? 1.0 : double(c.tp) / double(predicted);
}

double recall(const Confusion& c) noexcept {
  const auto positives = c.tp + c.fn;
  return positives == 0 ? 0.0 : double(c.tp) / double(positives);
}

Confusion confusion(const Mask& prediction, const GroundTruth& gt, std::uint32_t tolerance_px) {
  require_same_dims(prediction.dims, gt.mask.dims, "confusion");
  const auto& d = prediction.dims;
  Confusion c;
  if (gt.kind == GroundTruthKind::ObjectMask) {
    for (std::size_t k = 0; k < d.size(); ++k) {
      const bool p = prediction[k], g = gt.mask[k];
      c.tp += p && g;
      c.fp += p && !g;
      c.fn += !p && g;
    }
    return c;
  }

  std::vector<std::uint32_t> gt_id(d.size(), std::numeric_limits<std::uint32_t>::max());
  std::size_t n_gt = 0;
  for (std::size_t k = 0; k < d.size(); ++k)
    if (gt.mask[k]) gt_id[k] = std::uint32_t(n_gt++);

  // Candidates listed nearest first so early augmenting paths prefer close pairs.
  const int tol = int(tolerance_px);
  std::vector<std::pair<int, int>> window;
  for (int dy = -tol; dy <= tol; ++dy)
    for (int dx = -tol; dx <= tol; ++dx) window.emplace_back(dx, dy);
  std::stable_sort(window.begin(), window.end(), [](auto a, auto b) {
    return std::max(std::abs(a.first), std::abs(a.second)) < std::max(std::abs(b.first), std::abs(b.second));
  });

  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> adj;
  std::size_t n_pred = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (!prediction[k]) continue;
    ++n_pred;
    const int x = int(d.x_of(NeuronIndex(k))), y = int(d.y_of(NeuronIndex(k)));
    for (auto [dx, dy] : window) {
      const int nx = x + dx, ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= int(d.width) || ny >= int(d.height)) continue;
      const auto id = gt_id[d.index(std::uint32_t(nx), std::uint32_t(ny))];
      if (id != std::numeric_limits<std::uint32_t>::max()) adj.push_back(id);
    }
    offsets.push_back(adj.size());
  }
  BipartiteMatcher matcher(n_pred, n_gt, std::move(offsets), std::move(adj));
  const auto matched = matcher.run();
  c.tp = matched;
  c.fp = n_pred - matched;
  c.fn = n_gt - matched;
  return c;
}

double PRCurve::best_f1() const noexcept {
  double best = 0.0;
  for (const auto& p : points) {
    const double denom = p.precision + p.recall;
    if (denom > 0.0) best = std::max(best, 2.0 * p.precision * p.recall / denom);
  }
  return best;
}

void PRCurve::write_csv(std::ostream& os) const {
  os << "threshold,precision,recall\n";
  const auto old = os.precision(17);
  for (const auto& p : points) os << p.threshold << ',' << p.precision << ',' << p.recall << '\n';
  os.precision(old);
}

PRCurve binary_pr(const ScalarField& score, const GroundTruth& gt, std::size_t n_thresholds,
                  std::uint32_t match_tolerance_px) {
  require_same_dims(score.dims, gt.mask.dims, "binary_pr");
  if (n_thresholds < 2) throw Error(ErrorKind::InvalidConfig, "need at least 2 thresholds");
  if (gt.mask.count() == 0) throw Error(ErrorKind::CurveInvalid, "ground truth is empty; recall undefined");
  const auto [lo_it, hi_it] = std::minmax_element(score.values.begin(), score.values.end());
  const double lo = *lo_it;
  const double range = *hi_it > lo ? *hi_it - lo : 1.0;
  PRCurve curve;
  for (std::size_t i = 0; i < n_thresholds; ++i) {
    const double t = lo + range * double(i) / double(n_thresholds - 1);
    Mask pred(score.dims);
    for (std::size_t k = 0; k < score.size(); ++k) pred.set(k, score[k] >= t);
    const auto c = confusion(pred, gt, match_tolerance_px);
    curve.points.push_back({t, precision(c), recall(c), c, c.tp + c.fp == 0});
  }
  return curve;
}

double iou(const Mask& a, const Mask& b) {
  require_same_dims(a.dims, b.dims, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t k = 0; k < a.bits.size(); ++k) {
    inter += a[k] && b[k];
    uni += a[k] || b[k];
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

WeightField perturb_weights(const WeightField& weights, double noise_fraction, std::uint64_t seed, NoiseMode mode) {
  if (!(noise_fraction >= 0.0 && noise_fraction <= 1.0))
    throw Error(ErrorKind::InvalidConfig, "noise fraction must be in [0, 1]");
  WeightField out = weights;
  if (noise_fraction == 0.0) return out;
  for (NeuronIndex k = 0; k < out.neuron_count(); ++k) {
    auto rng = SplitMix64::stream(seed ^ kPerturbSalt, k);
    for (double& w : out.weights(k)) {
      const double u = (2.0 * rng.uniform() - 1.0) * noise_fraction;
      const double noisy = mode == NoiseMode::Multiplicative ? w * (1.0 + u) : w + u;
      w = std::clamp(noisy, 0.0, 1.0);
    }
  }
  return out;
}

ScalarField gradient_magnitude(const SignalField& signals, GradientOperator op) {
  const auto& d = signals.dims;
  ScalarField gray(d);
  for (std::size_t k = 0; k < d.size(); ++k) {
    double s = 0.0;
    for (double v : signals.pixel(k)) s += v;
    gray[k] = s / signals.channels;
  }
  // Sobel weights the center row/column by 2, Prewitt by 1.
  const double mid = op == GradientOperator::Sobel ? 2.0 : 1.0;
  auto at = [&](int x, int y) {
    x = std::clamp(x, 0, int(d.width) - 1);
    y = std::clamp(y, 0, int(d.height) - 1);
    return gray.at(std::uint32_t(x), std::uint32_t(y));
  };
  ScalarField mag(d);
  for (int y = 0; y < int(d.height); ++y) {
    for (int x = 0; x < int(d.width); ++x) {
      const double gx = (at(x + 1, y - 1) - at(x - 1, y - 1)) + mid * (at(x + 1, y) - at(x - 1, y)) +
                        (at(x + 1, y + 1) - at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) - at(x - 1, y - 1)) + mid * (at(x, y + 1) - at(x, y - 1)) +
                        (at(x + 1, y + 1) - at(x + 1, y - 1));
      mag[d.index(std::uint32_t(x), std::uint32_t(y))] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return normalize_min_max(mag);
}

}  // namespace sunn
