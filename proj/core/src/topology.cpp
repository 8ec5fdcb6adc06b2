#include "sunn/topology.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sunn/parallel.hpp"
#include "sunn/rng.hpp"

namespace sunn {

namespace {

constexpr int kMaxAttemptsPerSlot = 64;

struct SlotResult {
  std::uint32_t filled = 0;
  std::uint32_t duplicates = 0;
  std::uint32_t dropped = 0;
};

// Draws one neuron's out-list into `out` (capacity = degree). `seen` is a
// scratch window of (2R+1)^2 flags.
SlotResult draw_neuron(const GridDims& dims, const TopologyConfig& cfg, NeuronIndex k, NeuronIndex* out,
                       std::vector<std::uint8_t>& seen) {
  const int r = int(cfg.radius);
  const int side = 2 * r + 1;
  const int x = int(dims.x_of(k));
  const int y = int(dims.y_of(k));
  const int w = int(dims.width);
  const int h = int(dims.height);
  std::fill(seen.begin(), seen.end(), 0);
  auto rng = SplitMix64::stream(cfg.seed, k);
  SlotResult res;

  auto cell_of = [&](int tx, int ty) { return (ty - y + r) * side + (tx - x + r); };
  auto accept = [&](int tx, int ty) {
    seen[cell_of(tx, ty)] = 1;
    out[res.filled++] = dims.index(std::uint32_t(tx), std::uint32_t(ty));
  };

  const std::uint32_t degree = cfg.degree();
  for (std::uint32_t slot = 0; slot < degree; ++slot) {
    bool done = false;
    for (int attempt = 0; attempt < kMaxAttemptsPerSlot && !done; ++attempt) {
      int tx = x + offset_from_uniform(rng.uniform(), cfg.radius);
      int ty = y + offset_from_uniform(rng.uniform(), cfg.radius);
      const bool off_grid = tx < 0 || ty < 0 || tx >= w || ty >= h;
      if (off_grid) {
        if (cfg.border_policy == BorderPolicy::Drop) {
          ++res.dropped;
          done = true;
          break;
        }
        if (cfg.border_policy == BorderPolicy::Resample) continue;
        tx = std::clamp(tx, 0, w - 1);
        ty = std::clamp(ty, 0, h - 1);
      }
      if (tx == x && ty == y) continue;
      if (seen[cell_of(tx, ty)]) continue;
      accept(tx, ty);
      done = true;
    }
    if (done) continue;

    // Retries exhausted: pick uniformly among the valid in-grid cells,
    // preferring unseen ones.
    std::vector<int> fresh, any;
    for (int ty = std::max(0, y - r); ty <= std::min(h - 1, y + r); ++ty) {
      for (int tx = std::max(0, x - r); tx <= std::min(w - 1, x + r); ++tx) {
        if (tx == x && ty == y) continue;
        const int c = cell_of(tx, ty);
        any.push_back(c);
        if (!seen[c]) fresh.push_back(c);
      }
    }
    const auto& pool = fresh.empty() ? any : fresh;
    if (pool.empty()) throw Error(ErrorKind::InfeasibleConfig, "no non-self neighbor candidates");
    if (fresh.empty()) ++res.duplicates;
    const int c = pool[std::min<std::size_t>(pool.size() - 1, std::size_t(rng.uniform() * double(pool.size())))];
    accept(x + c % side - r, y + c / side - r);
  }
  return res;
}

}  // namespace

std::string to_string(BorderPolicy p) {
  switch (p) {
    case BorderPolicy::Clamp: return "clamp";
    case BorderPolicy::Resample: return "resample";
    case BorderPolicy::Drop: return "drop";
  }
  return "unknown";
}

BorderPolicy border_policy_from_string(const std::string& s) {
  if (s == "clamp") return BorderPolicy::Clamp;
  if (s == "resample") return BorderPolicy::Resample;
  if (s == "drop") return BorderPolicy::Drop;
  throw Error(ErrorKind::InvalidConfig, "unknown border policy '" + s + "'");
}

void TopologyConfig::validate() const {
  if (radius < 1) throw Error(ErrorKind::InvalidConfig, "radius must be >= 1");
  if (degree() < 1) throw Error(ErrorKind::InvalidConfig, "connections_per_neuron must be >= 1");
}

int offset_from_uniform(double u, std::uint32_t radius) noexcept {
  const int side = 2 * int(radius) + 1;
  const int cell = std::min(side - 1, int(std::floor(u * side)));
  return cell - int(radius);
}

std::span<const NeuronIndex> RandomTopology::neighbors(NeuronIndex k) const {
  if (k >= neuron_count()) {
    throw Error(ErrorKind::Index, "neuron index " + std::to_string(k) + " out of range");
  }
  return {targets_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
}

void RandomTopology::write_dump(std::ostream& os) const {
  for (NeuronIndex k = 0; k < neuron_count(); ++k) {
    os << k << ':';
    for (auto j : neighbors(k)) os << ' ' << j;
    os << '\n';
  }
}

RandomTopology build_random_topology(const GridDims& dims, const TopologyConfig& config, unsigned threads) {
  if (!dims.valid()) throw Error(ErrorKind::InvalidDimensions, "grid must have non-zero width and height");
  config.validate();
  if (dims.size() == 1) throw Error(ErrorKind::InfeasibleConfig, "1x1 grid has no non-self neighbor candidates");
  const std::uint32_t degree = config.degree();
  const std::size_t window = std::size_t(2 * config.radius + 1) * (2 * config.radius + 1) - 1;
  if (config.border_policy == BorderPolicy::Resample && degree > window) {
    throw Error(ErrorKind::InfeasibleConfig, "connections_per_neuron " + std::to_string(degree) + " exceeds the " +
                                                 std::to_string(window) + " distinct cells within radius " +
                                                 std::to_string(config.radius));
  }

  const std::size_t n = dims.size();
  std::vector<NeuronIndex> slots(n * degree);
  std::vector<SlotResult> results(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint8_t> seen(window + 1);
    for (std::size_t k = begin; k < end; ++k) {
      results[k] = draw_neuron(dims, config, NeuronIndex(k), slots.data() + k * degree, seen);
    }
  });

  RandomTopology topo;
  topo.dims_ = dims;
  topo.config_ = config;
  topo.config_.connections_per_neuron = degree;
  topo.offsets_.resize(n + 1);
  topo.targets_.reserve(n * degree);
  for (std::size_t k = 0; k < n; ++k) {
    topo.offsets_[k] = topo.targets_.size();
    topo.targets_.insert(topo.targets_.end(), slots.begin() + k * degree,
                         slots.begin() + k * degree + results[k].filled);
    topo.duplicates_ += results[k].duplicates;
    topo.dropped_ += results[k].dropped;
  }
  topo.offsets_[n] = topo.targets_.size();
  return topo;
}

RandomTopology make_topology(const GridDims& dims, std::vector<std::vector<NeuronIndex>> lists) {
  if (!dims.valid()) throw Error(ErrorKind::InvalidDimensions, "grid must have non-zero width and height");
  if (lists.size() != dims.size()) throw Error(ErrorKind::Shape, "one neighbor list per neuron required");
  RandomTopology topo;
  topo.dims_ = dims;
  std::uint32_t radius = 1, degree = 1;
  topo.offsets_.resize(lists.size() + 1);
  for (std::size_t k = 0; k < lists.size(); ++k) {
    topo.offsets_[k] = topo.targets_.size();
    degree = std::max<std::uint32_t>(degree, std::uint32_t(lists[k].size()));
    for (auto j : lists[k]) {
      if (j >= dims.size()) throw Error(ErrorKind::Index, "neighbor index out of range");
      const auto dx = std::abs(int(dims.x_of(j)) - int(dims.x_of(NeuronIndex(k))));
      const auto dy = std::abs(int(dims.y_of(j)) - int(dims.y_of(NeuronIndex(k))));
      radius = std::max<std::uint32_t>(radius, std::uint32_t(std::max(dx, dy)));
      topo.targets_.push_back(j);
    }
  }
  topo.offsets_[lists.size()] = topo.targets_.size();
  topo.config_.radius = radius;
  topo.config_.connections_per_neuron = degree;
  return topo;
}

}  // namespace sunn
