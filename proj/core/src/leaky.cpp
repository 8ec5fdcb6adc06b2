#include "sunn/leaky.hpp"

#include <algorithm>
#include <cmath>

#include "sunn/parallel.hpp"

namespace sunn {

namespace {

struct MergedEntry {
  NeuronIndex col;
  double forward;   // sum of phi_{k->col}
  double backward;  // sum of phi_{col->k}
  std::uint32_t seq;  // insertion order
};

// Sorted union of k's out-edges and in-edges with both directions' weights.
void merge_row(NeuronIndex k, const WeightField& w, std::span<const NeuronIndex> targets,
               const std::vector<std::size_t>& t_offsets, const std::vector<NeuronIndex>& t_sources,
               const std::vector<double>& t_weights, bool include_incoming, std::vector<MergedEntry>& buf) {
  buf.clear();
  std::uint32_t seq = 0;
  for (std::size_t e = w.offsets[k]; e < w.offsets[k + 1]; ++e) buf.push_back({targets[e], w.values[e], 0.0, seq++});
  if (include_incoming) {
    for (std::size_t e = t_offsets[k]; e < t_offsets[k + 1]; ++e)
      buf.push_back({t_sources[e], 0.0, t_weights[e], seq++});
  }
  std::sort(buf.begin(), buf.end(), [](const MergedEntry& a, const MergedEntry& b) {
    return a.col != b.col ? a.col < b.col : a.seq < b.seq;
  });
  std::size_t out = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    if (out > 0 && buf[out - 1].col == buf[i].col) {
      buf[out - 1].forward += buf[i].forward;
      buf[out - 1].backward += buf[i].backward;
    } else {
      buf[out++] = buf[i];
    }
  }
  buf.resize(out);
}

double combine(const MergedEntry& m, Symmetrization mode) {
  switch (mode) {
    case Symmetrization::Average: return 0.5 * (m.forward + m.backward);
    case Symmetrization::Max: return std::max(m.forward, m.backward);
    case Symmetrization::Directed: return m.forward;
  }
  return m.forward;
}

}  // namespace

std::string to_string(SinkKind s) {
  switch (s) {
    case SinkKind::Border: return "border";
    case SinkKind::None: return "none";
    case SinkKind::Custom: return "custom";
  }
  return "unknown";
}

std::string to_string(Symmetrization s) {
  switch (s) {
    case Symmetrization::Average: return "average";
    case Symmetrization::Max: return "max";
    case Symmetrization::Directed: return "directed";
  }
  return "unknown";
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::Conductance: return "conductance";
    case Normalization::RandomWalk: return "random-walk";
  }
  return "unknown";
}

Normalization normalization_from_string(const std::string& s) {
  if (s == "conductance") return Normalization::Conductance;
  if (s == "random-walk") return Normalization::RandomWalk;
  throw Error(ErrorKind::InvalidConfig, "unknown normalization '" + s + "'");
}

SinkKind sink_kind_from_string(const std::string& s) {
  if (s == "border") return SinkKind::Border;
  if (s == "none") return SinkKind::None;
  if (s == "custom") return SinkKind::Custom;
  throw Error(ErrorKind::InvalidConfig, "unknown sink '" + s + "'");
}

Symmetrization symmetrization_from_string(const std::string& s) {
  if (s == "average") return Symmetrization::Average;
  if (s == "max") return Symmetrization::Max;
  if (s == "directed") return Symmetrization::Directed;
  throw Error(ErrorKind::InvalidConfig, "unknown symmetrization '" + s + "'");
}

void LeakConfig::validate() const {
  if (!(leak_rate > 0.0 && leak_rate <= 1.0)) throw Error(ErrorKind::InvalidConfig, "leak rate must be in (0, 1]");
  if (!(ground_conductance >= 0.0) || !std::isfinite(ground_conductance))
    throw Error(ErrorKind::InvalidConfig, "ground conductance must be >= 0");
  if (max_iterations < 1) throw Error(ErrorKind::InvalidConfig, "max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw Error(ErrorKind::InvalidConfig, "tolerance must be > 0");
  if (sink == SinkKind::Custom && !custom_sink) throw Error(ErrorKind::InvalidConfig, "custom sink requires a mask");
}

std::vector<double> RedistributionKernel::outflow_fractions(NeuronIndex k) const {
  std::vector<double> p;
  if (isolated(k)) return p;
  p.reserve(out_weights(k).size());
  for (double w : out_weights(k)) p.push_back(w / denominator_[k]);
  return p;
}

std::size_t RedistributionKernel::isolated_count() const noexcept {
  return std::size_t(std::count(outflow_total_.begin(), outflow_total_.end(), 0.0));
}

Mask sink_mask(const GridDims& dims, const LeakConfig& config) {
  switch (config.sink) {
    case SinkKind::None: return Mask(dims);
    case SinkKind::Custom:
      require_same_dims(config.custom_sink->dims, dims, "custom sink");
      return *config.custom_sink;
    case SinkKind::Border: {
      Mask m(dims);
      for (NeuronIndex k = 0; k < dims.size(); ++k) m.set(k, dims.on_border(k));
      return m;
    }
  }
  return Mask(dims);
}

RedistributionKernel normalize_weights(const WeightField& weights, const RandomTopology& topology,
                                       const LeakConfig& config, unsigned threads) {
  require_aligned(weights, topology);
  config.validate();
  const std::size_t n = weights.neuron_count();
  const auto targets = topology.targets();

  // Transpose of the directed weights by counting sort; sources end up in
  // ascending order within each row.
  std::vector<std::size_t> t_offsets(n + 1, 0);
  for (auto j : targets) ++t_offsets[j + 1];
  for (std::size_t k = 0; k < n; ++k) t_offsets[k + 1] += t_offsets[k];
  std::vector<NeuronIndex> t_sources(targets.size());
  std::vector<double> t_weights(targets.size());
  {
    std::vector<std::size_t> cursor(t_offsets.begin(), t_offsets.end() - 1);
    for (NeuronIndex k = 0; k < n; ++k) {
      for (std::size_t e = weights.offsets[k]; e < weights.offsets[k + 1]; ++e) {
        const auto pos = cursor[targets[e]]++;
        t_sources[pos] = k;
        t_weights[pos] = weights.values[e];
      }
    }
  }

  const bool symmetric = config.symmetrization != Symmetrization::Directed;
  RedistributionKernel kernel;
  kernel.dims_ = weights.dims;
  kernel.symmetric_ = symmetric;
  kernel.offsets_.assign(n + 1, 0);

  std::vector<std::size_t> row_len(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<MergedEntry> buf;
    for (std::size_t k = begin; k < end; ++k) {
      merge_row(NeuronIndex(k), weights, targets, t_offsets, t_sources, t_weights, symmetric, buf);
      row_len[k] = buf.size();
    }
  });
  for (std::size_t k = 0; k < n; ++k) kernel.offsets_[k + 1] = kernel.offsets_[k] + row_len[k];
  kernel.targets_.resize(kernel.offsets_[n]);
  kernel.weights_.resize(kernel.offsets_[n]);

  const Mask sinks = sink_mask(weights.dims, config);
  // Row strength sum_i w_{k,i} + gamma_k, kept in denominator_ until the
  // normalizer is known.
  kernel.denominator_.resize(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<MergedEntry> buf;
    for (std::size_t k = begin; k < end; ++k) {
      merge_row(NeuronIndex(k), weights, targets, t_offsets, t_sources, t_weights, symmetric, buf);
      double sum = 0.0;
      std::size_t pos = kernel.offsets_[k];
      for (const auto& m : buf) {
        const double w = combine(m, config.symmetrization);
        kernel.targets_[pos] = m.col;
        kernel.weights_[pos] = w;
        sum += w;
        ++pos;
      }
      kernel.denominator_[k] = sum + (sinks[k] ? config.ground_conductance : 0.0);
    }
  });

  const double global = config.normalization == Normalization::Conductance
                            ? *std::max_element(kernel.denominator_.begin(), kernel.denominator_.end())
                            : 0.0;
  kernel.inv_denominator_.resize(n);
  kernel.outflow_total_.resize(n);
  kernel.ground_fraction_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double strength = kernel.denominator_[k];
    const double gamma = sinks[k] ? config.ground_conductance : 0.0;
    if (strength <= 0.0) {
      kernel.inv_denominator_[k] = 0.0;
      kernel.outflow_total_[k] = 0.0;
      kernel.ground_fraction_[k] = 0.0;
      if (config.normalization == Normalization::RandomWalk) kernel.denominator_[k] = 0.0;
      else kernel.denominator_[k] = global;
      continue;
    }
    const double denom = config.normalization == Normalization::Conductance ? global : strength;
    kernel.denominator_[k] = denom;
    kernel.inv_denominator_[k] = 1.0 / denom;
    kernel.outflow_total_[k] = strength / denom;
    kernel.ground_fraction_[k] = gamma / denom;
  }

  if (!symmetric) {
    // Incoming lists: directed w_{i,k} for every out-edge i -> k, summed
    // over duplicates, taken from the already merged out-lists.
    kernel.in_offsets_.assign(n + 1, 0);
    for (auto j : kernel.targets_) ++kernel.in_offsets_[j + 1];
    for (std::size_t k = 0; k < n; ++k) kernel.in_offsets_[k + 1] += kernel.in_offsets_[k];
    kernel.in_sources_.resize(kernel.targets_.size());
    kernel.in_weights_.resize(kernel.targets_.size());
    std::vector<std::size_t> cursor(kernel.in_offsets_.begin(), kernel.in_offsets_.end() - 1);
    for (NeuronIndex i = 0; i < n; ++i) {
      for (std::size_t e = kernel.offsets_[i]; e < kernel.offsets_[i + 1]; ++e) {
        const auto pos = cursor[kernel.targets_[e]]++;
        kernel.in_sources_[pos] = i;
        kernel.in_weights_[pos] = kernel.weights_[e];
      }
    }
  }
  return kernel;
}

ScalarField leaky_step(const RedistributionKernel& kernel, const ScalarField& v, double leak_rate, unsigned threads) {
  require_same_dims(v.dims, kernel.dims_, "leaky_step");
  const std::size_t n = kernel.neuron_count();

  // Potential each neuron releases per unit of connection strength.
  std::vector<double> released(n);
  for (std::size_t i = 0; i < n; ++i) released[i] = v[i] * kernel.inv_denominator_[i];

  const auto& offs = kernel.symmetric_ ? kernel.offsets_ : kernel.in_offsets_;
  const auto& srcs = kernel.symmetric_ ? kernel.targets_ : kernel.in_sources_;
  const auto& ws = kernel.symmetric_ ? kernel.weights_ : kernel.in_weights_;

  ScalarField next(v.dims);
  bool finite = true;
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    bool ok = true;
    for (std::size_t k = begin; k < end; ++k) {
      double inflow = 0.0;
      for (std::size_t e = offs[k]; e < offs[k + 1]; ++e) inflow += ws[e] * released[srcs[e]];
      const double keep = 1.0 - leak_rate * kernel.outflow_total_[k];
      const double value = keep * v[k] + leak_rate * inflow;
      ok = ok && std::isfinite(value);
      next[k] = value;
    }
    if (!ok) finite = false;
  });
  if (!finite) throw Error(ErrorKind::NumericalFailure, "non-finite potential in leaky step");
  return next;
}

double ground_outflow(const RedistributionKernel& kernel, const ScalarField& v, double leak_rate) {
  double sum = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) sum += kernel.ground_fraction(NeuronIndex(k)) * v[k];
  return leak_rate * sum;
}

double total_potential(const ScalarField& v) noexcept {
  double sum = 0.0;
  for (double x : v.values) sum += x;
  return sum;
}

PRMap run_leaky(const RedistributionKernel& kernel, const LeakConfig& config, unsigned threads) {
  config.validate();
  PRMap pr;
  pr.residue = ScalarField(kernel.dims(), 1.0);
  pr.isolated_neurons = kernel.isolated_count();
  pr.trace.push_back({0, total_potential(pr.residue), 0.0});
  for (std::uint32_t t = 1; t <= config.max_iterations; ++t) {
    ScalarField next = leaky_step(kernel, pr.residue, config.leak_rate, threads);
    double max_delta = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) max_delta = std::max(max_delta, std::abs(next[k] - pr.residue[k]));
    pr.residue = std::move(next);
    pr.iterations_run = t;
    pr.trace.push_back({t, total_potential(pr.residue), max_delta});
    if (max_delta < config.tolerance) {
      pr.converged = true;
      break;
    }
  }
  return pr;
}

PRMap run_leaky(const WeightField& weights, const RandomTopology& topology, const LeakConfig& config,
                unsigned threads) {
  return run_leaky(normalize_weights(weights, topology, config, threads), config, threads);
}

ScalarField normalize_min_max(const ScalarField& f) {
  ScalarField out(f.dims);
  if (f.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
  const double range = *hi - *lo;
  if (range <= 0.0) return out;
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = (f[k] - *lo) / range;
  return out;
}

}  // namespace sunn
