#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sunn/grid.hpp"
#include "sunn/smart_neuron.hpp"
#include "sunn/topology.hpp"

namespace sunn {

enum class SinkKind { Border, None, Custom };
enum class Symmetrization { Average, Max, Directed };
/// Conductance: one global normalizer C = max_k (sum_i w_{k,i} + gamma_k),
/// so a neuron keeps 1 - (sum_i w_{k,i} + gamma_k) / C of what it releases
/// and a uniform potential is stationary away from the ground.
/// RandomWalk: per-neuron normalizer D_k = sum_i w_{k,i} + gamma_k.
enum class Normalization { Conductance, RandomWalk };

std::string to_string(SinkKind s);
std::string to_string(Symmetrization s);
std::string to_string(Normalization n);
SinkKind sink_kind_from_string(const std::string& s);
Symmetrization symmetrization_from_string(const std::string& s);
Normalization normalization_from_string(const std::string& s);

struct LeakConfig {
  double leak_rate = 0.5;           // lambda, in (0, 1]
  double ground_conductance = 1.0;  // gamma, >= 0
  SinkKind sink = SinkKind::Border;
  std::optional<Mask> custom_sink;  // required when sink == Custom
  std::uint32_t max_iterations = 50;
  double tolerance = 1e-6;  // on max per-neuron |dv|
  Symmetrization symmetrization = Symmetrization::Average;
  Normalization normalization = Normalization::Conductance;

  void validate() const;
};

/// Redistribution kernel over the (optionally symmetrized) net. Neuron k
/// sends P_{k,i} = w_{k,i} / D_k of its released potential to neighbor i,
/// G_k = gamma_k / D_k to ground and keeps the remainder P_{k,k}. D_k is the
/// global C or the per-neuron sum, depending on Normalization. Neurons with
/// sum_i w_{k,i} + gamma_k == 0 are isolated and keep their potential.
class RedistributionKernel {
 public:
  const GridDims& dims() const noexcept { return dims_; }
  std::size_t neuron_count() const noexcept { return dims_.size(); }

  std::span<const NeuronIndex> out_targets(NeuronIndex k) const {
    return {targets_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }
  /// Symmetrized connection strengths w_{k,i}, aligned with out_targets(k).
  std::span<const double> out_weights(NeuronIndex k) const {
    return {weights_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }
  /// P_{k,i}, aligned with out_targets(k). Empty for isolated neurons.
  std::vector<double> outflow_fractions(NeuronIndex k) const;
  double ground_fraction(NeuronIndex k) const noexcept { return ground_fraction_[k]; }
  /// Fraction of released potential that stays at k: 1 - sum_i P_{k,i} - G_k.
  double retained_fraction(NeuronIndex k) const noexcept { return 1.0 - outflow_total_[k]; }
  double denominator(NeuronIndex k) const noexcept { return denominator_[k]; }
  bool isolated(NeuronIndex k) const noexcept { return outflow_total_[k] == 0.0; }
  std::size_t isolated_count() const noexcept;

  friend RedistributionKernel normalize_weights(const WeightField&, const RandomTopology&, const LeakConfig&,
                                                unsigned);
  friend ScalarField leaky_step(const RedistributionKernel&, const ScalarField&, double, unsigned);

 private:
  GridDims dims_;
  // Outgoing lists, sorted by target.
  std::vector<std::size_t> offsets_;
  std::vector<NeuronIndex> targets_;
  std::vector<double> weights_;
  // Incoming lists (source i, weight w_{i,k}); only populated for directed
  // kernels, symmetric kernels reuse the outgoing arrays.
  bool symmetric_ = true;
  std::vector<std::size_t> in_offsets_;
  std::vector<NeuronIndex> in_sources_;
  std::vector<double> in_weights_;

  std::vector<double> denominator_;
  std::vector<double> inv_denominator_;  // 0 for isolated neurons
  std::vector<double> outflow_total_;    // sum_i P_{k,i} + G_k
  std::vector<double> ground_fraction_;
};

/// Per-neuron sink membership for the given config.
Mask sink_mask(const GridDims& dims, const LeakConfig& config);

RedistributionKernel normalize_weights(const WeightField& weights, const RandomTopology& topology,
                                       const LeakConfig& config, unsigned threads = 1);

/// One synchronous update: v'_k = (1 - lambda) v_k + lambda * sum_i P_{i,k} v_i,
/// with P_{k,k} the retained fraction. Throws NumericalFailure on non-finite output.
ScalarField leaky_step(const RedistributionKernel& kernel, const ScalarField& v, double leak_rate,
                       unsigned threads = 1);

/// Potential that one leaky_step sends to ground: lambda * sum_k G_k v_k.
double ground_outflow(const RedistributionKernel& kernel, const ScalarField& v, double leak_rate);

double total_potential(const ScalarField& v) noexcept;

struct TraceEntry {
  std::uint32_t iteration;
  double total;
  double max_delta;
};

/// Potential-residue map plus the iteration trace. trace[0] is the initial
/// state; trace[t] is the state after iteration t.
struct PRMap {
  ScalarField residue;
  std::uint32_t iterations_run = 0;
  bool converged = false;
  std::size_t isolated_neurons = 0;
  std::vector<TraceEntry> trace;
};

PRMap run_leaky(const RedistributionKernel& kernel, const LeakConfig& config, unsigned threads = 1);
PRMap run_leaky(const WeightField& weights, const RandomTopology& topology, const LeakConfig& config,
                unsigned threads = 1);

/// Min-max normalization to [0, 1]; constant fields map to all zeros.
ScalarField normalize_min_max(const ScalarField& f);

}  // namespace sunn
