#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sunn/grid.hpp"
#include "sunn/topology.hpp"

namespace sunn {

/// Input-layer signals: one small channel vector per pixel, each channel
/// normalized to [0, 1]. Channels are interleaved.
struct SignalField {
  GridDims dims;
  std::uint32_t channels = 1;
  std::vector<double> values;

  SignalField() = default;
  SignalField(GridDims d, std::uint32_t c, double fill = 0.0) : dims(d), channels(c), values(d.size() * c, fill) {}

  std::span<const double> pixel(std::size_t k) const { return {values.data() + k * channels, channels}; }
  std::span<double> pixel(std::size_t k) { return {values.data() + k * channels, channels}; }

  /// Throws InvalidInput on non-finite or out-of-range values.
  void validate() const;
};

/// Single-channel field from a scalar field (values must already be in [0, 1]).
SignalField to_signal(const ScalarField& gray);

struct GaussianParams {
  double sigma = 0.1;
  void validate() const;
};

/// Un-normalized Gaussian similarity exp(-d^2 / (2 sigma^2)), peak value 1.
double gaussian_similarity(double distance, double sigma) noexcept;

/// Channel-wise Euclidean distance.
double signal_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Synaptic weights, aligned entry-for-entry with the topology's out-lists.
struct WeightField {
  GridDims dims;
  std::vector<std::size_t> offsets;
  std::vector<double> values;

  std::span<const double> weights(NeuronIndex k) const {
    return {values.data() + offsets[k], offsets[k + 1] - offsets[k]};
  }
  std::span<double> weights(NeuronIndex k) { return {values.data() + offsets[k], offsets[k + 1] - offsets[k]}; }
  std::size_t neuron_count() const noexcept { return dims.size(); }
};

/// Throws Shape when `weights` is not aligned with `topology`.
void require_aligned(const WeightField& weights, const RandomTopology& topology);

WeightField compute_weights(const SignalField& signals, const RandomTopology& topology, const GaussianParams& params,
                            unsigned threads = 1);

/// Mean connectivity per neuron. Neurons with no connections get 0 and are
/// listed in `empty_neurons`.
struct CMap {
  ScalarField values;
  std::vector<NeuronIndex> empty_neurons;
};

CMap connectivity_map(const WeightField& weights);

/// 1 - c-map: weakly connected neurons read as strong edges.
ScalarField edge_map(const CMap& cmap);

/// One un-normalized propagation step: out_k = sum_i w_{k,i} * in_i.
ScalarField propagate_intensity(const WeightField& weights, const RandomTopology& topology, const ScalarField& v_in);

}  // namespace sunn
