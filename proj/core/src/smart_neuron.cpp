#include "sunn/smart_neuron.hpp"

#include <cmath>

#include "sunn/parallel.hpp"

namespace sunn {

void SignalField::validate() const {
  if (!dims.valid()) throw Error(ErrorKind::InvalidDimensions, "signal field has zero area");
  if (channels < 1) throw Error(ErrorKind::InvalidInput, "signal field needs at least one channel");
  if (values.size() != dims.size() * channels) throw Error(ErrorKind::Shape, "signal field size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw Error(ErrorKind::InvalidInput, "signal value at element " + std::to_string(i) + " is not in [0, 1]");
    }
  }
}

SignalField to_signal(const ScalarField& gray) {
  SignalField s(gray.dims, 1);
  s.values = gray.values;
  return s;
}

void GaussianParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::InvalidConfig, "sigma must be > 0");
}

double gaussian_similarity(double distance, double sigma) noexcept {
  return std::exp(-(distance * distance) / (2.0 * sigma * sigma));
}

double signal_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double sq = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    sq += d * d;
  }
  return std::sqrt(sq);
}

void require_aligned(const WeightField& weights, const RandomTopology& topology) {
  require_same_dims(weights.dims, topology.dims(), "weights/topology");
  const auto offs = topology.offsets();
  if (weights.offsets.size() != offs.size() || !std::equal(offs.begin(), offs.end(), weights.offsets.begin()) ||
      weights.values.size() != topology.edge_count()) {
    throw Error(ErrorKind::Shape, "weight field is not aligned with topology");
  }
}

WeightField compute_weights(const SignalField& signals, const RandomTopology& topology, const GaussianParams& params,
                            unsigned threads) {
  require_same_dims(signals.dims, topology.dims(), "signals/topology");
  params.validate();
  signals.validate();

  WeightField w;
  w.dims = topology.dims();
  w.offsets.assign(topology.offsets().begin(), topology.offsets().end());
  w.values.resize(topology.edge_count());
  const auto targets = topology.targets();
  const double inv_two_sigma_sq = 1.0 / (2.0 * params.sigma * params.sigma);
  parallel_for(w.neuron_count(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto sk = signals.pixel(k);
      for (std::size_t e = w.offsets[k]; e < w.offsets[k + 1]; ++e) {
        const auto si = signals.pixel(targets[e]);
        double sq = 0.0;
        for (std::size_t c = 0; c < sk.size(); ++c) {
          const double d = sk[c] - si[c];
          sq += d * d;
        }
        w.values[e] = std::exp(-sq * inv_two_sigma_sq);
      }
    }
  });
  return w;
}

CMap connectivity_map(const WeightField& weights) {
  CMap cmap{ScalarField(weights.dims), {}};
  for (NeuronIndex k = 0; k < weights.neuron_count(); ++k) {
    const auto row = weights.weights(k);
    if (row.empty()) {
      cmap.empty_neurons.push_back(k);
      continue;
    }
    double sum = 0.0;
    for (double v : row) sum += v;
    cmap.values[k] = sum / double(row.size());
  }
  return cmap;
}

ScalarField edge_map(const CMap& cmap) {
  ScalarField e(cmap.values.dims);
  for (std::size_t k = 0; k < e.size(); ++k) e[k] = 1.0 - cmap.values[k];
  return e;
}

ScalarField propagate_intensity(const WeightField& weights, const RandomTopology& topology, const ScalarField& v_in) {
  require_aligned(weights, topology);
  require_same_dims(v_in.dims, weights.dims, "propagate_intensity");
  for (double v : v_in.values)
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "non-finite input intensity");
  ScalarField out(weights.dims);
  const auto targets = topology.targets();
  for (std::size_t k = 0; k < out.size(); ++k) {
    double acc = 0.0;
    for (std::size_t e = weights.offsets[k]; e < weights.offsets[k + 1]; ++e) acc += weights.values[e] * v_in[targets[e]];
    out[k] = acc;
  }
  return out;
}

}  // namespace sunn
