#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sunn/grid.hpp"

namespace sunn {

enum class BorderPolicy { Clamp, Resample, Drop };

std::string to_string(BorderPolicy p);
BorderPolicy border_policy_from_string(const std::string& s);

struct TopologyConfig {
  std::uint32_t radius = 5;
  /// 0 selects the default of 8 * radius.
  std::uint32_t connections_per_neuron = 0;
  std::uint64_t seed = 0;
  BorderPolicy border_policy = BorderPolicy::Resample;

  std::uint32_t degree() const noexcept { return connections_per_neuron ? connections_per_neuron : 8 * radius; }
  void validate() const;
};

/// Maps a uniform draw u in [0, 1) onto an integer offset in [-R, R]. Each
/// of the 2R+1 integer cells receives the same probability mass.
int offset_from_uniform(double u, std::uint32_t radius) noexcept;

/// Directed out-lists of randomly drawn local neighbors, stored CSR-style.
/// Immutable once built.
class RandomTopology {
 public:
  const GridDims& dims() const noexcept { return dims_; }
  const TopologyConfig& config() const noexcept { return config_; }
  std::size_t neuron_count() const noexcept { return dims_.size(); }
  std::size_t edge_count() const noexcept { return targets_.size(); }

  /// Throws ErrorKind::Index for out-of-range k.
  std::span<const NeuronIndex> neighbors(NeuronIndex k) const;

  /// Row offsets into the flat edge arrays (size neuron_count() + 1).
  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const NeuronIndex> targets() const noexcept { return targets_; }

  /// Slots that had to accept a repeated neighbor after retries ran out.
  std::size_t duplicate_count() const noexcept { return duplicates_; }
  /// Slots lost to off-grid draws under BorderPolicy::Drop.
  std::size_t dropped_count() const noexcept { return dropped_; }

  /// Line-oriented dump: "k: j1 j2 ... jn".
  void write_dump(std::ostream& os) const;

  friend RandomTopology build_random_topology(const GridDims& dims, const TopologyConfig& config, unsigned threads);
  friend RandomTopology make_topology(const GridDims& dims, std::vector<std::vector<NeuronIndex>> lists);

 private:
  GridDims dims_;
  TopologyConfig config_;
  std::vector<std::size_t> offsets_;
  std::vector<NeuronIndex> targets_;
  std::size_t duplicates_ = 0;
  std::size_t dropped_ = 0;
};

/// Seeded random wiring. Each neuron draws from its own (seed, k) stream,
/// so the result is independent of `threads` (0 = hardware concurrency).
RandomTopology build_random_topology(const GridDims& dims, const TopologyConfig& config, unsigned threads = 1);

/// Explicit wiring, for tests and small hand-built nets. Lists are taken as
/// given; only index range is checked.
RandomTopology make_topology(const GridDims& dims, std::vector<std::vector<NeuronIndex>> lists);

}  // namespace sunn
