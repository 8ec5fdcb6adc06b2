#pragma once

#include <cstdint>

#include "sunn/grid.hpp"
#include "sunn/smart_neuron.hpp"

namespace sunn::synthetic {

/// Axis-aligned square [x0, x0+side) x [y0, y0+side).
struct SquareSpec {
  std::uint32_t size = 64;
  std::uint32_t side = 24;
  double ground = 0.1;
  double object = 0.9;
};

/// Bright centered square on a uniform dark ground.
SignalField bright_square(const SquareSpec& spec = {});
/// Ground-truth mask of the square in bright_square().
Mask square_mask(const SquareSpec& spec = {});
/// Pixels with a 4-neighbor in the other region (both sides of the edge).
Mask region_boundary(const Mask& region);

/// Dark pen strokes on a mottled bright background. `strokes` receives the
/// stroke mask.
SignalField ink_on_parchment(std::uint32_t width, std::uint32_t height, std::uint64_t seed, Mask& strokes);

/// Uniform random field in [0, 1].
SignalField random_field(GridDims dims, std::uint32_t channels, std::uint64_t seed);

}  // namespace sunn::synthetic
