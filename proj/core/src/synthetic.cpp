#include "sunn/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "sunn/rng.hpp"

namespace sunn::synthetic {

namespace {

std::uint32_t square_origin(const SquareSpec& s) { return (s.size - s.side) / 2; }

}  // namespace

SignalField bright_square(const SquareSpec& spec) {
  const Mask m = square_mask(spec);
  SignalField f(m.dims, 1, spec.ground);
  for (std::size_t k = 0; k < m.bits.size(); ++k)
    if (m[k]) f.values[k] = spec.object;
  return f;
}

Mask square_mask(const SquareSpec& spec) {
  const GridDims dims{spec.size, spec.size};
  Mask m(dims);
  const auto o = square_origin(spec);
  for (std::uint32_t y = o; y < o + spec.side; ++y)
    for (std::uint32_t x = o; x < o + spec.side; ++x) m.set(dims.index(x, y), true);
  return m;
}

Mask region_boundary(const Mask& region) {
  const auto& d = region.dims;
  Mask b(d);
  for (std::uint32_t y = 0; y < d.height; ++y) {
    for (std::uint32_t x = 0; x < d.width; ++x) {
      const bool v = region[d.index(x, y)];
      const bool differs = (x > 0 && region[d.index(x - 1, y)] != v) ||
                           (x + 1 < d.width && region[d.index(x + 1, y)] != v) ||
                           (y > 0 && region[d.index(x, y - 1)] != v) ||
                           (y + 1 < d.height && region[d.index(x, y + 1)] != v);
      b.set(d.index(x, y), differs);
    }
  }
  return b;
}

SignalField ink_on_parchment(std::uint32_t width, std::uint32_t height, std::uint64_t seed, Mask& strokes) {
  const GridDims dims{width, height};
  SignalField f(dims, 1);
  strokes = Mask(dims);
  auto rng = SplitMix64::stream(seed, 0);

  // Mottled parchment: a few low-frequency blobs plus slight per-pixel grain.
  struct Blob {
    double cx, cy, radius, amp;
  };
  std::vector<Blob> blobs(8);
  for (auto& b : blobs) {
    b = {rng.uniform() * width, rng.uniform() * height, 0.15 * width + rng.uniform() * 0.25 * width,
         (rng.uniform() - 0.5) * 0.12};
  }
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      double v = 0.8;
      for (const auto& b : blobs) {
        const double dx = x - b.cx, dy = y - b.cy;
        v += b.amp * std::exp(-(dx * dx + dy * dy) / (2 * b.radius * b.radius));
      }
      v += (rng.uniform() - 0.5) * 0.04;
      f.values[dims.index(x, y)] = std::clamp(v, 0.0, 1.0);
    }
  }

  // Handwriting-like strokes: short 2-px-thick segments in text lines,
  // kept away from the page border.
  const std::uint32_t margin = std::max<std::uint32_t>(6, width / 10);
  const std::uint32_t line_gap = std::max<std::uint32_t>(10, height / 6);
  for (std::uint32_t line_y = margin; line_y + margin < height; line_y += line_gap) {
    std::uint32_t x = margin;
    while (x + margin < width) {
      const std::uint32_t glyph_w = 3 + std::uint32_t(rng.uniform() * 5);
      const std::uint32_t glyph_h = 4 + std::uint32_t(rng.uniform() * 4);
      const int shape = int(rng.uniform() * 3);
      for (std::uint32_t t = 0; t <= glyph_h; ++t) {
        for (std::uint32_t th = 0; th < 2; ++th) {
          std::uint32_t px = x + th, py = line_y + t;
          if (shape == 1) px = x + std::min(glyph_w, t) + th;
          if (shape == 2) {
            px = x + t * glyph_w / glyph_h;
            py = line_y + (t % 2 == 0 ? t : t) + th;
          }
          if (px + margin / 2 < width && py + margin / 2 < height) strokes.set(dims.index(px, py), true);
        }
      }
      // Horizontal bar joining glyphs.
      for (std::uint32_t t = 0; t < glyph_w; ++t) {
        for (std::uint32_t th = 0; th < 2; ++th) {
          const std::uint32_t px = x + t, py = line_y + glyph_h + th;
          if (px + margin / 2 < width && py + margin / 2 < height) strokes.set(dims.index(px, py), true);
        }
      }
      x += glyph_w + 3 + std::uint32_t(rng.uniform() * 4);
    }
  }
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (strokes[k]) f.values[k] = std::clamp(0.12 + (rng.uniform() - 0.5) * 0.04, 0.0, 1.0);
  }
  return f;
}

SignalField random_field(GridDims dims, std::uint32_t channels, std::uint64_t seed) {
  SignalField f(dims, channels);
  auto rng = SplitMix64::stream(seed, 0x5f1e1d);
  for (auto& v : f.values) v = rng.uniform();
  return f;
}

}  // namespace sunn::synthetic
