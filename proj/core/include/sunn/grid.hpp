#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sunn {

/// Error categories; the CLI maps these onto process exit codes.
enum class ErrorKind {
  InvalidDimensions,
  InfeasibleConfig,
  InvalidConfig,
  Shape,
  InvalidInput,
  Index,
  Decode,
  Io,
  NumericalFailure,
  CurveInvalid,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

using NeuronIndex = std::uint32_t;

struct GridDims {
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  std::size_t size() const noexcept { return std::size_t(width) * height; }
  bool valid() const noexcept { return width >= 1 && height >= 1; }

  NeuronIndex index(std::uint32_t x, std::uint32_t y) const noexcept { return y * width + x; }
  std::uint32_t x_of(NeuronIndex k) const noexcept { return k % width; }
  std::uint32_t y_of(NeuronIndex k) const noexcept { return k / width; }
  bool on_border(NeuronIndex k) const noexcept {
    const auto x = x_of(k), y = y_of(k);
    return x == 0 || y == 0 || x + 1 == width || y + 1 == height;
  }

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// Row-major scalar field over a grid. Used for c-maps, edge maps,
/// potentials and saliency maps alike.
struct ScalarField {
  GridDims dims;
  std::vector<double> values;

  ScalarField() = default;
  ScalarField(GridDims d, double fill = 0.0) : dims(d), values(d.size(), fill) {}

  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  double at(std::uint32_t x, std::uint32_t y) const { return values[dims.index(x, y)]; }
  std::size_t size() const noexcept { return values.size(); }
};

/// Per-pixel boolean.
struct Mask {
  GridDims dims;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  explicit Mask(GridDims d, bool fill = false) : dims(d), bits(d.size(), fill ? 1 : 0) {}

  bool operator[](std::size_t k) const { return bits[k] != 0; }
  void set(std::size_t k, bool v) { bits[k] = v ? 1 : 0; }
  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }
  friend bool operator==(const Mask&, const Mask&) = default;
};

inline void require_same_dims(const GridDims& a, const GridDims& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorKind::Shape, std::string(what) + ": dimension mismatch (" + std::to_string(a.width) + "x" +
                                      std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                      std::to_string(b.height) + ")");
  }
}

}  // namespace sunn
