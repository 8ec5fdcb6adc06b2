#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sunn/grid.hpp"
#include "sunn/smart_neuron.hpp"

namespace sunn::io {

/// Decodes PNG or binary/ASCII PGM/PPM into [0, 1] channels. `channels` = 1
/// converts color input with luminance weights 0.299/0.587/0.114; 3
/// replicates gray input into RGB. Throws Decode with the path on failure.
SignalField load_image(const std::filesystem::path& path, std::uint32_t channels = 1);

/// Any nonzero pixel of a PNG/PGM/PBM image is true.
Mask load_mask(const std::filesystem::path& path);

enum class MapFormat {
  Gray8,   // min-max normalized 8-bit, PNG or PGM by extension
  Gray16,  // min-max normalized 16-bit, PNG or PGM by extension
  Raw,     // dims header + little-endian float32
};

/// Constant fields normalize to all zeros.
void save_map(const ScalarField& field, const std::filesystem::path& path, MapFormat format);

/// .pbm writes a 1-bit bitmap; .pgm/.png write 0/255 grayscale.
void save_mask(const Mask& mask, const std::filesystem::path& path);

/// Raw dump: width and height as little-endian uint32, then row-major
/// little-endian float32 values.
std::vector<std::uint8_t> encode_raw(const ScalarField& field);
void save_raw(const ScalarField& field, const std::filesystem::path& path);
ScalarField load_raw(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace sunn::io
