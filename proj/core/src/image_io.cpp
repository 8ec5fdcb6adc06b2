#include "sunn/image_io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "sunn/leaky.hpp"

namespace sunn::io {

namespace {

constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

[[noreturn]] void decode_error(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorKind::Decode, path.string() + ": " + what);
}

std::string lower_ext(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return ext;
}

// Decoded image before channel conversion; samples scaled to [0, 1].
struct Decoded {
  GridDims dims;
  std::uint32_t channels = 1;
  std::vector<double> samples;
};

bool is_png(const std::vector<std::uint8_t>& bytes) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

Decoded decode_png(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) decode_error(path, image.message);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  // 16-bit sources stay linear; 8-bit sources are read as stored.
  const bool linear = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  image.format = (color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) | (linear ? PNG_FORMAT_FLAG_LINEAR : 0u);
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    decode_error(path, image.message);
  }
  Decoded d;
  d.dims = {image.width, image.height};
  d.channels = color ? 3 : 1;
  if (linear) {
    const std::size_t n = buffer.size() / 2;
    d.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t q;
      std::memcpy(&q, buffer.data() + 2 * i, 2);
      d.samples[i] = q / 65535.0;
    }
  } else {
    d.samples.resize(buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) d.samples[i] = buffer[i] / 255.0;
  }
  return d;
}

// Netpbm P1-P6.
Decoded decode_pnm(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&]() -> std::uint32_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) decode_error(path, "malformed netpbm header");
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 0xFFFFFFFFull) decode_error(path, "netpbm value overflow");
    }
    return std::uint32_t(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] < '1' || bytes[1] > '6') decode_error(path, "unsupported format");
  const int kind = bytes[1] - '0';
  pos = 2;
  Decoded d;
  d.dims.width = read_uint();
  d.dims.height = read_uint();
  if (!d.dims.valid()) decode_error(path, "zero image dimension");
  const bool bitmap = kind == 1 || kind == 4;
  const std::uint32_t maxval = bitmap ? 1 : read_uint();
  if (maxval == 0 || maxval > 65535) decode_error(path, "invalid maxval");
  d.channels = (kind == 3 || kind == 6) ? 3 : 1;
  const std::size_t count = d.dims.size() * d.channels;
  d.samples.resize(count);
  const bool ascii = kind <= 3;
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      if (kind == 1) {
        skip_space();
        if (pos >= bytes.size() || (bytes[pos] != '0' && bytes[pos] != '1')) decode_error(path, "truncated data");
        // PBM: 1 is black.
        d.samples[i] = bytes[pos++] == '1' ? 0.0 : 1.0;
      } else {
        const auto v = read_uint();
        if (v > maxval) decode_error(path, "sample exceeds maxval");
        d.samples[i] = double(v) / maxval;
      }
    }
    return d;
  }
  ++pos;  // single whitespace after header
  if (kind == 4) {
    const std::size_t row_bytes = (d.dims.width + 7) / 8;
    if (pos + row_bytes * d.dims.height > bytes.size()) decode_error(path, "truncated data");
    for (std::uint32_t y = 0; y < d.dims.height; ++y)
      for (std::uint32_t x = 0; x < d.dims.width; ++x) {
        const bool black = (bytes[pos + y * row_bytes + x / 8] >> (7 - x % 8)) & 1;
        d.samples[d.dims.index(x, y)] = black ? 0.0 : 1.0;
      }
    return d;
  }
  const std::size_t bps = maxval < 256 ? 1 : 2;
  if (pos + count * bps > bytes.size()) decode_error(path, "truncated data");
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t v = bytes[pos + i * bps];
    if (bps == 2) v = (v << 8) | bytes[pos + i * bps + 1];
    if (v > maxval) decode_error(path, "sample exceeds maxval");
    d.samples[i] = double(v) / maxval;
  }
  return d;
}

Decoded decode(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.empty()) decode_error(path, "empty file");
  if (is_png(bytes)) return decode_png(bytes, path);
  if (bytes[0] == 'P') return decode_pnm(bytes, path);
  decode_error(path, "unsupported image format");
}

std::vector<std::uint16_t> quantize(const ScalarField& field, std::uint32_t maxval) {
  const auto norm = normalize_min_max(field);
  std::vector<std::uint16_t> q(norm.size());
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = std::uint16_t(std::lround(norm[k] * maxval));
  return q;
}

void write_gray(const std::vector<std::uint16_t>& q, GridDims dims, bool sixteen, const std::filesystem::path& path) {
  const auto ext = lower_ext(path);
  if (ext == ".png") {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = dims.width;
    image.height = dims.height;
    image.format = sixteen ? PNG_FORMAT_LINEAR_Y : PNG_FORMAT_GRAY;
    int ok;
    if (sixteen) {
      ok = png_image_write_to_file(&image, path.c_str(), 0, q.data(), 0, nullptr);
    } else {
      std::vector<std::uint8_t> b(q.begin(), q.end());
      ok = png_image_write_to_file(&image, path.c_str(), 0, b.data(), 0, nullptr);
    }
    if (!ok) throw Error(ErrorKind::Io, path.string() + ": " + image.message);
    return;
  }
  if (ext != ".pgm") throw Error(ErrorKind::Io, path.string() + ": grayscale output must be .png or .pgm");
  const std::string header =
      "P5\n" + std::to_string(dims.width) + " " + std::to_string(dims.height) + "\n" + (sixteen ? "65535" : "255") + "\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (auto v : q) {
    if (sixteen) bytes.push_back(std::uint8_t(v >> 8));
    bytes.push_back(std::uint8_t(v & 0xFF));
  }
  write_file(path, bytes);
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, path.string() + ": cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, path.string() + ": write failed");
}

SignalField load_image(const std::filesystem::path& path, std::uint32_t channels) {
  if (channels != 1 && channels != 3) throw Error(ErrorKind::InvalidConfig, "channels must be 1 or 3");
  const auto d = decode(path);
  SignalField f(d.dims, channels);
  for (std::size_t k = 0; k < d.dims.size(); ++k) {
    const double* src = d.samples.data() + k * d.channels;
    if (channels == 1) {
      f.values[k] = d.channels == 3 ? std::clamp(kLumaR * src[0] + kLumaG * src[1] + kLumaB * src[2], 0.0, 1.0) : src[0];
    } else {
      for (std::uint32_t c = 0; c < 3; ++c) f.values[k * 3 + c] = d.channels == 3 ? src[c] : src[0];
    }
  }
  return f;
}

Mask load_mask(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.empty()) decode_error(path, "empty file");
  Decoded d = is_png(bytes) ? decode_png(bytes, path) : decode_pnm(bytes, path);
  Mask m(d.dims);
  const bool bitmap = bytes[0] == 'P' && (bytes[1] == '1' || bytes[1] == '4');
  for (std::size_t k = 0; k < d.dims.size(); ++k) {
    bool on = false;
    for (std::uint32_t c = 0; c < d.channels; ++c) on = on || d.samples[k * d.channels + c] > 0.0;
    // Bitmaps mark set pixels as black (sample 0).
    m.set(k, bitmap ? !on : on);
  }
  return m;
}

void save_map(const ScalarField& field, const std::filesystem::path& path, MapFormat format) {
  switch (format) {
    case MapFormat::Raw: save_raw(field, path); return;
    case MapFormat::Gray8: write_gray(quantize(field, 255), field.dims, false, path); return;
    case MapFormat::Gray16: write_gray(quantize(field, 65535), field.dims, true, path); return;
  }
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  const auto ext = lower_ext(path);
  const auto& d = mask.dims;
  if (ext == ".pbm") {
    const std::string header = "P4\n" + std::to_string(d.width) + " " + std::to_string(d.height) + "\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    const std::size_t row_bytes = (d.width + 7) / 8;
    const std::size_t start = bytes.size();
    bytes.resize(start + row_bytes * d.height, 0);
    for (std::uint32_t y = 0; y < d.height; ++y)
      for (std::uint32_t x = 0; x < d.width; ++x)
        if (mask[d.index(x, y)]) bytes[start + y * row_bytes + x / 8] |= std::uint8_t(0x80 >> (x % 8));
    write_file(path, bytes);
    return;
  }
  std::vector<std::uint16_t> q(d.size());
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = mask[k] ? 255 : 0;
  write_gray(q, d, false, path);
}

std::vector<std::uint8_t> encode_raw(const ScalarField& field) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(8 + 4 * field.size());
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(std::uint8_t(v >> (8 * i)));
  };
  put32(field.dims.width);
  put32(field.dims.height);
  for (double v : field.values) put32(std::bit_cast<std::uint32_t>(float(v)));
  return bytes;
}

void save_raw(const ScalarField& field, const std::filesystem::path& path) { write_file(path, encode_raw(field)); }

ScalarField load_raw(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  auto get32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[off + i]) << (8 * i);
    return v;
  };
  if (bytes.size() < 8) decode_error(path, "raw dump shorter than its header");
  const GridDims dims{get32(0), get32(4)};
  if (!dims.valid()) decode_error(path, "zero dimension in raw dump");
  if (bytes.size() != 8 + 4 * dims.size()) decode_error(path, "raw dump size does not match its header");
  ScalarField f(dims);
  for (std::size_t k = 0; k < dims.size(); ++k) f[k] = double(std::bit_cast<float>(get32(8 + 4 * k)));
  return f;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
    throw Error(ErrorKind::Io, "SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace sunn::io
