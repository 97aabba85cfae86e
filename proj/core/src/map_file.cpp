#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ido/error.hpp"
#include "ido/regressor.hpp"

// IDO1 layout, all little-endian:
//   "IDO1" | version u32 | mode u8 | K u32 | p u32 | f u32 | N_M u32 |
//   lambda f64 | sigma2 f64 | fingerprint[32] | K row-major p x f f64 blocks

namespace ido {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}

void get_bytes(std::istream& in, unsigned char* dst, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw ParseError("<maps>", 0, std::string("truncated ") + what);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  get_bytes(in, b, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in, const char* what) {
  unsigned char b[8];
  get_bytes(in, b, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw std::length_error(std::string(what) + " does not fit the map file header");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_maps(std::ostream& out, const MapSequence& maps) {
  const auto f = maps.feature_size();
  for (const auto& d : maps.maps) {
    if (d.rows() != static_cast<Eigen::Index>(MapSequence::kParams) || d.cols() != static_cast<Eigen::Index>(f))
      throw MapMismatchError("map dimensions do not match the sequence header");
  }
  out.write("IDO1", 4);
  put_u32(out, kVersion);
  const char mode = static_cast<char>(maps.mode);
  out.write(&mode, 1);
  put_u32(out, checked_u32(maps.size(), "K"));
  put_u32(out, static_cast<std::uint32_t>(MapSequence::kParams));
  put_u32(out, checked_u32(f, "f"));
  put_u32(out, checked_u32(maps.model_size, "N_M"));
  put_f64(out, maps.lambda);
  put_f64(out, maps.sigma2);
  out.write(reinterpret_cast<const char*>(maps.fingerprint.data()), 32);
  for (const auto& d : maps.maps)
    for (Eigen::Index r = 0; r < d.rows(); ++r)
      for (Eigen::Index c = 0; c < d.cols(); ++c) put_f64(out, d(r, c));
  if (!out) throw Error("failed writing map sequence");
}

MapSequence read_maps(std::istream& in) {
  unsigned char magic[4];
  get_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, "IDO1", 4) != 0) throw ParseError("<maps>", 0, "bad magic, not an IDO1 map file");
  const auto version = get_u32(in, "version");
  if (version != kVersion) throw ParseError("<maps>", 0, "unsupported map file version " + std::to_string(version));
  unsigned char mode = 0;
  get_bytes(in, &mode, 1, "mode");
  if (mode > 1) throw ParseError("<maps>", 0, "unknown descriptor mode byte");

  MapSequence maps;
  maps.mode = static_cast<DescriptorMode>(mode);
  const auto K = get_u32(in, "K");
  const auto p = get_u32(in, "p");
  const auto f = get_u32(in, "f");
  maps.model_size = get_u32(in, "N_M");
  maps.lambda = get_f64(in, "lambda");
  maps.sigma2 = get_f64(in, "sigma2");
  get_bytes(in, maps.fingerprint.data(), 32, "fingerprint");
  if (K < 1) throw ParseError("<maps>", 0, "map file holds no maps");
  if (p != MapSequence::kParams) throw ParseError("<maps>", 0, "parameter dimension must be 6");
  if (f != maps.feature_size()) throw ParseError("<maps>", 0, "feature size inconsistent with mode and N_M");

  maps.maps.reserve(K);
  for (std::uint32_t k = 0; k < K; ++k) {
    Eigen::MatrixXd d(p, f);
    for (Eigen::Index r = 0; r < d.rows(); ++r)
      for (Eigen::Index c = 0; c < d.cols(); ++c) d(r, c) = get_f64(in, "map data");
    if (!d.allFinite()) throw ParseError("<maps>", 0, "map " + std::to_string(k + 1) + " has non-finite entries");
    maps.maps.push_back(std::move(d));
  }
  return maps;
}

void save_maps(const std::filesystem::path& path, const MapSequence& maps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_maps(out, maps);
}

MapSequence load_maps(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_maps(in);
}

}  // namespace ido
