#include "ido/random.hpp"

#include <cmath>
#include <numbers>

namespace ido {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

constexpr std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
constexpr std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const auto r = philox4x32({lo32(a), hi32(a), lo32(b), hi32(b)}, {lo32(seed), hi32(seed)});
  return (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
}

std::uint64_t CounterRng::next_u64() {
  if (available_ == 0) {
    block_ = philox4x32({lo32(counter_), hi32(counter_), lo32(stream_), hi32(stream_)}, {lo32(seed_), hi32(seed_)});
    ++counter_;
    available_ = 2;
  }
  const int w = 2 - available_;
  --available_;
  return (static_cast<std::uint64_t>(block_[static_cast<std::size_t>(2 * w + 1)]) << 32) |
         block_[static_cast<std::size_t>(2 * w)];
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t CounterRng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Lemire's multiply-shift; bias is < n / 2^64 and irrelevant at our sizes.
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

std::int64_t CounterRng::integer(std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

double CounterRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::Vector3d CounterRng::unit_vector() {
  while (true) {
    const double x1 = uniform(-1.0, 1.0);
    const double x2 = uniform(-1.0, 1.0);
    const double s = x1 * x1 + x2 * x2;
    if (s >= 1.0) continue;
    const double r = 2.0 * std::sqrt(1.0 - s);
    return {x1 * r, x2 * r, 1.0 - 2.0 * s};
  }
}

}  // namespace ido
