#include "bagsparse/rng.hpp"

#include <cmath>

namespace bagsparse {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix(std::uint64_t x) noexcept { return splitmix64(x); }

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t sm = mix(seed) ^ rotl(mix(stream_id ^ 0x6a09e667f3bcc909ULL), 17);
  for (auto& word : state_) word = splitmix64(sm);
  // xoshiro must not start from the all-zero state
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

RngStream RngStream::child(std::uint64_t tag) const {
  return RngStream(seed_, mix(stream_id_ ^ mix(tag + 0x3c6ef372fe94f82bULL)));
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t RngStream::index(std::size_t bound) noexcept {
  const std::uint64_t range = bound;
  unsigned __int128 prod = static_cast<unsigned __int128>(next_u64()) * range;
  auto low = static_cast<std::uint64_t>(prod);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      prod = static_cast<unsigned __int128>(next_u64()) * range;
      low = static_cast<std::uint64_t>(prod);
    }
  }
  return static_cast<std::size_t>(prod >> 64);
}

double RngStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, q;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    q = u * u + v * v;
  } while (q >= 1.0 || q == 0.0);
  const double f = std::sqrt(-2.0 * std::log(q) / q);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

}  // namespace bagsparse
