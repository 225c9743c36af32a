#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace bagsparse {

/// FNV-1a over a role name; used to build stream-ids from readable tags.
constexpr std::uint64_t role_tag(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/**
 * Deterministic random stream identified by (seed, stream-id).
 *
 * The generator is xoshiro256** seeded through SplitMix64; every
 * distribution here is implemented locally so that a given
 * (seed, stream-id) yields the same sequence with any standard library.
 *
 * Streams are split-then-move: parallel work derives child streams with
 * child()/derive() and never shares a single stream between threads.
 * Deriving a child does not consume state from the parent.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  RngStream child(std::uint64_t tag) const;

  template <class... Tags>
  RngStream derive(Tags... tags) const {
    RngStream out = *this;
    ((out = out.child(static_cast<std::uint64_t>(tags))), ...);
    return out;
  }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound); bound must be positive. Unbiased (Lemire).
  std::size_t index(std::size_t bound) noexcept;
  /// Standard normal via the Marsaglia polar method.
  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bagsparse
