#ifndef STABLEBRANCH_RNG_HPP
#define STABLEBRANCH_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace stablebranch {

// Counter-based random streams built on Philox4x32-10 (Salmon et al.,
// "Parallel random numbers: as easy as 1, 2, 3", SC 2011).
//
// A stream is identified by (key, stream_id); the block counter advances as
// numbers are drawn. Streams with distinct ids occupy disjoint counter
// spaces, so replications, paths and particles can each own an independent
// stream and be advanced concurrently with reproducible output. substream()
// derives a child stream by hashing the parent identity with a caller-chosen
// index; derived identities are 128 bits, so collisions are not a concern at
// any reachable scale.
class RngStream {
 public:
  RngStream() = default;

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(seed), stream_(stream_id) {}

  // Child stream for index `idx` (particle id, replication index, ...).
  RngStream substream(std::uint64_t idx) const {
    RngStream child;
    child.key_ = mix(key_ ^ mix(idx));
    child.stream_ = mix(stream_ + 0x9E3779B97F4A7C15ULL * (idx + 1));
    return child;
  }

  std::uint64_t next_u64() {
    if (have_ == 0) refill();
    --have_;
    return buf_[1 - have_];
  }

  // Uniform on [0,1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0,1); safe as a log() or pow() argument.
  double uniform_oo() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform_oo()); }

  // Standard normal via Box-Muller; consumes exactly two words per call.
  double normal() {
    const double u = uniform_oo();
    const double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586477 * v);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer (Vigna)
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static void philox_round(std::array<std::uint32_t, 4>& ctr,
                           std::array<std::uint32_t, 2>& key) {
    const std::uint64_t p0 = 0xD2511F53ULL * ctr[0];
    const std::uint64_t p1 = 0xCD9E8D57ULL * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
  }

  void refill() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(key_),
                                        static_cast<std::uint32_t>(key_ >> 32)};
    for (int r = 0; r < 10; ++r) philox_round(ctr, key);
    buf_[0] = (static_cast<std::uint64_t>(ctr[1]) << 32) | ctr[0];
    buf_[1] = (static_cast<std::uint64_t>(ctr[3]) << 32) | ctr[2];
    ++counter_;
    have_ = 2;
  }

  std::uint64_t key_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buf_ = {0, 0};
  int have_ = 0;
};

}  // namespace stablebranch

#endif
