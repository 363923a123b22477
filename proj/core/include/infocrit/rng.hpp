// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_RNG_HPP
#define INFOCRIT_RNG_HPP

#include <array>
#include <cstdint>
#include <string>

namespace infocrit {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
// Chosen over std engines because its output is a pure function of
// (key, counter), which makes every dataset and chain reproducible
// bit-for-bit across platforms and reimplementations.
struct Philox4x32 {
  std::array<std::uint32_t, 4> counter{0, 0, 0, 0};
  std::array<std::uint32_t, 2> key{0, 0};

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);
};

// Stateful stream over Philox: key = (seed, stream), counter increments.
// Uniform doubles have 53 random bits and lie strictly inside (0, 1).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  double uniform();                       // U(0,1), open interval
  double uniform(double lo, double hi);   // U(lo,hi)
  double normal();                        // N(0,1), Box-Muller pair cached
  std::uint64_t next_u64();
  // Unbiased integer in [0, n), n >= 1.
  std::uint64_t uniform_below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::array<std::uint32_t, 4> counter_{0, 0, 0, 0};
  std::array<std::uint32_t, 2> key_{0, 0};
  std::array<std::uint32_t, 4> buffer_{};
  int buffer_pos_ = 4;  // empty
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// SplitMix64 finalizer; the mixing step of the seed ledger.
std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a over bytes, used to fold strings (condition names) into seeds.
std::uint64_t fnv1a(const std::string& s);

// Seed ledger: every (master, label..., index...) pair maps to one seed
// through a fixed hash chain, so reruns regenerate identical streams.
std::uint64_t derive_seed(std::uint64_t master, const std::string& label,
                          std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace infocrit

#endif
