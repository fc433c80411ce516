#pragma once

#include <cstdint>
#include <random>

namespace nscmi {

// Stream tags used when deriving child seeds from a master seed.
enum class Stream : std::uint64_t {
  kImputation = 1,
  kReplicate = 2,
  kMethod = 3,
  kGridPoint = 4,
  kSample = 5,
};

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based child seed: mix64(mix64(master ^ mix64(tag)) + index * phi).
// Distinct (tag, index) pairs give statistically independent streams, and the
// mapping depends on nothing but its arguments, so work units can run in any
// order or in parallel.
std::uint64_t derive_seed(std::uint64_t master, Stream tag, std::uint64_t index) noexcept;

// Thin wrapper over mt19937_64 with explicit, portable variate generation
// (the std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // 1 with probability p. Uses one uniform draw, so a larger p never turns a
  // 1 into a 0 for the same stream position.
  int bernoulli(double p) noexcept { return uniform() < p ? 1 : 0; }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nscmi
