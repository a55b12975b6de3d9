// Shared primitives: vector alias, error types, deterministic RNG.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace roaforge {

using Vec = std::vector<double>;

// Thrown when a caller violates a documented precondition (dimension
// mismatch, out-of-domain argument, missing configuration).
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown on non-finite numeric results outside the flagged-divergence paths.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define RF_REQUIRE(cond, msg) \
  do {                        \
    if (!(cond)) throw ::roaforge::ContractViolation(msg); \
  } while (0)

// Deterministic RNG. splitmix64 steps with uniform doubles taken from the
// top 53 bits, so streams are bit-identical across platforms and stdlib
// versions (std::uniform_real_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0,1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [lo,hi); returns lo exactly when lo == hi.
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::uint64_t state_;
};

}  // namespace roaforge
