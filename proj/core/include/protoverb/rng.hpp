#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace protoverb {

// Seedable generator with platform-independent output.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The std:: distributions are NOT (their algorithms are
// implementation-defined), so every draw used by the library goes through the
// helpers below, which are fully specified:
//
//   uniform_index(n)  Lemire's nearly-divisionless bounded draw on 64-bit words
//   uniform01()       top 53 bits of one word, scaled by 2^-53, in [0, 1)
//   normal()          Box-Muller on two uniform01() draws, cosine branch only
//
// Seeds are expanded with splitmix64 before reaching the engine so that
// nearby integer seeds produce unrelated streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  std::uint64_t uniform_index(std::uint64_t n);
  double uniform01();
  double uniform(double lo, double hi);
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Child seed for an independent stream `stream` under `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// 64-bit FNV-1a; used to key per-class streams by class name.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace protoverb
