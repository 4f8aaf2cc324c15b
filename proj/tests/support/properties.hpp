#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace protoverb::testing {

// Seeded property sweeps shared by the unit and acceptance suites. Each
// returns the failures found (empty when the property held on every case).

// One scorer: ensemble argmax == raw argmax. Two or three scorers: ensemble
// argmax unchanged after a random positive affine map of one scorer.
std::vector<std::string> ensemble_invariance_failures(std::size_t cases, std::uint64_t seed);

// proto_scores sums to 1 (1e-9) and keeps its prediction and values under
// positive rescaling of the query and of every prototype.
std::vector<std::string> proto_score_failures(std::size_t cases, std::uint64_t seed);

}  // namespace protoverb::testing
