#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace protoverb {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

// One bias-corrected Adam update, in place. Throws ConfigError on a size
// mismatch between params, grads and state.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& config);

}  // namespace protoverb
