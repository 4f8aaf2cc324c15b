#pragma once

// Shared forward/backward kernels for the contrastive losses. Inputs are
// projected instances stacked row-wise (M x d) and prototypes (N x d).

#include <cstddef>
#include <vector>

#include "protoverb/encoder.hpp"
#include "protoverb/losses.hpp"

namespace protoverb::detail {

struct KernelResult {
  LossBreakdown loss;
  Matrix d_projected;   // dL/dV, M x d (only when gradients requested)
  Matrix d_prototypes;  // dL/dC, N x d
};

KernelResult evaluate_losses(const Matrix& projected, const std::vector<std::size_t>& labels,
                             const Matrix* prototypes, LossVariant variant, bool with_gradients,
                             bool instance_term = true);

// Stacks per-class groups into rows, returning labels alongside.
Matrix stack_groups(const ClassGroups& groups, std::vector<std::size_t>& labels);

}  // namespace protoverb::detail
