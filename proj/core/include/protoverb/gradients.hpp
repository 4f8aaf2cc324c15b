#pragma once

#include <cstddef>
#include <vector>

#include "protoverb/encoder.hpp"
#include "protoverb/losses.hpp"

namespace protoverb {

// Raw (unprojected) training inputs stacked row-wise with their labels.
struct PackedBatch {
  Matrix inputs;  // M x D
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  static PackedBatch from_groups(const std::vector<std::vector<Vector>>& raw_groups);
  ClassGroups project(const ProjectionEncoder& encoder) const;
};

struct LossGradients {
  LossBreakdown loss;
  Matrix weight;      // dL/dW, d_proto x D
  Matrix prototypes;  // dL/dc_n as rows, N x d_proto
};

// Loss value and analytic gradients w.r.t. the encoder weight and every
// prototype. Under kProtoOnly the instance term is still reported in
// `loss.instance` but contributes nothing to the gradients. kInstanceMean is
// treated as kFull. Throws NumericalError naming the offending term when an
// intermediate is not finite.
LossGradients loss_gradients(const PackedBatch& batch, const ProjectionEncoder& encoder,
                             const PrototypeSet& prototypes, LossVariant variant = LossVariant::kFull);

// Gradient of S(a, b) with respect to a: (b_hat - S a_hat) / |a|.
Vector cosine_gradient(const Vector& a, const Vector& b);

}  // namespace protoverb
