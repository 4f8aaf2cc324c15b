#include "protoverb/gradients.hpp"

#include "loss_kernels.hpp"
#include "protoverb/errors.hpp"

namespace protoverb {

PackedBatch PackedBatch::from_groups(const std::vector<std::vector<Vector>>& raw_groups) {
  PackedBatch batch;
  batch.num_classes = raw_groups.size();
  batch.inputs = detail::stack_groups(raw_groups, batch.labels);
  return batch;
}

ClassGroups PackedBatch::project(const ProjectionEncoder& encoder) const {
  ClassGroups groups(num_classes);
  const Matrix projected = inputs * encoder.weight.transpose();
  for (Eigen::Index i = 0; i < projected.rows(); ++i) groups[labels[i]].push_back(projected.row(i).transpose());
  return groups;
}

LossGradients loss_gradients(const PackedBatch& batch, const ProjectionEncoder& encoder,
                             const PrototypeSet& prototypes, LossVariant variant) {
  if (batch.inputs.cols() != encoder.weight.cols()) throw ConfigError("loss_gradients: input dim does not match encoder");
  if (prototypes.size() != batch.num_classes) throw ConfigError("loss_gradients: prototype count does not match classes");
  const Matrix projected = batch.inputs * encoder.weight.transpose();  // M x d_proto
  if (!projected.allFinite()) throw NumericalError("non-finite projected instances");
  auto kernel = detail::evaluate_losses(projected, batch.labels, &prototypes.prototypes, variant, true);
  LossGradients out;
  out.loss = kernel.loss;
  out.weight = kernel.d_projected.transpose() * batch.inputs;
  out.prototypes = std::move(kernel.d_prototypes);
  if (!out.weight.allFinite()) throw NumericalError("non-finite encoder gradient");
  return out;
}

Vector cosine_gradient(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw NumericalError("cosine_gradient: zero-norm vector");
  const Vector a_hat = a / na;
  const Vector b_hat = b / nb;
  return (b_hat - a_hat.dot(b_hat) * a_hat) / na;
}

}  // namespace protoverb
