#include "protoverb/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "protoverb/errors.hpp"

namespace protoverb {

void validate_encoder(const ProjectionEncoder& encoder) {
  if (encoder.weight.rows() < 1 || encoder.weight.cols() < 1) throw ConfigError("encoder weight is empty");
  if (!encoder.weight.allFinite()) throw ConfigError("encoder weight has non-finite entries");
}

void validate_prototypes(const PrototypeSet& set) {
  if (set.prototypes.rows() < 1) throw ConfigError("prototype set is empty");
  for (Eigen::Index n = 0; n < set.prototypes.rows(); ++n) {
    const auto row = set.prototypes.row(n);
    if (!row.allFinite()) throw NumericalError("prototype " + std::to_string(n) + " has non-finite entries");
    if (row.norm() == 0.0) throw NumericalError("prototype " + std::to_string(n) + " has zero norm");
  }
}

Vector project(const ProjectionEncoder& encoder, std::span<const double> h) {
  return project(encoder, Eigen::Map<const Vector>(h.data(), static_cast<Eigen::Index>(h.size())).eval());
}

Vector project(const ProjectionEncoder& encoder, const Vector& h) {
  if (static_cast<std::size_t>(h.size()) != encoder.input_dim()) {
    throw ConfigError("projection: input has length " + std::to_string(h.size()) + ", encoder expects " +
                      std::to_string(encoder.input_dim()));
  }
  if (!h.allFinite()) throw ConfigError("projection: input has non-finite entries");
  return encoder.weight * h;
}

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ConfigError("cosine_similarity: length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw NumericalError("cosine_similarity: zero-norm vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

}  // namespace protoverb
