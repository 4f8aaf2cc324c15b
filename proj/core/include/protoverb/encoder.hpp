#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace protoverb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr std::size_t kDefaultPrototypeDim = 128;

// Linear map from PLM hidden states (dim D) to prototype space (d_proto).
struct ProjectionEncoder {
  Matrix weight;  // d_proto x D

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(weight.cols()); }
  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(weight.rows()); }
};

// One prototype per row: N x d_proto.
struct PrototypeSet {
  Matrix prototypes;

  std::size_t size() const noexcept { return static_cast<std::size_t>(prototypes.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(prototypes.cols()); }
  Vector prototype(std::size_t n) const { return prototypes.row(static_cast<Eigen::Index>(n)).transpose(); }
};

// Throws ConfigError when any entry is non-finite or the shape is empty.
void validate_encoder(const ProjectionEncoder& encoder);
// Throws NumericalError when a prototype has zero norm or non-finite entries.
void validate_prototypes(const PrototypeSet& prototypes);

// W * h. Throws ConfigError on dimension mismatch or non-finite input.
Vector project(const ProjectionEncoder& encoder, std::span<const double> h);
Vector project(const ProjectionEncoder& encoder, const Vector& h);

// (a / |a|) . (b / |b|), clamped to [-1, 1]. Throws NumericalError on a
// zero-norm argument and ConfigError on a length mismatch.
double cosine_similarity(const Vector& a, const Vector& b);

}  // namespace protoverb
