#include "protoverb/losses.hpp"

#include <cmath>
#include <string>

#include "loss_kernels.hpp"
#include "protoverb/errors.hpp"

namespace protoverb {

namespace detail {

namespace {

// Row-normalizes `rows`; throws on zero norm.
Matrix normalize_rows(const Matrix& rows, Vector& norms, const char* what) {
  norms.resize(rows.rows());
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    norms(i) = rows.row(i).norm();
    if (!(norms(i) > 0.0) || !std::isfinite(norms(i))) {
      throw NumericalError(std::string(what) + " " + std::to_string(i) + " has zero or non-finite norm");
    }
    out.row(i) = rows.row(i) / norms(i);
  }
  return out;
}

// Gradient through x -> x / |x| for each row.
Matrix backprop_normalize(const Matrix& unit, const Vector& norms, const Matrix& d_unit) {
  Matrix out(unit.rows(), unit.cols());
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    const double radial = unit.row(i).dot(d_unit.row(i));
    out.row(i) = (d_unit.row(i) - radial * unit.row(i)) / norms(i);
  }
  return out;
}

}  // namespace

Matrix stack_groups(const ClassGroups& groups, std::vector<std::size_t>& labels) {
  std::size_t rows = 0;
  Eigen::Index dim = -1;
  for (const auto& group : groups) {
    for (const auto& v : group) {
      if (dim < 0) dim = v.size();
      if (v.size() != dim) throw ConfigError("projected vectors have inconsistent lengths");
      ++rows;
    }
  }
  if (rows == 0) throw DataError("degenerate episode: no instances");
  Matrix out(static_cast<Eigen::Index>(rows), dim);
  labels.clear();
  Eigen::Index r = 0;
  for (std::size_t n = 0; n < groups.size(); ++n) {
    for (const auto& v : groups[n]) {
      out.row(r++) = v.transpose();
      labels.push_back(n);
    }
  }
  return out;
}

KernelResult evaluate_losses(const Matrix& projected, const std::vector<std::size_t>& labels,
                             const Matrix* prototypes, LossVariant variant, bool with_gradients,
                             bool instance_term) {
  const Eigen::Index m = projected.rows();
  if (m == 0) throw DataError("degenerate episode: no instances");
  Vector norms;
  const Matrix unit = normalize_rows(projected, norms, "instance");

  KernelResult result;
  Matrix d_unit;
  if (with_gradients) d_unit = Matrix::Zero(m, projected.cols());

  // Instance-instance term.
  std::vector<std::size_t> class_size;
  for (std::size_t y : labels) {
    if (y >= class_size.size()) class_size.resize(y + 1, 0);
    ++class_size[y];
  }
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < m; ++i) pairs += class_size[labels[i]] - 1;

  double instance = 0.0;
  if (instance_term && pairs > 0) {
    const Matrix sim = unit * unit.transpose();
    Matrix coeff;
    const bool grad_ins = with_gradients && variant != LossVariant::kProtoOnly;
    if (grad_ins) coeff = Matrix::Zero(m, m);
    const double inv_pairs = 1.0 / static_cast<double>(pairs);
    for (Eigen::Index i = 0; i < m; ++i) {
      const std::size_t positives = class_size[labels[i]] - 1;
      if (positives == 0) continue;
      double max_s = -2.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        if (k != i) max_s = std::max(max_s, sim(i, k));
      }
      double denom = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        if (k != i) denom += std::exp(sim(i, k) - max_s);
      }
      const double lse = max_s + std::log(denom);
      double positive_sum = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j != i && labels[j] == labels[i]) positive_sum += sim(i, j);
      }
      instance += (static_cast<double>(positives) * lse - positive_sum) * inv_pairs;
      if (grad_ins) {
        const double weight = static_cast<double>(positives) * inv_pairs;
        for (Eigen::Index k = 0; k < m; ++k) {
          if (k == i) continue;
          coeff(i, k) = weight * std::exp(sim(i, k) - lse) - (labels[k] == labels[i] ? inv_pairs : 0.0);
        }
      }
    }
    if (grad_ins) d_unit += (coeff + coeff.transpose()) * unit;
  }
  if (!std::isfinite(instance)) throw NumericalError("non-finite instance-instance loss");

  // Instance-prototype term.
  double prototype = 0.0;
  if (prototypes != nullptr) {
    const Eigen::Index n_classes = prototypes->rows();
    for (std::size_t y : labels) {
      if (static_cast<Eigen::Index>(y) >= n_classes) throw ConfigError("instance label has no prototype");
    }
    if (prototypes->cols() != projected.cols()) throw ConfigError("prototype and instance dimensions differ");
    Vector proto_norms;
    const Matrix proto_unit = normalize_rows(*prototypes, proto_norms, "prototype");
    const Matrix sim = unit * proto_unit.transpose();  // M x N
    const double inv_m = 1.0 / static_cast<double>(m);
    Matrix coeff;
    if (with_gradients) coeff = Matrix::Zero(m, n_classes);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double lse = log_sum_exp(sim.row(i));
      const auto own = static_cast<Eigen::Index>(labels[i]);
      prototype += (lse - sim(i, own)) * inv_m;
      if (with_gradients) {
        for (Eigen::Index n = 0; n < n_classes; ++n) coeff(i, n) = std::exp(sim(i, n) - lse) * inv_m;
        coeff(i, own) -= inv_m;
      }
    }
    if (!std::isfinite(prototype)) throw NumericalError("non-finite instance-prototype loss");
    if (with_gradients) {
      d_unit += coeff * proto_unit;
      result.d_prototypes = backprop_normalize(proto_unit, proto_norms, coeff.transpose() * unit);
      if (!result.d_prototypes.allFinite()) throw NumericalError("non-finite prototype gradient");
    }
  }

  result.loss = combine_losses(instance, prototype, variant);
  if (with_gradients) {
    result.d_projected = backprop_normalize(unit, norms, d_unit);
    if (!result.d_projected.allFinite()) throw NumericalError("non-finite gradient w.r.t. projected instances");
  }
  return result;
}

}  // namespace detail

std::string_view to_string(LossVariant variant) {
  switch (variant) {
    case LossVariant::kFull: return "full";
    case LossVariant::kProtoOnly: return "proto_only";
    case LossVariant::kInstanceMean: return "instance_mean";
  }
  return "unknown";
}

std::optional<LossVariant> parse_loss_variant(std::string_view text) {
  if (text == "full") return LossVariant::kFull;
  if (text == "proto_only") return LossVariant::kProtoOnly;
  if (text == "instance_mean") return LossVariant::kInstanceMean;
  return std::nullopt;
}

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& values) {
  const double max_v = values.maxCoeff();
  return max_v + std::log((values.array() - max_v).exp().sum());
}

double instance_instance_loss(const ClassGroups& projected) {
  std::vector<std::size_t> labels;
  const Matrix stacked = detail::stack_groups(projected, labels);
  return detail::evaluate_losses(stacked, labels, nullptr, LossVariant::kFull, false).loss.instance;
}

double instance_prototype_loss(const ClassGroups& projected, const PrototypeSet& prototypes) {
  if (projected.size() != prototypes.size()) {
    throw ConfigError("instance_prototype_loss: " + std::to_string(projected.size()) + " groups but " +
                      std::to_string(prototypes.size()) + " prototypes");
  }
  std::vector<std::size_t> labels;
  const Matrix stacked = detail::stack_groups(projected, labels);
  return detail::evaluate_losses(stacked, labels, &prototypes.prototypes, LossVariant::kProtoOnly, false,
                                 /*instance_term=*/false)
      .loss.prototype;
}

LossBreakdown combine_losses(double instance, double prototype, LossVariant variant) {
  const double total = variant == LossVariant::kProtoOnly ? prototype : instance + prototype;
  return {instance, prototype, total};
}

LossBreakdown total_loss(const ClassGroups& projected, const PrototypeSet& prototypes, LossVariant variant) {
  if (projected.size() != prototypes.size()) throw ConfigError("total_loss: group and prototype counts differ");
  std::vector<std::size_t> labels;
  const Matrix stacked = detail::stack_groups(projected, labels);
  return detail::evaluate_losses(stacked, labels, &prototypes.prototypes, variant, false).loss;
}

}  // namespace protoverb
