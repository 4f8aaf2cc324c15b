#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "protoverb/encoder.hpp"

namespace protoverb {

enum class LossVariant {
  kFull,          // L_ins + L_proto
  kProtoOnly,     // L_proto alone
  kInstanceMean,  // no optimization; prototypes are projected class means
};

std::string_view to_string(LossVariant variant);
std::optional<LossVariant> parse_loss_variant(std::string_view text);

// Projected instances grouped by training label: groups[n] holds class n.
using ClassGroups = std::vector<std::vector<Vector>>;

// Supervised InfoNCE over instance pairs. Every instance is an anchor; its
// positives are the other instances of its class; the denominator runs over
// every instance except the anchor (positives included). The loss is the mean
// over (anchor, positive) pairs of
//
//   -log( exp S(anchor, positive) / sum_{other != anchor} exp S(anchor, other) )
//
// With no positive pair anywhere (one shot per class) the loss is 0.
// Throws DataError on an empty input, NumericalError on a zero-norm vector.
double instance_instance_loss(const ClassGroups& projected);

// InfoNCE between instances and prototypes, averaged over instances:
//   -log( exp S(v, c_own) / sum_n exp S(v, c_n) ).
// Requires projected.size() == prototypes.size() and at least one instance.
double instance_prototype_loss(const ClassGroups& projected, const PrototypeSet& prototypes);

struct LossBreakdown {
  double instance = 0.0;
  double prototype = 0.0;
  double total = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

// total = instance + prototype, except under kProtoOnly where total = prototype.
LossBreakdown combine_losses(double instance, double prototype, LossVariant variant);
LossBreakdown total_loss(const ClassGroups& projected, const PrototypeSet& prototypes,
                         LossVariant variant = LossVariant::kFull);

// log(sum exp(x)) with max subtraction.
double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& values);

}  // namespace protoverb
