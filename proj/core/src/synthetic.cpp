#include "protoverb/synthetic.hpp"

#include <cmath>
#include <set>

#include "protoverb/errors.hpp"
#include "protoverb/rng.hpp"

namespace protoverb {

namespace {

constexpr std::size_t kWordsPerClass = 2;
constexpr double kManualSharpness = 3.0;

std::vector<double> centre(const SyntheticSpec& spec, std::size_t n) {
  std::vector<double> c(spec.dim, 0.0);
  c[n] = spec.separation * spec.sigma / std::sqrt(2.0);
  c[spec.dim - 1] += spec.offset;
  return c;
}

std::vector<double> draw_point(const std::vector<double>& mean, const std::vector<double>& scales, Rng& rng) {
  std::vector<double> x(mean.size());
  for (std::size_t d = 0; d < mean.size(); ++d) x[d] = mean[d] + scales[d] * rng.normal();
  return x;
}

std::vector<double> noise_scales(const SyntheticSpec& spec, double factor) {
  std::vector<double> scales(spec.dim, factor * spec.sigma);
  const std::size_t last = spec.offset != 0.0 ? spec.dim - 1 : spec.dim;
  for (std::size_t i = 0; i < spec.nuisance_dims; ++i) scales[last - 1 - i] *= spec.nuisance_scale;
  return scales;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return (aa == 0 || bb == 0) ? 0.0 : ab / std::sqrt(aa * bb);
}

std::vector<std::vector<double>> label_word_logprobs(const std::vector<double>& x,
                                                     const std::vector<std::vector<double>>& centres, double noise,
                                                     Rng& rng) {
  std::vector<std::vector<double>> logits(centres.size(), std::vector<double>(kWordsPerClass));
  double max_logit = -1e300;
  for (std::size_t y = 0; y < centres.size(); ++y) {
    const double base = kManualSharpness * cosine(x, centres[y]);
    for (auto& l : logits[y]) {
      l = base + noise * rng.normal();
      max_logit = std::max(max_logit, l);
    }
  }
  double z = 0.0;
  for (const auto& words : logits) {
    for (double l : words) z += std::exp(l - max_logit);
  }
  const double lse = max_logit + std::log(z);
  for (auto& words : logits) {
    for (double& l : words) l = std::min(0.0, l - lse);
  }
  return logits;
}

}  // namespace

std::vector<std::string> default_class_names(std::size_t n) {
  static const std::vector<std::string> kNews = {"world", "sports", "business", "tech"};
  if (n <= kNews.size()) return {kNews.begin(), kNews.begin() + static_cast<std::ptrdiff_t>(n)};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("class_" + std::to_string(i));
  return out;
}

void SyntheticSpec::validate() const {
  if (num_classes < 1) throw ConfigError("synthetic: num_classes must be >= 1");
  if (dim < num_classes + (offset != 0.0 ? 1 : 0)) {
    throw ConfigError("synthetic: dim must exceed num_classes (plus one for the offset axis)");
  }
  if (!(sigma > 0.0) || !(separation >= 0.0)) throw ConfigError("synthetic: sigma must be > 0 and separation >= 0");
  if (num_classes + nuisance_dims + (offset != 0.0 ? 1 : 0) > dim) {
    throw ConfigError("synthetic: class axes, nuisance axes and the offset axis must fit in dim");
  }
  if (!(nuisance_scale > 0.0)) throw ConfigError("synthetic: nuisance_scale must be > 0");
  if (!class_names.empty() && class_names.size() != num_classes) throw ConfigError("synthetic: class_names size mismatch");
}

EmbeddingDataset make_synthetic_dataset(const SyntheticSpec& spec) {
  spec.validate();
  EmbeddingDataset dataset;
  dataset.header.dim = spec.dim;
  dataset.header.class_names = spec.class_names.empty() ? default_class_names(spec.num_classes) : spec.class_names;
  dataset.header.template_id = spec.template_id;
  dataset.header.model_id = spec.model_id;

  std::vector<std::vector<double>> centres;
  for (std::size_t n = 0; n < spec.num_classes; ++n) centres.push_back(centre(spec, n));

  const auto point_scales = noise_scales(spec, 1.0);
  Rng points(derive_seed(spec.seed, 11));
  Rng manual(derive_seed(spec.seed, 12));
  auto emit = [&](Split split, std::size_t per_class) {
    const std::string prefix(split == Split::kTrain ? "tr" : "te");
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t n = 0; n < spec.num_classes; ++n) {
        EmbeddingRecord r;
        r.id = prefix + "-" + std::to_string(n) + "-" + std::to_string(i);
        r.split = split;
        r.label = n;
        r.embedding = draw_point(centres[n], point_scales, points);
        if (spec.manual_noise >= 0.0) r.label_word_logprobs = label_word_logprobs(r.embedding, centres, spec.manual_noise, manual);
        dataset.records.push_back(std::move(r));
      }
    }
  };
  emit(Split::kTrain, spec.train_per_class);
  emit(Split::kTest, spec.test_per_class);

  if (spec.probe_words_per_class > 0 || spec.filler_tokens > 0) {
    Rng probes(derive_seed(spec.seed, 13));
    std::set<std::string> tokens;
    auto add_probe = [&](const std::string& token, std::vector<double> embedding) {
      if (!tokens.insert(token).second) return;
      EmbeddingRecord r;
      r.id = "vp-" + token;
      r.split = Split::kVocabProbe;
      r.token = token;
      r.embedding = std::move(embedding);
      dataset.records.push_back(std::move(r));
    };
    for (std::size_t n = 0; n < spec.num_classes; ++n) {
      const auto& name = dataset.header.class_names[n];
      add_probe(name, draw_point(centres[n], std::vector<double>(spec.dim, 0.1 * spec.sigma), probes));
      for (std::size_t w = 0; w < spec.probe_words_per_class; ++w) {
        add_probe(name + "_" + std::to_string(w), draw_point(centres[n], noise_scales(spec, 0.5), probes));
      }
    }
    std::vector<double> origin(spec.dim, 0.0);
    origin[spec.dim - 1] = spec.offset;
    if (spec.offset == 0.0) origin[spec.dim - 1] = spec.sigma;
    for (std::size_t f = 0; f < spec.filler_tokens; ++f) {
      add_probe("filler_" + std::to_string(f), draw_point(origin, noise_scales(spec, 0.5), probes));
    }
  }
  return dataset;
}

}  // namespace protoverb
