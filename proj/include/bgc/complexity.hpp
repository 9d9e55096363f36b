#pragma once

// Visual complexity (quantized patch-code entropy) and subjective complexity
// (shortest prefix of the ROA ranking that lets the head recognize a concept).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <tuple>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bgc/dataset.hpp"
#include "bgc/error.hpp"
#include "bgc/linear_head.hpp"
#include "bgc/raster.hpp"
#include "bgc/roa.hpp"

namespace bgc {

inline constexpr int kEntropyLevels = 8;
inline constexpr double kMaxVisualBits = 12.0;  // log2(8^4)

/// Entropy in bits of the pooled distribution of non-overlapping 2x2 patch
/// codes after quantizing pixels to 8 gray levels. Odd trailing rows/columns
/// are ignored.
inline double visual_complexity(std::span<const GrayImage> images) {
  if (images.empty()) throw InputError("visual_complexity needs at least one image");
  std::vector<std::uint64_t> counts(4096, 0);
  std::uint64_t total = 0;
  auto level = [](double v) {
    return std::min(kEntropyLevels - 1, static_cast<int>(v * kEntropyLevels));
  };
  for (const auto& img : images) {
    if (img.height < 2 || img.width < 2)
      throw InputError("image smaller than 2x2 (" + std::to_string(img.height) + "x" +
                       std::to_string(img.width) + ")");
    for (double v : img.pixels)
      if (!(v >= 0.0 && v <= 1.0)) throw InputError("pixel value outside [0,1]");
    for (std::size_t y = 0; y + 1 < img.height; y += 2)
      for (std::size_t x = 0; x + 1 < img.width; x += 2) {
        const int code = ((level(img(y, x)) * 8 + level(img(y, x + 1))) * 8 +
                          level(img(y + 1, x))) * 8 + level(img(y + 1, x + 1));
        ++counts[static_cast<std::size_t>(code)];
        ++total;
      }
  }
  double h = 0.0;
  const double n = static_cast<double>(total);
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log2(p);
    }
  return std::max(0.0, h);
}

struct MdlConfig {
  std::optional<double> gain_threshold = 0.01;  // tau; nullopt disables the gain rule
  int patience = 2;                             // m
  std::optional<double> error_cap;              // epsilon; nullopt disables

  void validate() const {
    if (gain_threshold && !(*gain_threshold >= 0.0))
      throw InputError("gain threshold must be >= 0");
    if (patience < 1) throw InputError("patience must be >= 1");
    if (error_cap && !(*error_cap > 0.0 && *error_cap <= 1.0))
      throw InputError("error cap must lie in (0,1]");
    if (!gain_threshold && !error_cap)
      throw InputError("at least one stopping rule must be enabled");
  }
};

/// Fraction of `concept_id`'s samples whose masked argmax equals the label.
inline double masked_concept_accuracy(const HeadParams& head, const ActivationSet& set,
                                      int concept_id, std::span<const std::size_t> keep) {
  const auto idx = set.samples_of(concept_id);
  if (idx.empty())
    throw InputError("concept " + std::to_string(concept_id) + " has no samples");
  std::size_t hit = 0;
  for (auto i : idx) {
    const auto lg = masked_logits(head, set.activations.row(i), keep);
    if (argmax(lg) == static_cast<std::size_t>(concept_id)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(idx.size());
}

/// Accuracy change from keeping the top K-1 to the top K ranked attributes;
/// for K = 1 this is the top-1 accuracy itself.
inline double accuracy_gain(const HeadParams& head, const ActivationSet& set,
                            std::span<const std::size_t> ranking, std::size_t k,
                            int concept_id) {
  if (k < 1 || k > ranking.size())
    throw ShapeError("K must lie in [1," + std::to_string(ranking.size()) + "]");
  const double now = masked_concept_accuracy(head, set, concept_id, ranking.first(k));
  if (k == 1) return now;
  return now - masked_concept_accuracy(head, set, concept_id, ranking.first(k - 1));
}

enum class StopRule { ErrorCap, GainPlateau, Exhausted };

inline const char* stop_rule_name(StopRule r) {
  switch (r) {
    case StopRule::ErrorCap: return "error_cap";
    case StopRule::GainPlateau: return "gain_plateau";
    case StopRule::Exhausted: return "exhausted";
  }
  return "?";
}

struct ConceptComplexity {
  std::string name;
  std::size_t subjective_len = 0;
  StopRule rule = StopRule::Exhausted;
  std::vector<std::size_t> ranking;
  std::vector<double> accuracy_curve;  // index K-1
  std::vector<double> gain_curve;      // index K-1
  std::optional<double> visual_bits;
};

/// Accuracy of one concept for every prefix length K = 1..d of its ranking.
inline std::vector<double> accuracy_curve(const HeadParams& head, const ActivationSet& set,
                                          std::span<const std::size_t> ranking,
                                          int concept_id) {
  std::vector<double> acc(ranking.size());
  for (std::size_t k = 1; k <= ranking.size(); ++k)
    acc[k - 1] = masked_concept_accuracy(head, set, concept_id, ranking.first(k));
  return acc;
}

/// Applies the stopping rule to a precomputed accuracy curve.
///
/// Scanning K = 1..d: stop with L = K as soon as the error 1 - Acc_K drops
/// below the error cap. Otherwise count consecutive steps whose gain is below
/// tau, counting only once some accuracy has been reached (Acc_{K-1} > 0);
/// after `patience` such steps stop with L = K - patience, the last step that
/// still paid off. L = d when neither rule fires.
inline std::pair<std::size_t, StopRule> apply_stopping_rule(std::span<const double> acc,
                                                            const MdlConfig& cfg) {
  cfg.validate();
  const std::size_t d = acc.size();
  int run = 0;
  for (std::size_t k = 1; k <= d; ++k) {
    if (cfg.error_cap && 1.0 - acc[k - 1] < *cfg.error_cap) return {k, StopRule::ErrorCap};
    if (cfg.gain_threshold && k >= 2) {
      const double gain = acc[k - 1] - acc[k - 2];
      if (acc[k - 2] > 0.0 && gain < *cfg.gain_threshold)
        ++run;
      else
        run = 0;
      if (run == cfg.patience)
        return {std::max<std::size_t>(1, k - static_cast<std::size_t>(cfg.patience)),
                StopRule::GainPlateau};
    }
  }
  return {d, StopRule::Exhausted};
}

inline std::vector<ConceptComplexity> subjective_complexity(const HeadParams& head,
                                                            const ActivationSet& set,
                                                            const RoaMatrix& roa,
                                                            const MdlConfig& cfg) {
  cfg.validate();
  if (roa.concept_count() != set.concept_count() ||
      roa.attribute_count() != set.attribute_count())
    throw ShapeError("ROA matrix does not match the activation set");
  std::vector<ConceptComplexity> out;
  for (std::size_t c = 0; c < set.concept_count(); ++c) {
    ConceptComplexity cc;
    cc.name = set.concept_names[c];
    cc.ranking = rank_attributes(roa, static_cast<int>(c));
    cc.accuracy_curve = accuracy_curve(head, set, cc.ranking, static_cast<int>(c));
    cc.gain_curve.resize(cc.accuracy_curve.size());
    for (std::size_t k = 0; k < cc.accuracy_curve.size(); ++k)
      cc.gain_curve[k] = k == 0 ? cc.accuracy_curve[0]
                                : cc.accuracy_curve[k] - cc.accuracy_curve[k - 1];
    std::tie(cc.subjective_len, cc.rule) = apply_stopping_rule(cc.accuracy_curve, cfg);
    out.push_back(std::move(cc));
  }
  return out;
}

/// Exhaustive reference for the error-cap rule: the smallest K along the ROA
/// ranking whose per-concept error is below epsilon, or d + 1 if none is.
/// Evaluates every prefix directly from the head parameters.
inline std::vector<std::size_t> brute_force_mdl(const HeadParams& head,
                                                const ActivationSet& set,
                                                const RoaMatrix& roa, double epsilon) {
  const std::size_t d = set.attribute_count();
  const std::size_t classes = head.class_count();
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < set.concept_count(); ++c) {
    const auto ranking = rank_attributes(roa, static_cast<int>(c));
    std::size_t found = d + 1;
    for (std::size_t k = 1; k <= d && found == d + 1; ++k) {
      std::vector<bool> kept(d, false);
      for (std::size_t j = 0; j < k; ++j) kept[ranking[j]] = true;
      std::size_t n = 0, wrong = 0;
      for (std::size_t s = 0; s < set.sample_count(); ++s) {
        if (set.labels[s] != static_cast<int>(c)) continue;
        ++n;
        const auto z = set.activations.row(s);
        std::size_t best = 0;
        double best_logit = 0.0;
        for (std::size_t cls = 0; cls < classes; ++cls) {
          double v = head.bias[cls];
          for (std::size_t a = 0; a < d; ++a)
            if (kept[a]) v += head.weights(cls, a) * z[a];
          if (cls == 0 || v > best_logit) {
            best = cls;
            best_logit = v;
          }
        }
        if (best != c) ++wrong;
      }
      if (static_cast<double>(wrong) / static_cast<double>(n) < epsilon) found = k;
    }
    out.push_back(found);
  }
  return out;
}

}  // namespace bgc
