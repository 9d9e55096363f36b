#pragma once

// Multinomial logistic classification head trained by full-batch gradient
// descent, with inference-time attribute masking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bgc/dataset.hpp"
#include "bgc/error.hpp"
#include "bgc/matrix.hpp"
#include "bgc/tensor.hpp"

namespace bgc {

struct TrainConfig {
  int epochs = 500;
  double learning_rate = 0.5;
  double l2_penalty = 1e-4;
  std::uint64_t seed = 0;  // reserved; zero init and full batch need no randomness
  double convergence_tolerance = 1e-10;

  void validate() const {
    if (epochs < 1) throw InputError("epochs must be >= 1");
    // Zero is accepted so a head can be frozen at its initialization.
    if (!(learning_rate >= 0.0)) throw InputError("learning_rate must be >= 0");
    if (!(l2_penalty >= 0.0)) throw InputError("l2_penalty must be >= 0");
    if (!(convergence_tolerance >= 0.0)) throw InputError("convergence_tolerance must be >= 0");
  }
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct HeadParams {
  Matrix weights;             // C x d
  std::vector<double> bias;   // C
  std::vector<EpochLog> training_log;
  TrainConfig config;

  std::size_t class_count() const { return weights.rows(); }
  std::size_t attribute_count() const { return weights.cols(); }
};

struct HeadGradient {
  Matrix weights;
  std::vector<double> bias;
};

inline std::vector<double> logits(const HeadParams& h, std::span<const double> z) {
  if (z.size() != h.attribute_count())
    throw ShapeError("input has " + std::to_string(z.size()) + " attributes, head expects " +
                     std::to_string(h.attribute_count()));
  std::vector<double> out(h.class_count());
  for (std::size_t c = 0; c < out.size(); ++c) {
    double s = h.bias[c];
    const auto w = h.weights.row(c);
    for (std::size_t k = 0; k < z.size(); ++k) s += w[k] * z[k];
    out[c] = s;
  }
  return out;
}

/// Max-subtracted softmax.
inline std::vector<double> softmax(std::vector<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    s += x;
  }
  for (double& x : v) x /= s;
  return v;
}

inline std::vector<double> predict(const HeadParams& h, std::span<const double> z) {
  return softmax(logits(h, z));
}

/// Copy of z with every attribute outside `keep` set to zero.
inline std::vector<double> apply_mask(std::span<const double> z,
                                      std::span<const std::size_t> keep) {
  std::vector<double> out(z.size(), 0.0);
  for (auto k : keep) {
    if (k >= z.size())
      throw ShapeError("kept attribute " + std::to_string(k) + " out of range [0," +
                       std::to_string(z.size()) + ")");
    out[k] = z[k];
  }
  return out;
}

inline std::vector<double> masked_logits(const HeadParams& h, std::span<const double> z,
                                         std::span<const std::size_t> keep) {
  if (z.size() != h.attribute_count())
    throw ShapeError("input has " + std::to_string(z.size()) + " attributes, head expects " +
                     std::to_string(h.attribute_count()));
  return logits(h, apply_mask(z, keep));
}

inline std::vector<double> masked_predict(const HeadParams& h, std::span<const double> z,
                                          std::span<const std::size_t> keep) {
  return softmax(masked_logits(h, z, keep));
}

/// Index of the largest entry; ties resolve to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

namespace detail {

struct LossAndGradient {
  double loss = 0.0;
  double accuracy = 0.0;
  HeadGradient grad;
};

inline LossAndGradient loss_and_gradient(const HeadParams& h, const ActivationSet& set,
                                         double l2) {
  const std::size_t c_count = h.class_count();
  const std::size_t d = h.attribute_count();
  if (set.attribute_count() != d)
    throw ShapeError("set has " + std::to_string(set.attribute_count()) +
                     " attributes, head expects " + std::to_string(d));
  if (set.concept_count() != c_count)
    throw ShapeError("set has " + std::to_string(set.concept_count()) +
                     " concepts, head expects " + std::to_string(c_count));
  LossAndGradient out{0.0, 0.0, {Matrix(c_count, d, 0.0), std::vector<double>(c_count, 0.0)}};
  const std::size_t n = set.sample_count();
  std::size_t correct = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto z = set.activations.row(s);
    const auto y = static_cast<std::size_t>(set.labels[s]);
    const auto lg = logits(h, z);
    const double m = *std::max_element(lg.begin(), lg.end());
    double denom = 0.0;
    for (double v : lg) denom += std::exp(v - m);
    out.loss += -(lg[y] - m - std::log(denom));
    if (argmax(lg) == y) ++correct;
    for (std::size_t c = 0; c < c_count; ++c) {
      const double r = std::exp(lg[c] - m) / denom - (c == y ? 1.0 : 0.0);
      out.grad.bias[c] += r;
      auto gw = out.grad.weights.row(c);
      for (std::size_t k = 0; k < d; ++k) gw[k] += r * z[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  out.accuracy = static_cast<double>(correct) * inv;
  double reg = 0.0;
  for (std::size_t c = 0; c < c_count; ++c) {
    out.grad.bias[c] *= inv;
    auto gw = out.grad.weights.row(c);
    const auto w = h.weights.row(c);
    for (std::size_t k = 0; k < d; ++k) {
      gw[k] = gw[k] * inv + l2 * w[k];
      reg += w[k] * w[k];
    }
  }
  out.loss += 0.5 * l2 * reg;
  return out;
}

}  // namespace detail

/// Mean cross-entropy plus (l2/2)||W||^2.
inline double loss(const HeadParams& h, const ActivationSet& set, double l2_penalty) {
  return detail::loss_and_gradient(h, set, l2_penalty).loss;
}

/// Analytic gradient of `loss` with respect to weights and bias.
inline HeadGradient gradient(const HeadParams& h, const ActivationSet& set,
                             double l2_penalty) {
  return detail::loss_and_gradient(h, set, l2_penalty).grad;
}

inline HeadParams zero_head(std::size_t classes, std::size_t attributes) {
  HeadParams h;
  h.weights = Matrix(classes, attributes, 0.0);
  h.bias.assign(classes, 0.0);
  return h;
}

inline HeadParams train(const ActivationSet& set, const TrainConfig& cfg) {
  cfg.validate();
  set.validate();
  if (set.concept_count() < 2) throw ContextError("training needs at least two concepts");
  HeadParams h = zero_head(set.concept_count(), set.attribute_count());
  h.config = cfg;
  double previous = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto step = detail::loss_and_gradient(h, set, cfg.l2_penalty);
    if (!std::isfinite(step.loss)) throw DivergenceError(epoch);
    h.training_log.push_back({epoch, step.loss, step.accuracy});
    if (epoch > 1 && std::abs(previous - step.loss) < cfg.convergence_tolerance) break;
    previous = step.loss;
    for (std::size_t c = 0; c < h.class_count(); ++c) {
      h.bias[c] -= cfg.learning_rate * step.grad.bias[c];
      auto w = h.weights.row(c);
      const auto g = step.grad.weights.row(c);
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.learning_rate * g[k];
    }
  }
  for (double v : h.weights.data())
    if (!std::isfinite(v)) throw DivergenceError(static_cast<int>(h.training_log.size()));
  return h;
}

/// Writes weights.bgc (C x d, f64), bias.bgc (C, f64) and head.json.
inline void save_head(const HeadParams& h, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_tensor(Tensor({h.class_count(), h.attribute_count()}, h.weights.data()),
               dir / "weights.bgc");
  write_tensor(Tensor({h.class_count()}, h.bias), dir / "bias.bgc");
  nlohmann::json j;
  j["classes"] = h.class_count();
  j["attributes"] = h.attribute_count();
  j["weights"] = "weights.bgc";
  j["bias"] = "bias.bgc";
  j["config"] = {{"epochs", h.config.epochs},
                 {"learning_rate", h.config.learning_rate},
                 {"l2_penalty", h.config.l2_penalty},
                 {"seed", h.config.seed},
                 {"convergence_tolerance", h.config.convergence_tolerance}};
  j["epochs_run"] = h.training_log.size();
  if (!h.training_log.empty()) {
    j["final_loss"] = h.training_log.back().loss;
    j["final_accuracy"] = h.training_log.back().accuracy;
  }
  write_json(j, dir / "head.json");
}

inline HeadParams load_head(const std::filesystem::path& dir) {
  std::ifstream is(dir / "head.json");
  if (!is) throw InputError("cannot open '" + (dir / "head.json").string() + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("head.json: ") + e.what());
  }
  const Tensor w = read_tensor(dir / j.at("weights").get<std::string>());
  const Tensor b = read_tensor(dir / j.at("bias").get<std::string>());
  if (w.rank() != 2 || b.rank() != 1 || w.dim(0) != b.dim(0))
    throw ShapeError("head tensors have inconsistent shapes");
  HeadParams h;
  h.weights = Matrix(w.dim(0), w.dim(1), w.to_doubles());
  h.bias = b.to_doubles();
  const auto& c = j.at("config");
  h.config.epochs = c.at("epochs").get<int>();
  h.config.learning_rate = c.at("learning_rate").get<double>();
  h.config.l2_penalty = c.at("l2_penalty").get<double>();
  h.config.seed = c.at("seed").get<std::uint64_t>();
  h.config.convergence_tolerance = c.at("convergence_tolerance").get<double>();
  return h;
}

}  // namespace bgc
