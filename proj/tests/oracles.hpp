#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance runner. Each one is written from the definition, without
// reusing library code paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "bgc/complexity.hpp"
#include "bgc/dataset.hpp"
#include "bgc/linear_head.hpp"

namespace bgc::testing {

// Two-sided Student-t tail through the regularized incomplete beta function.
inline double oracle_t_p(double t, double df) {
  return boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

// Rank by counting: (#smaller) + (#equal + 1) / 2.
inline std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double oracle_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    sab += a[i] * b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
  }
  return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
}

struct OracleFit {
  double slope, intercept, se, t, p, r2;
};

// Normal equations on uncentered sums with an explicit 2x2 inverse.
inline OracleFit oracle_ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / det;
  const double intercept = (sxx * sy - sx * sxy) / det;
  double sse = 0, sst = 0;
  const double my = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - intercept - slope * x[i];
    sse += e * e;
    sst += (y[i] - my) * (y[i] - my);
  }
  const double sigma2 = sse / (n - 2);
  const double se = std::sqrt(sigma2 * n / det);
  const double t = slope / se;
  return {slope, intercept, se, t, oracle_t_p(t, n - 2), 1 - sse / sst};
}

// Plain cross-entropy with the regularizer, written without max-shifting.
inline double oracle_loss(const Matrix& W, const std::vector<double>& b, const ActivationSet& set,
                          double l2) {
  double total = 0;
  for (std::size_t s = 0; s < set.sample_count(); ++s) {
    std::vector<double> lg(W.rows());
    for (std::size_t c = 0; c < W.rows(); ++c) {
      lg[c] = b[c];
      for (std::size_t k = 0; k < W.cols(); ++k) lg[c] += W(c, k) * set.activations(s, k);
    }
    double z = 0;
    for (double v : lg) z += std::exp(v);
    total += std::log(z) - lg[static_cast<std::size_t>(set.labels[s])];
  }
  double reg = 0;
  for (double w : W.data()) reg += w * w;
  return total / static_cast<double>(set.sample_count()) + 0.5 * l2 * reg;
}

struct OracleMdl {
  std::size_t len;
  StopRule rule;
};

// Recomputes every prefix accuracy from the raw parameters, then walks the
// stopping rule as stated: error cap first, then the patience counter.
inline OracleMdl oracle_mdl(const HeadParams& head, const ActivationSet& set,
                            const std::vector<std::size_t>& ranking, int concept_id,
                            const MdlConfig& cfg) {
  const std::size_t d = set.attribute_count();
  std::vector<double> acc;
  for (std::size_t k = 1; k <= d; ++k) {
    std::size_t hits = 0, n = 0;
    for (std::size_t s = 0; s < set.sample_count(); ++s) {
      if (set.labels[s] != concept_id) continue;
      ++n;
      std::vector<double> lg(head.class_count());
      for (std::size_t c = 0; c < lg.size(); ++c) {
        lg[c] = head.bias[c];
        for (std::size_t j = 0; j < k; ++j)
          lg[c] += head.weights(c, ranking[j]) * set.activations(s, ranking[j]);
      }
      std::size_t best = 0;
      for (std::size_t c = 1; c < lg.size(); ++c)
        if (lg[c] > lg[best]) best = c;
      if (best == static_cast<std::size_t>(concept_id)) ++hits;
    }
    acc.push_back(static_cast<double>(hits) / static_cast<double>(n));
  }
  int low_steps = 0;
  for (std::size_t k = 1; k <= d; ++k) {
    if (cfg.error_cap && 1.0 - acc[k - 1] < *cfg.error_cap) return {k, StopRule::ErrorCap};
    if (!cfg.gain_threshold || k == 1) continue;
    const bool counts = acc[k - 2] > 0.0 && acc[k - 1] - acc[k - 2] < *cfg.gain_threshold;
    low_steps = counts ? low_steps + 1 : 0;
    if (low_steps == cfg.patience) {
      const long len = static_cast<long>(k) - cfg.patience;
      return {static_cast<std::size_t>(std::max(1L, len)), StopRule::GainPlateau};
    }
  }
  return {d, StopRule::Exhausted};
}

// Plug-in entropy in bits of 2x2 patch codes over 8 gray levels, computed
// with an ordered histogram keyed by the four levels.
inline double oracle_patch_entropy(const std::vector<GrayImage>& images) {
  std::map<std::array<int, 4>, double> counts;
  double total = 0;
  auto q = [](double p) { return p >= 1.0 ? 7 : static_cast<int>(std::floor(p * 8.0)); };
  for (const auto& g : images)
    for (std::size_t y = 0; y + 1 < g.height; y += 2)
      for (std::size_t x = 0; x + 1 < g.width; x += 2) {
        counts[{q(g(y, x)), q(g(y, x + 1)), q(g(y + 1, x)), q(g(y + 1, x + 1))}] += 1;
        total += 1;
      }
  double h = 0;
  for (const auto& [key, c] : counts) h += c / total * std::log2(total / c);
  return h;
}

}  // namespace bgc::testing
