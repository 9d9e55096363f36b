#pragma once

// Rank correlation, least squares with slope inference, and the two-lines
// test for inverted-U relations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "bgc/error.hpp"

namespace bgc {

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
inline double t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  if (df <= 0) return 1.0;
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0,
                    1.0);
}

/// 1-based ranks; tied values share the average of the positions they span.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0 || sbb <= 0) throw UndefinedCorrelation("an input vector is constant");
  return sab / std::sqrt(saa * sbb);
}

struct Correlation {
  double rho = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

inline Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ShapeError("spearman inputs differ in length (" + std::to_string(x.size()) +
                     " vs " + std::to_string(y.size()) + ")");
  if (x.size() < 2) throw InsufficientDataError("spearman needs at least two observations");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v[0]; });
  };
  if (constant(x) || constant(y)) throw UndefinedCorrelation("an input vector is constant");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  Correlation out;
  out.n = x.size();
  out.rho = std::clamp(pearson(rx, ry), -1.0, 1.0);
  if (std::abs(out.rho) >= 1.0) {
    out.p = 0.0;
  } else {
    const double df = static_cast<double>(out.n) - 2.0;
    out.p = t_two_sided_p(out.rho * std::sqrt(df / (1.0 - out.rho * out.rho)), df);
  }
  return out;
}

struct RegressionReport {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double t = 0.0;  // reported as z in summaries
  double p = 1.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

inline RegressionReport ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("ols inputs differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw InsufficientDataError("ols needs at least three observations");
  const double dn = static_cast<double>(n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / dn;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / dn;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0)) throw SingularError("x is constant");
  const bool y_constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });

  RegressionReport r;
  r.n = n;
  r.slope = y_constant ? 0.0 : sxy / sxx;
  r.intercept = y_constant ? y[0] : my - r.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    sse += e * e;
  }
  r.r2 = (y_constant || !(syy > 0)) ? 0.0 : std::max(0.0, 1.0 - sse / syy);
  const double df = dn - 2.0;
  r.slope_se = std::sqrt(sse / df / sxx);
  if (r.slope_se > 0) {
    r.t = r.slope / r.slope_se;
    r.p = t_two_sided_p(r.t, df);
  } else if (r.slope == 0.0) {
    r.t = 0.0;
    r.p = 1.0;
  } else {
    // Residuals vanish: a perfect non-flat line.
    r.t = std::copysign(std::numeric_limits<double>::infinity(), r.slope);
    r.p = 0.0;
  }
  return r;
}

struct BreakpointCandidate {
  double breakpoint = 0.0;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
  double slope_left = 0.0;
  double slope_right = 0.0;
  double r2_left = 0.0;
  double r2_right = 0.0;
  double score = 0.0;  // r2_left + r2_right
};

struct TwoLinesReport {
  double breakpoint = 0.0;
  RegressionReport left;
  RegressionReport right;
  double alpha = 0.05;
  bool inverted_u = false;
  std::vector<BreakpointCandidate> scan;
};

/// Scans every distinct x with at least three observations strictly on each
/// side. The candidate itself belongs to both regressions (x <= x_c and
/// x >= x_c). The winner maximizes r2_left + r2_right; ties go to the
/// smallest breakpoint.
inline TwoLinesReport two_lines(std::span<const double> x, std::span<const double> y,
                                double alpha = 0.05) {
  if (x.size() != y.size()) throw ShapeError("two_lines inputs differ in length");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw InputError("two_lines inputs must be finite");

  std::vector<double> xs(x.begin(), x.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  TwoLinesReport report;
  report.alpha = alpha;
  bool found = false;
  for (double xc : xs) {
    std::vector<double> lx, ly, rx, ry;
    std::size_t below = 0, above = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < xc) ++below;
      if (x[i] > xc) ++above;
      if (x[i] <= xc) {
        lx.push_back(x[i]);
        ly.push_back(y[i]);
      }
      if (x[i] >= xc) {
        rx.push_back(x[i]);
        ry.push_back(y[i]);
      }
    }
    if (below < 3 || above < 3) continue;
    const auto l = ols(lx, ly);
    const auto r = ols(rx, ry);
    BreakpointCandidate cand{xc, lx.size(), rx.size(), l.slope, r.slope, l.r2, r.r2,
                             l.r2 + r.r2};
    report.scan.push_back(cand);
    if (!found || cand.score > report.left.r2 + report.right.r2) {
      found = true;
      report.breakpoint = xc;
      report.left = l;
      report.right = r;
    }
  }
  if (!found)
    throw InsufficientDataError(
        "no breakpoint has at least three observations strictly on each side");
  report.inverted_u = report.left.slope > 0 && report.left.p < alpha &&
                      report.right.slope < 0 && report.right.p < alpha;
  return report;
}

struct MeanInterval {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::size_t n = 0;
};

/// Mean with a two-sided Student-t confidence interval.
inline MeanInterval mean_ci(std::span<const double> v, double level = 0.95) {
  MeanInterval out;
  out.level = level;
  out.n = v.size();
  if (v.empty()) throw InsufficientDataError("mean_ci of an empty sample");
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) {
    out.lower = out.upper = out.mean;
    return out;
  }
  double ss = 0;
  for (double e : v) ss += (e - out.mean) * (e - out.mean);
  const double se = std::sqrt(ss / (n - 1.0) / n);
  const boost::math::students_t dist(n - 1.0);
  const double q = boost::math::quantile(dist, 0.5 + 0.5 * level);
  out.lower = out.mean - q * se;
  out.upper = out.mean + q * se;
  return out;
}

}  // namespace bgc
