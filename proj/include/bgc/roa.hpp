#pragma once

// Representativeness of attributes.
//
//   ROA(z_i, c) = ln( P(z_i|c) / sum_{c' != c} P'(c') P(z_i|c') )
//
// where P(z|c) is the clamped, L1-normalized concept centroid and P' is the
// concept prior renormalized over the concepts other than c.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "bgc/dataset.hpp"
#include "bgc/error.hpp"
#include "bgc/matrix.hpp"

namespace bgc {

inline constexpr double kRoaEpsilon = 1e-12;

/// d x C; column c holds P(z_i | c).
struct ConceptConditional {
  Matrix table;
};

/// d x C; row i holds P(c | z_i) across concepts.
struct AttributeConditional {
  Matrix table;
  std::vector<bool> uniform_rows;  // rows whose evidence was all zero
};

struct RoaMatrix {
  Matrix scores;  // d x C, natural-log units
  std::vector<double> prior;
  double epsilon = kRoaEpsilon;
  Matrix concept_conditional;
  Matrix attribute_conditional;

  std::size_t attribute_count() const { return scores.rows(); }
  std::size_t concept_count() const { return scores.cols(); }
};

inline std::vector<double> uniform_prior(std::size_t concepts) {
  return std::vector<double>(concepts, 1.0 / static_cast<double>(concepts));
}

inline ConceptConditional concept_conditional(const ActivationSet& set) {
  const std::size_t d = set.attribute_count();
  const std::size_t c_count = set.concept_count();
  Matrix sums(d, c_count, 0.0);
  std::vector<std::size_t> counts(c_count, 0);
  for (std::size_t n = 0; n < set.sample_count(); ++n) {
    const auto c = static_cast<std::size_t>(set.labels[n]);
    ++counts[c];
    const auto row = set.activations.row(n);
    for (std::size_t i = 0; i < d; ++i) sums(i, c) += row[i];
  }
  ConceptConditional cc{Matrix(d, c_count, 0.0)};
  for (std::size_t c = 0; c < c_count; ++c) {
    if (counts[c] == 0) throw InputError("concept '" + set.concept_names[c] + "' has no samples");
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double mean = std::max(0.0, sums(i, c) / static_cast<double>(counts[c]));
      cc.table(i, c) = mean;
      total += mean;
    }
    if (!(total > 0.0)) throw DegenerateConcept(set.concept_names[c]);
    for (std::size_t i = 0; i < d; ++i) cc.table(i, c) /= total;
  }
  return cc;
}

inline void check_prior(const std::vector<double>& prior, std::size_t concepts) {
  if (prior.size() != concepts)
    throw ShapeError("prior has " + std::to_string(prior.size()) + " entries, expected " +
                     std::to_string(concepts));
  double s = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0)) throw InputError("prior entries must be non-negative");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) throw InputError("prior must sum to 1");
}

inline AttributeConditional attribute_conditional(const ConceptConditional& cc,
                                                  const std::vector<double>& prior) {
  const std::size_t d = cc.table.rows();
  const std::size_t c_count = cc.table.cols();
  check_prior(prior, c_count);
  AttributeConditional ac{Matrix(d, c_count, 0.0), std::vector<bool>(d, false)};
  for (std::size_t i = 0; i < d; ++i) {
    double denom = 0.0;
    for (std::size_t c = 0; c < c_count; ++c) denom += prior[c] * cc.table(i, c);
    if (denom > 0.0) {
      for (std::size_t c = 0; c < c_count; ++c)
        ac.table(i, c) = prior[c] * cc.table(i, c) / denom;
    } else {
      ac.uniform_rows[i] = true;
      for (std::size_t c = 0; c < c_count; ++c)
        ac.table(i, c) = 1.0 / static_cast<double>(c_count);
    }
  }
  return ac;
}

inline RoaMatrix roa_matrix(const ConceptConditional& cc, const AttributeConditional& ac,
                            const std::vector<double>& prior, double epsilon = kRoaEpsilon) {
  const std::size_t d = cc.table.rows();
  const std::size_t c_count = cc.table.cols();
  if (c_count < 2) throw ContextError("at least two concepts are needed to score attributes");
  if (!(epsilon > 0.0)) throw InputError("smoothing floor must be positive");
  check_prior(prior, c_count);

  RoaMatrix roa{Matrix(d, c_count, 0.0), prior, epsilon, cc.table, ac.table};
  for (std::size_t c = 0; c < c_count; ++c) {
    const double rest = 1.0 - prior[c];
    for (std::size_t i = 0; i < d; ++i) {
      double denom = 0.0;
      if (rest > 0.0)
        for (std::size_t k = 0; k < c_count; ++k)
          if (k != c) denom += (prior[k] / rest) * cc.table(i, k);
      denom = std::max(epsilon, denom);
      const double num = cc.table(i, c) > 0.0 ? cc.table(i, c) : epsilon;
      roa.scores(i, c) = std::log(num / denom);
    }
  }
  return roa;
}

/// Convenience: ROA from an activation set with the given prior
/// (uniform when empty).
inline RoaMatrix compute_roa(const ActivationSet& set, std::vector<double> prior = {},
                             double epsilon = kRoaEpsilon) {
  if (prior.empty()) prior = uniform_prior(set.concept_count());
  const auto cc = concept_conditional(set);
  const auto ac = attribute_conditional(cc, prior);
  return roa_matrix(cc, ac, prior, epsilon);
}

/// Attribute indices by descending score; ties keep ascending index order.
inline std::vector<std::size_t> rank_attributes(const RoaMatrix& roa, int concept_id) {
  if (concept_id < 0 || static_cast<std::size_t>(concept_id) >= roa.concept_count())
    throw ShapeError("concept id " + std::to_string(concept_id) + " out of range");
  const auto c = static_cast<std::size_t>(concept_id);
  std::vector<std::size_t> order(roa.attribute_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return roa.scores(a, c) > roa.scores(b, c);
  });
  return order;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_roa_csv(const RoaMatrix& roa, const std::vector<std::string>& names,
                          const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  os << "attribute";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < roa.attribute_count(); ++i) {
    os << i;
    for (std::size_t c = 0; c < roa.concept_count(); ++c) os << ',' << format_double(roa.scores(i, c));
    os << '\n';
  }
}

inline Tensor roa_tensor(const RoaMatrix& roa) {
  return Tensor({roa.attribute_count(), roa.concept_count()}, roa.scores.data());
}

/// Reads a "concept,weight" CSV (optional header) and returns the prior in
/// concept order, normalized to sum 1. Every concept must be listed once.
inline std::vector<double> read_prior_csv(const std::filesystem::path& path,
                                          const std::vector<std::string>& names) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open prior file '" + path.string() + "'");
  std::vector<double> prior(names.size(), -1.0);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (comma == std::string::npos) throw InputError(where + ": expected 'concept,weight'");
    const std::string name = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    double w = 0.0;
    try {
      std::size_t used = 0;
      w = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw InputError(where + ": weight '" + value + "' is not a number");
    }
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError(where + ": unknown concept '" + name + "'");
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError(where + ": weight must be >= 0");
    auto& slot = prior[static_cast<std::size_t>(it - names.begin())];
    if (slot >= 0.0) throw InputError(where + ": concept '" + name + "' listed twice");
    slot = w;
  }
  double total = 0.0;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (prior[c] < 0.0) throw InputError(path.string() + ": no weight for concept '" + names[c] + "'");
    total += prior[c];
  }
  if (!(total > 0.0)) throw InputError(path.string() + ": weights sum to zero");
  for (double& p : prior) p /= total;
  return prior;
}

}  // namespace bgc
