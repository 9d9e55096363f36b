#pragma once

// Similarity-based and rule-based (analogy) generalization over concept
// centroids, benchmark scoring by rank correlation, and the Bayesian
// generalization posterior weighted by exp(ROA).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "bgc/dataset.hpp"
#include "bgc/error.hpp"
#include "bgc/matrix.hpp"
#include "bgc/roa.hpp"
#include "bgc/stats.hpp"

namespace bgc {

/// C x d matrix of raw (unclamped) per-concept mean activations.
struct ConceptEmbedding {
  Matrix vectors;
  std::vector<bool> zero_norm;

  std::span<const double> operator[](int c) const {
    return vectors.row(static_cast<std::size_t>(c));
  }
  std::size_t concept_count() const { return vectors.rows(); }
};

inline ConceptEmbedding concept_embedding(const ActivationSet& set) {
  const std::size_t c_count = set.concept_count();
  const std::size_t d = set.attribute_count();
  ConceptEmbedding emb{Matrix(c_count, d, 0.0), std::vector<bool>(c_count, false)};
  std::vector<std::size_t> counts(c_count, 0);
  for (std::size_t n = 0; n < set.sample_count(); ++n) {
    const auto c = static_cast<std::size_t>(set.labels[n]);
    ++counts[c];
    const auto row = set.activations.row(n);
    auto out = emb.vectors.row(c);
    for (std::size_t i = 0; i < d; ++i) out[i] += row[i];
  }
  for (std::size_t c = 0; c < c_count; ++c) {
    if (counts[c] == 0) throw InputError("concept '" + set.concept_names[c] + "' has no samples");
    double norm2 = 0.0;
    for (double& v : emb.vectors.row(c)) {
      v /= static_cast<double>(counts[c]);
      norm2 += v * v;
    }
    emb.zero_norm[c] = !(norm2 > 0.0);
  }
  return emb;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine of vectors with different lengths");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (!(aa > 0) || !(bb > 0)) throw GeometryError("cosine with a zero-norm vector");
  return ab / std::sqrt(aa * bb);
}

struct RankedCandidate {
  int concept_id = 0;
  double score = 0.0;
};

namespace detail {

inline void check_candidate(const ConceptEmbedding& emb, int c) {
  if (c < 0 || static_cast<std::size_t>(c) >= emb.concept_count())
    throw ShapeError("concept id " + std::to_string(c) + " out of range");
  if (emb.zero_norm[static_cast<std::size_t>(c)])
    throw GeometryError("concept " + std::to_string(c) + " has a zero-norm centroid");
}

inline std::vector<RankedCandidate> rank_by_cosine(const ConceptEmbedding& emb,
                                                   std::span<const double> query,
                                                   std::span<const int> candidates) {
  std::vector<RankedCandidate> out;
  out.reserve(candidates.size());
  for (int c : candidates) {
    check_candidate(emb, c);
    out.push_back({c, cosine(emb[c], query)});
  }
  std::sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.concept_id < b.concept_id;
  });
  return out;
}

}  // namespace detail

/// Candidates by descending cosine similarity to `query`; ties by ascending id.
inline std::vector<RankedCandidate> similarity_rank(const ConceptEmbedding& emb,
                                                    std::span<const double> query,
                                                    std::span<const int> candidates) {
  return detail::rank_by_cosine(emb, query, candidates);
}

/// Composite z2 - z1 + z3 completing "c1 is to c2 as c3 is to ?".
inline std::vector<double> analogy_composite(const ConceptEmbedding& emb, int c1, int c2,
                                             int c3) {
  for (int c : {c1, c2, c3})
    if (c < 0 || static_cast<std::size_t>(c) >= emb.concept_count())
      throw ShapeError("concept id " + std::to_string(c) + " out of range");
  const auto a = emb[c1], b = emb[c2], q = emb[c3];
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] - a[i] + q[i];
  return out;
}

inline std::vector<RankedCandidate> analogy_rank(const ConceptEmbedding& emb, int c1, int c2,
                                                 int c3, std::span<const int> candidates) {
  const auto composite = analogy_composite(emb, c1, c2, c3);
  double n2 = 0.0;
  for (double v : composite) n2 += v * v;
  if (!(n2 > 0.0)) throw GeometryError("analogy composite has zero norm");
  return detail::rank_by_cosine(emb, composite, candidates);
}

struct SimilarityItem {
  int query = 0;
  std::vector<int> candidates;
  std::vector<int> truth;
  std::string level;  // optional hierarchy tag, metadata only
};

struct RuleItem {
  int c1 = 0, c2 = 0, c3 = 0;
  std::vector<int> candidates;
  std::vector<int> truth;
  std::string level;
};

struct GeneralizationBenchmark {
  std::vector<SimilarityItem> similarity;
  std::vector<RuleItem> rules;

  void validate(std::size_t concept_count) const {
    auto check_list = [&](const std::vector<int>& cand, const std::vector<int>& truth,
                          const std::string& where) {
      if (cand.size() < 2) throw BenchmarkError(where + ": fewer than two candidates");
      for (int c : cand)
        if (c < 0 || static_cast<std::size_t>(c) >= concept_count)
          throw BenchmarkError(where + ": candidate id out of range");
      auto a = cand, b = truth;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (std::adjacent_find(a.begin(), a.end()) != a.end())
        throw BenchmarkError(where + ": duplicate candidate");
      if (a != b) throw BenchmarkError(where + ": truth is not a permutation of candidates");
    };
    for (std::size_t i = 0; i < similarity.size(); ++i)
      check_list(similarity[i].candidates, similarity[i].truth,
                 "similarity item " + std::to_string(i));
    for (std::size_t i = 0; i < rules.size(); ++i)
      check_list(rules[i].candidates, rules[i].truth, "rule item " + std::to_string(i));
  }
};

struct ItemScore {
  std::size_t item = 0;
  bool excluded = false;
  std::string error;
  double rho = 0.0;
  double p = 1.0;
  std::vector<int> predicted;
};

struct BenchmarkEvaluation {
  std::vector<ItemScore> similarity;
  std::vector<ItemScore> rules;
  double similarity_mean_rho = std::numeric_limits<double>::quiet_NaN();
  double rule_mean_rho = std::numeric_limits<double>::quiet_NaN();
  std::size_t similarity_excluded = 0;
  std::size_t rule_excluded = 0;
};

/// Spearman correlation between a predicted ordering and a ground-truth
/// ordering of the same candidate set.
inline Correlation ranking_agreement(std::span<const int> predicted,
                                     std::span<const int> truth) {
  std::vector<double> pred_pos, truth_pos;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto it = std::find(predicted.begin(), predicted.end(), truth[i]);
    if (it == predicted.end()) throw BenchmarkError("prediction misses a candidate");
    truth_pos.push_back(static_cast<double>(i + 1));
    pred_pos.push_back(static_cast<double>(it - predicted.begin() + 1));
  }
  return spearman(pred_pos, truth_pos);
}

inline BenchmarkEvaluation eval_benchmark(const ConceptEmbedding& emb,
                                          const GeneralizationBenchmark& bench) {
  bench.validate(emb.concept_count());
  BenchmarkEvaluation ev;
  auto score = [](std::size_t idx, const std::vector<RankedCandidate>& ranked,
                  const std::vector<int>& truth) {
    ItemScore s;
    s.item = idx;
    for (const auto& r : ranked) s.predicted.push_back(r.concept_id);
    const auto corr = ranking_agreement(s.predicted, truth);
    s.rho = corr.rho;
    s.p = corr.p;
    return s;
  };
  auto mean_of = [](const std::vector<ItemScore>& items) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : items)
      if (!s.excluded) {
        sum += s.rho;
        ++n;
      }
    return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  };
  for (std::size_t i = 0; i < bench.similarity.size(); ++i) {
    const auto& it = bench.similarity[i];
    try {
      detail::check_candidate(emb, it.query);
      ev.similarity.push_back(
          score(i, similarity_rank(emb, emb[it.query], it.candidates), it.truth));
    } catch (const NumericalError& e) {
      ev.similarity.push_back({i, true, e.what(), 0.0, 1.0, {}});
      ++ev.similarity_excluded;
    }
  }
  for (std::size_t i = 0; i < bench.rules.size(); ++i) {
    const auto& it = bench.rules[i];
    try {
      ev.rules.push_back(
          score(i, analogy_rank(emb, it.c1, it.c2, it.c3, it.candidates), it.truth));
    } catch (const NumericalError& e) {
      ev.rules.push_back({i, true, e.what(), 0.0, 1.0, {}});
      ++ev.rule_excluded;
    }
  }
  ev.similarity_mean_rho = mean_of(ev.similarity);
  ev.rule_mean_rho = mean_of(ev.rules);
  return ev;
}

/// Harmonic blend sigma0 * sigma1 / (sigma0 + sigma1); 0 when both vanish.
inline double harmonic_prior(double sigma0, double sigma1) {
  const double s = sigma0 + sigma1;
  if (!(s > 0.0)) return 0.0;
  return sigma0 * sigma1 / s;
}

/// Cosine distance from `query` to its nearest concept among `known`.
inline double similarity_distance(const ConceptEmbedding& emb, std::span<const double> query,
                                  std::span<const int> known) {
  double best = -std::numeric_limits<double>::infinity();
  for (int c : known) {
    detail::check_candidate(emb, c);
    best = std::max(best, cosine(emb[c], query));
  }
  if (!std::isfinite(best)) throw InputError("similarity_distance needs known concepts");
  return std::max(0.0, 1.0 - best);
}

/// Cosine distance from `query` to the best analogy composite z2 - z1 + z3
/// over ordered triples of distinct concepts drawn from `known`.
inline double rule_distance(const ConceptEmbedding& emb, std::span<const double> query,
                            std::span<const int> known) {
  double best = -std::numeric_limits<double>::infinity();
  for (int a : known)
    for (int b : known)
      for (int c : known) {
        if (a == b || a == c || b == c) continue;
        const auto comp = analogy_composite(emb, a, b, c);
        double n2 = 0.0;
        for (double v : comp) n2 += v * v;
        if (!(n2 > 0.0)) continue;
        best = std::max(best, cosine(comp, query));
      }
  if (!std::isfinite(best)) throw InputError("rule_distance needs three known concepts");
  return std::max(0.0, 1.0 - best);
}

/// Posterior over candidate concepts for a handful of query samples:
///   P(c' | X) ∝ prior(c') * sum_i exp(ROA(z_i, c')) * P(z_i | X)
/// with P(z | X) the clamped, L1-normalized centroid of the query samples.
inline std::vector<double> generalization_posterior(const RoaMatrix& roa,
                                                    std::span<const int> candidates,
                                                    const Matrix& query_samples,
                                                    std::span<const double> priors) {
  if (query_samples.rows() == 0) throw InputError("posterior needs at least one query sample");
  if (candidates.empty()) throw InputError("posterior needs at least one candidate");
  if (priors.size() != candidates.size())
    throw ShapeError("one prior per candidate is required");
  const std::size_t d = roa.attribute_count();
  if (query_samples.cols() != d) throw ShapeError("query samples do not match ROA attributes");
  for (int c : candidates)
    if (c < 0 || static_cast<std::size_t>(c) >= roa.concept_count())
      throw ShapeError("candidate id " + std::to_string(c) + " out of range");

  std::vector<double> evidence(d, 0.0);
  for (std::size_t n = 0; n < query_samples.rows(); ++n)
    for (std::size_t i = 0; i < d; ++i) evidence[i] += query_samples(n, i);
  double total = 0.0;
  for (double& e : evidence) {
    e = std::max(0.0, e / static_cast<double>(query_samples.rows()));
    total += e;
  }
  if (!(total > 0.0)) throw DegenerateEvidence("query samples have an all-zero centroid");
  for (double& e : evidence) e /= total;

  std::vector<double> score(candidates.size(), 0.0);
  double z = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (!(priors[k] >= 0.0)) throw InputError("candidate priors must be non-negative");
    double s = 0.0;
    const auto c = static_cast<std::size_t>(candidates[k]);
    for (std::size_t i = 0; i < d; ++i) s += std::exp(roa.scores(i, c)) * evidence[i];
    score[k] = priors[k] * s;
    z += score[k];
  }
  if (!(z > 0.0) || !std::isfinite(z))
    throw DegenerateEvidence("every candidate scored zero");
  for (double& s : score) s /= z;
  return score;
}

// ---- benchmark files --------------------------------------------------------

inline GeneralizationBenchmark benchmark_from_json(const nlohmann::json& j,
                                                   const std::vector<std::string>& names) {
  auto resolve = [&](const nlohmann::json& v, const std::string& where) {
    const auto name = v.get<std::string>();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw BenchmarkError(where + ": unknown concept '" + name + "'");
    return static_cast<int>(it - names.begin());
  };
  auto resolve_list = [&](const nlohmann::json& v, const std::string& where) {
    std::vector<int> out;
    for (const auto& e : v) out.push_back(resolve(e, where));
    return out;
  };
  GeneralizationBenchmark b;
  try {
    if (j.contains("similarity"))
      for (std::size_t i = 0; i < j["similarity"].size(); ++i) {
        const auto& it = j["similarity"][i];
        const std::string where = "similarity[" + std::to_string(i) + "]";
        b.similarity.push_back({resolve(it.at("query"), where),
                                resolve_list(it.at("candidates"), where),
                                resolve_list(it.at("truth"), where),
                                it.value("level", std::string())});
      }
    if (j.contains("rules"))
      for (std::size_t i = 0; i < j["rules"].size(); ++i) {
        const auto& it = j["rules"][i];
        const std::string where = "rules[" + std::to_string(i) + "]";
        b.rules.push_back({resolve(it.at("c1"), where), resolve(it.at("c2"), where),
                           resolve(it.at("c3"), where), resolve_list(it.at("candidates"), where),
                           resolve_list(it.at("truth"), where),
                           it.value("level", std::string())});
      }
  } catch (const nlohmann::json::exception& e) {
    throw BenchmarkError(std::string("malformed benchmark: ") + e.what());
  }
  b.validate(names.size());
  return b;
}

inline nlohmann::json benchmark_to_json(const GeneralizationBenchmark& b,
                                        const std::vector<std::string>& names) {
  auto list = [&](const std::vector<int>& ids) {
    nlohmann::json a = nlohmann::json::array();
    for (int c : ids) a.push_back(names.at(static_cast<std::size_t>(c)));
    return a;
  };
  nlohmann::json j;
  j["similarity"] = nlohmann::json::array();
  for (const auto& it : b.similarity) {
    nlohmann::json e{{"query", names.at(static_cast<std::size_t>(it.query))},
                     {"candidates", list(it.candidates)},
                     {"truth", list(it.truth)}};
    if (!it.level.empty()) e["level"] = it.level;
    j["similarity"].push_back(e);
  }
  j["rules"] = nlohmann::json::array();
  for (const auto& it : b.rules) {
    nlohmann::json e{{"c1", names.at(static_cast<std::size_t>(it.c1))},
                     {"c2", names.at(static_cast<std::size_t>(it.c2))},
                     {"c3", names.at(static_cast<std::size_t>(it.c3))},
                     {"candidates", list(it.candidates)},
                     {"truth", list(it.truth)}};
    if (!it.level.empty()) e["level"] = it.level;
    j["rules"].push_back(e);
  }
  return j;
}

inline GeneralizationBenchmark read_benchmark(const std::filesystem::path& path,
                                              const std::vector<std::string>& names) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open benchmark '" + path.string() + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw BenchmarkError(path.string() + ": " + e.what());
  }
  return benchmark_from_json(j, names);
}

}  // namespace bgc
