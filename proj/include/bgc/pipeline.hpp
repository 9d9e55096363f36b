#pragma once

// End-to-end run over a synthetic world: features, head, ROA, subjective
// complexity, the two-lines test and generalization scores, collected into a
// deterministic report.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "bgc/complexity.hpp"
#include "bgc/dataset.hpp"
#include "bgc/error.hpp"
#include "bgc/features.hpp"
#include "bgc/generalize.hpp"
#include "bgc/linear_head.hpp"
#include "bgc/roa.hpp"
#include "bgc/stats.hpp"
#include "bgc/synthworld.hpp"

namespace bgc {

inline constexpr const char* kToolVersion = "1.0.0";

struct PipelineConfig {
  WorldSpec world = default_world_spec();
  TrainConfig train;
  MdlConfig mdl;
  BenchmarkConfig benchmark;
  double alpha = 0.05;
  std::vector<double> prior;  // empty means uniform
  unsigned jobs = 1;          // worker cap; never changes results
};

/// Extracts features for every image, concept by concept. Work is split
/// across at most `jobs` threads; rows are written in a fixed order, so the
/// result does not depend on scheduling.
inline ActivationSet extract_activation_set(const std::vector<ConceptImages>& concepts,
                                            unsigned jobs = 1) {
  if (concepts.empty()) throw InputError("no concepts to extract");
  std::size_t total = 0;
  for (const auto& c : concepts) {
    if (c.images.empty()) throw InputError("concept '" + c.name + "' has no images");
    total += c.images.size();
  }
  const auto& first = concepts.front().images.front();
  const FeatureBank bank(first.height, first.width);
  ActivationSet set;
  set.activations = Matrix(total, kFeatureCount, 0.0);
  std::vector<std::size_t> offsets;
  for (std::size_t c = 0; c < concepts.size(); ++c) {
    set.concept_names.push_back(concepts[c].name);
    offsets.push_back(set.labels.size());
    set.labels.insert(set.labels.end(), concepts[c].images.size(), static_cast<int>(c));
  }

  std::vector<std::string> errors(concepts.size());
  auto work = [&](std::size_t c) {
    try {
      for (std::size_t i = 0; i < concepts[c].images.size(); ++i) {
        const auto f = bank.extract(concepts[c].images[i]);
        std::copy(f.begin(), f.end(), set.activations.row(offsets[c] + i).begin());
      }
    } catch (const std::exception& e) {
      errors[c] = "concept '" + concepts[c].name + "': " + e.what();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs, concepts.size()));
  if (workers == 1) {
    for (std::size_t c = 0; c < concepts.size(); ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < concepts.size(); c += workers) work(c);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw InputError(e);
  return set;
}

struct ConceptRow {
  std::string name;
  int tier = 0;
  int defining_attributes = 0;
  double visual_bits = 0.0;
  std::size_t subjective_len = 0;
  StopRule stop_rule = StopRule::Exhausted;
  double similarity_rho = std::numeric_limits<double>::quiet_NaN();
  double rule_rho = std::numeric_limits<double>::quiet_NaN();
  std::size_t similarity_items = 0;
  std::size_t rule_items = 0;
};

struct TierRow {
  int level = 0;
  double visual_bits_mean = 0.0;
  double subjective_len_mean = 0.0;
  double similarity_mean_rho = std::numeric_limits<double>::quiet_NaN();
  double rule_mean_rho = std::numeric_limits<double>::quiet_NaN();
};

/// A correlation that may be undefined (for instance when L is constant).
struct MaybeCorrelation {
  std::optional<Correlation> value;
  std::string error;
};

struct PipelineReport {
  PipelineConfig config;
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  std::vector<ConceptRow> concepts;
  std::vector<TierRow> tiers;
  std::optional<TwoLinesReport> two_lines;
  std::string two_lines_error;
  double similarity_mean_rho = 0.0;
  double rule_mean_rho = 0.0;
  std::size_t similarity_items = 0;
  std::size_t rule_items = 0;
  std::size_t similarity_excluded = 0;
  std::size_t rule_excluded = 0;
  MaybeCorrelation similarity_vs_len;
  MaybeCorrelation rule_vs_len;
};

/// Everything the pipeline computed, for callers that persist stages.
struct PipelineRun {
  World world;
  ActivationSet set;
  HeadParams head;
  RoaMatrix roa;
  std::vector<ConceptComplexity> complexity;
  GeneralizationBenchmark benchmark;
  BenchmarkEvaluation evaluation;
  PipelineReport report;
};

namespace pipeline_detail {

inline double mean_or_nan(double sum, std::size_t n) {
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

/// Spearman over the entries where both vectors are finite.
inline MaybeCorrelation finite_spearman(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  std::vector<double> a, b;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      a.push_back(x[i]);
      b.push_back(y[i]);
    }
  MaybeCorrelation out;
  try {
    out.value = spearman(a, b);
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace pipeline_detail

/// Fills the report's per-concept, per-tier and mode-shift sections from the
/// module outputs.
inline PipelineReport summarize(const PipelineConfig& cfg, const World& world,
                                const HeadParams& head,
                                const std::vector<ConceptComplexity>& complexity,
                                const GeneralizationBenchmark& bench,
                                const BenchmarkEvaluation& ev) {
  using pipeline_detail::mean_or_nan;
  PipelineReport r;
  r.config = cfg;
  r.epochs_run = head.training_log.size();
  if (!head.training_log.empty()) {
    r.final_loss = head.training_log.back().loss;
    r.final_accuracy = head.training_log.back().accuracy;
  }
  const std::size_t n = world.concepts.size();
  std::vector<double> sim_sum(n, 0.0), rule_sum(n, 0.0);
  std::vector<std::size_t> sim_n(n, 0), rule_n(n, 0);
  for (std::size_t i = 0; i < ev.similarity.size(); ++i) {
    if (ev.similarity[i].excluded) continue;
    const auto q = static_cast<std::size_t>(bench.similarity[i].query);
    sim_sum[q] += ev.similarity[i].rho;
    ++sim_n[q];
  }
  for (std::size_t i = 0; i < ev.rules.size(); ++i) {
    if (ev.rules[i].excluded) continue;
    // The implied target is the first entry of the truth ranking.
    const auto t = static_cast<std::size_t>(bench.rules[i].truth.front());
    rule_sum[t] += ev.rules[i].rho;
    ++rule_n[t];
  }

  std::vector<double> lens, sims, rules, bits;
  for (std::size_t c = 0; c < n; ++c) {
    ConceptRow row;
    row.name = world.concepts[c].name;
    row.tier = world.truth.concepts[c].tier;
    row.defining_attributes = world.truth.concepts[c].defining_attributes;
    row.visual_bits = complexity[c].visual_bits.value_or(visual_complexity(world.concepts[c].images));
    row.subjective_len = complexity[c].subjective_len;
    row.stop_rule = complexity[c].rule;
    row.similarity_rho = mean_or_nan(sim_sum[c], sim_n[c]);
    row.rule_rho = mean_or_nan(rule_sum[c], rule_n[c]);
    row.similarity_items = sim_n[c];
    row.rule_items = rule_n[c];
    lens.push_back(static_cast<double>(row.subjective_len));
    sims.push_back(row.similarity_rho);
    rules.push_back(row.rule_rho);
    bits.push_back(row.visual_bits);
    r.concepts.push_back(std::move(row));
  }

  for (const auto& tier : world.spec.tiers) {
    TierRow t;
    t.level = tier.level;
    double vb = 0, len = 0, s = 0, ru = 0;
    std::size_t count = 0, ns = 0, nr = 0;
    for (const auto& row : r.concepts) {
      if (row.tier != tier.level) continue;
      vb += row.visual_bits;
      len += static_cast<double>(row.subjective_len);
      ++count;
      if (std::isfinite(row.similarity_rho)) {
        s += row.similarity_rho;
        ++ns;
      }
      if (std::isfinite(row.rule_rho)) {
        ru += row.rule_rho;
        ++nr;
      }
    }
    t.visual_bits_mean = mean_or_nan(vb, count);
    t.subjective_len_mean = mean_or_nan(len, count);
    t.similarity_mean_rho = mean_or_nan(s, ns);
    t.rule_mean_rho = mean_or_nan(ru, nr);
    r.tiers.push_back(t);
  }

  try {
    r.two_lines = two_lines(bits, lens, cfg.alpha);
  } catch (const Error& e) {
    r.two_lines_error = e.what();
  }
  r.similarity_mean_rho = ev.similarity_mean_rho;
  r.rule_mean_rho = ev.rule_mean_rho;
  r.similarity_items = ev.similarity.size();
  r.rule_items = ev.rules.size();
  r.similarity_excluded = ev.similarity_excluded;
  r.rule_excluded = ev.rule_excluded;
  r.similarity_vs_len = pipeline_detail::finite_spearman(sims, lens);
  r.rule_vs_len = pipeline_detail::finite_spearman(rules, lens);
  return r;
}

/// Runs every stage on an already generated world.
inline PipelineRun run_pipeline(const PipelineConfig& cfg, World world) {
  cfg.train.validate();
  cfg.mdl.validate();
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
  PipelineRun run;
  run.world = std::move(world);
  run.set = extract_activation_set(run.world.concepts, cfg.jobs);
  run.head = train(run.set, cfg.train);
  run.roa = compute_roa(run.set, cfg.prior);
  run.complexity = subjective_complexity(run.head, run.set, run.roa, cfg.mdl);
  for (std::size_t c = 0; c < run.complexity.size(); ++c)
    run.complexity[c].visual_bits = visual_complexity(run.world.concepts[c].images);
  run.benchmark = make_benchmark(run.world.truth, run.world.spec.seed, cfg.benchmark);
  run.evaluation = eval_benchmark(concept_embedding(run.set), run.benchmark);
  run.report = summarize(cfg, run.world, run.head, run.complexity, run.benchmark, run.evaluation);
  return run;
}

inline PipelineRun run_pipeline(const PipelineConfig& cfg) {
  return run_pipeline(cfg, generate(cfg.world));
}

// ---- serialization ------------------------------------------------------------

/// Finite numbers stay numbers; infinities and NaN become "inf", "-inf" and
/// "nan" so the document remains valid JSON.
inline nlohmann::json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline nlohmann::json regression_to_json(const RegressionReport& r) {
  return {{"slope", json_number(r.slope)},     {"intercept", json_number(r.intercept)},
          {"slope_se", json_number(r.slope_se)}, {"z", json_number(r.t)},
          {"p", json_number(r.p)},             {"r2", json_number(r.r2)},
          {"n", r.n}};
}

inline nlohmann::json two_lines_to_json(const TwoLinesReport& t) {
  nlohmann::json scan = nlohmann::json::array();
  for (const auto& c : t.scan)
    scan.push_back({{"breakpoint", json_number(c.breakpoint)},
                    {"n_left", c.n_left},
                    {"n_right", c.n_right},
                    {"slope_left", json_number(c.slope_left)},
                    {"slope_right", json_number(c.slope_right)},
                    {"score", json_number(c.score)}});
  return {{"breakpoint", json_number(t.breakpoint)},
          {"alpha", t.alpha},
          {"inverted_u", t.inverted_u},
          {"left", regression_to_json(t.left)},
          {"right", regression_to_json(t.right)},
          {"scan", scan}};
}

inline nlohmann::json correlation_to_json(const MaybeCorrelation& c) {
  if (!c.value) return {{"error", c.error}};
  return {{"rho", json_number(c.value->rho)}, {"p", json_number(c.value->p)}, {"n", c.value->n}};
}

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json prior = nlohmann::json::array();
  for (double p : c.prior) prior.push_back(json_number(p));
  return {
      {"world", world_spec_to_json(c.world)},
      {"train",
       {{"epochs", c.train.epochs},
        {"learning_rate", c.train.learning_rate},
        {"l2_penalty", c.train.l2_penalty},
        {"seed", c.train.seed},
        {"convergence_tolerance", c.train.convergence_tolerance}}},
      {"mdl",
       {{"gain_threshold", c.mdl.gain_threshold ? nlohmann::json(*c.mdl.gain_threshold)
                                                : nlohmann::json(nullptr)},
        {"patience", c.mdl.patience},
        {"error_cap",
         c.mdl.error_cap ? nlohmann::json(*c.mdl.error_cap) : nlohmann::json(nullptr)}}},
      {"benchmark",
       {{"candidates", c.benchmark.candidates},
        {"similarity_per_concept", c.benchmark.similarity_per_concept},
        {"rules_per_concept", c.benchmark.rules_per_concept}}},
      {"alpha", c.alpha},
      {"prior", prior.empty() ? nlohmann::json("uniform") : prior}};
}

inline nlohmann::json report_to_json(const PipelineReport& r) {
  nlohmann::json concepts = nlohmann::json::array();
  for (const auto& c : r.concepts)
    concepts.push_back({{"name", c.name},
                        {"tier", c.tier},
                        {"defining_attributes", c.defining_attributes},
                        {"visual_bits", json_number(c.visual_bits)},
                        {"subjective_len", c.subjective_len},
                        {"stop_rule", stop_rule_name(c.stop_rule)},
                        {"similarity_rho", json_number(c.similarity_rho)},
                        {"rule_rho", json_number(c.rule_rho)},
                        {"similarity_items", c.similarity_items},
                        {"rule_items", c.rule_items}});
  nlohmann::json tiers = nlohmann::json::array();
  for (const auto& t : r.tiers)
    tiers.push_back({{"level", t.level},
                     {"visual_bits_mean", json_number(t.visual_bits_mean)},
                     {"subjective_len_mean", json_number(t.subjective_len_mean)},
                     {"similarity_mean_rho", json_number(t.similarity_mean_rho)},
                     {"rule_mean_rho", json_number(t.rule_mean_rho)}});
  nlohmann::json j;
  j["tool"] = "bgc";
  j["version"] = kToolVersion;
  j["seed"] = r.config.world.seed;
  j["config"] = config_to_json(r.config);
  j["training"] = {{"epochs_run", r.epochs_run},
                   {"final_loss", json_number(r.final_loss)},
                   {"final_accuracy", json_number(r.final_accuracy)}};
  j["concepts"] = concepts;
  j["tiers"] = tiers;
  j["two_lines"] = r.two_lines ? two_lines_to_json(*r.two_lines)
                               : nlohmann::json{{"error", r.two_lines_error}};
  j["generalization"] = {{"similarity_mean_rho", json_number(r.similarity_mean_rho)},
                         {"rule_mean_rho", json_number(r.rule_mean_rho)},
                         {"similarity_items", r.similarity_items},
                         {"rule_items", r.rule_items},
                         {"similarity_excluded", r.similarity_excluded},
                         {"rule_excluded", r.rule_excluded}};
  j["mode_shift"] = {{"similarity_vs_len", correlation_to_json(r.similarity_vs_len)},
                     {"rule_vs_len", correlation_to_json(r.rule_vs_len)}};
  return j;
}

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

/// One row per concept: the data behind the complexity scatter plot.
inline void write_concept_csv(const PipelineReport& r, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  os << "concept,tier,defining_attributes,visual_bits,subjective_len,stop_rule,"
        "similarity_rho,rule_rho\n";
  for (const auto& c : r.concepts)
    os << c.name << ',' << c.tier << ',' << c.defining_attributes << ','
       << csv_number(c.visual_bits) << ',' << c.subjective_len << ','
       << stop_rule_name(c.stop_rule) << ',' << csv_number(c.similarity_rho) << ','
       << csv_number(c.rule_rho) << '\n';
}

/// Accuracy curve of every concept along its ROA ranking.
inline void write_accuracy_csv(const std::vector<ConceptComplexity>& cx,
                               const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  os << "concept,k,attribute,accuracy,gain\n";
  for (const auto& c : cx)
    for (std::size_t k = 0; k < c.accuracy_curve.size(); ++k)
      os << c.name << ',' << k + 1 << ',' << c.ranking[k] << ','
         << csv_number(c.accuracy_curve[k]) << ',' << csv_number(c.gain_curve[k]) << '\n';
}

// ---- epoch sweep --------------------------------------------------------------

struct EpochPoint {
  int epochs = 0;
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  double mean_subjective_len = 0.0;
  double similarity_mean_rho = 0.0;
  double rule_mean_rho = 0.0;
  MaybeCorrelation similarity_vs_len;
  MaybeCorrelation rule_vs_len;
};

struct EpochSweep {
  std::vector<EpochPoint> points;
  // OLS of each mean rho against epochs with the first point dropped.
  std::optional<RegressionReport> similarity_fit;
  std::optional<RegressionReport> rule_fit;
  std::string fit_error;
};

/// Retrains the head from scratch for every epoch budget and re-scores the
/// world. The benchmark and the embedding depend only on the features, so the
/// generalization means can only move through numerical noise; subjective
/// lengths and the mode-shift correlations follow the head.
inline EpochSweep epoch_sweep(const PipelineConfig& cfg, const std::vector<int>& epochs) {
  if (epochs.size() < 4)
    throw InputError("epoch sweep needs at least four epoch budgets (three after dropping the first)");
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (epochs[i] < 1) throw InputError("epoch budgets must be >= 1");
    if (i > 0 && epochs[i] <= epochs[i - 1])
      throw InputError("epoch budgets must be strictly increasing");
  }
  const World world = generate(cfg.world);
  const ActivationSet set = extract_activation_set(world.concepts, cfg.jobs);
  const RoaMatrix roa = compute_roa(set, cfg.prior);
  const auto bench = make_benchmark(world.truth, world.spec.seed, cfg.benchmark);
  const auto ev = eval_benchmark(concept_embedding(set), bench);
  std::vector<std::optional<double>> bits;
  for (const auto& c : world.concepts) bits.push_back(visual_complexity(c.images));

  EpochSweep sweep;
  for (int e : epochs) {
    TrainConfig tc = cfg.train;
    tc.epochs = e;
    const auto head = train(set, tc);
    auto cx = subjective_complexity(head, set, roa, cfg.mdl);
    for (std::size_t c = 0; c < cx.size(); ++c) cx[c].visual_bits = bits[c];
    const auto rep = summarize(cfg, world, head, cx, bench, ev);
    EpochPoint p;
    p.epochs = e;
    p.epochs_run = head.training_log.size();
    p.final_loss = rep.final_loss;
    double len = 0;
    for (const auto& row : rep.concepts) len += static_cast<double>(row.subjective_len);
    p.mean_subjective_len = len / static_cast<double>(rep.concepts.size());
    p.similarity_mean_rho = rep.similarity_mean_rho;
    p.rule_mean_rho = rep.rule_mean_rho;
    p.similarity_vs_len = rep.similarity_vs_len;
    p.rule_vs_len = rep.rule_vs_len;
    sweep.points.push_back(std::move(p));
  }
  std::vector<double> x, ys, yr;
  for (std::size_t i = 1; i < sweep.points.size(); ++i) {
    x.push_back(sweep.points[i].epochs);
    ys.push_back(sweep.points[i].similarity_mean_rho);
    yr.push_back(sweep.points[i].rule_mean_rho);
  }
  try {
    sweep.similarity_fit = ols(x, ys);
    sweep.rule_fit = ols(x, yr);
  } catch (const Error& e) {
    sweep.fit_error = e.what();
  }
  return sweep;
}

inline nlohmann::json epoch_sweep_to_json(const EpochSweep& s, const PipelineConfig& cfg) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : s.points)
    pts.push_back({{"epochs", p.epochs},
                   {"epochs_run", p.epochs_run},
                   {"final_loss", json_number(p.final_loss)},
                   {"mean_subjective_len", json_number(p.mean_subjective_len)},
                   {"similarity_mean_rho", json_number(p.similarity_mean_rho)},
                   {"rule_mean_rho", json_number(p.rule_mean_rho)},
                   {"similarity_vs_len", correlation_to_json(p.similarity_vs_len)},
                   {"rule_vs_len", correlation_to_json(p.rule_vs_len)}});
  nlohmann::json j;
  j["tool"] = "bgc";
  j["version"] = kToolVersion;
  j["seed"] = cfg.world.seed;
  j["config"] = config_to_json(cfg);
  j["points"] = pts;
  if (s.similarity_fit) {
    j["similarity_fit"] = regression_to_json(*s.similarity_fit);
    j["rule_fit"] = regression_to_json(*s.rule_fit);
  } else {
    j["fit_error"] = s.fit_error;
  }
  j["dropped_first_point"] = true;
  return j;
}

inline void write_epoch_csv(const EpochSweep& s, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  os << "epochs,epochs_run,final_loss,mean_subjective_len,similarity_mean_rho,rule_mean_rho\n";
  for (const auto& p : s.points)
    os << p.epochs << ',' << p.epochs_run << ',' << csv_number(p.final_loss) << ','
       << csv_number(p.mean_subjective_len) << ',' << csv_number(p.similarity_mean_rho) << ','
       << csv_number(p.rule_mean_rho) << '\n';
}

}  // namespace bgc
