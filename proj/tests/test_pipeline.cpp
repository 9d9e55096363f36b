#include <catch_amalgamated.hpp>

#include "bgc/pipeline.hpp"
#include "bgc/svg.hpp"
#include "test_support.hpp"

using namespace bgc;
using Catch::Approx;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.world.seed = 3;
  cfg.world.tiers.clear();
  for (int level = 1; level <= 5; ++level) cfg.world.tiers.push_back({level, 3, 12, 16, 16});
  cfg.train.epochs = 60;
  return cfg;
}

}  // namespace

TEST_CASE("non-finite numbers serialize as strings") {
  CHECK(json_number(1.5) == nlohmann::json(1.5));
  CHECK(json_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(json_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(json_number(std::nan("")) == "nan");
  CHECK(csv_number(std::nan("")) == "nan");
  CHECK(csv_number(0.1) == "0.10000000000000001");
  RegressionReport r;
  r.t = std::numeric_limits<double>::infinity();
  CHECK(regression_to_json(r).at("z") == "inf");
}

TEST_CASE("feature extraction does not depend on the worker count") {
  const auto world = generate(small_config().world);
  const auto one = extract_activation_set(world.concepts, 1);
  const auto many = extract_activation_set(world.concepts, 4);
  CHECK(one.labels == many.labels);
  CHECK(one.activations.data() == many.activations.data());
  CHECK(one.concept_names == many.concept_names);
}

TEST_CASE("summary averages item scores per concept") {
  // Five concepts in two tiers; items chosen by hand.
  World w;
  w.spec.tiers = {{1, 3, 1, 8, 8}, {2, 2, 1, 8, 8}};
  for (int c = 0; c < 5; ++c) {
    w.concepts.push_back({"k" + std::to_string(c), {GrayImage(8, 8, 0.1 * c)}});
    w.truth.concepts.push_back({"k" + std::to_string(c), c < 3 ? 1 : 2, make_params({c}, 1), 1});
  }
  HeadParams head = zero_head(5, 2);
  head.training_log.push_back({1, 0.7, 0.4});
  std::vector<ConceptComplexity> cx(5);
  for (std::size_t c = 0; c < 5; ++c) {
    cx[c].subjective_len = c + 1;
    cx[c].visual_bits = static_cast<double>(c);
  }
  GeneralizationBenchmark b;
  b.similarity = {{0, {1, 2}, {1, 2}, ""}, {0, {1, 2}, {2, 1}, ""}, {3, {1, 2}, {1, 2}, ""}};
  b.rules = {{0, 1, 2, {3, 4}, {3, 4}, ""}, {0, 1, 2, {3, 4}, {4, 3}, ""},
             {0, 1, 3, {4, 2}, {4, 2}, ""}};
  BenchmarkEvaluation ev;
  ev.similarity = {{0, false, "", 1.0, 0, {}}, {1, false, "", -1.0, 0, {}}, {2, true, "x", 0, 1, {}}};
  ev.rules = {{0, false, "", 0.5, 0, {}}, {1, false, "", 1.0, 0, {}}, {2, false, "", -0.5, 0, {}}};
  ev.similarity_mean_rho = 0.0;
  ev.rule_mean_rho = 1.0 / 3.0;
  const auto r = summarize(PipelineConfig{}, w, head, cx, b, ev);
  REQUIRE(r.concepts.size() == 5);
  // Similarity score: mean over items where the concept is the query.
  CHECK(r.concepts[0].similarity_rho == Approx(0.0));
  CHECK(r.concepts[0].similarity_items == 2);
  CHECK(std::isnan(r.concepts[3].similarity_rho));  // its only item was excluded
  // Rule score: mean over items whose implied target is the concept.
  CHECK(r.concepts[3].rule_rho == Approx(0.5));
  CHECK(r.concepts[4].rule_rho == Approx(0.25));
  CHECK(r.concepts[4].rule_items == 2);
  CHECK(std::isnan(r.concepts[1].rule_rho));
  REQUIRE(r.tiers.size() == 2);
  CHECK(r.tiers[0].subjective_len_mean == Approx(2.0));
  CHECK(r.tiers[1].visual_bits_mean == Approx(3.5));
  CHECK(r.final_accuracy == Approx(0.4));
  CHECK(!r.two_lines);  // five points cannot hold three on each side
  CHECK(!r.two_lines_error.empty());
}

TEST_CASE("pipeline report is deterministic and complete") {
  const auto cfg = small_config();
  const auto a = run_pipeline(cfg);
  const auto b = run_pipeline(cfg);
  const auto ja = report_to_json(a.report), jb = report_to_json(b.report);
  CHECK(ja.dump() == jb.dump());
  CHECK(ja.at("tool") == "bgc");
  CHECK(ja.at("seed") == 3);
  CHECK(ja.at("concepts").size() == 15);
  CHECK(ja.at("tiers").size() == 5);
  CHECK(ja.at("config").at("train").at("epochs") == 60);
  CHECK(!ja.at("config").contains("jobs"));
  CHECK(ja.contains("mode_shift"));
  for (const auto& c : a.report.concepts) {
    CHECK(c.subjective_len >= 1);
    CHECK(c.subjective_len <= kFeatureCount);
  }
  auto more_jobs = cfg;
  more_jobs.jobs = 3;
  CHECK(report_to_json(run_pipeline(more_jobs).report).dump() == ja.dump());
}

TEST_CASE("pipeline validates its configuration") {
  auto cfg = small_config();
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(run_pipeline(cfg), InputError);
  cfg = small_config();
  cfg.train.epochs = 0;
  CHECK_THROWS_AS(run_pipeline(cfg), InputError);
  cfg = small_config();
  cfg.prior = {1.0};
  CHECK_THROWS_AS(run_pipeline(cfg), ShapeError);
}

TEST_CASE("epoch sweep checks its budgets and fits after the first point") {
  const auto cfg = small_config();
  CHECK_THROWS_AS(epoch_sweep(cfg, {10, 20, 30}), InputError);
  CHECK_THROWS_AS(epoch_sweep(cfg, {10, 20, 20, 40}), InputError);
  const auto s = epoch_sweep(cfg, {5, 10, 20, 40});
  REQUIRE(s.points.size() == 4);
  REQUIRE(s.similarity_fit);
  CHECK(s.similarity_fit->n == 3);
  for (std::size_t i = 1; i < s.points.size(); ++i)
    CHECK(s.points[i].similarity_mean_rho == s.points[0].similarity_mean_rho);
  const auto j = epoch_sweep_to_json(s, cfg);
  CHECK(j.at("points").size() == 4);
  CHECK(j.at("dropped_first_point") == true);
}

TEST_CASE("svg plots are deterministic and escape labels") {
  SvgPlot p("a < b", "x & y", "z");
  p.add_points({0, 1, 2}, {1, 0, 1});
  p.add_segment(0, 0, 2, 2);
  const auto svg = p.render();
  CHECK(svg == p.render());
  CHECK(svg.find("a &lt; b") != std::string::npos);
  CHECK(svg.find("x &amp; y") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK_THROWS_AS(p.add_points({1}, {1, 2}), ShapeError);
}
