#include <catch_amalgamated.hpp>

#include <fstream>

#include "bgc/roa.hpp"
#include "bgc/rng.hpp"
#include "test_support.hpp"

using namespace bgc;
using Catch::Approx;

namespace {

ActivationSet random_set(std::uint64_t seed, std::size_t concepts, std::size_t d,
                         std::size_t per_concept) {
  SplitMix64 rng(seed);
  std::vector<std::vector<std::vector<double>>> rows(concepts);
  for (auto& c : rows)
    for (std::size_t n = 0; n < per_concept; ++n) {
      std::vector<double> r(d);
      for (double& v : r) v = rng.uniform(-0.2, 1.0);
      c.push_back(r);
    }
  return bgc::testing::make_set(rows);
}

// Direct evaluation: centroid, clamp, normalize, then the log ratio against
// the prior-weighted mixture of the remaining concepts.
double oracle_score(const ActivationSet& set, const std::vector<double>& prior, std::size_t i,
                    std::size_t c) {
  const std::size_t C = set.concept_count(), d = set.attribute_count();
  std::vector<std::vector<double>> cond(C, std::vector<double>(d, 0.0));
  for (std::size_t k = 0; k < C; ++k) {
    const auto idx = set.samples_of(static_cast<int>(k));
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0;
      for (auto n : idx) s += set.activations(n, j);
      cond[k][j] = std::max(0.0, s / static_cast<double>(idx.size()));
    }
    double tot = 0;
    for (double v : cond[k]) tot += v;
    for (double& v : cond[k]) v /= tot;
  }
  double others = 0, mix = 0;
  for (std::size_t k = 0; k < C; ++k)
    if (k != c) others += prior[k];
  for (std::size_t k = 0; k < C; ++k)
    if (k != c) mix += prior[k] / others * cond[k][i];
  const double num = cond[c][i] > 0 ? cond[c][i] : kRoaEpsilon;
  return std::log(num / std::max(kRoaEpsilon, mix));
}

}  // namespace

TEST_CASE("scores match a direct evaluation") {
  const auto set = random_set(11, 4, 6, 5);
  for (const std::vector<double>& prior :
       {uniform_prior(4), std::vector<double>{0.1, 0.2, 0.3, 0.4}}) {
    const auto roa = compute_roa(set, prior);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t c = 0; c < 4; ++c)
        CHECK(roa.scores(i, c) == Approx(oracle_score(set, prior, i, c)).margin(1e-12));
  }
}

TEST_CASE("conditionals are normalized distributions") {
  const auto set = random_set(3, 3, 5, 4);
  const auto roa = compute_roa(set);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0;
    for (std::size_t i = 0; i < 5; ++i) s += roa.concept_conditional(i, c);
    CHECK(s == Approx(1.0));
  }
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0;
    for (std::size_t c = 0; c < 3; ++c) s += roa.attribute_conditional(i, c);
    CHECK(s == Approx(1.0));
  }
}

TEST_CASE("scores are invariant to rescaling the activations") {
  const auto set = random_set(21, 5, 8, 6);
  const auto base = compute_roa(set);
  for (double alpha : {0.5, 3.0, 10.0}) {
    auto scaled = set;
    for (double& v : scaled.activations.data()) v *= alpha;
    const auto roa = compute_roa(scaled);
    double drift = 0;
    for (std::size_t k = 0; k < base.scores.data().size(); ++k)
      drift = std::max(drift, std::abs(roa.scores.data()[k] - base.scores.data()[k]));
    CHECK(drift <= 1e-12);
  }
}

TEST_CASE("identical concepts make every score zero") {
  const std::vector<std::vector<double>> rows{{0.2, 0.5, 0.3}, {0.4, 0.1, 0.9}};
  const auto set = bgc::testing::make_set({rows, rows, rows});
  const auto roa = compute_roa(set);
  for (double v : roa.scores.data()) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("an attribute no concept expresses has uniform posterior") {
  const auto set = bgc::testing::make_set({{{1, 0}}, {{1, 0}}, {{0.5, 0}}});
  const auto roa = compute_roa(set);
  const auto ac = attribute_conditional(concept_conditional(set), uniform_prior(3));
  CHECK(ac.uniform_rows[1]);
  CHECK(!ac.uniform_rows[0]);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(ac.table(1, c) == Approx(1.0 / 3));
    CHECK(roa.scores(1, c) == Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("ranking orders by descending score with ascending-index ties") {
  const auto set = bgc::testing::make_set({{{1, 1, 0, 3}}, {{0, 0, 1, 3}}});
  const auto roa = compute_roa(set);
  const auto r0 = rank_attributes(roa, 0);
  CHECK(r0 == std::vector<std::size_t>{0, 1, 3, 2});
  CHECK_THROWS_AS(rank_attributes(roa, 2), ShapeError);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(compute_roa(bgc::testing::make_set({{{1, 0}}})), ContextError);
  CHECK_THROWS_AS(compute_roa(bgc::testing::make_set({{{1, 0}}, {{-1, -2}}})), DegenerateConcept);
  const auto set = bgc::testing::make_set({{{1, 0}}, {{0, 1}}});
  CHECK_THROWS_AS(compute_roa(set, {0.5}), ShapeError);
  CHECK_THROWS_AS(compute_roa(set, {0.7, 0.7}), InputError);
  CHECK_THROWS_AS(compute_roa(set, {}, 0.0), InputError);
}

TEST_CASE("priors are read from CSV by concept name") {
  const auto dir = bgc::testing::scratch_dir("roa_prior");
  {
    std::ofstream os(dir / "prior.csv");
    os << "concept,weight\nb,3\na,1\n";
  }
  const auto prior = read_prior_csv(dir / "prior.csv", {"a", "b"});
  REQUIRE(prior.size() == 2);
  CHECK(prior[0] == Approx(0.25));
  CHECK(prior[1] == Approx(0.75));
  {
    std::ofstream os(dir / "bad.csv");
    os << "a,1\nzzz,2\n";
  }
  CHECK_THROWS_WITH(read_prior_csv(dir / "bad.csv", {"a", "b"}),
                    Catch::Matchers::ContainsSubstring("bad.csv:2"));
}

TEST_CASE("score table exports as CSV and tensor") {
  const auto dir = bgc::testing::scratch_dir("roa_export");
  const auto set = bgc::testing::make_set({{{1, 0.5}}, {{0.2, 1}}});
  const auto roa = compute_roa(set);
  write_roa_csv(roa, set.concept_names, dir / "roa.csv");
  std::ifstream is(dir / "roa.csv");
  std::string first;
  std::getline(is, first);
  CHECK(first.find("c0") != std::string::npos);
  const auto t = roa_tensor(roa);
  CHECK(t.shape() == std::vector<std::uint64_t>{2, 2});
  CHECK(t.at(1) == roa.scores(0, 1));
}
