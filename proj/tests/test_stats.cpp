#include <catch_amalgamated.hpp>

#include <fstream>

#include "bgc/rng.hpp"
#include "bgc/stats.hpp"
#include "oracles.hpp"

using namespace bgc;
using Catch::Approx;
using namespace bgc::testing;

TEST_CASE("average ranks share tied positions") {
  const std::vector<double> v{3, 1, 3, 2, 3};
  CHECK(average_ranks(v) == std::vector<double>{4, 1, 4, 2, 4});
}

TEST_CASE("spearman matches a counting-rank oracle on tied samples") {
  SplitMix64 rng(99);
  int checked = 0;
  for (int instance = 0; instance < 1000; ++instance) {
    const std::size_t n = 3 + rng.below(6);  // 3..8
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.below(4));  // few levels force ties
      y[i] = static_cast<double>(rng.below(5));
    }
    auto constant = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double e) { return e == v[0]; });
    };
    if (constant(x) || constant(y)) {
      CHECK_THROWS_AS(spearman(x, y), UndefinedCorrelation);
      continue;
    }
    const auto got = spearman(x, y);
    const double rho = oracle_pearson(oracle_ranks(x), oracle_ranks(y));
    INFO("instance " << instance);
    CHECK(std::abs(got.rho - rho) <= 1e-12);
    if (std::abs(rho) < 1 - 1e-12) {
      const double df = static_cast<double>(n) - 2;
      const double t = rho * std::sqrt(df / (1 - rho * rho));
      CHECK(got.p == Approx(oracle_t_p(t, df)).margin(1e-10));
    }
    ++checked;
  }
  CHECK(checked > 900);
}

TEST_CASE("spearman degenerate cases") {
  const auto perfect = spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 40});
  CHECK(perfect.rho == 1.0);
  CHECK(perfect.p == 0.0);
  const auto reversed = spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1});
  CHECK(reversed.rho == -1.0);
  CHECK(reversed.p == 0.0);
  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), InsufficientDataError);
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1}), ShapeError);
}

TEST_CASE("ols matches the normal-equation oracle") {
  SplitMix64 rng(7);
  for (int instance = 0; instance < 100; ++instance) {
    const std::size_t n = 3 + rng.below(20);
    std::vector<double> x(n), y(n);
    const double a = rng.uniform(-3, 3), b = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-5, 5);
      y[i] = a + b * x[i] + rng.uniform(-1, 1);
    }
    const auto got = ols(x, y);
    const auto want = oracle_ols(x, y);
    INFO("instance " << instance);
    CHECK(got.slope == Approx(want.slope).margin(1e-9));
    CHECK(got.intercept == Approx(want.intercept).margin(1e-9));
    CHECK(got.slope_se == Approx(want.se).margin(1e-9));
    CHECK(got.t == Approx(want.t).epsilon(1e-9).margin(1e-9));
    CHECK(got.p == Approx(want.p).margin(1e-9));
    CHECK(got.r2 == Approx(want.r2).margin(1e-9));
    CHECK(got.n == n);
  }
}

TEST_CASE("ols degenerate cases") {
  const auto flat = ols(std::vector<double>{1, 2, 3, 4}, std::vector<double>{5, 5, 5, 5});
  CHECK(flat.slope == 0.0);
  CHECK(flat.t == 0.0);
  CHECK(flat.p == 1.0);
  const auto line = ols(std::vector<double>{0, 1, 2, 3}, std::vector<double>{1, 3, 5, 7});
  CHECK(line.slope == Approx(2.0));
  CHECK(std::isinf(line.t));
  CHECK(line.t > 0);
  CHECK(line.p == 0.0);
  CHECK(line.r2 == Approx(1.0));
  const auto down = ols(std::vector<double>{0, 1, 2}, std::vector<double>{3, 2, 1});
  CHECK(down.t == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(ols(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), SingularError);
  CHECK_THROWS_AS(ols(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InsufficientDataError);
}

TEST_CASE("two lines on the tent data") {
  std::ifstream is(std::string(BGC_DATA_DIR) + "/tent.csv");
  REQUIRE(is);
  std::string line;
  std::getline(is, line);
  std::vector<double> x, y;
  double a, b;
  char comma;
  while (is >> a >> comma >> b) {
    x.push_back(a);
    y.push_back(b);
  }
  REQUIRE(x.size() == 11);
  const auto t = two_lines(x, y);
  CHECK(t.breakpoint == 5.0);
  CHECK(t.left.slope == Approx(1.0));
  CHECK(t.right.slope == Approx(-1.0));
  CHECK(t.left.p == 0.0);
  CHECK(t.right.p == 0.0);
  CHECK(t.inverted_u);
  // Breakpoints 3..7 have three points strictly on each side.
  REQUIRE(t.scan.size() == 5);
  CHECK(t.scan.front().breakpoint == 3.0);
  CHECK(t.scan.back().breakpoint == 7.0);
  CHECK(t.scan[2].n_left == 6);
  CHECK(t.scan[2].n_right == 6);
}

TEST_CASE("two lines picks the best split, smallest on ties") {
  SplitMix64 rng(5);
  for (int instance = 0; instance < 50; ++instance) {
    const std::size_t n = 7 + rng.below(10);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.below(8));
      y[i] = rng.uniform(0, 1);
    }
    // Oracle: enumerate candidates independently.
    double best = -1, best_x = 0;
    bool any = false;
    for (double xc = 0; xc < 8; ++xc) {
      std::vector<double> lx, ly, rx, ry;
      int below = 0, above = 0;
      bool present = false;
      for (std::size_t i = 0; i < n; ++i) {
        present = present || x[i] == xc;
        if (x[i] < xc) ++below;
        if (x[i] > xc) ++above;
        if (x[i] <= xc) lx.push_back(x[i]), ly.push_back(y[i]);
        if (x[i] >= xc) rx.push_back(x[i]), ry.push_back(y[i]);
      }
      if (!present || below < 3 || above < 3) continue;
      const double s = oracle_ols(lx, ly).r2 + oracle_ols(rx, ry).r2;
      if (!any || s > best + 1e-12) {
        best = s;
        best_x = xc;
        any = true;
      }
    }
    INFO("instance " << instance);
    if (!any) {
      CHECK_THROWS_AS(two_lines(x, y), InsufficientDataError);
      continue;
    }
    const auto t = two_lines(x, y);
    CHECK(t.breakpoint == best_x);
    CHECK(t.left.r2 + t.right.r2 == Approx(best).margin(1e-9));
  }
}

TEST_CASE("two lines verdict needs significant slopes of opposite signs") {
  const std::vector<double> x{0, 1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<double> rising{0, 1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(!two_lines(x, rising).inverted_u);
  const std::vector<double> valley{4, 3, 2, 1, 0, 1, 2, 3, 4};
  CHECK(!two_lines(x, valley).inverted_u);
  const std::vector<double> tent{0, 1, 2, 3, 4, 3, 2, 1, 0};
  CHECK(two_lines(x, tent).inverted_u);
  CHECK_THROWS_AS(two_lines(x, tent, 0.0), InputError);
  auto bad = tent;
  bad[2] = std::nan("");
  CHECK_THROWS_AS(two_lines(x, bad), InputError);
}

TEST_CASE("mean confidence interval uses Student t quantiles") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto ci = mean_ci(v);
  CHECK(ci.mean == Approx(3.0));
  // t_{0.975, 4} = 2.7764451, se = sqrt(2.5 / 5)
  const double half = 2.7764451051977987 * std::sqrt(0.5);
  CHECK(ci.lower == Approx(3.0 - half).epsilon(1e-9));
  CHECK(ci.upper == Approx(3.0 + half).epsilon(1e-9));
  CHECK_THROWS_AS(mean_ci(std::vector<double>{}), InsufficientDataError);
}
