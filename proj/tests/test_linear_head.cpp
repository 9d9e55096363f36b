#include <catch_amalgamated.hpp>

#include <array>

#include "bgc/linear_head.hpp"
#include "bgc/rng.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace bgc;
using Catch::Approx;
using bgc::testing::oracle_loss;

namespace {

ActivationSet random_set(SplitMix64& rng, std::size_t classes, std::size_t d, std::size_t n) {
  std::vector<std::vector<std::vector<double>>> rows(classes);
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> r(d);
      for (double& v : r) v = rng.uniform(-1.0, 1.0);
      rows[c].push_back(r);
    }
  return bgc::testing::make_set(rows);
}

ActivationSet separable_set() {
  return bgc::testing::make_set({{{1, 0, 0.1}, {0.9, 0.1, 0.0}, {1.1, 0.0, 0.2}},
                                 {{0, 1, 0.1}, {0.1, 0.9, 0.0}, {0.0, 1.2, 0.1}},
                                 {{0, 0, 1}, {0.1, 0.1, 0.9}, {0.0, 0.2, 1.1}}});
}

}  // namespace

TEST_CASE("analytic gradient agrees with central differences") {
  SplitMix64 rng(2024);
  const double h = 1e-4;
  for (int instance = 0; instance < 20; ++instance) {
    const std::size_t classes = 2 + rng.below(4), d = 1 + rng.below(6);
    const auto set = random_set(rng, classes, d, 2 + rng.below(4));
    const double l2 = rng.uniform(0.0, 0.1);
    HeadParams head = zero_head(classes, d);
    for (double& w : head.weights.data()) w = rng.uniform(-1.0, 1.0);
    for (double& v : head.bias) v = rng.uniform(-1.0, 1.0);

    const auto g = gradient(head, set, l2);
    std::vector<double> analytic(g.weights.data()), numeric;
    analytic.insert(analytic.end(), g.bias.begin(), g.bias.end());
    for (std::size_t k = 0; k < head.weights.data().size(); ++k) {
      Matrix plus = head.weights, minus = head.weights;
      plus.data()[k] += h;
      minus.data()[k] -= h;
      numeric.push_back((oracle_loss(plus, head.bias, set, l2) -
                         oracle_loss(minus, head.bias, set, l2)) / (2 * h));
    }
    for (std::size_t c = 0; c < classes; ++c) {
      auto plus = head.bias, minus = head.bias;
      plus[c] += h;
      minus[c] -= h;
      numeric.push_back((oracle_loss(head.weights, plus, set, l2) -
                         oracle_loss(head.weights, minus, set, l2)) / (2 * h));
    }
    double diff = 0, norm = 0;
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
      norm += analytic[k] * analytic[k] + numeric[k] * numeric[k];
    }
    const double rel = std::sqrt(diff) / std::max(1e-12, std::sqrt(norm));
    INFO("instance " << instance);
    CHECK(rel < 1e-5);
    CHECK(loss(head, set, l2) == Approx(oracle_loss(head.weights, head.bias, set, l2)));
  }
}

TEST_CASE("zero-initialized head starts at log C") {
  const auto set = separable_set();
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto head = train(set, cfg);
  REQUIRE(head.training_log.size() == 1);
  CHECK(head.training_log[0].loss == Approx(std::log(3.0)));
  // All logits tie at zero, so every sample is assigned class 0.
  CHECK(head.training_log[0].accuracy == Approx(1.0 / 3.0));
}

TEST_CASE("training fits a separable set and decreases the loss") {
  const auto set = separable_set();
  const auto head = train(set, TrainConfig{});
  CHECK(head.training_log.back().accuracy == 1.0);
  for (std::size_t e = 1; e < head.training_log.size(); ++e)
    CHECK(head.training_log[e].loss <= head.training_log[e - 1].loss + 1e-12);
  for (std::size_t s = 0; s < set.sample_count(); ++s) {
    const auto p = predict(head, set.activations.row(s));
    CHECK(argmax(p) == static_cast<std::size_t>(set.labels[s]));
    double sum = 0;
    for (double v : p) sum += v;
    CHECK(sum == Approx(1.0));
  }
}

TEST_CASE("training is deterministic") {
  const auto set = separable_set();
  const auto a = train(set, TrainConfig{});
  const auto b = train(set, TrainConfig{});
  CHECK(a.weights.data() == b.weights.data());
  CHECK(a.bias == b.bias);
}

TEST_CASE("a zero learning rate freezes the head at initialization") {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 5;
  const auto head = train(separable_set(), cfg);
  for (double w : head.weights.data()) CHECK(w == 0.0);
}

TEST_CASE("masking zeroes attributes outside the kept set") {
  HeadParams head = zero_head(2, 3);
  head.weights(0, 0) = 1.0;
  head.weights(1, 2) = 1.0;
  const std::vector<double> z{2.0, 5.0, 3.0};
  const std::vector<std::size_t> keep0{0};
  const std::vector<std::size_t> keep_none{};
  CHECK(apply_mask(z, keep0) == std::vector<double>{2.0, 0.0, 0.0});
  CHECK(masked_logits(head, z, keep0) == std::vector<double>{2.0, 0.0});
  const auto tie = masked_logits(head, z, keep_none);
  CHECK(argmax(tie) == 0);
  const std::vector<std::size_t> bad{7};
  CHECK_THROWS_AS(apply_mask(z, bad), ShapeError);
  CHECK_THROWS_AS(logits(head, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("argmax resolves ties to the lowest index") {
  CHECK(argmax(std::vector<double>{1, 3, 3, 2}) == 1);
  CHECK(argmax(std::vector<double>{0, 0, 0}) == 0);
}

TEST_CASE("divergence and bad configuration are reported") {
  auto set = separable_set();
  for (double& v : set.activations.data()) v *= 1e150;
  TrainConfig cfg;
  cfg.learning_rate = 1e10;
  cfg.epochs = 50;
  CHECK_THROWS_AS(train(set, cfg), DivergenceError);
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(train(separable_set(), bad), InputError);
  bad = TrainConfig{};
  bad.learning_rate = -1;
  CHECK_THROWS_AS(train(separable_set(), bad), InputError);
  CHECK_THROWS_AS(train(bgc::testing::make_set({{{1.0}}}), TrainConfig{}), ContextError);
}

TEST_CASE("heads persist through tensors and JSON") {
  const auto dir = bgc::testing::scratch_dir("head_roundtrip");
  const auto head = train(separable_set(), TrainConfig{});
  save_head(head, dir);
  const auto back = load_head(dir);
  CHECK(back.weights.data() == head.weights.data());
  CHECK(back.bias == head.bias);
  CHECK(back.config.epochs == head.config.epochs);
  CHECK(back.config.learning_rate == head.config.learning_rate);
}

TEST_CASE("four-point toy matches a hand-coded gradient descent") {
  const std::vector<std::array<double, 2>> x{{1.0, 0.0}, {0.8, 0.2}, {0.0, 1.0}, {0.2, 0.8}};
  const std::vector<int> y{0, 0, 1, 1};
  const auto set = bgc::testing::make_set({{{1.0, 0.0}, {0.8, 0.2}}, {{0.0, 1.0}, {0.2, 0.8}}});
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.learning_rate = 0.5;
  cfg.convergence_tolerance = 0.0;
  const auto head = train(set, cfg);

  // Two classes, written out component by component.
  double w[2][2] = {{0, 0}, {0, 0}}, b[2] = {0, 0};
  for (int epoch = 0; epoch < 500; ++epoch) {
    double gw[2][2] = {{0, 0}, {0, 0}}, gb[2] = {0, 0};
    for (std::size_t s = 0; s < 4; ++s) {
      const double l0 = b[0] + w[0][0] * x[s][0] + w[0][1] * x[s][1];
      const double l1 = b[1] + w[1][0] * x[s][0] + w[1][1] * x[s][1];
      const double p1 = 1.0 / (1.0 + std::exp(l0 - l1));
      const double r[2] = {(1.0 - p1) - (y[s] == 0), p1 - (y[s] == 1)};
      for (int c = 0; c < 2; ++c) {
        gb[c] += r[c] / 4;
        for (int k = 0; k < 2; ++k) gw[c][k] += r[c] * x[s][static_cast<std::size_t>(k)] / 4;
      }
    }
    for (int c = 0; c < 2; ++c) {
      b[c] -= 0.5 * gb[c];
      for (int k = 0; k < 2; ++k) w[c][k] -= 0.5 * (gw[c][k] + cfg.l2_penalty * w[c][k]);
    }
  }
  REQUIRE(head.training_log.size() == 500);
  CHECK(head.training_log.back().accuracy == 1.0);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(head.bias[c] == Approx(b[c]).epsilon(1e-10).margin(1e-12));
    for (std::size_t k = 0; k < 2; ++k) CHECK(head.weights(c, k) == Approx(w[c][k]).epsilon(1e-10).margin(1e-12));
  }
}

TEST_CASE("loss never increases at a small learning rate") {
  const auto set = separable_set();
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.convergence_tolerance = 0.0;
  const auto head = train(set, cfg);
  for (std::size_t e = 1; e < head.training_log.size(); ++e)
    CHECK(head.training_log[e].loss <= head.training_log[e - 1].loss);
}
