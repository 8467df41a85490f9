#include <doctest.h>

#include <cmath>
#include <sstream>

#include "causalembed/stage2.hpp"

using namespace causalembed;
using stage2::EmbeddingTrainConfig;

namespace {

nn::FeatureMap scalar_identity_map() {
  PhiloxRng rng(0, 0);
  nn::FeatureMapSpec spec{1, {}, 1, nn::OutputActivation::identity};
  nn::FeatureMap map(spec, rng);
  map.weight(0)(0, 0) = 1.0;
  map.bias(0)[0] = 0.0;
  return map;
}

linalg::Matrix column(const std::vector<double>& values) {
  linalg::Matrix m(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(i, 0) = values[i];
  return m;
}

}  // namespace

TEST_CASE("marginal embedding basics") {
  PhiloxRng rng(1, 0);
  nn::FeatureMapSpec spec{2, {6}, 3, nn::OutputActivation::identity};
  nn::FeatureMap map(spec, rng);

  SUBCASE("single sample is just the forward pass") {
    linalg::Matrix samples(1, 2);
    samples(0, 0) = 0.4;
    samples(0, 1) = -0.8;
    const linalg::Vector mean = stage2::marginal_embedding(map, samples);
    const linalg::Vector direct = map.forward(samples.row_view(0));
    for (std::size_t j = 0; j < 3; ++j) CHECK(mean[j] == direct[j]);
  }

  SUBCASE("odd linear map on x and -x averages to zero") {
    nn::FeatureMap linear = scalar_identity_map();
    linalg::Matrix samples(2, 1);
    samples(0, 0) = 0.7;
    samples(1, 0) = -0.7;
    const linalg::Vector mean = stage2::marginal_embedding(linear, samples);
    CHECK(mean[0] == 0.0);
  }

  SUBCASE("agrees with a naive accumulation oracle") {
    linalg::Matrix samples(100, 2);
    for (std::size_t i = 0; i < 100; ++i) {
      samples(i, 0) = rng.normal();
      samples(i, 1) = rng.normal();
    }
    const linalg::Vector mean = stage2::marginal_embedding(map, samples);
    linalg::Vector naive(3, 0.0);
    for (std::size_t i = 0; i < 100; ++i) {
      const linalg::Vector f = map.forward(samples.row_view(i));
      for (std::size_t j = 0; j < 3; ++j) naive[j] += f[j];
    }
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(mean[j] == doctest::Approx(naive[j] / 100.0).epsilon(1e-12));
    }
  }

  SUBCASE("empty input is rejected") {
    linalg::Matrix samples(0, 2);
    CHECK_THROWS_AS(stage2::marginal_embedding(map, samples), EmptyInput);
  }
}

TEST_CASE("marginal embedding is exactly permutation invariant") {
  PhiloxRng rng(2, 0);
  nn::FeatureMapSpec spec{1, {8}, 4, nn::OutputActivation::ramp};
  nn::FeatureMap map(spec, rng);
  linalg::Matrix samples(64, 1);
  for (std::size_t i = 0; i < 64; ++i) samples(i, 0) = rng.normal();
  const linalg::Vector mean = stage2::marginal_embedding(map, samples);

  std::vector<std::size_t> order(64);
  for (std::size_t i = 0; i < 64; ++i) order[i] = i;
  rng.shuffle(order);
  linalg::Matrix permuted(64, 1);
  for (std::size_t i = 0; i < 64; ++i) permuted(i, 0) = samples(order[i], 0);
  const linalg::Vector mean2 = stage2::marginal_embedding(map, permuted);
  for (std::size_t j = 0; j < 4; ++j) CHECK(mean[j] == mean2[j]);
}

TEST_CASE("regression to a constant feature map") {
  PhiloxRng rng(3, 0);
  const std::size_t n = 300;
  std::vector<double> conditioning(n);
  for (auto& v : conditioning) v = rng.uniform(-1.0, 1.0);
  // Targets are constant 0.6 in 3 coordinates.
  linalg::Matrix targets(n, 3, 0.6);
  EmbeddingTrainConfig config;
  config.hidden_dims = {16};
  config.epochs = 150;
  config.adam.step_size = 5e-3;
  config.weight_decay = 0.0;
  config.seed = 4;
  const auto result = stage2::train_embedding_to_targets(
      column(conditioning), targets, config, {Role::treatment}, false);
  for (double q : {-0.9, -0.3, 0.0, 0.4, 0.8}) {
    const linalg::Vector out = result.regressor.embed(std::vector<double>{q});
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::fabs(out[j] - 0.6) <= 1e-2);
    }
  }
  CHECK(result.loss_history.front() >= result.loss_history.back());
}

TEST_CASE("regression learns the identity conditional mean") {
  // X = A exactly, 1-dim identity feature: f(a) ~ a.
  PhiloxRng rng(5, 0);
  const std::size_t n = 2000;
  std::vector<double> a(n);
  for (auto& v : a) v = rng.uniform(-1.0, 1.0);
  const nn::FeatureMap identity = scalar_identity_map();
  EmbeddingTrainConfig config;
  config.hidden_dims = {32, 32};
  config.epochs = 120;
  config.adam.step_size = 3e-3;
  config.seed = 6;
  const auto result = stage2::train_embedding(identity, column(a), column(a),
                                              config, {Role::treatment});
  double total = 0.0;
  int count = 0;
  for (double q = -0.9; q <= 0.9; q += 0.1) {
    const linalg::Vector out = result.regressor.embed(std::vector<double>{q});
    total += std::fabs(out[0] - q);
    ++count;
  }
  CHECK(total / count <= 0.05);
}

TEST_CASE("independent conditioning converges to the marginal embedding") {
  PhiloxRng rng(7, 0);
  const std::size_t n = 2000;
  nn::FeatureMapSpec spec{1, {8}, 4, nn::OutputActivation::ramp};
  nn::FeatureMap map(spec, rng);

  std::vector<double> a(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform(-1.0, 1.0);
    x[i] = rng.normal();  // independent of a
  }
  const linalg::Matrix x_col = column(x);
  const linalg::Vector marginal = stage2::marginal_embedding(map, x_col);

  EmbeddingTrainConfig config;
  config.hidden_dims = {32};
  config.epochs = 80;
  config.seed = 8;
  const auto result = stage2::train_embedding(map, column(a), x_col, config,
                                              {Role::treatment});
  double worst = 0.0;
  for (double q = -0.9; q <= 0.9; q += 0.2) {
    const linalg::Vector out = result.regressor.embed(std::vector<double>{q});
    for (std::size_t j = 0; j < out.size(); ++j) {
      worst = std::max(worst, std::fabs(out[j] - marginal[j]));
    }
  }
  CHECK(worst <= 0.1);
}

TEST_CASE("hoeffding-style concentration of the empirical embedding") {
  // Ramp-bounded features; empirical means of resamples of size n stay
  // within sqrt(2 log(2 d / delta) / n) of the population value at least
  // (1 - delta) of the time, up to slack. Smoke-scale version; the full
  // 200-resample run lives in the acceptance suite.
  PhiloxRng rng(9, 0);
  nn::FeatureMapSpec spec{1, {8}, 4, nn::OutputActivation::ramp};
  nn::FeatureMap map(spec, rng);

  const std::size_t population_n = 200000;
  linalg::Vector population(4, 0.0);
  {
    PhiloxRng pop_rng(10, 0);
    for (std::size_t i = 0; i < population_n; ++i) {
      const std::vector<double> x{pop_rng.normal()};
      const linalg::Vector f = map.forward(x);
      for (std::size_t j = 0; j < 4; ++j) population[j] += f[j];
    }
    for (std::size_t j = 0; j < 4; ++j) {
      population[j] /= static_cast<double>(population_n);
    }
  }

  const std::size_t n = 500;
  const double delta = 0.05;
  const double bound = std::sqrt(2.0 * std::log(2.0 * 4 / delta) /
                                 static_cast<double>(n));
  int violations = 0;
  const int resamples = 40;
  PhiloxRng sample_rng(11, 0);
  for (int r = 0; r < resamples; ++r) {
    linalg::Vector mean(4, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> x{sample_rng.normal()};
      const linalg::Vector f = map.forward(x);
      for (std::size_t j = 0; j < 4; ++j) mean[j] += f[j];
    }
    double deviation = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      deviation = std::max(
          deviation, std::fabs(mean[j] / static_cast<double>(n) -
                               population[j]));
    }
    if (deviation > bound) ++violations;
  }
  CHECK(static_cast<double>(violations) / resamples <= delta + 0.03);
}

TEST_CASE("stage-2 training never touches the target map") {
  PhiloxRng rng(12, 0);
  nn::FeatureMapSpec spec{1, {8}, 4, nn::OutputActivation::identity};
  nn::FeatureMap map(spec, rng);
  const std::string before = map.serialized();

  std::vector<double> a(200), x(200);
  for (std::size_t i = 0; i < 200; ++i) {
    a[i] = rng.uniform(-1.0, 1.0);
    x[i] = rng.normal();
  }
  EmbeddingTrainConfig config;
  config.epochs = 10;
  config.seed = 13;
  stage2::train_embedding(map, column(a), column(x), config,
                          {Role::treatment});
  CHECK(map.serialized() == before);
}

TEST_CASE("loss history starts pre-training and never ends above it") {
  PhiloxRng rng(14, 0);
  std::vector<double> a(300), x(300);
  for (std::size_t i = 0; i < 300; ++i) {
    a[i] = rng.uniform(-1.0, 1.0);
    x[i] = std::sin(3.0 * a[i]) + rng.normal(0.0, 0.05);
  }
  const nn::FeatureMap identity = scalar_identity_map();
  EmbeddingTrainConfig config;
  config.epochs = 40;
  config.seed = 15;
  const auto result = stage2::train_embedding(identity, column(a), column(x),
                                              config, {Role::treatment});
  REQUIRE(result.loss_history.size() == config.epochs + 1);
  CHECK(result.loss_history.back() <= result.loss_history.front());
}

TEST_CASE("clamping tracks the target map's activation") {
  PhiloxRng rng(16, 0);
  nn::FeatureMapSpec ramp_spec{1, {4}, 2, nn::OutputActivation::ramp};
  nn::FeatureMap ramp_map(ramp_spec, rng);
  std::vector<double> a(50), x(50);
  for (std::size_t i = 0; i < 50; ++i) {
    a[i] = rng.uniform(-1.0, 1.0);
    x[i] = rng.normal();
  }
  EmbeddingTrainConfig config;
  config.epochs = 2;
  config.seed = 17;
  const auto clamped = stage2::train_embedding(ramp_map, column(a), column(x),
                                               config, {Role::treatment});
  CHECK(clamped.regressor.clamps());
  const nn::FeatureMap identity = scalar_identity_map();
  const auto open = stage2::train_embedding(identity, column(a), column(x),
                                            config, {Role::treatment});
  CHECK_FALSE(open.regressor.clamps());

  // Clamped outputs always lie in [0, 1].
  for (double q = -3.0; q <= 3.0; q += 0.5) {
    const linalg::Vector out =
        clamped.regressor.embed(std::vector<double>{q});
    for (std::size_t j = 0; j < out.size(); ++j) {
      CHECK(out[j] >= 0.0);
      CHECK(out[j] <= 1.0);
    }
  }
}

TEST_CASE("embedding regressor serialization round-trips") {
  PhiloxRng rng(18, 0);
  std::vector<double> a(60), x(60);
  for (std::size_t i = 0; i < 60; ++i) {
    a[i] = rng.uniform(-1.0, 1.0);
    x[i] = rng.normal();
  }
  const nn::FeatureMap identity = scalar_identity_map();
  EmbeddingTrainConfig config;
  config.epochs = 5;
  config.seed = 19;
  const auto result = stage2::train_embedding(identity, column(a), column(x),
                                              config, {Role::treatment});
  const std::string text = result.regressor.serialized();
  std::istringstream in(text);
  const auto loaded = stage2::EmbeddingRegressor::load(in, "<memory>");
  CHECK(loaded.serialized() == text);
  CHECK(loaded.conditioning_roles() == result.regressor.conditioning_roles());
  for (double q : {-0.5, 0.0, 0.5}) {
    const std::vector<double> input{q};
    CHECK(loaded.embed(input)[0] == result.regressor.embed(input)[0]);
  }
}

TEST_CASE("stage-2 errors") {
  SUBCASE("sample count mismatch") {
    const nn::FeatureMap identity = scalar_identity_map();
    linalg::Matrix cond(3, 1), inputs(4, 1);
    CHECK_THROWS_AS(stage2::train_embedding(identity, cond, inputs,
                                            EmbeddingTrainConfig{}, {}),
                    DimensionMismatch);
  }
  SUBCASE("empty training set") {
    linalg::Matrix cond(0, 1), targets(0, 2);
    CHECK_THROWS_AS(stage2::train_embedding_to_targets(
                        cond, targets, EmbeddingTrainConfig{}, {}, false),
                    EmptyInput);
  }
  SUBCASE("divergent targets raise NonFiniteLoss") {
    linalg::Matrix cond(4, 1);
    linalg::Matrix targets(4, 1, 1e200);
    for (std::size_t i = 0; i < 4; ++i) cond(i, 0) = 0.1 * (i + 1.0);
    EmbeddingTrainConfig config;
    config.epochs = 1;
    CHECK_THROWS_AS(stage2::train_embedding_to_targets(cond, targets, config,
                                                       {}, false),
                    NonFiniteLoss);
  }
}
