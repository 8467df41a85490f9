#include <doctest.h>

#include <cmath>
#include <sstream>

#include "causalembed/neuralnet.hpp"

using namespace causalembed;
using nn::FeatureMap;
using nn::FeatureMapSpec;
using nn::OutputActivation;

namespace {

FeatureMap identity_map(std::size_t dim) {
  PhiloxRng rng(0, 0);
  FeatureMapSpec spec{dim, {}, dim, OutputActivation::identity};
  FeatureMap map(spec, rng);
  map.weight(0).fill(0.0);
  for (std::size_t i = 0; i < dim; ++i) map.weight(0)(i, i) = 1.0;
  map.bias(0).fill(0.0);
  return map;
}

double directional_value(const FeatureMap& map, std::span<const double> input,
                         std::span<const double> cotangent) {
  const linalg::Vector out = map.forward(input);
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) acc += cotangent[i] * out[i];
  return acc;
}

// True when every pre-activation is at least `margin` away from an
// activation kink, so finite differences are trustworthy.
bool away_from_kinks(const FeatureMap& map, std::span<const double> input,
                     double margin) {
  FeatureMap::Workspace ws;
  map.forward(input, ws);
  for (std::size_t l = 0; l < ws.pre.size(); ++l) {
    const bool last = l + 1 == ws.pre.size();
    for (std::size_t i = 0; i < ws.pre[l].size(); ++i) {
      const double z = ws.pre[l][i];
      if (!last && std::fabs(z) < margin) return false;
      if (last && map.output_activation() == OutputActivation::ramp &&
          (std::fabs(z) < margin || std::fabs(z - 1.0) < margin)) {
        return false;
      }
    }
  }
  return true;
}

void check_gradients_against_fd(FeatureMap& map, PhiloxRng& rng,
                                int points) {
  const double h = 1e-5;
  const std::size_t params = map.parameter_count();
  std::vector<double> theta(params);
  int checked = 0;
  int attempts = 0;
  while (checked < points && attempts < points * 50) {
    ++attempts;
    std::vector<double> input(map.input_dim());
    for (auto& v : input) v = rng.uniform(-1.5, 1.5);
    if (!away_from_kinks(map, input, 1e-4)) continue;
    std::vector<double> cot(map.feature_dim());
    for (auto& v : cot) v = rng.uniform(-1.0, 1.0);

    FeatureMap::Workspace ws;
    map.forward(input, ws);
    FeatureMap::Gradients grads = map.make_gradients();
    map.backward(input, cot, ws, grads);
    std::vector<double> flat(params);
    FeatureMap::flatten_gradients(grads, flat);

    map.copy_parameters(theta);
    for (std::size_t k = 0; k < params; ++k) {
      const double saved = theta[k];
      theta[k] = saved + h;
      map.set_parameters(theta);
      const double plus = directional_value(map, input, cot);
      theta[k] = saved - h;
      map.set_parameters(theta);
      const double minus = directional_value(map, input, cot);
      theta[k] = saved;
      const double fd = (plus - minus) / (2.0 * h);
      const double scale = std::max({1.0, std::fabs(fd), std::fabs(flat[k])});
      CHECK(std::fabs(flat[k] - fd) <= 1e-4 * scale);
    }
    map.set_parameters(theta);

    // Input gradient via finite differences too.
    for (std::size_t k = 0; k < input.size(); ++k) {
      const double saved = input[k];
      input[k] = saved + h;
      const double plus = directional_value(map, input, cot);
      input[k] = saved - h;
      const double minus = directional_value(map, input, cot);
      input[k] = saved;
      const double fd = (plus - minus) / (2.0 * h);
      const double scale =
          std::max({1.0, std::fabs(fd), std::fabs(grads.input[k])});
      CHECK(std::fabs(grads.input[k] - fd) <= 1e-4 * scale);
    }
    ++checked;
  }
  REQUIRE(checked == points);
}

}  // namespace

TEST_CASE("forward through an identity layer") {
  FeatureMap map = identity_map(2);
  const linalg::Vector out = map.forward(std::vector<double>{1.0, 2.0});
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 2.0);
}

TEST_CASE("zero final layer gives the zero vector") {
  PhiloxRng rng(1, 0);
  FeatureMapSpec spec{3, {8}, 4, OutputActivation::identity};
  FeatureMap map(spec, rng);
  map.weight(1).fill(0.0);
  map.bias(1).fill(0.0);
  const linalg::Vector out = map.forward(std::vector<double>{0.3, -0.2, 0.9});
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("two-layer ReLU forward matches a hand-rolled computation") {
  PhiloxRng rng(2, 0);
  FeatureMapSpec spec{2, {3}, 2, OutputActivation::identity};
  FeatureMap map(spec, rng);
  // Hand-set parameters.
  const double w1[3][2] = {{1.0, -2.0}, {0.5, 0.5}, {-1.0, 1.0}};
  const double b1[3] = {0.1, -0.2, 0.0};
  const double w2[2][3] = {{1.0, 2.0, 3.0}, {-1.0, 0.0, 1.0}};
  const double b2[2] = {0.05, -0.05};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) map.weight(0)(i, j) = w1[i][j];
    map.bias(0)[i] = b1[i];
  }
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) map.weight(1)(i, j) = w2[i][j];
    map.bias(1)[i] = b2[i];
  }

  const double x[2] = {0.7, 0.4};
  double hidden[3];
  for (int i = 0; i < 3; ++i) {
    const double z = w1[i][0] * x[0] + w1[i][1] * x[1] + b1[i];
    hidden[i] = z > 0.0 ? z : 0.0;
  }
  double expected[2];
  for (int i = 0; i < 2; ++i) {
    expected[i] = w2[i][0] * hidden[0] + w2[i][1] * hidden[1] +
                  w2[i][2] * hidden[2] + b2[i];
  }

  const linalg::Vector out = map.forward(std::span<const double>(x, 2));
  CHECK(out[0] == doctest::Approx(expected[0]).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(expected[1]).epsilon(1e-15));
}

TEST_CASE("linear-map backward puts the input in the selected weight row") {
  FeatureMap map = identity_map(3);
  const std::vector<double> input{0.4, -1.2, 2.0};
  const std::vector<double> cot{1.0, 0.0, 0.0};
  FeatureMap::Workspace ws;
  map.forward(input, ws);
  FeatureMap::Gradients grads = map.make_gradients();
  map.backward(input, cot, ws, grads);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(grads.weights[0](0, j) == input[j]);
    CHECK(grads.weights[0](1, j) == 0.0);
    CHECK(grads.weights[0](2, j) == 0.0);
  }
  CHECK(grads.biases[0][0] == 1.0);
  CHECK(grads.biases[0][1] == 0.0);
  // Input gradient is the selected weight row.
  CHECK(grads.input[0] == 1.0);
  CHECK(grads.input[1] == 0.0);
  CHECK(grads.input[2] == 0.0);
}

TEST_CASE("zero cotangent produces zero gradients") {
  PhiloxRng rng(3, 0);
  FeatureMapSpec spec{4, {8, 8}, 3, OutputActivation::identity};
  FeatureMap map(spec, rng);
  const std::vector<double> input{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> cot{0.0, 0.0, 0.0};
  FeatureMap::Workspace ws;
  map.forward(input, ws);
  FeatureMap::Gradients grads = map.make_gradients();
  map.backward(input, cot, ws, grads);
  std::vector<double> flat(map.parameter_count());
  FeatureMap::flatten_gradients(grads, flat);
  for (double g : flat) CHECK(g == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
  PhiloxRng rng(4, 0);
  SUBCASE("small identity-output net") {
    FeatureMapSpec spec{3, {8}, 4, OutputActivation::identity};
    FeatureMap map(spec, rng);
    check_gradients_against_fd(map, rng, 5);
  }
  SUBCASE("small ramp-output net") {
    FeatureMapSpec spec{2, {6, 6}, 3, OutputActivation::ramp};
    FeatureMap map(spec, rng);
    check_gradients_against_fd(map, rng, 5);
  }
}

TEST_CASE("ramp output is bounded by one in sup norm") {
  PhiloxRng rng(5, 0);
  FeatureMapSpec spec{3, {16}, 8, OutputActivation::ramp};
  FeatureMap map(spec, rng);
  // Large weights so raw pre-activations overflow [0, 1] often.
  std::vector<double> params(map.parameter_count());
  map.copy_parameters(params);
  for (auto& p : params) p *= 10.0;
  map.set_parameters(params);

  double sup = 0.0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> input{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0),
                              rng.uniform(-5.0, 5.0)};
    const linalg::Vector out = map.forward(input);
    for (std::size_t j = 0; j < out.size(); ++j) {
      REQUIRE(out[j] >= 0.0);
      REQUIRE(out[j] <= 1.0);
      sup = std::max(sup, std::fabs(out[j]));
    }
  }
  CHECK(sup <= 1.0);
}

TEST_CASE("forward and backward are bit-deterministic") {
  PhiloxRng rng(6, 0);
  FeatureMapSpec spec{4, {16, 16}, 8, OutputActivation::identity};
  FeatureMap map(spec, rng);
  std::vector<double> input{0.3, -0.6, 1.1, 0.05};
  std::vector<double> cot{1.0, -0.5, 0.25, 0.0, 0.7, 0.1, -0.2, 0.4};
  const linalg::Vector out1 = map.forward(input);
  const linalg::Vector out2 = map.forward(input);
  for (std::size_t i = 0; i < out1.size(); ++i) CHECK(out1[i] == out2[i]);

  FeatureMap::Workspace ws;
  map.forward(input, ws);
  FeatureMap::Gradients g1 = map.make_gradients();
  FeatureMap::Gradients g2 = map.make_gradients();
  map.backward(input, cot, ws, g1);
  map.backward(input, cot, ws, g2);
  std::vector<double> f1(map.parameter_count()), f2(map.parameter_count());
  FeatureMap::flatten_gradients(g1, f1);
  FeatureMap::flatten_gradients(g2, f2);
  CHECK(f1 == f2);
}

TEST_CASE("adam leaves parameters alone under zero gradients") {
  nn::AdamOptimizer adam(3);
  std::vector<double> params{1.0, -2.0, 0.5};
  const std::vector<double> before = params;
  const std::vector<double> zeros(3, 0.0);
  for (int i = 0; i < 5; ++i) adam.step(params, zeros);
  CHECK(params == before);
  CHECK(adam.step_count() == 5);
}

TEST_CASE("first adam step moves by about the step size") {
  nn::AdamOptimizer adam(1);
  std::vector<double> params{1.0};
  const std::vector<double> grads{2.0};
  adam.step(params, grads);
  // Bias-corrected first step: lr * g / (|g| + eps) ~ lr.
  CHECK(std::fabs(params[0] - (1.0 - 1e-3)) < 1e-10);
}

TEST_CASE("three adam steps on f(w) = w^2 match the hand-executed trace") {
  nn::AdamOptimizer adam(1);
  std::vector<double> params{1.0};
  const double expected[3] = {0.999000000005, 0.9980000262138343,
                              0.9970000960651408};
  for (int t = 0; t < 3; ++t) {
    const std::vector<double> grads{2.0 * params[0]};
    adam.step(params, grads);
    CHECK(params[0] == doctest::Approx(expected[t]).epsilon(1e-14));
  }
}

TEST_CASE("serialization round-trips values and bytes") {
  PhiloxRng rng(7, 0);
  FeatureMapSpec spec{5, {12, 7}, 6, OutputActivation::ramp};
  FeatureMap map(spec, rng);

  const std::string text = map.serialized();
  std::istringstream in(text);
  const FeatureMap loaded = FeatureMap::load(in, "<memory>");

  // Parameters identical to the bit.
  std::vector<double> a(map.parameter_count());
  std::vector<double> b(loaded.parameter_count());
  map.copy_parameters(a);
  loaded.copy_parameters(b);
  CHECK(a == b);
  CHECK(loaded.output_activation() == OutputActivation::ramp);
  CHECK(loaded.layer_dims() == map.layer_dims());

  // Re-serialization is byte-identical.
  CHECK(loaded.serialized() == text);
  CHECK(loaded.fingerprint() == map.fingerprint());
}

TEST_CASE("dimension mismatches are rejected") {
  PhiloxRng rng(8, 0);
  FeatureMapSpec spec{3, {4}, 2, OutputActivation::identity};
  FeatureMap map(spec, rng);
  CHECK_THROWS_AS(map.forward(std::vector<double>{1.0, 2.0}),
                  DimensionMismatch);
  FeatureMap::Workspace ws;
  const std::vector<double> input{1.0, 2.0, 3.0};
  map.forward(input, ws);
  FeatureMap::Gradients grads = map.make_gradients();
  const std::vector<double> bad_cot{1.0};
  CHECK_THROWS_AS(map.backward(input, bad_cot, ws, grads),
                  DimensionMismatch);
}
