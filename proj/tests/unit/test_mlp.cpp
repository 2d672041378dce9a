#include <doctest.h>

#include <cmath>

#include "advdrive/io.hpp"
#include "advdrive/mlp.hpp"
#include "helpers.hpp"

using namespace advdrive;
using advdrive::testing::finite_difference;
using advdrive::testing::relative_error;
using advdrive::testing::random_vector;

namespace {

// Straight-line re-evaluation from the public weight/bias views.
std::vector<double> reference_forward(const Mlp& net, std::vector<double> x) {
  for (int l = 0; l < net.num_layers(); ++l) {
    const int in = net.layer_dims()[l];
    const int out = net.layer_dims()[l + 1];
    const auto w = net.weights(l);
    const auto b = net.biases(l);
    std::vector<double> y(out);
    for (int i = 0; i < out; ++i) {
      double s = b[i];
      for (int j = 0; j < in; ++j) s += w[i * in + j] * x[j];
      y[i] = l + 1 < net.num_layers() ? std::tanh(s) : s;
    }
    x = std::move(y);
  }
  return x;
}

Mlp random_net(std::vector<int> dims, std::uint64_t seed) {
  Rng rng(seed);
  Mlp net(dims);
  for (double& p : net.mutable_params()) p = uniform(rng, -1.0, 1.0);
  return net;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_SUITE("neural-core") {

TEST_CASE("zero network outputs zero") {
  Mlp net({3, 5, 2});
  const auto y = net.forward(std::vector<double>{0.3, -2.0, 7.0});
  CHECK(y == std::vector<double>{0.0, 0.0});
}

TEST_CASE("identity single layer passes the input through") {
  Mlp net({3, 3});
  auto w = net.mutable_weights(0);
  for (int i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  const std::vector<double> x = {0.5, -1.25, 3.0};
  CHECK(net.forward(x) == x);
}

TEST_CASE("forward matches a straight-line recomputation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Mlp net = random_net({4, 8, 2}, seed);
    Rng rng(seed + 100);
    const auto x = random_vector(rng, 4, -2.0, 2.0);
    const auto y = net.forward(x);
    const auto r = reference_forward(net, x);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(y[i] - r[i]) <= 1e-12);
  }
}

TEST_CASE("linear layer gradients are analytic") {
  Mlp net = random_net({3, 2}, 1);
  const std::vector<double> x = {0.5, -1.0, 2.0};
  const std::vector<double> g = {0.7, -0.3};
  GradientTape tape;
  net.forward(x, tape);
  const auto grads = net.backward_params(tape, g);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(grads[i * 3 + j] == doctest::Approx(g[i] * x[j]));
  }
  CHECK(grads[6] == doctest::Approx(g[0]));
  CHECK(grads[7] == doctest::Approx(g[1]));

  const auto gx = net.backward_input(tape, g);
  const auto w = net.weights(0);
  for (int j = 0; j < 3; ++j) {
    CHECK(gx[j] == doctest::Approx(w[j] * g[0] + w[3 + j] * g[1]));
  }
}

TEST_CASE("zero output gradient and zero weights give zero gradients") {
  const Mlp net = random_net({4, 8, 2}, 3);
  GradientTape tape;
  net.forward(std::vector<double>{0.1, 0.2, 0.3, 0.4}, tape);
  for (double v : net.backward_params(tape, std::vector<double>{0.0, 0.0})) {
    CHECK(v == 0.0);
  }
  Mlp zero({4, 8, 2});
  zero.forward(std::vector<double>{0.1, 0.2, 0.3, 0.4}, tape);
  for (double v : zero.backward_input(tape, std::vector<double>{1.0, -1.0})) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("parameter and input gradients match finite differences") {
  struct Shape {
    std::vector<int> dims;
    double tol;
  };
  const std::vector<Shape> shapes = {{{4, 8, 2}, 1e-6}, {{32, 16, 4}, 1e-5}};
  for (const Shape& shape : shapes) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng init(seed);
      Mlp net = Mlp::initialized(shape.dims, init, 1.4, 1.0);
      Rng rng(seed + 7);
      const auto x = random_vector(rng, shape.dims.front());
      const auto g = random_vector(rng, shape.dims.back());
      GradientTape tape;
      net.forward(x, tape);
      const auto analytic_p = net.backward_params(tape, g);
      const auto analytic_x = net.backward_input(tape, g);

      const std::vector<double> params(net.params().begin(), net.params().end());
      auto f_params = [&](const std::vector<double>& p) {
        Mlp copy = net;
        std::copy(p.begin(), p.end(), copy.mutable_params().begin());
        return dot(copy.forward(x), g);
      };
      auto f_input = [&](const std::vector<double>& in) {
        return dot(net.forward(in), g);
      };
      CHECK(relative_error(analytic_p, finite_difference(f_params, params)) <
            shape.tol);
      CHECK(relative_error(analytic_x, finite_difference(f_input, x)) <
            shape.tol);
    }
  }
}

TEST_CASE("dimension mismatch and stale tapes are rejected") {
  Mlp net = random_net({3, 4, 1}, 2);
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0}), std::invalid_argument);
  GradientTape tape;
  net.forward(std::vector<double>{1.0, 2.0, 3.0}, tape);
  net.mutable_params()[0] += 1.0;
  CHECK_THROWS_AS(net.backward_input(tape, std::vector<double>{1.0}), std::logic_error);
  CHECK_THROWS_AS(Mlp({3}), std::invalid_argument);
  CHECK_THROWS_AS(Mlp({3, 0, 1}), std::invalid_argument);
}

TEST_CASE("adam") {
  SUBCASE("first step on a scalar moves by lr against the gradient") {
    std::vector<double> w = {0.0};
    AdamState s(1, 0.1);
    adam_update(w, std::vector<double>{1.0}, s);
    CHECK(w[0] == doctest::Approx(-0.1).epsilon(1e-9));
    CHECK(s.step == 1);
  }
  SUBCASE("zero gradient leaves parameters alone") {
    std::vector<double> w = {0.5, -0.25};
    AdamState s(2, 0.1);
    for (int i = 0; i < 5; ++i) adam_update(w, std::vector<double>{0.0, 0.0}, s);
    CHECK(w == std::vector<double>{0.5, -0.25});
  }
  SUBCASE("repeated gradients move monotonically against their sign") {
    std::vector<double> w = {0.0, 0.0};
    AdamState s(2, 0.01);
    double prev0 = 0.0;
    double prev1 = 0.0;
    for (int i = 0; i < 50; ++i) {
      adam_update(w, std::vector<double>{2.0, -0.5}, s);
      CHECK(w[0] < prev0);
      CHECK(w[1] > prev1);
      prev0 = w[0];
      prev1 = w[1];
    }
  }
  SUBCASE("size mismatch throws") {
    std::vector<double> w = {0.0};
    AdamState s(2, 0.1);
    CHECK_THROWS_AS(adam_update(w, std::vector<double>{1.0}, s), std::invalid_argument);
  }
}

TEST_CASE("checkpoint round trip is exact") {
  Rng rng(4);
  const Mlp net = Mlp::initialized({5, 7, 3}, rng, std::sqrt(2.0), 0.01);
  const std::string text = dump_json(mlp_to_json(net));
  const Mlp back = mlp_from_json(nlohmann::json::parse(text));
  CHECK(back == net);
  CHECK(dump_json(mlp_to_json(back)) == text);
  nlohmann::json bad = mlp_to_json(net);
  bad["format_version"] = 99;
  CHECK_THROWS_AS(mlp_from_json(bad), std::runtime_error);
}

}  // TEST_SUITE
