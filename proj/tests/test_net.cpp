#include <doctest.h>

#include <cmath>

#include "dnni/errors.hpp"
#include "dnni/net.hpp"
#include "oracles.hpp"

using namespace dnni;

namespace {

Network tiny(double a, double c) {
  Eigen::MatrixXd w1(1, 1), w2(1, 1);
  w1 << a;
  w2 << c;
  return Network({1, 1, 1}, Activation::tanh, {w1, w2}, {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)});
}

Network zero_net(double outer_bias) {
  Network n = Network::init({2, 3, 1}, Activation::tanh, 1);
  for (std::size_t l = 0; l < n.num_layers(); ++l) {
    n.mutable_weights(l).setZero();
    n.mutable_biases(l).setZero();
  }
  n.mutable_biases(1)(0) = outer_bias;
  return n;
}

double rel(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-3}); }

// Runs `check(param_ref, analytic)` for every parameter of `net`.
template <typename F>
void each_param(Network& net, const Gradient& g, F check) {
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (long i = 0; i < g.weights[l].rows(); ++i)
      for (long j = 0; j < g.weights[l].cols(); ++j) check(net.mutable_weights(l)(i, j), g.weights[l](i, j));
    for (long i = 0; i < g.biases[l].size(); ++i) check(net.mutable_biases(l)(i), g.biases[l](i));
  }
}

}  // namespace

TEST_CASE("init is deterministic, bounded and has zero biases") {
  const Network a = Network::init({1, 10, 10, 1}, Activation::tanh, 42);
  const Network b = Network::init({1, 10, 10, 1}, Activation::tanh, 42);
  const Network c = Network::init({1, 10, 10, 1}, Activation::tanh, 43);
  CHECK(a.identical(b));
  CHECK_FALSE(a.identical(c));
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const double limit = std::sqrt(6.0 / (a.layer_sizes()[l] + a.layer_sizes()[l + 1]));
    CHECK(a.weights(l).cwiseAbs().maxCoeff() <= limit);
    CHECK(a.biases(l).isZero(0.0));
  }
  CHECK(a.weights(0).cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 11.0));
  CHECK(a.parameter_count() == 10 + 10 + 100 + 10 + 10 + 1);
  CHECK_THROWS_AS(Network::init({}, Activation::tanh, 1), ShapeError);
  CHECK_THROWS_AS(Network::init({1, 0, 1}, Activation::tanh, 1), ShapeError);
  CHECK_THROWS_AS(Network::init({1, 3, 2}, Activation::tanh, 1), ShapeError);
}

TEST_CASE("forward against hand computations") {
  const double in[2] = {0.3, -1.0};
  CHECK(forward(zero_net(2.5), in).value == 2.5);
  const double zero = 0.0;
  CHECK(forward(tiny(1.0, 1.0), std::span(&zero, 1)).value == 0.0);

  for (Activation act : {Activation::tanh, Activation::sigmoid}) {
    const Network n = Network::init({1, 3, 1}, act, 5);
    const double x = 0.7;
    CHECK(forward(n, std::span(&x, 1)).value == doctest::Approx(oracle::mlp(n, {x})).epsilon(1e-14));
  }
  const Network deep = Network::init({3, 8, 8, 1}, Activation::sigmoid, 9);
  const double p[3] = {0.1, -0.4, 2.0};
  CHECK(forward(deep, p).value == doctest::Approx(oracle::mlp(deep, {0.1, -0.4, 2.0})).epsilon(1e-14));
  CHECK_THROWS_AS(forward(deep, std::span(p, 2)), ShapeError);
}

TEST_CASE("input partial") {
  const double in[2] = {0.3, -1.0};
  CHECK(input_partial(zero_net(1.0), in, 0).partial == 0.0);
  const double zero = 0.0;
  CHECK(input_partial(tiny(2.0, 3.0), std::span(&zero, 1), 0).partial == 6.0);
  const double x = 0.4;
  const double sech = 1.0 / std::cosh(2.0 * x);
  CHECK(input_partial(tiny(2.0, 3.0), std::span(&x, 1), 0).partial == doctest::Approx(6.0 * sech * sech));
  CHECK_THROWS_AS(input_partial(zero_net(1.0), in, 2), ShapeError);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Activation act = seed % 2 ? Activation::sigmoid : Activation::tanh;
    const Network n = Network::init({3, 6, 5, 1}, act, seed);
    const std::vector<double> p{0.2 * seed - 1.0, 0.5, -0.3};
    for (std::size_t axis = 0; axis < 3; ++axis) {
      auto f = [&](double v) {
        std::vector<double> q = p;
        q[axis] = v;
        return oracle::mlp(n, q);
      };
      CHECK(rel(input_partial(n, p, axis).partial, oracle::central(f, p[axis], 1e-5)) <= 1e-6);
    }
  }
}

TEST_CASE("outer layer is linear") {
  Network n = Network::init({1, 5, 5, 1}, Activation::tanh, 3);
  const double x = 0.25;
  const double before = input_partial(n, std::span(&x, 1), 0).partial;
  n.mutable_weights(2) *= 2.0;
  CHECK(input_partial(n, std::span(&x, 1), 0).partial == 2.0 * before);
}

TEST_CASE("reverse passes against hand values") {
  const double zero = 0.0;
  const Network t = tiny(2.0, 3.0);
  const Gradient gp = backward_partial(t, input_partial(t, std::span(&zero, 1), 0).tape, 1.0);
  CHECK(gp.weights[1](0, 0) == 2.0);  // ∂(c·a·sech²(ax))/∂c at x = 0
  CHECK(gp.biases[1](0) == 0.0);

  const Network z = zero_net(1.0);
  const double in[2] = {0.5, 0.5};
  CHECK(backward_value(z, forward(z, in).tape, 3.0).biases[1](0) == 3.0);
  CHECK(backward_value(z, forward(z, in).tape, 0.0).max_abs() == 0.0);
  CHECK(backward_partial(z, input_partial(z, in, 0).tape, 1.0).biases[1](0) == 0.0);
}

TEST_CASE("reverse passes match parameter finite differences") {
  const double h = 1e-6;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Network n = Network::init({2, 4, 4, 1}, seed % 2 ? Activation::sigmoid : Activation::tanh, 100 + seed);
    const std::vector<double> p{0.3 - 0.1 * seed, 0.8};
    const Gradient gv = backward_value(n, forward(n, p).tape, 1.0);
    const Gradient gp = backward_partial(n, input_partial(n, p, 0).tape, 1.0);
    each_param(n, gv, [&](double& w, double analytic) {
      const double w0 = w;
      w = w0 + h;
      const double up = oracle::mlp(n, p);
      w = w0 - h;
      const double dn = oracle::mlp(n, p);
      w = w0;
      CHECK(rel(analytic, (up - dn) / (2 * h)) <= 1e-5);
    });
    each_param(n, gp, [&](double& w, double analytic) {
      const double w0 = w;
      w = w0 + h;
      const double up = input_partial(n, p, 0).partial;
      w = w0 - h;
      const double dn = input_partial(n, p, 0).partial;
      w = w0;
      CHECK(rel(analytic, (up - dn) / (2 * h)) <= 1e-5);
    });
  }
}

TEST_CASE("stale tapes are rejected") {
  Network n = Network::init({1, 3, 1}, Activation::tanh, 1);
  const double x = 0.1;
  const Tape tape = input_partial(n, std::span(&x, 1), 0).tape;
  n.mutable_biases(0)(0) += 1.0;
  CHECK_THROWS_AS(backward_partial(n, tape, 1.0), ShapeError);
  CHECK_THROWS_AS(backward_value(n, tape, 1.0), ShapeError);
  const Tape value_only = forward(n, std::span(&x, 1)).tape;
  CHECK_THROWS_AS(backward_partial(n, value_only, 1.0), ShapeError);
}

TEST_CASE("gradient axpy") {
  const Network n = Network::init({1, 3, 1}, Activation::tanh, 1);
  const double x = 0.5;
  const Gradient g = backward_value(n, forward(n, std::span(&x, 1)).tape, 1.0);
  const Gradient zero = Gradient::zeros_like(n);
  const Gradient same = gradient_axpy(g, 0.0, zero);
  CHECK(gradient_axpy(g, 0.0, g).weights[0] == g.weights[0]);
  CHECK(same.weights[1] == g.weights[1]);
  CHECK(gradient_axpy(zero, 1.0, g).weights[0] == g.weights[0]);
  CHECK(gradient_axpy(g, -1.0, g).max_abs() == 0.0);
  const Gradient other = Gradient::zeros_like(Network::init({1, 4, 1}, Activation::tanh, 1));
  CHECK_THROWS_AS(gradient_axpy(g, 1.0, other), ShapeError);
}

TEST_CASE("batched kernels agree with per-point passes") {
  const Network n = Network::init({2, 7, 7, 1}, Activation::tanh, 11);
  Eigen::MatrixXd pts(2, 300);
  for (long j = 0; j < pts.cols(); ++j) pts.col(j) << -1.0 + 0.01 * j, 0.5 - 0.003 * j;
  const Eigen::RowVectorXd v = batch_values(n, pts);
  const Eigen::RowVectorXd d = batch_partials(n, pts, 0);
  std::vector<double> targets(300);
  Gradient expect = Gradient::zeros_like(n);
  double sse = 0.0;
  for (long j = 0; j < pts.cols(); ++j) {
    const std::vector<double> p{pts(0, j), pts(1, j)};
    const PartialEvaluation e = input_partial(n, p, 0);
    CHECK(v(j) == doctest::Approx(e.value).epsilon(1e-14));
    CHECK(d(j) == doctest::Approx(e.partial).epsilon(1e-14));
    targets[j] = std::sin(p[0]);
    const double r = e.partial - targets[j];
    sse += r * r;
    expect.axpy(0.5 * 2 * r, backward_partial(n, e.tape, 1.0));
  }
  Gradient got = Gradient::zeros_like(n);
  CHECK(batch_partial_residual_gradient(n, pts, targets, 0, 0.5, got) == doctest::Approx(sse).epsilon(1e-12));
  for (std::size_t l = 0; l < n.num_layers(); ++l)
    CHECK((got.weights[l] - expect.weights[l]).cwiseAbs().maxCoeff() <= 1e-12 * (1 + expect.max_abs()));
}
