#include <doctest.h>

#include <cmath>
#include <sstream>

#include "risdet/neural.hpp"

using namespace risdet;

namespace {

// Loss L = sum_ij c_ij * y_ij with fixed random weights c, so dL/dy = c.
double probe_loss(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
  return (net.forward(x).array() * c.array()).sum();
}

void check_fd(const Mlp& net0, std::uint64_t seed) {
  Rng r = make_stream(seed, 0);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd x(net0.input_dim(), 5);
  Eigen::MatrixXd c(net0.output_dim(), 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(r);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = n(r);

  MlpCache cache;
  net0.forward(x, &cache);
  Eigen::VectorXd g;
  const Eigen::MatrixXd gx = net0.backward(cache, c, g);

  Mlp net = net0;
  const double h = 1e-5;
  int bad = 0;
  for (std::size_t i = 0; i < net.n_params(); ++i) {
    Eigen::VectorXd p = net0.params();
    p[i] += h;
    net.set_params(p);
    const double up = probe_loss(net, x, c);
    p[i] -= 2 * h;
    net.set_params(p);
    const double dn = probe_loss(net, x, c);
    const double fd = (up - dn) / (2 * h);
    if (std::abs(fd - g[i]) > 1e-4 * std::max(1.0, std::abs(fd))) ++bad;
  }
  CHECK(bad == 0);
  net.set_params(net0.params());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::MatrixXd xp = x;
    xp.data()[i] += h;
    Eigen::MatrixXd xm = x;
    xm.data()[i] -= h;
    const double fd = (probe_loss(net, xp, c) - probe_loss(net, xm, c)) / (2 * h);
    CHECK(std::abs(fd - gx.data()[i]) <= 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

}  // namespace

TEST_CASE("zero weights give the head of the bias") {
  Rng r = make_stream(1, 0);
  Mlp net({3, 4, 4}, OutputHead::actor, r);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.n_params()));
  const std::size_t last = net.n_params() - 4;
  p.segment(static_cast<Eigen::Index>(last), 4) << 0.0, 2.0, 1.0, 1.0;
  net.set_params(p);
  const Eigen::VectorXd y = net.forward(Eigen::VectorXd(Eigen::VectorXd::Constant(3, 0.7)));
  CHECK(y[0] == doctest::Approx(0.5));
  CHECK(y[1] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  CHECK(y[2] == doctest::Approx(0.5));
  CHECK(y[3] == doctest::Approx(0.5));
}

TEST_CASE("single linear layer") {
  Rng r = make_stream(2, 0);
  Mlp net({2, 2}, OutputHead::identity, r);
  Eigen::VectorXd p(6);
  p << 1, 3, 2, 4, 0.5, -0.5;  // W = [[1,2],[3,4]] column-major, b = (0.5, -0.5)
  net.set_params(p);
  const Eigen::VectorXd y = net.forward(Eigen::VectorXd(Eigen::Vector2d(1.0, -1.0)));
  CHECK(y[0] == doctest::Approx(-0.5));
  CHECK(y[1] == doctest::Approx(-1.5));
  CHECK(net.weight(0)(1, 0) == 3.0);

  // dL/dW = g x^T, dL/db = g.
  MlpCache cache;
  Eigen::MatrixXd x(2, 1);
  x << 2.0, 5.0;
  net.forward(x, &cache);
  Eigen::MatrixXd go(2, 1);
  go << 1.0, -2.0;
  Eigen::VectorXd g;
  net.backward(cache, go, g);
  Eigen::VectorXd expect(6);
  expect << 2.0, -4.0, 5.0, -10.0, 1.0, -2.0;
  CHECK((g - expect).norm() == doctest::Approx(0.0));
}

TEST_CASE("forward is deterministic and batch consistent") {
  Rng r = make_stream(3, 0);
  Mlp net({5, 16, 16, 3}, OutputHead::identity, r);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 4);
  const Eigen::MatrixXd y = net.forward(x);
  CHECK((net.forward(x) - y).norm() == 0.0);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK((net.forward(Eigen::VectorXd(x.col(j))) - y.col(j)).norm() < 1e-14);
  Rng r2 = make_stream(3, 0);
  Mlp twin({5, 16, 16, 3}, OutputHead::identity, r2);
  CHECK(twin.params() == net.params());
}

TEST_CASE("backpropagation matches finite differences") {
  Rng r = make_stream(4, 0);
  check_fd(Mlp({6, 12, 10, 4}, OutputHead::identity, r), 10);
  check_fd(Mlp({6, 12, 10, 6}, OutputHead::actor, r), 11);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  Rng r = make_stream(5, 0);
  Mlp net({4, 8, 2}, OutputHead::identity, r);
  MlpCache cache;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
  net.forward(x, &cache);
  Eigen::VectorXd g;
  const Eigen::MatrixXd gx = net.backward(cache, Eigen::MatrixXd::Zero(2, 3), g);
  CHECK(g.norm() == 0.0);
  CHECK(gx.norm() == 0.0);
}

TEST_CASE("stale caches are rejected") {
  Rng r = make_stream(6, 0);
  Mlp net({2, 3, 1}, OutputHead::identity, r);
  MlpCache cache;
  net.forward(Eigen::MatrixXd::Ones(2, 1), &cache);
  net.set_params(net.params());
  Eigen::VectorXd g;
  CHECK_THROWS_AS(net.backward(cache, Eigen::MatrixXd::Ones(1, 1), g), ContractViolation);
}

TEST_CASE("optimizer") {
  Eigen::VectorXd w(3);
  w << 1.0, -2.0, 0.5;
  const Eigen::VectorXd g = Eigen::Vector3d(0.3, -0.1, 2.0);

  Optimizer sgd;
  sgd.lr = 0.1;
  sgd.beta1 = 0.0;
  sgd.beta2 = 0.0;
  Eigen::VectorXd a = w;
  sgd.step(a, g);
  CHECK((a - (w - 0.1 * g)).norm() < 1e-15);

  Optimizer plain;
  plain.kind = OptimizerKind::plain_sgd;
  plain.lr = 0.1;
  Eigen::VectorXd b = w;
  plain.step(b, g);
  CHECK((b - (w - 0.1 * g)).norm() < 1e-15);

  Optimizer adam;
  Eigen::VectorXd c = w;
  adam.step(c, Eigen::VectorXd::Zero(3));
  CHECK(c == w);
  // First Adam step moves each coordinate by lr * sign(g) (up to eps).
  Optimizer fresh;
  c = w;
  fresh.step(c, g);
  for (int i = 0; i < 3; ++i) CHECK(c[i] == doctest::Approx(w[i] - 1e-3 * (g[i] > 0 ? 1 : -1)).epsilon(1e-4));
}

TEST_CASE("Adam minimises a quadratic") {
  Eigen::VectorXd target(4);
  target << 1.0, -1.0, 2.0, 0.5;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
  Optimizer adam;
  adam.lr = 0.05;
  const double start = (w - target).squaredNorm();
  for (int i = 0; i < 200; ++i) adam.step(w, 2.0 * (w - target));
  CHECK((w - target).squaredNorm() < start / 100.0);
}

TEST_CASE("gradient clipping") {
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;
  CHECK(clip_global_norm(g, 10.0) == doctest::Approx(5.0));
  CHECK(g.norm() == doctest::Approx(5.0));
  CHECK(clip_global_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g.norm() == doctest::Approx(1.0));
  CHECK(g[0] == doctest::Approx(0.6));
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng r = make_stream(7, 0);
  Mlp net({3, 5, 4}, OutputHead::actor, r);
  Optimizer opt;
  Eigen::VectorXd g = Eigen::VectorXd::Random(static_cast<Eigen::Index>(net.n_params()));
  opt.step(net, g);
  opt.step(net, g);
  std::stringstream ss;
  write_mlp(ss, "actor", net, opt);

  Mlp back;
  Optimizer o2;
  read_mlp(ss, "actor", back, o2);
  CHECK(back.params() == net.params());
  CHECK(back.layer_dims() == net.layer_dims());
  CHECK(back.head() == net.head());
  CHECK(o2.step_count == 2);
  CHECK(o2.m == opt.m);
  CHECK(o2.v == opt.v);

  std::stringstream again;
  write_mlp(again, "actor", net, opt);
  CHECK_THROWS_AS(read_mlp(again, "critic", back, o2), ConfigError);

  for (double v : {0.1, -3.5e-300, 1e308, 0.0}) CHECK(parse_hexfloat(hexfloat(v)) == v);
}
