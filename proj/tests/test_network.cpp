#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "bandlab/bandlimited.hpp"
#include "bandlab/errors.hpp"
#include "bandlab/lattice.hpp"
#include "bandlab/network.hpp"
#include "bandlab/sampling.hpp"
#include "checks.hpp"
#include "helpers.hpp"

using namespace bandlab;
using testutil::make_net;
using testutil::mat;

TEST_CASE("init_mlp: sizes, determinism, zero biases, scale") {
  const auto net = init_mlp({1, 1000, 1000, 1}, 3);
  CHECK(net.parameter_count() == 1 * 1000 + 1000 + 1000 * 1000 + 1000 + 1000 * 1 + 1);
  CHECK(net.layer_sizes() == std::vector<std::size_t>{1, 1000, 1000, 1});
  CHECK(net.layers().back().activation == Activation::identity);
  CHECK(net.layers().front().activation == Activation::relu);
  for (const auto& l : net.layers())
    for (double b : l.bias) CHECK(b == 0.0);
  // Second layer weights have standard deviation 1/sqrt(1000).
  double s2 = 0.0;
  for (double w : net.layers()[1].weights.values) s2 += w * w;
  CHECK(std::sqrt(s2 / 1e6) == doctest::Approx(1.0 / std::sqrt(1000.0)).epsilon(0.01));

  const auto a = init_mlp({2, 7, 1}, 9), b = init_mlp({2, 7, 1}, 9);
  for (std::size_t l = 0; l < a.num_layers(); ++l) CHECK(a.layers()[l].weights.values == b.layers()[l].weights.values);
  CHECK(init_mlp({2, 7, 1}, 10).layers()[0].weights.values != a.layers()[0].weights.values);

  const auto affine = init_mlp({1, 1}, 0);
  REQUIRE(affine.num_layers() == 1);
  CHECK(affine.layers()[0].activation == Activation::identity);

  CHECK_THROWS_AS(init_mlp({1}, 0), DomainError);
  CHECK_THROWS_AS(init_mlp({1, 4, 2}, 0), DomainError);
}

TEST_CASE("init_mlp: spread kinks cover the domain") {
  InitOptions opt;
  opt.spread_first_layer_kinks = true;
  const auto net = init_mlp({1, 500, 1}, 4, opt);
  const auto& l = net.layers()[0];
  double lo = 1e9, hi = -1e9;
  for (std::size_t j = 0; j < 500; ++j) {
    const double kink = -l.bias[j] / l.weights(j, 0);
    lo = std::min(lo, kink);
    hi = std::max(hi, kink);
  }
  CHECK(lo >= -kPi);
  CHECK(hi < kPi);
  CHECK(hi - lo > 5.5);
}

TEST_CASE("forward: closed forms") {
  const auto aff = make_net({mat(1, 1, {2.0})}, {{1.0}});
  const double x = 3.0;
  CHECK(aff.forward({&x, 1}) == 7.0);

  const auto relu = make_net({mat(1, 1, {1.0}), mat(1, 1, {1.0})}, {{0.0}, {0.0}});
  const double m1 = -1.0, p2 = 2.0;
  CHECK(relu.forward({&m1, 1}) == 0.0);
  CHECK(relu.forward({&p2, 1}) == 2.0);

  const auto net = init_mlp({3, 20, 20, 1}, 5);
  const double zero[3] = {0, 0, 0};
  CHECK(net.forward(zero) == 0.0);

  const auto pts = random_points(3, 10, 1);
  const auto batch = net.forward_batch(pts);
  for (std::size_t i = 0; i < 10; ++i) CHECK(batch[i] == doctest::Approx(net.forward({pts.data() + 3 * i, 3})).epsilon(1e-12));
  CHECK_THROWS_AS(net.forward({&x, 1}), DomainError);
}

TEST_CASE("grad: stationary point and linear regression") {
  const auto aff = make_net({mat(1, 1, {2.0})}, {{1.0}});
  std::vector<double> xs{0.5, -1.0, 2.0};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(2.0 * x + 1.0);
  auto g = grad(aff, xs, ys);
  CHECK(g.weights[0].values[0] == 0.0);
  CHECK(g.biases[0][0] == 0.0);

  ys = {0.0, 1.0, -2.0};
  g = grad(aff, xs, ys);
  double gw = 0.0, gb = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double r = 2.0 * xs[i] + 1.0 - ys[i];
    gw += r * xs[i] / 3.0;
    gb += r / 3.0;
  }
  CHECK(g.weights[0].values[0] == doctest::Approx(gw).epsilon(1e-15));
  CHECK(g.biases[0][0] == doctest::Approx(gb).epsilon(1e-15));
}

TEST_CASE("grad: finite differences on random nets") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  for (std::uint64_t s = 0; s < 5; ++s) {
    InitOptions opt;
    opt.spread_first_layer_kinks = true;
    const auto net = init_mlp({2, 8, 6, 1}, s, opt);
    const auto xs = random_points(2, 5, 100 + s);
    std::vector<double> ys(5);
    for (double& y : ys) y = g(rng);
    const auto r = testutil::gradient_check(net, xs, ys);
    CHECK(r.agreeing >= r.parameters * 99 / 100);
  }
}

TEST_CASE("jacobian") {
  const auto aff = make_net({mat(1, 1, {-1.5})}, {{0.3}});
  const double x = 0.7;
  CHECK(jacobian(aff, {&x, 1}).gradient[0] == -1.5);

  const auto unit = make_net({mat(1, 1, {2.0}), mat(1, 1, {1.0})}, {{0.0}, {0.0}});
  const double pos = 1.0, neg = -1.0, zero = 0.0;
  CHECK(jacobian(unit, {&pos, 1}).gradient[0] == 2.0);
  CHECK(jacobian(unit, {&neg, 1}).gradient[0] == 0.0);
  const auto k = jacobian(unit, {&zero, 1});
  CHECK(k.at_kink);
  CHECK(k.gradient[0] == 0.0);

  // Finite differences away from kinks.
  const auto net = init_mlp({2, 30, 30, 1}, 7);
  const auto pts = random_points(2, 20, 8);
  for (std::size_t i = 0; i < 20; ++i) {
    std::vector<double> p(pts.begin() + 2 * i, pts.begin() + 2 * i + 2);
    const auto j = jacobian(net, p);
    for (std::size_t a = 0; a < 2; ++a) {
      auto up = p, dn = p;
      up[a] += 1e-6;
      dn[a] -= 1e-6;
      const double fd = (net.forward(up) - net.forward(dn)) / 2e-6;
      CHECK(std::abs(fd - j.gradient[a]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("jacobian bound and Lipschitz property") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto net = init_mlp({1, 50, 50, 1}, s);
    const auto wn = weight_norms(net);
    CHECK(wn.spectral_product <= wn.frobenius_product + 1e-9);
    for (int t = 0; t < 100; ++t) {
      const double x = u(rng), y = u(rng);
      CHECK(std::abs(jacobian(net, {&x, 1}).gradient[0]) <= wn.spectral_product + 1e-9);
      CHECK(std::abs(net.forward({&x, 1}) - net.forward({&y, 1})) <= wn.spectral_product * std::abs(x - y) + 1e-9);
    }
  }
}

TEST_CASE("derivative_batch agrees with jacobian") {
  InitOptions opt;
  opt.spread_first_layer_kinks = true;
  const auto net = init_mlp({1, 40, 40, 1}, 3, opt);
  const auto xs = random_points(1, 50, 5);
  const auto d = derivative_batch(net, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(d[i] == doctest::Approx(jacobian(net, {&xs[i], 1}).gradient[0]).epsilon(1e-10));
}

TEST_CASE("weight_norms") {
  const auto zero = make_net({RealMatrix(3, 1), RealMatrix(1, 3)}, {{0, 0, 0}, {0}});
  const auto z = weight_norms(zero);
  CHECK(z.frobenius_product == 0.0);
  CHECK(z.spectral_product == 0.0);
  CHECK(z.frobenius_sq_sum == 0.0);

  const auto diag = make_net({mat(2, 2, {1, 0, 0, 2})}, {{0, 0}});
  const auto d = weight_norms(diag);
  CHECK(d.spectral[0] == doctest::Approx(2.0));
  CHECK(d.frobenius[0] == doctest::Approx(std::sqrt(5.0)));
  CHECK(d.frobenius_sq_sum == doctest::Approx(5.0));
}

TEST_CASE("train_to_interpolation: trivial fits") {
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 20000;
  SampleSet one;
  one.points = {0.4};
  one.values = {1.3};
  auto r = train_to_interpolation(init_mlp({1, 16, 16, 1}, 1), one, cfg);
  CHECK(r.report.interpolated);
  CHECK(r.report.final_max_residual <= cfg.tolerance);
  CHECK(r.report.finisher_steps == 0);

  SampleSet flat;
  flat.points = {-2.0, -0.5, 1.0, 2.5};
  flat.values = {3.0, 3.0, 3.0, 3.0};
  r = train_to_interpolation(init_mlp({1, 16, 16, 1}, 2), flat, cfg);
  CHECK(r.report.interpolated);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r.net.forward({&flat.points[i], 1}) - 3.0) <= cfg.tolerance);
}

TEST_CASE("train_to_interpolation: report invariants and weight trace") {
  SpectrumProfile p;
  p.seed = 3;
  const auto f = random_bandlimited(1, 2, p);
  const auto s = sample(f, uniform_points(1, 8), Scheme::uniform_grid);
  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.max_epochs = 3000;
  cfg.trace_every = 100;
  InitOptions opt;
  opt.spread_first_layer_kinks = true;
  const auto r = train_to_interpolation(init_mlp({1, 64, 64, 1}, 4, opt), s, cfg);
  CHECK(r.report.interpolated == (r.report.final_max_residual <= cfg.tolerance));
  REQUIRE(r.report.trace_epochs.size() >= 2);
  CHECK(r.report.trace_epochs.size() == r.report.frobenius_product_trace.size());
  std::size_t first = 0;
  while (first < r.report.trace_epochs.size() && r.report.trace_epochs[first] < 100) ++first;
  REQUIRE(first < r.report.trace_epochs.size());
  const double ref = r.report.frobenius_product_trace[first];
  for (std::size_t i = first; i < r.report.frobenius_product_trace.size(); ++i) {
    CHECK(r.report.frobenius_product_trace[i] <= 10.0 * ref);
  }
}

TEST_CASE("train_to_interpolation: Gauss-Newton finisher") {
  SpectrumProfile p;
  p.seed = 1;
  const auto f = random_bandlimited(1, 5, p);
  const auto s = sample(f, random_points(1, 16, 2), Scheme::random_iid, 2);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  cfg.finisher = Finisher::gauss_newton;
  InitOptions opt;
  opt.spread_first_layer_kinks = true;
  const auto r = train_to_interpolation(init_mlp({1, 200, 200, 1}, 0, opt), s, cfg);
  CHECK(r.report.interpolated);
  CHECK(r.report.finisher_steps > 0);
  CHECK(r.report.epochs == r.report.finisher_steps);
  const auto out = r.net.forward_batch(s.points);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(out[i] - s.values[i]) <= cfg.tolerance);
  CHECK(finisher_from_string("gauss-newton") == Finisher::gauss_newton);
  CHECK(to_string(Finisher::none) == "none");
  CHECK_THROWS_AS(finisher_from_string("adam"), DomainError);
}

TEST_CASE("train_to_interpolation: divergence and bad config") {
  SampleSet s;
  s.points = {-1.0, 0.0, 1.0};
  s.values = {1e3, -1e3, 1e3};
  TrainConfig cfg;
  cfg.learning_rate = 10.0;
  cfg.max_epochs = 1000;
  CHECK_THROWS_AS(train_to_interpolation(init_mlp({1, 32, 32, 1}, 1), s, cfg), DivergenceError);

  TrainConfig bad;
  bad.momentum = 1.0;
  CHECK_THROWS_AS(train_to_interpolation(init_mlp({1, 4, 1}, 1), s, bad), DomainError);
  bad = TrainConfig{};
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  SampleSet empty;
  CHECK_THROWS_AS(train_to_interpolation(init_mlp({1, 4, 1}, 1), empty, TrainConfig{}), DomainError);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto net = init_mlp({2, 5, 3, 1}, 8);
  const auto back = deserialize_mlp(serialize(net));
  REQUIRE(back.num_layers() == net.num_layers());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    CHECK(back.layers()[l].weights.values == net.layers()[l].weights.values);
    CHECK(back.layers()[l].bias == net.layers()[l].bias);
    CHECK(back.layers()[l].activation == net.layers()[l].activation);
  }
  const auto path = std::filesystem::temp_directory_path() / "bandlab_net_rt.txt";
  save_checkpoint(net, path);
  CHECK(load_checkpoint(path).layers()[1].weights.values == net.layers()[1].weights.values);
  std::filesystem::remove(path);
  CHECK_THROWS(deserialize_mlp("not a network"));
}
