#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bandlab/analysis.hpp"
#include "bandlab/bandlimited.hpp"
#include "bandlab/errors.hpp"
#include "bandlab/lattice.hpp"
#include "bandlab/sampling.hpp"
#include "bandlab/stats.hpp"
#include "bandlab/textio.hpp"
#include "helpers.hpp"

using namespace bandlab;
using testutil::make_net;
using testutil::mat;

namespace {

BandlimitedFn flat(std::size_t d, int K, std::uint64_t seed) {
  SpectrumProfile p;
  p.seed = seed;
  return random_bandlimited(d, K, p);
}

Mlp trained_like_net(std::uint64_t seed) {
  InitOptions opt;
  opt.spread_first_layer_kinks = true;
  return init_mlp({1, 60, 60, 1}, seed, opt);
}

SpectrumReport synthetic_1d(int kmax, double p) {
  SpectrumReport r;
  r.dim = 1;
  r.kmax = kmax;
  r.grid = static_cast<std::size_t>(16 * (2 * kmax + 1));
  r.zeta.resize(static_cast<std::size_t>(2 * kmax + 1));
  for (int k = -kmax; k <= kmax; ++k) {
    r.zeta[static_cast<std::size_t>(k + kmax)] = k == 0 ? 1.0 : std::pow(std::abs(k), -p);
  }
  return r;
}

}  // namespace

TEST_CASE("network_spectrum: band-limited evaluator recovers its coefficients") {
  const auto f = flat(1, 5, 2);
  const auto r = network_spectrum(field_of(f), 1, 20, 1024);
  for (int k = -20; k <= 20; ++k) {
    const cplx expect = std::abs(k) <= 5 ? f.coeff({k}) : cplx{};
    CHECK(std::abs(r.at({k}) - expect) <= 1e-9);
  }
  const auto g = flat(2, 2, 3);
  const auto r2 = network_spectrum(field_of(g), 2, 4, 128);
  for (std::size_t i = 0; i < r2.zeta.size(); ++i) {
    const auto k = lattice_point(i, 2, 4);
    const cplx expect = linf_norm(k) <= 2 ? g.coeff(k) : cplx{};
    CHECK(std::abs(r2.zeta[i] - expect) <= 1e-9);
  }
}

TEST_CASE("network_spectrum: zero map and ReLU oracle") {
  const auto zero = make_net({RealMatrix(4, 1), RealMatrix(1, 4)}, {{0, 0, 0, 0}, {0}});
  for (auto z : network_spectrum(field_of(zero), 1, 8, 512).zeta) CHECK(z == cplx{});

  // max(0, x) on [-pi, pi): zeta_0 = pi/4 and, for k != 0,
  // zeta_k = (1/2pi) [ j pi (-1)^k / k + (1 - (-1)^k) / k^2 ].
  const auto relu = make_net({mat(1, 1, {1.0}), mat(1, 1, {1.0})}, {{0.0}, {0.0}});
  const int kmax = 16;
  const auto r = network_spectrum(field_of(relu), 1, kmax, 1 << 14);
  for (int k = -kmax; k <= kmax; ++k) {
    cplx expect;
    if (k == 0) {
      expect = kPi / 4.0;
    } else {
      const double s = (k % 2 == 0) ? 1.0 : -1.0;
      expect = (cplx(0.0, kPi * s / k) + (1.0 - s) / (double(k) * k)) / kTwoPi;
    }
    CHECK(std::abs(std::abs(r.at({k})) - std::abs(expect)) <= 1e-6);
  }
}

TEST_CASE("network_spectrum: symmetry, grid doubling, preconditions") {
  const auto net = trained_like_net(1);
  const auto a = network_spectrum(field_of(net), 1, 32, 4096);
  const auto b = network_spectrum(field_of(net), 1, 32, 8192);
  double scale = 0.0;
  for (auto z : b.zeta) scale = std::max(scale, std::abs(z));
  for (std::size_t i = 0; i < a.zeta.size(); ++i) {
    CHECK(std::abs(a.zeta[i] - std::conj(a.zeta[a.zeta.size() - 1 - i])) <= 1e-8);
    CHECK(std::abs(a.zeta[i] - b.zeta[i]) <= 1e-6 * scale);
  }
  CHECK_THROWS_AS(network_spectrum(field_of(net), 1, 32, 64), DomainError);
  const auto f3 = flat(3, 1, 1);
  CHECK_THROWS_AS(network_spectrum(field_of(f3), 3, 40, 1024), ResourceError);
}

TEST_CASE("decay_fit: exact power laws, windows and floor") {
  for (double p : {2.0, 3.0}) {
    const auto fit = decay_fit(synthetic_1d(256, p), 8, 256);
    CHECK(fit.slope == doctest::Approx(-p).epsilon(1e-9));
    CHECK(fit.residual <= 1e-9);
    CHECK(fit.k_lo == 8);
    CHECK(fit.k_hi == 256);
  }
  auto dead = synthetic_1d(64, 2.0);
  for (auto& z : dead.zeta) z *= 1e-20;
  CHECK_THROWS_AS(decay_fit(dead, 8, 64), InsufficientDataError);
  CHECK_THROWS_AS(decay_fit(synthetic_1d(64, 2.0), 8, 12), InsufficientDataError);

  // Bivariate: shell means of |zeta|^2 with |zeta_k| = ||k||_1^-3.
  SpectrumReport r;
  r.dim = 2;
  r.kmax = 20;
  r.grid = 1024;
  r.zeta.resize(lattice_size(2, 20));
  for (std::size_t i = 0; i < r.zeta.size(); ++i) {
    const auto k = lattice_point(i, 2, 20);
    const int t = l1_norm(k);
    r.zeta[i] = t == 0 ? 1.0 : std::pow(t, -3.0);
  }
  CHECK(decay_fit(r, 2, 20).slope == doctest::Approx(-3.0).epsilon(1e-9));

  const auto w = default_fit_window(5, 256, 8192);
  CHECK(w.first == 10);
  CHECK(w.second == 256);
  CHECK(default_fit_window(2, 512, 2048).first == 8);
  CHECK(default_fit_window(2, 512, 2048).second == 256);
}

TEST_CASE("decay_fit is invariant to amplitude scaling") {
  auto net = trained_like_net(4);
  const auto base = network_spectrum(field_of(net), 1, 128, 4096);
  for (auto& w : net.layers().back().weights.values) w *= 7.5;
  for (auto& b : net.layers().back().bias) b *= 7.5;
  const auto scaled = network_spectrum(field_of(net), 1, 128, 4096);
  CHECK(decay_fit(scaled, 8, 128).slope == doctest::Approx(decay_fit(base, 8, 128).slope).epsilon(1e-9));
}

TEST_CASE("l2_error: identical maps, zero map, Parseval agreement") {
  const auto f = flat(1, 5, 6);
  const auto same = l2_error(field_of(f), f, 4096);
  CHECK(same.l2_sq_error <= 1e-12);
  CHECK(same.coefficient_error <= 1e-12);

  const auto zero = make_net({RealMatrix(2, 1), RealMatrix(1, 2)}, {{0, 0}, {0}});
  const auto z = l2_error(field_of(zero), f, 4096);
  CHECK(z.l2_sq_error == doctest::Approx(kTwoPi * f.energy()).epsilon(1e-6));
  CHECK(parseval_consistent(z));

  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto r = l2_error(field_of(trained_like_net(s)), f, 4096);
    CHECK(parseval_consistent(r));
  }
  const auto g = flat(2, 1, 2);
  InitOptions opt;
  const auto net2 = init_mlp({2, 30, 30, 1}, 5, opt);
  CHECK(parseval_consistent(l2_error(field_of(net2), g, 512)));

  CHECK_THROWS_AS(l2_error(field_of(f), f, 1024), DomainError);
  const auto f3 = flat(3, 1, 1);
  CHECK_THROWS_AS(l2_error(field_of(f3), f3, 512), ResourceError);
}

TEST_CASE("total_variation_first_derivative") {
  const auto aff = make_net({mat(1, 1, {2.5})}, {{-1.0}});
  CHECK(total_variation_first_derivative(aff, 1 << 14) == 0.0);
  for (double w : {1.0, -3.0, 0.25}) {
    const auto unit = make_net({mat(1, 1, {w}), mat(1, 1, {1.0})}, {{0.0}, {0.0}});
    CHECK(total_variation_first_derivative(unit, 1 << 14) == doctest::Approx(std::abs(w)).epsilon(1e-12));
  }
  const auto net = trained_like_net(9);
  const double a = total_variation_first_derivative(net, 1 << 14);
  const double b = total_variation_first_derivative(net, 1 << 15);
  CHECK(std::isfinite(a));
  CHECK(std::abs(a - b) <= 0.01 * b);
  CHECK_THROWS_AS(total_variation_first_derivative(net, 1000), DomainError);
  CHECK_THROWS_AS(total_variation_first_derivative(init_mlp({2, 3, 1}, 0), 1 << 14), UnsupportedError);
}

TEST_CASE("jacobian_bound_audit") {
  const auto zero = make_net({RealMatrix(3, 1), RealMatrix(1, 3)}, {{0, 0, 0}, {0}});
  auto a = jacobian_bound_audit(zero, 10, 1);
  CHECK(a.max_jacobian_norm == 0.0);
  CHECK(a.spectral_product == 0.0);
  CHECK(a.frobenius_product == 0.0);
  CHECK(a.holds);

  const auto aff = make_net({mat(1, 1, {-4.0})}, {{2.0}});
  a = jacobian_bound_audit(aff, 10, 1);
  CHECK(a.max_jacobian_norm == doctest::Approx(4.0));
  CHECK(a.spectral_product == doctest::Approx(4.0));
  CHECK(a.frobenius_product == doctest::Approx(4.0));
  CHECK(a.holds);

  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto r = jacobian_bound_audit(init_mlp({1, 100, 100, 1}, s), 100, s);
    CHECK(r.points == 100);
    CHECK(r.holds);
    CHECK(r.max_jacobian_norm <= r.spectral_product + 1e-9);
    CHECK(r.spectral_product <= r.frobenius_product + 1e-9);
  }
  CHECK_THROWS_AS(jacobian_bound_audit(aff, 0, 1), DomainError);
}

TEST_CASE("CSV exports") {
  const auto f = flat(1, 2, 1);
  const auto s = network_spectrum(field_of(f), 1, 4, 128);
  const auto csv = spectrum_to_csv(s);
  CHECK(csv.rfind("k0,abs_zeta,re,im\n", 0) == 0);
  CHECK(textio::split(csv, '\n').size() >= 10);
  const auto e = l2_error(field_of(f), f, 4096);
  CHECK(error_report_to_csv(e).rfind("n,kappa,l2_sq_error,coefficient_error,max_train_residual\n", 0) == 0);
  const auto dir = std::filesystem::temp_directory_path();
  save_spectrum_csv(s, dir / "bandlab_spec.csv");
  CHECK(textio::read_file(dir / "bandlab_spec.csv") == csv);
  std::filesystem::remove(dir / "bandlab_spec.csv");
  CHECK_THROWS_AS(save_error_report_csv(e, dir / "no_such_dir_bandlab" / "x.csv"), IoError);
}

TEST_CASE("fit_line and median") {
  const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.residual <= 1e-14);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1}, std::vector<double>{1}), DomainError);
  CHECK_THROWS_AS(fit_line(std::vector<double>{2, 2}, std::vector<double>{1, 3}), DomainError);
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK_THROWS_AS(median({}), DomainError);
}
