#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "bandlab/bandlimited.hpp"
#include "bandlab/errors.hpp"
#include "bandlab/lattice.hpp"
#include "bandlab/sampling.hpp"

using namespace bandlab;

namespace {

BandlimitedFn flat(std::size_t d, int K, std::uint64_t seed) {
  SpectrumProfile p;
  p.seed = seed;
  return random_bandlimited(d, K, p);
}

double frame_defect(const SamplingOperator& op) {
  // max |(1/n) F F^* - I| where F = op.matrix^*.
  const auto& d = op.matrix;
  const double n = static_cast<double>(d.rows());
  double m = 0.0;
  for (std::size_t a = 0; a < d.cols(); ++a)
    for (std::size_t b = 0; b < d.cols(); ++b) {
      cplx s = 0.0;
      for (std::size_t i = 0; i < d.rows(); ++i) s += std::conj(d(i, a)) * d(i, b);
      m = std::max(m, std::abs(s / n - (a == b ? 1.0 : 0.0)));
    }
  return m;
}

}  // namespace

TEST_CASE("uniform_grid") {
  CHECK(uniform_grid(1, 0).size() == 1);
  const auto g = uniform_grid(1, 5);
  REQUIRE(g.size() == 11);
  auto sorted = g;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < 11; ++i) CHECK(sorted[i] - sorted[i - 1] == doctest::Approx(kTwoPi / 11).epsilon(1e-12));
  for (double x : g) {
    CHECK(x >= -kPi);
    CHECK(x < kPi);
  }
  const auto g2 = uniform_grid(2, 1);
  CHECK(g2.size() == 18);
  // Grid order: axis 0 fastest, position i at 2 pi i / m wrapped.
  CHECK(g2[2] == doctest::Approx(kTwoPi / 3));
  CHECK(g2[3] == doctest::Approx(0.0));
}

TEST_CASE("random_points") {
  const auto a = random_points(1, 100, 42), b = random_points(1, 100, 42);
  CHECK(a == b);
  CHECK(a != random_points(1, 100, 43));
  const auto big = random_points(1, 10000, 7);
  double mean = 0.0;
  for (double x : big) {
    CHECK(x >= -kPi);
    CHECK(x < kPi);
    mean += x;
  }
  mean /= 10000.0;
  CHECK(std::abs(mean) <= 3.0 * kPi / std::sqrt(3.0 * 10000.0));
  auto s = big;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] - s[i - 1] >= 1e-8);
}

TEST_CASE("build_operator: entries, frames, dimension check") {
  const auto pts = random_points(1, 16, 3);
  const auto op = build_operator(pts, 1, 5);
  CHECK(op.matrix.rows() == 16);
  CHECK(op.matrix.cols() == 11);
  CHECK(op.coefficient_count == 11);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t c = 0; c < 11; ++c) {
      const int k = op.frequency(c)[0];
      CHECK(std::abs(op.matrix(i, c) - std::polar(1.0, k * pts[i])) <= 1e-15);
    }
  const auto sv = singular_values(op.matrix);
  CHECK(condition_number(op.matrix) > 1.0);
  CHECK(condition_number(op.matrix) == doctest::Approx(sv.front() / sv.back()).epsilon(1e-12));

  const auto grid = build_operator(uniform_grid(1, 5), 1, 5);
  CHECK(condition_number(grid.matrix) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(frame_defect(grid) <= 1e-10);
  const auto over = build_operator(uniform_points(1, 16), 1, 5);
  CHECK(condition_number(over.matrix) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(frame_defect(over) <= 1e-10);
  CHECK(frame_defect(build_operator(uniform_grid(2, 2), 2, 2)) <= 1e-10);

  CHECK_THROWS_AS(build_operator(random_points(1, 8, 1), 1, 5), DomainError);
}

TEST_CASE("reconstruct_uniform") {
  const std::vector<double> zeros(11, 0.0);
  for (auto c : reconstruct_uniform(zeros, 1, 5)) CHECK(c == cplx{});
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto f = flat(1, 5, s);
    for (std::size_t n : {11u, 16u}) {
      const auto smp = sample(f, uniform_points(1, n), n == 11 ? Scheme::uniform_grid : Scheme::oversampled_uniform);
      const auto c = reconstruct_uniform(smp.values, 1, 5);
      for (std::size_t i = 0; i < 11; ++i) CHECK(std::abs(c[i] - f.coeffs()[i]) <= 1e-10);
    }
  }
  CHECK_THROWS_AS(reconstruct_uniform(std::vector<double>(9, 0.0), 1, 5), DomainError);
}

TEST_CASE("reconstruct_nonuniform") {
  const auto zero_op = build_operator(random_points(1, 8, 2), 1, 2);
  for (auto c : reconstruct_nonuniform(zero_op, std::vector<double>(8, 0.0))) CHECK(std::abs(c) <= 1e-15);

  int checked = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto f = flat(1, 2, 100 + s);
    const auto smp = sample(f, random_points(1, 8, s), Scheme::random_iid, s);
    const auto op = build_operator(smp, 2);
    if (std::isinf(condition_number(op.matrix))) continue;
    const auto c = reconstruct_nonuniform(op, smp.values);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(c[i] - f.coeffs()[i]) <= 1e-6);
    ++checked;
  }
  CHECK(checked > 15);

  // The uniform grid fed through the generic path agrees with the DFT path.
  const auto f = flat(1, 5, 9);
  const auto smp = sample(f, uniform_grid(1, 5), Scheme::uniform_grid);
  const auto a = reconstruct_nonuniform(build_operator(smp, 5), smp.values);
  const auto b = reconstruct_uniform(smp.values, 1, 5);
  for (std::size_t i = 0; i < 11; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);

  // Duplicate points make the operator singular.
  std::vector<double> pts{0.1, 0.1, 0.5, 1.0, 2.0};
  const auto dup = build_operator(pts, 1, 2);
  CHECK_THROWS_AS(reconstruct_nonuniform(dup, std::vector<double>(5, 1.0)), SingularOperatorError);
}

TEST_CASE("round trip reproduces held-out points") {
  const auto f = flat(2, 2, 31);
  const auto smp = sample(f, random_points(2, 60, 5), Scheme::random_iid, 5);
  const auto c = reconstruct_nonuniform(build_operator(smp, 2), smp.values);
  std::vector<cplx> sym(c.begin(), c.end());
  for (std::size_t i = 0; i < sym.size(); ++i) sym[i] = 0.5 * (c[i] + std::conj(c[sym.size() - 1 - i]));
  const BandlimitedFn g(2, 2, sym);
  const auto held = random_points(2, 200, 99);
  const auto fv = f.evaluate_batch(held), gv = g.evaluate_batch(held);
  for (std::size_t i = 0; i < fv.size(); ++i) CHECK(std::abs(fv[i] - gv[i]) <= 1e-6);
}

TEST_CASE("reconstruct_dct_symmetric") {
  const std::size_t n = 15;
  const auto pts = uniform_points(1, n);
  std::vector<double> c(n, 2.5);
  auto cs = reconstruct_dct_symmetric(c, 1, n);
  CHECK(cs.coeffs[0] == doctest::Approx(2.5));
  for (std::size_t m = 1; m < n; ++m) CHECK(std::abs(cs.coeffs[m]) <= 1e-12);

  // cos(x) is cos(2 theta - pi) = -cos(2 theta) in the series variable.
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::cos(pts[i]);
  cs = reconstruct_dct_symmetric(v, 1, n);
  for (std::size_t m = 0; m < n; ++m) CHECK(std::abs(cs.coeffs[m] - (m == 2 ? -1.0 : 0.0)) <= 1e-10);

  // Synthesis reproduces the samples.
  for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(0.3 * pts[i]) + pts[i];
  cs = reconstruct_dct_symmetric(v, 1, n);
  for (std::size_t i = 0; i < n; ++i) CHECK(cs.evaluate(pts[i]) == doctest::Approx(v[i]).epsilon(1e-9));

  // A signal with f(-pi) != f(pi): the mirrored series has no jump at the
  // boundary, the periodic DFT interpolant does.
  const auto g = [](double x) { return x; };
  for (std::size_t i = 0; i < n; ++i) v[i] = g(pts[i]);
  cs = reconstruct_dct_symmetric(v, 1, n);
  const int K = static_cast<int>(n - 1) / 2;
  const auto z = reconstruct_uniform(v, 1, K);
  std::vector<cplx> zs(z.begin(), z.end());
  const BandlimitedFn trig(1, K, zs);
  const double edge = kPi - 1e-3;
  const double dct_err = std::abs(cs.evaluate(edge) - g(edge));
  const double dft_err = std::abs(trig.evaluate({&edge, 1}) - g(edge));
  CHECK(dct_err < dft_err);

  CHECK_THROWS_AS(reconstruct_dct_symmetric(std::vector<double>(9, 0.0), 2, 3), UnsupportedError);
}

TEST_CASE("manova_support and kappa_bound") {
  auto [lo, hi] = manova_support(1.0, 0.0);
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(4.0));
  std::tie(lo, hi) = manova_support(4.0, 0.0);
  CHECK(lo == doctest::Approx(1.0));
  CHECK(hi == doctest::Approx(9.0));
  std::tie(lo, hi) = manova_support(2.0, 0.0);
  CHECK(lo == doctest::Approx(0.1716).epsilon(1e-3));
  CHECK(hi == doctest::Approx(5.8284).epsilon(1e-4));
  CHECK_THROWS_AS(manova_support(0.5, 0.0), DomainError);
  CHECK_THROWS_AS(manova_support(4.0, 0.5), DomainError);
  CHECK_THROWS_AS(manova_support(2.0, 1.0), DomainError);

  CHECK(kappa_bound(4.0) == 9.0);
  CHECK(kappa_bound(9.0) == 4.0);
  CHECK(kappa_bound(1e6) == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(kappa_bound(2.0) > kappa_bound(3.0));
  CHECK_THROWS_AS(kappa_bound(1.0), DomainError);
}

TEST_CASE("median condition number falls with redundancy") {
  std::vector<double> med;
  for (double beta : {1.5, 2.0, 4.0, 8.0}) {
    const auto n = static_cast<std::size_t>(std::llround(beta * 11));
    std::vector<double> k;
    for (std::uint64_t s = 0; s < 20; ++s) k.push_back(condition_number(build_operator(random_points(1, n, s), 1, 5).matrix));
    std::sort(k.begin(), k.end());
    med.push_back(0.5 * (k[9] + k[10]));
  }
  for (std::size_t i = 1; i < med.size(); ++i) CHECK(med[i] <= med[i - 1]);
}

TEST_CASE("SampleSet CSV round trip") {
  const auto f = flat(2, 1, 3);
  const auto s = sample(f, random_points(2, 12, 4), Scheme::random_iid, 4);
  const auto t = samples_from_csv(samples_to_csv(s));
  CHECK(t.dim == 2);
  CHECK(t.scheme == Scheme::random_iid);
  CHECK(t.seed == std::optional<std::uint64_t>(4));
  CHECK(t.points == s.points);
  CHECK(t.values == s.values);
  CHECK(samples_to_csv(s).rfind("dim,scheme,seed\n", 0) == 0);
  const auto path = std::filesystem::temp_directory_path() / "bandlab_samples_rt.csv";
  save_samples_csv(s, path);
  CHECK(load_samples_csv(path).values == s.values);
  std::filesystem::remove(path);
  CHECK_THROWS(samples_from_csv("dim,scheme,seed\n1,uniform-grid,\n0.1\n"));
}
