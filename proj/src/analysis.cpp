#include "bandlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bandlab/errors.hpp"
#include "bandlab/lattice.hpp"
#include "bandlab/sampling.hpp"
#include "bandlab/stats.hpp"
#include "bandlab/textio.hpp"

namespace bandlab {

namespace {

constexpr double kAmplitudeFloor = 1e-13;
constexpr std::size_t kMinFitPoints = 8;

void check_budget(std::size_t dim, std::size_t grid) {
  if (checked_pow(grid, dim, kMaxGridEvaluations) > kMaxGridEvaluations) {
    throw ResourceError("dense grid of " + std::to_string(grid) + "^" + std::to_string(dim) +
                        " nodes exceeds the evaluation budget of 2^24");
  }
}

// Values on the (M+1)^d trapezoid nodes -pi + 2 pi i / M, i = 0..M per axis.
struct TrapezoidGrid {
  std::size_t dim = 1;
  std::size_t grid = 0;
  std::vector<double> points;   // row-major, (M+1)^d x dim
  std::vector<double> weights;  // product trapezoid weights, summing to M^d
  std::vector<std::size_t> fold;  // node -> periodic index on the M^d grid
};

TrapezoidGrid trapezoid_grid(std::size_t dim, std::size_t grid) {
  check_budget(dim, grid);
  TrapezoidGrid g;
  g.dim = dim;
  g.grid = grid;
  const std::size_t side = grid + 1;
  const std::size_t count = checked_pow(side, dim, std::size_t{1} << 30);
  g.points.resize(count * dim);
  g.weights.resize(count);
  g.fold.resize(count);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t node = 0; node < count; ++node) {
    double w = 1.0;
    std::size_t periodic = 0, stride = 1;
    for (std::size_t a = 0; a < dim; ++a) {
      g.points[node * dim + a] = -kPi + kTwoPi * static_cast<double>(idx[a]) / static_cast<double>(grid);
      if (idx[a] == 0 || idx[a] == grid) w *= 0.5;
      periodic += (idx[a] % grid) * stride;
      stride *= grid;
    }
    g.weights[node] = w;
    g.fold[node] = periodic;
    for (std::size_t a = 0; a < dim; ++a) {
      if (++idx[a] < side) break;
      idx[a] = 0;
    }
  }
  return g;
}

// Periodic samples with the boundary copies averaged. A node's trapezoid
// weight is also its share among the copies of its periodic node.
std::vector<double> fold_values(const TrapezoidGrid& g, std::span<const double> values) {
  std::vector<double> out(checked_pow(g.grid, g.dim, kMaxGridEvaluations), 0.0);
  for (std::size_t node = 0; node < values.size(); ++node) out[g.fold[node]] += g.weights[node] * values[node];
  return out;
}

// zeta_k = M^{-d} sum_j v_j e^{-j k.x_j}, x_j = -pi + 2 pi j / M, for the
// lattice {-kmax..kmax}^d. Contracts one axis at a time; each pass moves the
// contracted axis to the slowest position so that after d passes the result
// is in column-stack order.
std::vector<cplx> band_dft(std::vector<cplx> values, std::size_t dim, std::size_t grid, int kmax) {
  const auto band = static_cast<std::size_t>(2 * kmax + 1);
  std::vector<cplx> twiddle(grid);
  for (std::size_t j = 0; j < grid; ++j) {
    twiddle[j] = std::polar(1.0, -kTwoPi * static_cast<double>(j) / static_cast<double>(grid));
  }
  std::vector<cplx> cur = std::move(values);
  std::size_t rest = cur.size() / grid;
  for (std::size_t pass = 0; pass < dim; ++pass) {
    std::vector<cplx> next(rest * band);
    for (std::size_t b = 0; b < band; ++b) {
      const long long k = static_cast<long long>(b) - kmax;
      // At x = -pi + 2 pi m / M, e^{-j k x} = (-1)^k e^{-2 pi j k m / M}.
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      const long long m = static_cast<long long>(grid);
      const long long kmod = ((k % m) + m) % m;
      for (std::size_t r = 0; r < rest; ++r) {
        cplx acc{};
        const cplx* row = cur.data() + r * grid;
        long long phase = 0;
        for (std::size_t j = 0; j < grid; ++j) {
          acc += row[j] * twiddle[static_cast<std::size_t>(phase)];
          phase += kmod;
          if (phase >= m) phase -= m;
        }
        next[r + rest * b] = sign * acc / static_cast<double>(grid);
      }
    }
    cur = std::move(next);
    rest = cur.size() / grid;
  }
  return cur;
}

SpectrumReport spectrum_from_grid(const TrapezoidGrid& g, std::span<const double> values, int kmax) {
  const auto folded = fold_values(g, values);
  SpectrumReport rep;
  rep.dim = g.dim;
  rep.kmax = kmax;
  rep.grid = g.grid;
  rep.zeta = band_dft(std::vector<cplx>(folded.begin(), folded.end()), g.dim, g.grid, kmax);
  return rep;
}

}  // namespace

Field field_of(const Mlp& net) {
  return [&net](std::span<const double> pts) { return net.forward_batch(pts); };
}

Field field_of(const BandlimitedFn& f) {
  return [&f](std::span<const double> pts) { return f.evaluate_batch(pts); };
}

cplx SpectrumReport::at(const std::vector<int>& k) const {
  if (k.size() != dim) throw DomainError("SpectrumReport: index dimension mismatch");
  if (linf_norm(k) > kmax) throw DomainError("SpectrumReport: frequency outside the analysed band");
  return zeta[lattice_flat(k, kmax)];
}

SpectrumReport network_spectrum(const Field& phi, std::size_t dim, int kmax, std::size_t grid) {
  if (dim == 0) throw DomainError("network_spectrum: dimension must be >= 1");
  if (kmax < 0) throw DomainError("network_spectrum: kmax must be >= 0");
  if (grid < 8 * static_cast<std::size_t>(2 * kmax + 1)) {
    throw DomainError("network_spectrum: grid must satisfy M >= 8 (2 kmax + 1)");
  }
  const auto g = trapezoid_grid(dim, grid);
  const auto values = phi(g.points);
  if (values.size() != g.weights.size()) throw DomainError("network_spectrum: field returned the wrong count");
  return spectrum_from_grid(g, values, kmax);
}

DecayFit decay_fit(const SpectrumReport& report, int k_lo, int k_hi) {
  if (k_lo < 1 || k_hi < k_lo) throw DomainError("decay_fit: need 1 <= k_lo <= k_hi");
  if (k_hi > report.kmax) throw DomainError("decay_fit: window exceeds the analysed band");
  std::vector<double> lx, ly;
  if (report.dim == 1) {
    for (int k = k_lo; k <= k_hi; ++k) {
      const double a = std::abs(report.zeta[static_cast<std::size_t>(k + report.kmax)]);
      if (a > kAmplitudeFloor) {
        lx.push_back(std::log(static_cast<double>(k)));
        ly.push_back(std::log(a));
      }
    }
  } else {
    std::map<int, std::pair<double, std::size_t>> shells;
    for (std::size_t f = 0; f < report.zeta.size(); ++f) {
      const int t = l1_norm(lattice_point(f, report.dim, report.kmax));
      if (t < k_lo || t > k_hi) continue;
      auto& s = shells[t];
      s.first += std::norm(report.zeta[f]);
      s.second += 1;
    }
    for (const auto& [t, s] : shells) {
      const double a = std::sqrt(s.first / static_cast<double>(s.second));
      if (a > kAmplitudeFloor) {
        lx.push_back(std::log(static_cast<double>(t)));
        ly.push_back(std::log(a));
      }
    }
  }
  if (lx.size() < kMinFitPoints) {
    throw InsufficientDataError("decay_fit: only " + std::to_string(lx.size()) +
                                " coefficients above the numerical floor in the window");
  }
  const auto line = fit_line(lx, ly);
  DecayFit fit;
  fit.k_lo = k_lo;
  fit.k_hi = k_hi;
  fit.points = lx.size();
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.residual = line.residual;
  return fit;
}

std::pair<int, int> default_fit_window(int target_bandwidth, int kmax, std::size_t grid) {
  const int lo = std::max(8, 2 * target_bandwidth);
  const int hi = std::min(kmax, static_cast<int>(grid / 8));
  return {lo, hi};
}

ErrorReport l2_error(const Field& phi, const BandlimitedFn& f, std::size_t grid) {
  const std::size_t dim = f.dim();
  if (dim == 1 && grid < 4096) throw DomainError("l2_error: need M >= 4096 for univariate maps");
  if (grid < 8 * static_cast<std::size_t>(2 * f.bandwidth() + 1)) {
    throw DomainError("l2_error: grid must satisfy M >= 8 (2K + 1)");
  }
  const auto g = trapezoid_grid(dim, grid);
  const auto pv = phi(g.points);
  if (pv.size() != g.weights.size()) throw DomainError("l2_error: field returned the wrong count");
  const auto fv = f.evaluate_batch(g.points);

  const double cell = std::pow(kTwoPi / static_cast<double>(grid), static_cast<double>(dim));
  const double volume = std::pow(kTwoPi, static_cast<double>(dim));
  double quad = 0.0, phi_power = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double e = fv[i] - pv[i];
    quad += g.weights[i] * e * e;
    phi_power += g.weights[i] * pv[i] * pv[i];
  }
  phi_power /= static_cast<double>(checked_pow(grid, dim, kMaxGridEvaluations));

  const auto spec = spectrum_from_grid(g, pv, f.bandwidth());
  const auto c = f.coeffs();
  double in_band = 0.0, zeta_power = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    in_band += std::norm(c[i] - spec.zeta[i]);
    zeta_power += std::norm(spec.zeta[i]);
  }
  ErrorReport r;
  r.l2_sq_error = quad * cell;
  r.coefficient_error = volume * (in_band + std::max(0.0, phi_power - zeta_power));
  return r;
}

bool parseval_consistent(const ErrorReport& r) {
  return std::abs(r.l2_sq_error - r.coefficient_error) <= std::max(1e-6, 1e-3 * r.l2_sq_error);
}

double total_variation_first_derivative(const Mlp& net, std::size_t grid) {
  if (net.input_size() != 1) throw UnsupportedError("total variation is implemented for univariate maps only");
  if (grid < (std::size_t{1} << 14)) throw DomainError("total_variation: need M >= 2^14");
  if (grid > kMaxGridEvaluations) throw ResourceError("total_variation: grid exceeds the evaluation budget");
  std::vector<double> xs(grid + 1);
  for (std::size_t i = 0; i <= grid; ++i) xs[i] = -kPi + kTwoPi * static_cast<double>(i) / static_cast<double>(grid);
  const auto d = derivative_batch(net, xs);
  double tv = 0.0;
  for (std::size_t i = 0; i < grid; ++i) tv += std::abs(d[i + 1] - d[i]);
  return tv;
}

JacobianAudit jacobian_bound_audit(const Mlp& net, std::size_t num_points, std::uint64_t seed) {
  if (num_points == 0) throw DomainError("jacobian_bound_audit: need at least one point");
  const std::size_t dim = net.input_size();
  const auto pts = random_points(dim, num_points, seed);
  const auto norms = weight_norms(net);
  JacobianAudit a;
  a.points = num_points;
  a.spectral_product = norms.spectral_product;
  a.frobenius_product = norms.frobenius_product;
  for (std::size_t i = 0; i < num_points; ++i) {
    const auto j = jacobian(net, std::span<const double>(pts.data() + i * dim, dim));
    double s = 0.0;
    for (double g : j.gradient) s += g * g;
    a.max_jacobian_norm = std::max(a.max_jacobian_norm, std::sqrt(s));
    if (j.at_kink) ++a.kink_points;
  }
  a.holds = a.max_jacobian_norm <= a.spectral_product + 1e-9 && a.spectral_product <= a.frobenius_product + 1e-9;
  return a;
}

std::string spectrum_to_csv(const SpectrumReport& r) {
  std::ostringstream out;
  for (std::size_t a = 0; a < r.dim; ++a) out << 'k' << a << ',';
  out << "abs_zeta,re,im\n";
  for (std::size_t f = 0; f < r.zeta.size(); ++f) {
    for (int k : lattice_point(f, r.dim, r.kmax)) out << k << ',';
    out << textio::format_double(std::abs(r.zeta[f])) << ',' << textio::format_double(r.zeta[f].real()) << ','
        << textio::format_double(r.zeta[f].imag()) << '\n';
  }
  return out.str();
}

std::string error_report_to_csv(const ErrorReport& r) {
  std::ostringstream out;
  out << "n,kappa,l2_sq_error,coefficient_error,max_train_residual\n";
  out << r.n << ',' << textio::format_double(r.kappa) << ',' << textio::format_double(r.l2_sq_error) << ','
      << textio::format_double(r.coefficient_error) << ',' << textio::format_double(r.max_train_residual) << '\n';
  return out.str();
}

void save_spectrum_csv(const SpectrumReport& r, const std::filesystem::path& path) {
  textio::write_file(path, spectrum_to_csv(r));
}

void save_error_report_csv(const ErrorReport& r, const std::filesystem::path& path) {
  textio::write_file(path, error_report_to_csv(r));
}

}  // namespace bandlab
