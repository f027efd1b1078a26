#pragma once

// Measurements of a trained map on [-pi, pi]^d: dense-grid Fourier spectrum
// and decay fits, L2 error against a band-limited target, total variation of
// the derivative, and audits of the Jacobian product bound.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bandlab/bandlimited.hpp"
#include "bandlab/linalg.hpp"
#include "bandlab/network.hpp"

namespace bandlab {

// Batch evaluator: row-major points (count x dim) to values.
using Field = std::function<std::vector<double>(std::span<const double>)>;

Field field_of(const Mlp& net);
Field field_of(const BandlimitedFn& f);

// Dense grids hold M^d nodes at most this many.
inline constexpr std::size_t kMaxGridEvaluations = std::size_t{1} << 24;

struct DecayFit {
  int k_lo = 0;
  int k_hi = 0;
  std::size_t points = 0;  // frequencies (d = 1) or shells (d > 1) used
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;   // RMS misfit in log space
};

struct SpectrumReport {
  std::size_t dim = 1;
  int kmax = 0;
  std::size_t grid = 0;     // M per axis
  std::vector<cplx> zeta;   // lattice {-kmax..kmax}^d, column-stack order
  std::optional<DecayFit> fit;

  cplx at(const std::vector<int>& k) const;
};

// The map restricted to [-pi, pi]^d and extended periodically. zeta_k is the
// trapezoid rule for (2 pi)^{-d} int phi(x) e^{-j k.x} dx on (M+1)^d nodes,
// i.e. a DFT of the grid values with the two copies of each boundary node
// averaged. Requires M >= 8 (2 kmax + 1); ResourceError past the grid budget.
SpectrumReport network_spectrum(const Field& phi, std::size_t dim, int kmax, std::size_t grid);

// Least-squares slope of log|zeta_k| against log k over k_lo <= k <= k_hi.
// For d > 1, |zeta|^2 is averaged over each l1 shell ||k||_1 = t (restricted
// to the analysed cube) and the fit uses log sqrt(mean) against log t.
// Entries below 1e-13 are skipped; fewer than 8 usable points throws
// InsufficientDataError.
DecayFit decay_fit(const SpectrumReport& report, int k_lo, int k_hi);

// [max(8, 2K), min(kmax, M/8)].
std::pair<int, int> default_fit_window(int target_bandwidth, int kmax, std::size_t grid);

struct ErrorReport {
  double l2_sq_error = 0.0;        // trapezoid rule of (f - phi)^2 over [-pi, pi]^d
  double coefficient_error = 0.0;  // (2 pi)^d [sum_band |c - zeta|^2 + out-of-band energy of phi]
  double max_train_residual = 0.0;
  std::size_t n = 0;
  double kappa = 0.0;
};

// Requires M >= 4096 for d = 1 and M >= 8 (2K + 1) otherwise.
ErrorReport l2_error(const Field& phi, const BandlimitedFn& f, std::size_t grid);

// |a - b| <= max(1e-6, 1e-3 * a) for the two error values.
bool parseval_consistent(const ErrorReport& r);

// sum_i |phi'(x_{i+1}) - phi'(x_i)| on x_i = -pi + 2 pi i / M, i = 0..M.
// Univariate nets only; M >= 2^14.
double total_variation_first_derivative(const Mlp& net, std::size_t grid);

struct JacobianAudit {
  std::size_t points = 0;
  double max_jacobian_norm = 0.0;
  double spectral_product = 0.0;
  double frobenius_product = 0.0;
  std::size_t kink_points = 0;  // points where sigma'(0) was used
  bool holds = false;           // max <= spectral + 1e-9 and spectral <= frobenius + 1e-9
};

JacobianAudit jacobian_bound_audit(const Mlp& net, std::size_t num_points, std::uint64_t seed);

std::string spectrum_to_csv(const SpectrumReport& r);
std::string error_report_to_csv(const ErrorReport& r);
void save_spectrum_csv(const SpectrumReport& r, const std::filesystem::path& path);
void save_error_report_csv(const ErrorReport& r, const std::filesystem::path& path);

}  // namespace bandlab
