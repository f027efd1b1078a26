#pragma once

// Sample sets, DFT frames / nonuniform Fourier operators, coefficient
// reconstruction and random-frame conditioning bounds.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bandlab/bandlimited.hpp"
#include "bandlab/linalg.hpp"

namespace bandlab {

enum class Scheme { uniform_grid, oversampled_uniform, random_iid };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct SampleSet {
  std::size_t dim = 1;
  Scheme scheme = Scheme::uniform_grid;
  std::optional<std::uint64_t> seed;
  std::vector<double> points;  // row-major, size() x dim
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  std::span<const double> point(std::size_t i) const { return {points.data() + i * dim, dim}; }
  void validate() const;
};

// (2K+1)^d points with per-axis spacing 2*pi/(2K+1), in grid order (axis 0
// fastest, index i maps to 2*pi*i/m wrapped into [-pi, pi)).
std::vector<double> uniform_grid(std::size_t dim, int bandwidth);

// m^d equispaced points, m per axis; the oversampled DFT-frame grid.
std::vector<double> uniform_points(std::size_t dim, std::size_t per_axis);

// i.i.d. U[-pi, pi)^d. Points whose circular max-norm distance to an earlier
// point is below 1e-8 are redrawn.
std::vector<double> random_points(std::size_t dim, std::size_t count, std::uint64_t seed);

SampleSet sample(const BandlimitedFn& f, std::vector<double> points, Scheme scheme,
                 std::optional<std::uint64_t> seed = std::nullopt);

enum class OperatorKind { dft_frame, nonuniform };

struct SamplingOperator {
  ComplexMatrix matrix;  // n x Ñ, entry (i, k) = e^{j k.x_i}
  std::size_t dim = 1;
  int bandwidth = 0;     // K̃, Ñ = (2K̃+1)^d
  std::size_t coefficient_count = 0;
  OperatorKind kind = OperatorKind::nonuniform;

  std::vector<int> frequency(std::size_t column) const;
};

// Throws DomainError when Ñ > n.
SamplingOperator build_operator(std::span<const double> points, std::size_t dim, int bandwidth,
                                OperatorKind kind = OperatorKind::nonuniform);
SamplingOperator build_operator(const SampleSet& samples, int bandwidth);

// zeta = (1/n) F y for values on the m^d uniform grid (grid order).
std::vector<cplx> reconstruct_uniform(std::span<const double> values, std::size_t dim, int bandwidth);

// zeta = D^+ y. Throws SingularOperatorError on a rank-deficient operator.
std::vector<cplx> reconstruct_nonuniform(const SamplingOperator& op, std::span<const double> values);

// Cosine series of the mirrored (period 4*pi) extension of a univariate
// signal sampled on an odd uniform grid. Coefficient a[m] multiplies
// cos(m (x + pi) / 2), i.e. frequency m/2 in units of x.
struct CosineSeries {
  std::vector<double> coeffs;
  double evaluate(double x) const;
};

CosineSeries reconstruct_dct_symmetric(std::span<const double> values, std::size_t dim, std::size_t terms);

std::pair<double, double> manova_support(double beta, double gamma);
double kappa_bound(double beta);

void save_samples_csv(const SampleSet& s, const std::filesystem::path& path);
SampleSet load_samples_csv(const std::filesystem::path& path);
std::string samples_to_csv(const SampleSet& s);
SampleSet samples_from_csv(const std::string& text);

}  // namespace bandlab
