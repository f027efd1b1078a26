#include "bandlab/sampling.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "bandlab/errors.hpp"
#include "bandlab/lattice.hpp"
#include "bandlab/textio.hpp"

namespace bandlab {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::uniform_grid: return "uniform-grid";
    case Scheme::oversampled_uniform: return "oversampled-uniform";
    case Scheme::random_iid: return "random-iid";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "uniform-grid" || s == "uniform") return Scheme::uniform_grid;
  if (s == "oversampled-uniform") return Scheme::oversampled_uniform;
  if (s == "random-iid" || s == "random") return Scheme::random_iid;
  throw DomainError("unknown sampling scheme '" + s + "'");
}

void SampleSet::validate() const {
  if (dim == 0) throw DomainError("SampleSet: dimension must be >= 1");
  if (points.size() != values.size() * dim) throw DomainError("SampleSet: points and values differ in length");
  for (double x : points) {
    if (!(x >= -kPi && x < kPi)) throw DomainError("SampleSet: coordinate outside [-pi, pi)");
  }
}

std::vector<double> uniform_points(std::size_t dim, std::size_t per_axis) {
  if (dim == 0 || per_axis == 0) throw DomainError("uniform_points: empty grid");
  const std::size_t n = checked_pow(per_axis, dim, std::size_t{1} << 28);
  if (n > (std::size_t{1} << 28)) throw ResourceError("uniform_points: grid too large");
  std::vector<double> axis(per_axis);
  for (std::size_t i = 0; i < per_axis; ++i) {
    axis[i] = wrap_angle(kTwoPi * static_cast<double>(i) / static_cast<double>(per_axis));
  }
  std::vector<double> pts(n * dim);
  for (std::size_t f = 0; f < n; ++f) {
    std::size_t rest = f;
    for (std::size_t a = 0; a < dim; ++a) {
      pts[f * dim + a] = axis[rest % per_axis];
      rest /= per_axis;
    }
  }
  return pts;
}

std::vector<double> uniform_grid(std::size_t dim, int bandwidth) {
  if (bandwidth < 0) throw DomainError("uniform_grid: bandwidth must be >= 0");
  return uniform_points(dim, static_cast<std::size_t>(2 * bandwidth + 1));
}

namespace {

double circular_gap(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, kTwoPi - d);
}

}  // namespace

std::vector<double> random_points(std::size_t dim, std::size_t count, std::uint64_t seed) {
  if (dim == 0) throw DomainError("random_points: dimension must be >= 1");
  if (count == 0) throw DomainError("random_points: need at least one point");
  constexpr double kMinSeparation = 1e-8;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-kPi, kPi);
  std::vector<double> pts;
  pts.reserve(count * dim);
  std::vector<double> cand(dim);
  while (pts.size() < count * dim) {
    for (auto& c : cand) c = wrap_angle(unif(rng));
    bool clash = false;
    for (std::size_t j = 0; j < pts.size() / dim && !clash; ++j) {
      double gap = 0.0;
      for (std::size_t a = 0; a < dim; ++a) gap = std::max(gap, circular_gap(cand[a], pts[j * dim + a]));
      clash = gap < kMinSeparation;
    }
    if (!clash) pts.insert(pts.end(), cand.begin(), cand.end());
  }
  return pts;
}

SampleSet sample(const BandlimitedFn& f, std::vector<double> points, Scheme scheme, std::optional<std::uint64_t> seed) {
  SampleSet s;
  s.dim = f.dim();
  s.scheme = scheme;
  s.seed = seed;
  s.values = f.evaluate_batch(points);
  s.points = std::move(points);
  s.validate();
  return s;
}

std::vector<int> SamplingOperator::frequency(std::size_t column) const {
  return lattice_point(column, dim, bandwidth);
}

SamplingOperator build_operator(std::span<const double> points, std::size_t dim, int bandwidth, OperatorKind kind) {
  if (dim == 0 || points.size() % dim != 0) throw DomainError("build_operator: point buffer size mismatch");
  const std::size_t n = points.size() / dim;
  const std::size_t cols = lattice_size(dim, bandwidth);
  if (cols > n) {
    throw DomainError("build_operator: coefficient count " + std::to_string(cols) + " exceeds sample count " +
                      std::to_string(n));
  }
  SamplingOperator op;
  op.dim = dim;
  op.bandwidth = bandwidth;
  op.coefficient_count = cols;
  op.kind = kind;
  op.matrix = ComplexMatrix(n, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    const auto k = lattice_point(c, dim, bandwidth);
    for (std::size_t i = 0; i < n; ++i) {
      double phase = 0.0;
      for (std::size_t a = 0; a < dim; ++a) phase += k[a] * points[i * dim + a];
      op.matrix(i, c) = std::polar(1.0, phase);
    }
  }
  return op;
}

SamplingOperator build_operator(const SampleSet& samples, int bandwidth) {
  const auto kind = samples.scheme == Scheme::random_iid ? OperatorKind::nonuniform : OperatorKind::dft_frame;
  return build_operator(samples.points, samples.dim, bandwidth, kind);
}

std::vector<cplx> reconstruct_uniform(std::span<const double> values, std::size_t dim, int bandwidth) {
  if (dim == 0) throw DomainError("reconstruct_uniform: dimension must be >= 1");
  const std::size_t n = values.size();
  const auto m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(dim))));
  if (checked_pow(m, dim, n) != n) throw DomainError("reconstruct_uniform: sample count is not a perfect d-th power");
  const std::size_t cols = lattice_size(dim, bandwidth);
  if (m < static_cast<std::size_t>(2 * bandwidth + 1)) {
    throw DomainError("reconstruct_uniform: coefficient count " + std::to_string(cols) + " exceeds sample count " +
                      std::to_string(n));
  }
  // Row k of F holds e^{-j k.x_i} with x_i = 2*pi*i/m per axis; the wrap into
  // [-pi, pi) does not change these exponentials.
  std::vector<cplx> out(cols);
  std::vector<std::size_t> idx(dim);
  for (std::size_t c = 0; c < cols; ++c) {
    const auto k = lattice_point(c, dim, bandwidth);
    cplx acc{};
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      long long phase_index = 0;
      for (std::size_t a = 0; a < dim; ++a) phase_index += static_cast<long long>(k[a]) * static_cast<long long>(idx[a]);
      const auto reduced = static_cast<double>(((phase_index % static_cast<long long>(m)) + static_cast<long long>(m)) %
                                               static_cast<long long>(m));
      acc += values[i] * std::polar(1.0, -kTwoPi * reduced / static_cast<double>(m));
      for (std::size_t a = 0; a < dim; ++a) {
        if (++idx[a] < m) break;
        idx[a] = 0;
      }
    }
    out[c] = acc / static_cast<double>(n);
  }
  return out;
}

std::vector<cplx> reconstruct_nonuniform(const SamplingOperator& op, std::span<const double> values) {
  if (values.size() != op.matrix.rows()) throw DomainError("reconstruct_nonuniform: value count does not match operator");
  const ComplexMatrix pinv = pseudo_inverse(op.matrix);
  std::vector<cplx> y(values.begin(), values.end());
  return pinv * std::span<const cplx>(y);
}

double CosineSeries::evaluate(double x) const {
  const double theta = (wrap_angle(x) + kPi) / 2.0;
  double s = 0.0;
  for (std::size_t m = 0; m < coeffs.size(); ++m) s += coeffs[m] * std::cos(static_cast<double>(m) * theta);
  return s;
}

CosineSeries reconstruct_dct_symmetric(std::span<const double> values, std::size_t dim, std::size_t terms) {
  if (dim != 1) throw UnsupportedError("reconstruct_dct_symmetric: only univariate signals are supported");
  const std::size_t n = values.size();
  if (n == 0 || n % 2 == 0) {
    throw DomainError("reconstruct_dct_symmetric: needs an odd uniform grid (midpoint layout)");
  }
  if (terms == 0 || terms > n) throw DomainError("reconstruct_dct_symmetric: term count must lie in [1, n]");
  // On an odd grid the sorted points are -pi + (i + 1/2) * 2*pi/n, which is the
  // DCT-II layout for the mirrored extension. Grid order index j sits at
  // sorted position (j + (n-1)/2) mod n.
  std::vector<double> sorted(n);
  const std::size_t half = (n - 1) / 2;
  for (std::size_t j = 0; j < n; ++j) sorted[(j + half) % n] = values[j];
  CosineSeries s;
  s.coeffs.assign(terms, 0.0);
  for (std::size_t m = 0; m < terms; ++m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += sorted[i] * std::cos(kPi * static_cast<double>(m) * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    }
    s.coeffs[m] = acc * (m == 0 ? 1.0 : 2.0) / static_cast<double>(n);
  }
  return s;
}

std::pair<double, double> manova_support(double beta, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0) || !(beta >= 1.0) || !(beta * gamma <= 1.0)) {
    throw DomainError("manova_support: need 0 <= gamma < 1, beta >= 1, beta * gamma <= 1");
  }
  const double a = std::sqrt(beta * (1.0 - gamma));
  const double b = std::sqrt(1.0 - beta * gamma);
  return {(a - b) * (a - b), (a + b) * (a + b)};
}

double kappa_bound(double beta) {
  if (!(beta > 1.0)) throw DomainError("kappa_bound: beta must be > 1");
  const double r = std::sqrt(beta);
  return (r + 1.0) * (r + 1.0) / ((r - 1.0) * (r - 1.0));
}

std::string samples_to_csv(const SampleSet& s) {
  std::ostringstream out;
  out << "dim,scheme,seed\n";
  out << s.dim << ',' << to_string(s.scheme) << ',';
  if (s.seed) out << *s.seed;
  out << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t a = 0; a < s.dim; ++a) out << textio::format_double(s.points[i * s.dim + a]) << ',';
    out << textio::format_double(s.values[i]) << '\n';
  }
  return out.str();
}

SampleSet samples_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || textio::trim(line) != "dim,scheme,seed") throw DomainError("sample CSV: bad header");
  if (!std::getline(in, line)) throw DomainError("sample CSV: missing metadata row");
  const auto meta = textio::split(line, ',');
  if (meta.size() != 3) throw DomainError("sample CSV: metadata row needs dim,scheme,seed");
  SampleSet s;
  s.dim = static_cast<std::size_t>(textio::parse_u64(meta[0]));
  s.scheme = scheme_from_string(meta[1]);
  if (!meta[2].empty()) s.seed = textio::parse_u64(meta[2]);
  while (std::getline(in, line)) {
    if (textio::trim(line).empty()) continue;
    const auto f = textio::split(line, ',');
    if (f.size() != s.dim + 1) throw DomainError("sample CSV: row has wrong field count");
    for (std::size_t a = 0; a < s.dim; ++a) s.points.push_back(textio::parse_double(f[a]));
    s.values.push_back(textio::parse_double(f[s.dim]));
  }
  s.validate();
  return s;
}

void save_samples_csv(const SampleSet& s, const std::filesystem::path& path) {
  textio::write_file(path, samples_to_csv(s));
}

SampleSet load_samples_csv(const std::filesystem::path& path) { return samples_from_csv(textio::read_file(path)); }

}  // namespace bandlab
