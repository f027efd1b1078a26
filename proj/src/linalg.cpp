#include "bandlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bandlab/errors.hpp"

namespace bandlab {

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, cplx{0.0, 0.0}) {}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (data_.size() != rows * cols) {
    throw DomainError("ComplexMatrix: entry count does not match shape");
  }
  for (const auto& z : data_) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw DomainError("ComplexMatrix: non-finite entry");
    }
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = std::conj((*this)(r, c));
  return t;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols_ != b.rows_) throw DomainError("matrix product: inner dimensions differ");
  ComplexMatrix c(a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i) {
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx{}) continue;
      for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DomainError("matrix difference: shapes differ");
  ComplexMatrix c = a;
  for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] -= b.data_[i];
  return c;
}

ComplexMatrix operator*(cplx s, const ComplexMatrix& a) {
  ComplexMatrix c = a;
  for (auto& z : c.data_) z *= s;
  return c;
}

std::vector<cplx> operator*(const ComplexMatrix& a, std::span<const cplx> x) {
  if (a.cols() != x.size()) throw DomainError("matrix-vector product: dimension mismatch");
  std::vector<cplx> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cplx s{};
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

double RealMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffDiagonalTolerance = 1e-12;

double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace

EigResult hermitian_eig(const ComplexMatrix& input) {
  const std::size_t n = input.rows();
  if (n != input.cols()) throw DomainError("hermitian_eig: matrix is not square");
  const double scale = input.frobenius_norm();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      if (std::abs(input(i, j) - std::conj(input(j, i))) > 1e-12 * std::max(scale, 1e-300)) {
        throw DomainError("hermitian_eig: matrix is not Hermitian");
      }
    }
  }

  ComplexMatrix a = input;
  ComplexMatrix v = ComplexMatrix::identity(n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = a(i, i).real();

  const double threshold = kOffDiagonalTolerance * scale;
  int sweep = 0;
  while (off_diagonal_norm(a) > threshold) {
    if (++sweep > kMaxSweeps) throw NumericalError("hermitian_eig: Jacobi sweeps did not converge");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double r = std::abs(apq);
        if (r == 0.0) continue;
        // Phase-rotate column q so that a(p,q) becomes the real value r,
        // then annihilate it with a real Jacobi rotation.
        const cplx phase = apq / r;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // G = diag(1, e^{-i phi}) * R, R = [[c, s], [-s, c]] acting on (p, q).
        const cplx gqp = -s * std::conj(phase);
        const cplx gqq = c * std::conj(phase);
        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = c * akp + gqp * akq;
          a(k, q) = s * akp + gqq * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = c * apk + std::conj(gqp) * aqk;
          a(q, k) = s * apk + std::conj(gqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = app - t * r;
        a(q, q) = aqq + t * r;
        for (std::size_t k = 0; k < n; ++k) {
          const cplx vkp = v(k, p);
          const cplx vkq = v(k, q);
          v(k, p) = c * vkp + gqp * vkq;
          v(k, q) = s * vkp + gqq * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i).real() > a(j, j).real(); });
  EigResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors = ComplexMatrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.eigenvalues[c] = a(order[c], order[c]).real();
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, c) = v(r, order[c]);
  }
  return out;
}

namespace {

// One-sided Jacobi on the columns of a (rows >= cols).
SvdResult tall_svd(const ComplexMatrix& input) {
  const std::size_t m = input.rows();
  const std::size_t n = input.cols();
  ComplexMatrix a = input;
  ComplexMatrix v = ComplexMatrix::identity(n);

  auto column_dot = [&](std::size_t p, std::size_t q) {
    cplx s{};
    for (std::size_t k = 0; k < m; ++k) s += std::conj(a(k, p)) * a(k, q);
    return s;
  };

  // Columns below this squared norm are numerically zero; rotating against
  // them only shuffles rounding noise and never settles.
  const double fro = input.frobenius_norm();
  const double null_floor = (1e-14 * fro) * (1e-14 * fro);

  for (int sweep = 0;; ++sweep) {
    if (sweep > kMaxSweeps) throw NumericalError("svd: Jacobi sweeps did not converge");
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = std::real(column_dot(p, p));
        const double beta = std::real(column_dot(q, q));
        const cplx gamma = column_dot(p, q);
        const double g = std::abs(gamma);
        if (alpha <= null_floor || beta <= null_floor) continue;
        if (g == 0.0 || g <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const cplx phase_conj = std::conj(gamma / g);
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < m; ++k) {
          const cplx ap = a(k, p);
          const cplx aq = a(k, q) * phase_conj;
          a(k, p) = c * ap - s * aq;
          a(k, q) = s * ap + c * aq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx vp = v(k, p);
          const cplx vq = v(k, q) * phase_conj;
          v(k, p) = c * vp - s * vq;
          v(k, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += std::norm(a(k, j));
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  SvdResult out;
  out.singular_values.resize(n);
  out.left = ComplexMatrix(m, n);
  out.right = ComplexMatrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.singular_values[c] = sigma[src];
    for (std::size_t r = 0; r < n; ++r) out.right(r, c) = v(r, src);
    if (sigma[src] > 0.0) {
      for (std::size_t r = 0; r < m; ++r) out.left(r, c) = a(r, src) / sigma[src];
    }
  }
  return out;
}

}  // namespace

SvdResult svd(const ComplexMatrix& a) {
  if (a.rows() >= a.cols()) return tall_svd(a);
  SvdResult t = tall_svd(a.adjoint());
  std::swap(t.left, t.right);
  return t;
}

std::vector<double> singular_values(const ComplexMatrix& a) {
  if (a.empty()) return {};
  return svd(a).singular_values;
}

ComplexMatrix pseudo_inverse(const ComplexMatrix& a) {
  if (a.empty()) throw DomainError("pseudo_inverse: empty matrix");
  const SvdResult s = svd(a);
  const double smax = s.singular_values.front();
  const double smin = s.singular_values.back();
  if (a.rows() < a.cols() || !(smin > kRankTolerance * smax)) {
    throw SingularOperatorError(a.rows() < a.cols() ? 0.0 : smin, smax);
  }
  // A^+ = V diag(1/sigma) U^*
  const std::size_t r = s.singular_values.size();
  ComplexMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < a.rows(); ++j) {
      cplx acc{};
      for (std::size_t k = 0; k < r; ++k) acc += s.right(i, k) * std::conj(s.left(j, k)) / s.singular_values[k];
      out(i, j) = acc;
    }
  }
  return out;
}

double condition_number(const ComplexMatrix& a) {
  const auto sv = singular_values(a);
  if (sv.empty() || sv.front() == 0.0) throw DomainError("condition_number: zero matrix");
  const double smax = sv.front();
  const double smin = a.rows() < a.cols() ? 0.0 : sv.back();
  if (!(smin > kRankTolerance * smax)) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

double spectral_norm_real(const RealMatrix& w) {
  if (w.rows == 0 || w.cols == 0) return 0.0;
  const std::size_t n = w.cols;
  std::vector<double> x(n), y(w.rows), z(n);
  // Deterministic start with every component nonzero.
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  double prev = 0.0;
  double estimate = 0.0;
  for (int it = 0; it < 20000; ++it) {
    double xn = 0.0;
    for (double v : x) xn += v * v;
    xn = std::sqrt(xn);
    if (xn == 0.0) return 0.0;
    for (double& v : x) v /= xn;
    for (std::size_t r = 0; r < w.rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += w(r, c) * x[c];
      y[r] = s;
    }
    std::fill(z.begin(), z.end(), 0.0);
    for (std::size_t r = 0; r < w.rows; ++r)
      for (std::size_t c = 0; c < n; ++c) z[c] += w(r, c) * y[r];
    // Rayleigh quotient of W^T W at the unit vector x.
    double rq = 0.0;
    for (double v : y) rq += v * v;
    estimate = std::sqrt(rq);
    if (it > 2 && std::abs(estimate - prev) <= 1e-14 * estimate) break;
    prev = estimate;
    x.swap(z);
  }
  return estimate;
}

}  // namespace bandlab
