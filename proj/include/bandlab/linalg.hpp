#pragma once

// Small dense linear algebra for sampling operators and weight matrices.
// Everything here is sized for matrices of at most a few hundred columns.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace bandlab {

using cplx = std::complex<double>;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> row_major);

  static ComplexMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const cplx> data() const noexcept { return data_; }
  std::span<cplx> data() noexcept { return data_; }

  ComplexMatrix adjoint() const;
  double frobenius_norm() const;

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
  friend ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);
  friend ComplexMatrix operator*(cplx s, const ComplexMatrix& a);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

std::vector<cplx> operator*(const ComplexMatrix& a, std::span<const cplx> x);

// Real row-major matrix; the storage type for network weights.
struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  RealMatrix() = default;
  RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double frobenius_norm() const;
};

struct EigResult {
  std::vector<double> eigenvalues;  // descending
  ComplexMatrix eigenvectors;       // column i pairs with eigenvalues[i]
};

struct SvdResult {
  std::vector<double> singular_values;  // descending
  ComplexMatrix left;                   // rows x r
  ComplexMatrix right;                  // cols x r
};

// Cyclic Jacobi on a Hermitian matrix. Throws DomainError on non-square or
// non-Hermitian input, NumericalError if the sweep cap is hit.
EigResult hermitian_eig(const ComplexMatrix& a);

// Thin SVD by one-sided (Hestenes) Jacobi rotations applied to the columns.
SvdResult svd(const ComplexMatrix& a);

std::vector<double> singular_values(const ComplexMatrix& a);

// Relative rank threshold: sigma_min <= kRankTolerance * sigma_max means singular.
inline constexpr double kRankTolerance = 1e-10;

// Moore-Penrose inverse of a full-column-rank matrix. Throws
// SingularOperatorError when rank-deficient under kRankTolerance.
ComplexMatrix pseudo_inverse(const ComplexMatrix& a);

// sigma_max / sigma_min of `a` itself. The Gram matrix a*a has the square of
// this value. Returns +infinity when a is rank-deficient.
double condition_number(const ComplexMatrix& a);

// Largest singular value by power iteration on W^T W.
double spectral_norm_real(const RealMatrix& w);

}  // namespace bandlab
