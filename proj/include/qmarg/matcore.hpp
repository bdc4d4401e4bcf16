#pragma once

// Dense complex linear algebra for desk-scale operators (side <= a few hundred).
//
// Composite indices over a tensor product follow one global convention:
// i = ((i1 * d2) + i2) * d3 + i3, factor 1 varies slowest. kron() and
// partial_trace() both obey it.

#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace qmarg {

using cplx = std::complex<double>;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  // Row-major entries; throws InvalidArgument on size mismatch or non-finite data.
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);
  ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix zeros(std::size_t rows, std::size_t cols);
  static ComplexMatrix diagonal(std::span<const double> diag);
  // |v><w|
  static ComplexMatrix outer(std::span<const cplx> v, std::span<const cplx> w);
  static ComplexMatrix projector(std::span<const cplx> v) { return outer(v, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const cplx> data() const noexcept { return data_; }
  std::span<cplx> data() noexcept { return data_; }

  std::vector<cplx> column(std::size_t c) const;

  ComplexMatrix adjoint() const;
  ComplexMatrix transpose() const;
  cplx trace() const;
  double max_abs() const;
  double frobenius_norm() const;
  bool all_finite() const;

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(cplx s);

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
  friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

std::vector<cplx> operator*(const ComplexMatrix& a, std::span<const cplx> v);

// max |a_ij - b_ij|; shapes must agree.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
// Re Tr(a^dagger b)
double real_inner(const ComplexMatrix& a, const ComplexMatrix& b);

// Tensor-factor shape of a composite system.
class FactorShape {
 public:
  FactorShape() = default;
  FactorShape(std::vector<std::size_t> dims);
  FactorShape(std::initializer_list<std::size_t> dims);

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t i) const { return dims_.at(i); }
  std::size_t total() const noexcept;
  FactorShape keep(std::span<const std::size_t> factors) const;

  friend bool operator==(const FactorShape&, const FactorShape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

struct HermitianEig {
  std::vector<double> eigenvalues;  // ascending
  ComplexMatrix eigenvectors;       // columns, orthonormal
};

constexpr double kHermitianTol = 1e-10;

struct JacobiOptions {
  double off_diag_tol = 1e-13;  // relative to the Frobenius norm of the input
  int max_sweeps = 100;
};

double hermiticity_defect(const ComplexMatrix& a);
void require_hermitian(const ComplexMatrix& a, double tol = kHermitianTol);
ComplexMatrix hermitian_part(const ComplexMatrix& a);

// Cyclic complex Jacobi. Throws NotHermitian / NoConvergence.
HermitianEig herm_eig(const ComplexMatrix& a, const JacobiOptions& opts = {});
std::vector<double> eigenvalues(const ComplexMatrix& a);

// V diag(f(lambda)) V^dagger
ComplexMatrix apply_spectral(const HermitianEig& eig, const std::function<double(double)>& f);
ComplexMatrix apply_spectral(const ComplexMatrix& a, const std::function<double(double)>& f);

ComplexMatrix matrix_exp(const ComplexMatrix& a);
// Throws NotPositiveDefinite unless lambda_min > min_eig.
ComplexMatrix matrix_log(const ComplexMatrix& a, double min_eig = 1e-12);
// Square root of a PSD matrix; eigenvalues below zero are clipped.
ComplexMatrix matrix_sqrt_psd(const ComplexMatrix& a);

double trace_norm(const ComplexMatrix& a);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix kron(std::initializer_list<std::reference_wrapper<const ComplexMatrix>> factors);
std::vector<cplx> kron(std::span<const cplx> a, std::span<const cplx> b);

// Trace out every factor not listed in `keep`. Kept factors retain their order.
ComplexMatrix partial_trace(const ComplexMatrix& a, const FactorShape& shape,
                            std::span<const std::size_t> keep);
ComplexMatrix partial_trace(const ComplexMatrix& a, const FactorShape& shape,
                            std::initializer_list<std::size_t> keep);

// Numerical rank of a set of vectors (singular values above tol, relative to the largest).
std::size_t numerical_rank(std::span<const std::vector<cplx>> vectors, double tol = 1e-9);

// Orthonormal basis for the span of the eigenvectors of a Hermitian matrix with
// eigenvalue above `threshold`. Returned as the columns of a matrix.
ComplexMatrix range_basis(const ComplexMatrix& a, double threshold);

}  // namespace qmarg
