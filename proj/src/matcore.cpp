#include "qmarg/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qmarg/error.hpp"

namespace qmarg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::SpectraMismatch: return "SpectraMismatch";
    case ErrorKind::AncillaTooSmall: return "AncillaTooSmall";
    case ErrorKind::Incompatible: return "Incompatible";
    case ErrorKind::IncompatibleMarginals: return "IncompatibleMarginals";
    case ErrorKind::InvalidEnsemble: return "InvalidEnsemble";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::NegativeSymbol: return "NegativeSymbol";
    case ErrorKind::SmallDenominator: return "SmallDenominator";
    case ErrorKind::WrongDimension: return "WrongDimension";
    case ErrorKind::DegenerateChoice: return "DegenerateChoice";
    case ErrorKind::CertificateDegenerate: return "CertificateDegenerate";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& detail, double value)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), value_(value) {}

// ---------------------------------------------------------------------------
// ComplexMatrix

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorKind::InvalidArgument, "entry count " + std::to_string(data_.size()) +
                                                " does not match " + std::to_string(rows_) + "x" +
                                                std::to_string(cols_));
  }
  if (!all_finite()) throw Error(ErrorKind::InvalidArgument, "matrix has non-finite entries");
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorKind::InvalidArgument, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> diag) {
  ComplexMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

ComplexMatrix ComplexMatrix::outer(std::span<const cplx> v, std::span<const cplx> w) {
  ComplexMatrix m(v.size(), w.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j) m(i, j) = v[i] * std::conj(w[j]);
  return m;
}

std::vector<cplx> ComplexMatrix::column(std::size_t c) const {
  std::vector<cplx> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix m(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) m(c, r) = std::conj((*this)(r, c));
  return m;
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix m(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) m(c, r) = (*this)(r, c);
  return m;
}

cplx ComplexMatrix::trace() const {
  cplx t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double ComplexMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z));
  return m;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

bool ComplexMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

static void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::ShapeMismatch,
                std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  require_same_shape(*this, o, "operator+");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  require_same_shape(*this, o, "operator-");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
  for (auto& z : data_) z *= s;
  return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "matrix product inner dimensions " +
                                              std::to_string(a.cols()) + " vs " +
                                              std::to_string(b.rows()));
  }
  ComplexMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx(0.0)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

std::vector<cplx> operator*(const ComplexMatrix& a, std::span<const cplx> v) {
  if (a.cols() != v.size()) throw Error(ErrorKind::ShapeMismatch, "matrix-vector product");
  std::vector<cplx> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double real_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "real_inner");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += (std::conj(a.data()[i]) * b.data()[i]).real();
  return s;
}

// ---------------------------------------------------------------------------
// FactorShape

FactorShape::FactorShape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw Error(ErrorKind::InvalidArgument, "factor shape needs at least one factor");
  for (auto d : dims_)
    if (d == 0) throw Error(ErrorKind::InvalidArgument, "factor dimensions must be positive");
}

FactorShape::FactorShape(std::initializer_list<std::size_t> dims)
    : FactorShape(std::vector<std::size_t>(dims)) {}

std::size_t FactorShape::total() const noexcept {
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
}

FactorShape FactorShape::keep(std::span<const std::size_t> factors) const {
  std::vector<std::size_t> d;
  for (auto f : factors) d.push_back(dims_.at(f));
  if (d.empty()) d.push_back(1);
  return FactorShape(std::move(d));
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver

double hermiticity_defect(const ComplexMatrix& a) {
  if (!a.is_square()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - std::conj(a(j, i))));
  return m;
}

void require_hermitian(const ComplexMatrix& a, double tol) {
  if (!a.is_square()) {
    throw Error(ErrorKind::NotHermitian,
                "matrix is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  const double defect = hermiticity_defect(a);
  if (defect > tol) {
    throw Error(ErrorKind::NotHermitian, "max |A - A^dagger| = " + std::to_string(defect), defect);
  }
}

ComplexMatrix hermitian_part(const ComplexMatrix& a) {
  ComplexMatrix h = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    h(i, i) = a(i, i).real();
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const cplx v = 0.5 * (a(i, j) + std::conj(a(j, i)));
      h(i, j) = v;
      h(j, i) = std::conj(v);
    }
  }
  return h;
}

HermitianEig herm_eig(const ComplexMatrix& input, const JacobiOptions& opts) {
  require_hermitian(input);
  const std::size_t n = input.rows();
  ComplexMatrix a = hermitian_part(input);
  ComplexMatrix v = ComplexMatrix::identity(n);

  const double scale = a.frobenius_norm();
  const double threshold = opts.off_diag_tol * (scale > 0.0 ? scale : 1.0);
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * std::norm(a(i, j));
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > threshold) {
    if (++sweep > opts.max_sweeps) {
      throw Error(ErrorKind::NoConvergence,
                  "Jacobi exceeded " + std::to_string(opts.max_sweeps) + " sweeps", off_norm());
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx g = a(p, q);
        const double mag = std::abs(g);
        if (mag == 0.0) continue;
        const cplx phase = g / mag;  // e^{i alpha}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * mag);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // J = diag(1, e^{-i alpha}) * [[c, s], [-s, c]]
        const cplx jpp = c, jpq = s;
        const cplx jqp = -s * std::conj(phase), jqq = c * std::conj(phase);
        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * jpp + akq * jqp;
          a(k, q) = akp * jpq + akq * jqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
          a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * jpp + vkq * jqp;
          v(k, q) = vkp * jpq + vkq * jqq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });
  HermitianEig out;
  out.eigenvalues.resize(n);
  out.eigenvectors = ComplexMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]).real();
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
  }
  return out;
}

std::vector<double> eigenvalues(const ComplexMatrix& a) { return herm_eig(a).eigenvalues; }

ComplexMatrix apply_spectral(const HermitianEig& eig, const std::function<double(double)>& f) {
  const auto& v = eig.eigenvectors;
  const std::size_t n = v.rows();
  ComplexMatrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = f(eig.eigenvalues[k]);
    if (fk == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx vik = v(i, k) * fk;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * std::conj(v(j, k));
    }
  }
  return hermitian_part(out);
}

ComplexMatrix apply_spectral(const ComplexMatrix& a, const std::function<double(double)>& f) {
  return apply_spectral(herm_eig(a), f);
}

ComplexMatrix matrix_exp(const ComplexMatrix& a) {
  return apply_spectral(a, [](double x) { return std::exp(x); });
}

ComplexMatrix matrix_log(const ComplexMatrix& a, double min_eig) {
  const auto eig = herm_eig(a);
  if (eig.eigenvalues.front() <= min_eig) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "smallest eigenvalue " + std::to_string(eig.eigenvalues.front()),
                eig.eigenvalues.front());
  }
  return apply_spectral(eig, [](double x) { return std::log(x); });
}

ComplexMatrix matrix_sqrt_psd(const ComplexMatrix& a) {
  return apply_spectral(a, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

double trace_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (double x : eigenvalues(a)) s += std::abs(x);
  return s;
}

// ---------------------------------------------------------------------------
// Tensor products and partial traces

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx aij = a(i, j);
      if (aij == cplx(0.0)) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

ComplexMatrix kron(std::initializer_list<std::reference_wrapper<const ComplexMatrix>> factors) {
  auto it = factors.begin();
  if (it == factors.end()) return ComplexMatrix::identity(1);
  ComplexMatrix out = it->get();
  for (++it; it != factors.end(); ++it) out = kron(out, it->get());
  return out;
}

std::vector<cplx> kron(std::span<const cplx> a, std::span<const cplx> b) {
  std::vector<cplx> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(x * y);
  return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& a, const FactorShape& shape,
                            std::span<const std::size_t> keep) {
  const std::size_t total = shape.total();
  if (!a.is_square() || a.rows() != total) {
    throw Error(ErrorKind::ShapeMismatch, "matrix side " + std::to_string(a.rows()) +
                                              " does not match shape total " + std::to_string(total));
  }
  const std::size_t nf = shape.size();
  std::vector<bool> kept(nf, false);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto f = keep[i];
    if (f >= nf || kept[f]) throw Error(ErrorKind::ShapeMismatch, "invalid kept factor index");
    if (i > 0 && f < keep[i - 1]) throw Error(ErrorKind::ShapeMismatch, "kept factors must be ascending");
    kept[f] = true;
  }

  std::size_t kdim = 1, tdim = 1;
  for (std::size_t f = 0; f < nf; ++f) (kept[f] ? kdim : tdim) *= shape[f];

  // For every composite index, split into (kept index, traced index).
  std::vector<std::size_t> kidx(total), tidx(total);
  std::vector<std::size_t> digits(nf, 0);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t k = 0, t = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      if (kept[f]) k = k * shape[f] + digits[f];
      else t = t * shape[f] + digits[f];
    }
    kidx[i] = k;
    tidx[i] = t;
    for (std::size_t f = nf; f-- > 0;) {
      if (++digits[f] < shape[f]) break;
      digits[f] = 0;
    }
  }
  // Inverse map (kept, traced) -> composite.
  std::vector<std::size_t> compose(kdim * tdim);
  for (std::size_t i = 0; i < total; ++i) compose[kidx[i] * tdim + tidx[i]] = i;

  ComplexMatrix out(kdim, kdim);
  for (std::size_t r = 0; r < kdim; ++r)
    for (std::size_t c = 0; c < kdim; ++c) {
      cplx s = 0.0;
      for (std::size_t t = 0; t < tdim; ++t) s += a(compose[r * tdim + t], compose[c * tdim + t]);
      out(r, c) = s;
    }
  return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& a, const FactorShape& shape,
                            std::initializer_list<std::size_t> keep) {
  return partial_trace(a, shape, std::span<const std::size_t>(keep.begin(), keep.size()));
}

std::size_t numerical_rank(std::span<const std::vector<cplx>> vectors, double tol) {
  if (vectors.empty()) return 0;
  const std::size_t m = vectors.size();
  const std::size_t d = vectors.front().size();
  // Singular values of the d x m matrix M are the positive eigenvalues of [[0, M], [M^dagger, 0]].
  ComplexMatrix aug(d + m, d + m);
  for (std::size_t c = 0; c < m; ++c) {
    if (vectors[c].size() != d) throw Error(ErrorKind::ShapeMismatch, "vectors of unequal length");
    for (std::size_t r = 0; r < d; ++r) {
      aug(r, d + c) = vectors[c][r];
      aug(d + c, r) = std::conj(vectors[c][r]);
    }
  }
  std::size_t rank = 0;
  for (double s : eigenvalues(aug))
    if (s > tol) ++rank;
  return rank;
}

ComplexMatrix range_basis(const ComplexMatrix& a, double threshold) {
  const auto eig = herm_eig(a);
  std::vector<std::size_t> cols;
  for (std::size_t k = 0; k < eig.eigenvalues.size(); ++k)
    if (eig.eigenvalues[k] > threshold) cols.push_back(k);
  ComplexMatrix out(a.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t r = 0; r < a.rows(); ++r) out(r, j) = eig.eigenvectors(r, cols[j]);
  return out;
}

}  // namespace qmarg
