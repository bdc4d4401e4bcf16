#include "qmarg/states.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>

#include "qmarg/error.hpp"

namespace qmarg {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

}  // namespace

DensityMatrix::DensityMatrix(ComplexMatrix mat, FactorShape shape, const StateTolerances& tol)
    : shape_(std::move(shape)) {
  if (!mat.is_square() || mat.rows() != shape_.total()) {
    throw Error(ErrorKind::ShapeMismatch, "density matrix side " + std::to_string(mat.rows()) +
                                              " vs factor shape total " +
                                              std::to_string(shape_.total()));
  }
  const double defect = hermiticity_defect(mat);
  if (defect > tol.hermitian) {
    throw Error(ErrorKind::InvalidState, "not Hermitian (defect " + fmt(defect) + ")", defect);
  }
  const double tr = mat.trace().real();
  if (std::abs(tr - 1.0) > tol.trace) {
    throw Error(ErrorKind::InvalidState, "trace " + fmt(tr) + " is not 1", tr);
  }
  auto eig = herm_eig(hermitian_part(mat));
  const double lmin = eig.eigenvalues.front();
  if (lmin < -tol.psd) {
    throw Error(ErrorKind::InvalidState, "negative eigenvalue " + fmt(lmin), lmin);
  }
  if (lmin < 0.0) {
    for (auto& l : eig.eigenvalues) l = std::max(l, 0.0);
    const double s = std::accumulate(eig.eigenvalues.begin(), eig.eigenvalues.end(), 0.0);
    for (auto& l : eig.eigenvalues) l /= s;
    mat_ = apply_spectral(eig, [](double x) { return x; });
  } else {
    mat_ = hermitian_part(mat);
  }
  spectrum_ = std::move(eig.eigenvalues);
}

namespace {
FactorShape single_factor(const ComplexMatrix& m) { return FactorShape{std::max<std::size_t>(m.rows(), 1)}; }
}  // namespace

DensityMatrix::DensityMatrix(ComplexMatrix mat, const StateTolerances& tol)
    : DensityMatrix(mat, single_factor(mat), tol) {}

std::size_t DensityMatrix::rank(double threshold) const {
  return static_cast<std::size_t>(
      std::count_if(spectrum_.begin(), spectrum_.end(), [&](double l) { return l >= threshold; }));
}

DensityMatrix DensityMatrix::reshaped(FactorShape shape) const { return {mat_, std::move(shape)}; }

DensityMatrix DensityMatrix::marginal(std::initializer_list<std::size_t> keep) const {
  return marginal(std::span<const std::size_t>(keep.begin(), keep.size()));
}

DensityMatrix DensityMatrix::marginal(std::span<const std::size_t> keep) const {
  return {partial_trace(mat_, shape_, keep), shape_.keep(keep)};
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  auto dims = a.shape().dims();
  dims.insert(dims.end(), b.shape().dims().begin(), b.shape().dims().end());
  return {kron(a.mat(), b.mat()), FactorShape(std::move(dims))};
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b, const DensityMatrix& c) {
  return tensor(tensor(a, b), c);
}

DensityMatrix maximally_mixed(std::size_t dim) {
  return DensityMatrix(ComplexMatrix::identity(dim) * cplx(1.0 / static_cast<double>(dim)));
}

DensityMatrix pure_state(std::span<const cplx> psi, FactorShape shape) {
  double n2 = 0.0;
  for (const auto& z : psi) n2 += std::norm(z);
  if (n2 == 0.0) throw Error(ErrorKind::InvalidArgument, "zero state vector");
  return {ComplexMatrix::projector(psi) * cplx(1.0 / n2), std::move(shape)};
}

DensityMatrix pure_state(std::span<const cplx> psi) { return pure_state(psi, FactorShape{psi.size()}); }

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return trace_norm(a.mat() - b.mat());
}

double entropy_of_spectrum(std::span<const double> probs) {
  double s = 0.0;
  for (double p : probs)
    if (p > 1e-14) s -= p * std::log(p);
  return s;
}

double entropy(const DensityMatrix& rho) { return entropy_of_spectrum(rho.spectrum()); }

DensityMatrix pure_coupling(const DensityMatrix& rho1, const DensityMatrix& rho2, double spectrum_tol) {
  const auto e1 = herm_eig(rho1.mat());
  const auto e2 = herm_eig(rho2.mat());
  auto nonzero = [](const HermitianEig& e) {
    std::vector<std::size_t> idx;
    for (std::size_t k = e.eigenvalues.size(); k-- > 0;)
      if (e.eigenvalues[k] >= 1e-12) idx.push_back(k);  // descending
    return idx;
  };
  const auto i1 = nonzero(e1), i2 = nonzero(e2);
  if (i1.size() != i2.size()) {
    throw Error(ErrorKind::SpectraMismatch, "nonzero spectra have sizes " + std::to_string(i1.size()) +
                                                " and " + std::to_string(i2.size()));
  }
  const std::size_t d1 = rho1.dim(), d2 = rho2.dim();
  std::vector<cplx> psi(d1 * d2, 0.0);
  for (std::size_t k = 0; k < i1.size(); ++k) {
    const double a = e1.eigenvalues[i1[k]], b = e2.eigenvalues[i2[k]];
    if (std::abs(a - b) > spectrum_tol) {
      throw Error(ErrorKind::SpectraMismatch, "eigenvalue " + std::to_string(k) + " differs by " +
                                                  fmt(std::abs(a - b)), std::abs(a - b));
    }
    const double w = std::sqrt(0.5 * (a + b));
    for (std::size_t i = 0; i < d1; ++i)
      for (std::size_t j = 0; j < d2; ++j)
        psi[i * d2 + j] += w * e1.eigenvectors(i, i1[k]) * e2.eigenvectors(j, i2[k]);
  }
  return pure_state(psi, FactorShape{d1, d2});
}

DensityMatrix purify(const DensityMatrix& rho, std::size_t ancilla_dim) {
  const std::size_t r = rho.rank();
  if (ancilla_dim < r || ancilla_dim == 0) {
    throw Error(ErrorKind::AncillaTooSmall, "rank " + std::to_string(r) + " exceeds ancilla dimension " +
                                                std::to_string(ancilla_dim));
  }
  const auto e = herm_eig(rho.mat());
  const std::size_t d = rho.dim();
  std::vector<cplx> psi(d * ancilla_dim, 0.0);
  std::size_t slot = 0;
  for (std::size_t k = d; k-- > 0 && slot < ancilla_dim;) {
    const double l = e.eigenvalues[k];
    if (l <= 0.0) break;
    for (std::size_t i = 0; i < d; ++i) psi[i * ancilla_dim + slot] = std::sqrt(l) * e.eigenvectors(i, k);
    ++slot;
  }
  return pure_state(psi, FactorShape{d, ancilla_dim});
}

namespace {

ComplexMatrix ginibre(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexMatrix g(rows, cols);
  for (auto& z : g.data()) z = cplx(normal(gen), normal(gen));
  return g;
}

}  // namespace

DensityMatrix random_density(std::size_t dim, std::size_t rank, std::uint64_t seed) {
  if (rank < 1 || rank > dim) {
    throw Error(ErrorKind::InvalidArgument, "rank must lie in [1, dim]");
  }
  std::mt19937_64 gen(seed);
  const auto g = ginibre(dim, rank, gen);
  auto m = g * g.adjoint();
  m *= cplx(1.0 / m.trace().real());
  return DensityMatrix(std::move(m));
}

ComplexMatrix random_unitary(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto u = ginibre(dim, dim, gen);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      cplx dot = 0.0;
      for (std::size_t r = 0; r < dim; ++r) dot += std::conj(u(r, p)) * u(r, c);
      for (std::size_t r = 0; r < dim; ++r) u(r, c) -= dot * u(r, p);
    }
    double n = 0.0;
    for (std::size_t r = 0; r < dim; ++r) n += std::norm(u(r, c));
    n = std::sqrt(n);
    for (std::size_t r = 0; r < dim; ++r) u(r, c) /= n;
  }
  return u;
}

CompatiblePair::CompatiblePair(DensityMatrix rho12, DensityMatrix rho23, double tol)
    : rho12_(std::move(rho12)),
      rho23_(std::move(rho23)),
      rho2_(maximally_mixed(1)),
      rho1_(maximally_mixed(1)),
      rho3_(maximally_mixed(1)) {
  if (rho12_.shape().size() != 2 || rho23_.shape().size() != 2) {
    throw Error(ErrorKind::ShapeMismatch, "pair members must be bipartite");
  }
  if (rho12_.shape()[1] != rho23_.shape()[0]) {
    throw Error(ErrorKind::ShapeMismatch, "middle factor dimensions " +
                                              std::to_string(rho12_.shape()[1]) + " and " +
                                              std::to_string(rho23_.shape()[0]) + " differ");
  }
  const auto from12 = rho12_.marginal({1});
  const auto from23 = rho23_.marginal({0});
  middle_distance_ = trace_distance(from12, from23);
  if (middle_distance_ > tol) {
    throw Error(ErrorKind::Incompatible, "middle marginals differ by " + fmt(middle_distance_),
                middle_distance_);
  }
  rho2_ = DensityMatrix((from12.mat() + from23.mat()) * cplx(0.5));
  rho1_ = rho12_.marginal({0});
  rho3_ = rho23_.marginal({1});
}

}  // namespace qmarg
