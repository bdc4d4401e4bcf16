#include "qmarg/constructors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qmarg/error.hpp"

namespace qmarg {

namespace {

constexpr double kZeroFiber = 1e-14;

std::vector<double> normalized_positive(std::span<const double> v, const char* what) {
  if (v.empty()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be non-empty");
  double s = 0.0;
  for (double x : v) {
    if (!(x > 0.0)) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be positive");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-6) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must sum to 1", s);
  }
  std::vector<double> out(v.begin(), v.end());
  for (auto& x : out) x /= s;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Classical conditioning

ClassicalJoint::ClassicalJoint(FactorShape dims, std::vector<double> probs, double tol)
    : dims_(std::move(dims)), probs_(std::move(probs)) {
  if (probs_.size() != dims_.total()) {
    throw Error(ErrorKind::InvalidArgument, "probability table has " + std::to_string(probs_.size()) +
                                                " entries, expected " + std::to_string(dims_.total()));
  }
  double s = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidArgument, "negative probability", p);
    s += p;
  }
  if (std::abs(s - 1.0) > tol) throw Error(ErrorKind::InvalidArgument, "probabilities do not sum to 1", s);
}

ClassicalJoint ClassicalJoint::marginal(std::initializer_list<std::size_t> keep) const {
  return marginal(std::span<const std::size_t>(keep.begin(), keep.size()));
}

ClassicalJoint ClassicalJoint::marginal(std::span<const std::size_t> keep) const {
  const auto& d = dims_.dims();
  const auto out_shape = dims_.keep(keep);
  std::vector<double> out(out_shape.total(), 0.0);
  std::vector<std::size_t> digits(d.size(), 0);
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    std::size_t k = 0;
    for (auto f : keep) k = k * d[f] + digits[f];
    out[k] += probs_[i];
    for (std::size_t f = d.size(); f-- > 0;) {
      if (++digits[f] < d[f]) break;
      digits[f] = 0;
    }
  }
  return {out_shape, std::move(out), 1e-9};
}

double ClassicalJoint::shannon_entropy() const { return entropy_of_spectrum(probs_); }

DensityMatrix ClassicalJoint::to_density() const {
  const double s = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  std::vector<double> p = probs_;
  for (auto& x : p) x /= s;
  return {ComplexMatrix::diagonal(p), dims_};
}

ClassicalJoint classical_extension(const ClassicalJoint& p12, const ClassicalJoint& p23, double tol) {
  if (p12.dims().size() != 2 || p23.dims().size() != 2 || p12.dims()[1] != p23.dims()[0]) {
    throw Error(ErrorKind::ShapeMismatch, "classical_extension needs tables over (x,y) and (y,z)");
  }
  const std::size_t nx = p12.dims()[0], ny = p12.dims()[1], nz = p23.dims()[1];
  std::vector<double> p2(ny, 0.0), q2(ny, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) p2[y] += p12[x * ny + y];
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t z = 0; z < nz; ++z) q2[y] += p23[y * nz + z];
  for (std::size_t y = 0; y < ny; ++y) {
    if (std::abs(p2[y] - q2[y]) > tol) {
      throw Error(ErrorKind::IncompatibleMarginals,
                  "middle marginals differ at y=" + std::to_string(y), std::abs(p2[y] - q2[y]));
    }
  }
  std::vector<double> out(nx * ny * nz, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) {
      if (p2[y] <= kZeroFiber) continue;
      for (std::size_t z = 0; z < nz; ++z)
        out[(x * ny + y) * nz + z] = p12[x * ny + y] * p23[y * nz + z] / p2[y];
    }
  return {FactorShape{nx, ny, nz}, std::move(out), 1e-9};
}

ClassicalJoint chain_extension(std::span<const ClassicalJoint> joints, double tol) {
  if (joints.empty()) throw Error(ErrorKind::InvalidArgument, "chain needs at least one joint");
  std::vector<std::size_t> sizes;
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const auto& dj = joints[j].dims();
    if (dj.size() != 2) throw Error(ErrorKind::ShapeMismatch, "chain joints must be bivariate");
    if (j == 0) sizes.push_back(dj[0]);
    else if (dj[0] != sizes.back())
      throw Error(ErrorKind::ShapeMismatch, "alphabet mismatch at junction " + std::to_string(j));
    sizes.push_back(dj[1]);
  }
  // Single-variable marginals at each interior junction j (variable x_{j+1}).
  std::vector<std::vector<double>> middle(joints.size());
  for (std::size_t j = 1; j < joints.size(); ++j) {
    const auto left = joints[j - 1].marginal({1}).probs();
    const auto right = joints[j].marginal({0}).probs();
    for (std::size_t y = 0; y < left.size(); ++y) {
      if (std::abs(left[y] - right[y]) > tol) {
        throw Error(ErrorKind::IncompatibleMarginals,
                    "junction " + std::to_string(j) + " marginals differ", static_cast<double>(j));
      }
    }
    middle[j] = left;
  }

  const FactorShape shape(sizes);
  std::vector<double> out(shape.total(), 0.0);
  std::vector<std::size_t> x(sizes.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double p = joints[0][x[0] * sizes[1] + x[1]];
    for (std::size_t j = 1; j < joints.size() && p > 0.0; ++j) {
      const double m = middle[j][x[j]];
      if (m <= kZeroFiber) {
        p = 0.0;
        break;
      }
      p *= joints[j][x[j] * sizes[j + 1] + x[j + 1]] / m;
    }
    out[i] = p;
    for (std::size_t f = sizes.size(); f-- > 0;) {
      if (++x[f] < sizes[f]) break;
      x[f] = 0;
    }
  }
  return {shape, std::move(out), 1e-9};
}

// ---------------------------------------------------------------------------
// Golden-Thompson candidate

GoldenThompsonResult golden_thompson_R(const CompatiblePair& pair, double min_eig) {
  auto log_of = [&](const DensityMatrix& rho, const char* name) {
    if (rho.min_eigenvalue() <= min_eig) {
      throw Error(ErrorKind::NotPositiveDefinite, std::string(name) + " is not positive definite",
                  rho.min_eigenvalue());
    }
    return matrix_log(rho.mat(), 0.0);
  };
  const auto l12 = log_of(pair.rho12(), "rho12");
  const auto l23 = log_of(pair.rho23(), "rho23");
  const auto l2 = log_of(pair.rho2(), "rho2");
  const auto i1 = ComplexMatrix::identity(pair.d1());
  const auto i3 = ComplexMatrix::identity(pair.d3());

  auto generator = kron(l12, i3);
  generator += kron(i1, l23);
  generator -= kron({i1, l2, i3});
  GoldenThompsonResult out;
  out.R = matrix_exp(generator);
  out.trace = out.R.trace().real();
  return out;
}

// ---------------------------------------------------------------------------
// Matched separable ensembles

void SeparableEnsemble::validate() const {
  const std::size_t n = weights.size();
  if (n == 0 || rho.size() != n || sigma.size() != n || tau.size() != n) {
    throw Error(ErrorKind::InvalidEnsemble, "weights and factor lists must have equal nonzero length");
  }
  double s = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorKind::InvalidEnsemble, "weights must be strictly positive", w);
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-12) throw Error(ErrorKind::InvalidEnsemble, "weights must sum to 1", s);
  for (std::size_t j = 1; j < n; ++j) {
    if (rho[j].dim() != rho[0].dim() || sigma[j].dim() != sigma[0].dim() || tau[j].dim() != tau[0].dim()) {
      throw Error(ErrorKind::InvalidEnsemble, "factor dimensions differ across the ensemble");
    }
  }
}

SeparableExtension matched_separable_extension(const SeparableEnsemble& ens) {
  ens.validate();
  const std::size_t d1 = ens.rho[0].dim(), d2 = ens.sigma[0].dim(), d3 = ens.tau[0].dim();
  ComplexMatrix m12(d1 * d2, d1 * d2), m23(d2 * d3, d2 * d3), m123(d1 * d2 * d3, d1 * d2 * d3);
  for (std::size_t j = 0; j < ens.weights.size(); ++j) {
    const cplx w = ens.weights[j];
    const auto rs = kron(ens.rho[j].mat(), ens.sigma[j].mat());
    m12 += rs * w;
    m23 += kron(ens.sigma[j].mat(), ens.tau[j].mat()) * w;
    m123 += kron(rs, ens.tau[j].mat()) * w;
  }
  return {DensityMatrix(m12, FactorShape{d1, d2}), DensityMatrix(m23, FactorShape{d2, d3}),
          DensityMatrix(m123, FactorShape{d1, d2, d3})};
}

// ---------------------------------------------------------------------------
// Perturbation of a positive-definite extension

ComplexMatrix perturbation_candidate(const DensityMatrix& base123, const CompatiblePair& new_pair) {
  if (base123.shape() != new_pair.joint_shape()) {
    throw Error(ErrorKind::ShapeMismatch, "base state shape does not match the pair");
  }
  const auto r12 = base123.marginal({0, 1}).mat();
  const auto r23 = base123.marginal({1, 2}).mat();
  const auto r2 = base123.marginal({1}).mat();
  const auto& n1 = new_pair.rho1().mat();
  const auto& n2 = new_pair.rho2().mat();
  const auto& n3 = new_pair.rho3().mat();

  ComplexMatrix out = base123.mat();
  out += kron(new_pair.rho12().mat() - r12, n3);
  out += kron(n1, new_pair.rho23().mat() - r23);
  const auto middle = r2 - n2;
  out += kron({n1, middle, n3});
  return hermitian_part(out);
}

DensityMatrix perturbation_extension(const DensityMatrix& base123, const CompatiblePair& new_pair,
                                     double psd_tol) {
  if (base123.min_eigenvalue() <= 0.0) {
    throw Error(ErrorKind::NotPositiveDefinite, "base extension must be positive definite",
                base123.min_eigenvalue());
  }
  auto candidate = perturbation_candidate(base123, new_pair);
  const double lmin = eigenvalues(candidate).front();
  if (lmin < -psd_tol) {
    throw Error(ErrorKind::NotPSD, "perturbed extension has eigenvalue " + std::to_string(lmin), lmin);
  }
  StateTolerances tol;
  tol.psd = psd_tol;
  return {std::move(candidate), new_pair.joint_shape(), tol};
}

// ---------------------------------------------------------------------------
// Araki-Lieb equality states

DensityMatrix build_triangle_equality_state(std::span<const double> lambdas, std::span<const double> mus) {
  const auto lam = normalized_positive(lambdas, "lambdas");
  const auto mu = normalized_positive(mus, "mus");
  const std::size_t m = lam.size(), n = mu.size();
  std::vector<cplx> phi(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) phi[k * n + k] = std::sqrt(mu[k]);
  const auto rho_a = ComplexMatrix::diagonal(lam);
  return {kron(rho_a, ComplexMatrix::projector(phi)), FactorShape{m * n, n}};
}

}  // namespace qmarg
