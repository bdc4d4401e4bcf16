#pragma once

#include <cstdint>
#include <vector>

#include "qmarg/matcore.hpp"

namespace qmarg {

struct StateTolerances {
  double hermitian = 1e-10;
  double psd = 1e-10;    // eigenvalues in [-psd, 0) are clipped, below are rejected
  double trace = 1e-10;
};

// Positive semidefinite, unit-trace Hermitian matrix on a tensor-product space.
class DensityMatrix {
 public:
  // Throws InvalidState (or ShapeMismatch) when the invariants fail.
  DensityMatrix(ComplexMatrix mat, FactorShape shape, const StateTolerances& tol = {});
  explicit DensityMatrix(ComplexMatrix mat, const StateTolerances& tol = {});

  const ComplexMatrix& mat() const noexcept { return mat_; }
  const FactorShape& shape() const noexcept { return shape_; }
  std::size_t dim() const noexcept { return mat_.rows(); }
  // Ascending eigenvalues of the (clipped) matrix.
  const std::vector<double>& spectrum() const noexcept { return spectrum_; }
  double min_eigenvalue() const noexcept { return spectrum_.front(); }
  std::size_t rank(double threshold = 1e-12) const;
  bool is_pure(double tol = 1e-9) const { return spectrum_.back() >= 1.0 - tol; }

  // Same matrix, new factorization of the same total dimension.
  DensityMatrix reshaped(FactorShape shape) const;
  DensityMatrix marginal(std::initializer_list<std::size_t> keep) const;
  DensityMatrix marginal(std::span<const std::size_t> keep) const;

 private:
  ComplexMatrix mat_;
  FactorShape shape_;
  std::vector<double> spectrum_;
};

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b, const DensityMatrix& c);
DensityMatrix maximally_mixed(std::size_t dim);
DensityMatrix pure_state(std::span<const cplx> psi, FactorShape shape);
DensityMatrix pure_state(std::span<const cplx> psi);

// Trace distance convention used throughout: the full trace norm ||a - b||_1.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// Von Neumann entropy in nats. Eigenvalues below 1e-14 contribute nothing.
double entropy(const DensityMatrix& rho);
double entropy_of_spectrum(std::span<const double> probs);

// Pure state on (d1, d2) whose marginals are rho1 and rho2. Throws SpectraMismatch.
DensityMatrix pure_coupling(const DensityMatrix& rho1, const DensityMatrix& rho2,
                            double spectrum_tol = 1e-9);

// Pure state on (d, ancilla_dim) with first marginal rho. Throws AncillaTooSmall.
DensityMatrix purify(const DensityMatrix& rho, std::size_t ancilla_dim);

// Ginibre ensemble: G G^dagger / Tr with G a dim x rank standard complex Gaussian
// matrix drawn from std::mt19937_64(seed).
DensityMatrix random_density(std::size_t dim, std::size_t rank, std::uint64_t seed);
// Haar-distributed unitary (Gram-Schmidt on a Ginibre matrix).
ComplexMatrix random_unitary(std::size_t dim, std::uint64_t seed);

// A pair (rho12, rho23) whose middle marginals agree.
class CompatiblePair {
 public:
  // Throws Incompatible(distance) when ||Tr1 rho12 - Tr3 rho23||_1 > tol and
  // ShapeMismatch when the shapes do not share the middle factor.
  CompatiblePair(DensityMatrix rho12, DensityMatrix rho23, double tol = 1e-9);

  const DensityMatrix& rho12() const noexcept { return rho12_; }
  const DensityMatrix& rho23() const noexcept { return rho23_; }
  // Average of the two middle marginals.
  const DensityMatrix& rho2() const noexcept { return rho2_; }
  const DensityMatrix& rho1() const noexcept { return rho1_; }
  const DensityMatrix& rho3() const noexcept { return rho3_; }
  double middle_distance() const noexcept { return middle_distance_; }

  std::size_t d1() const { return rho12_.shape()[0]; }
  std::size_t d2() const { return rho12_.shape()[1]; }
  std::size_t d3() const { return rho23_.shape()[1]; }
  FactorShape joint_shape() const { return FactorShape{d1(), d2(), d3()}; }

 private:
  DensityMatrix rho12_, rho23_, rho2_, rho1_, rho3_;
  double middle_distance_ = 0.0;
};

}  // namespace qmarg
