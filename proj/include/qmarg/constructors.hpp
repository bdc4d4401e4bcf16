#pragma once

// Explicit common-extension constructions.

#include <span>
#include <vector>

#include "qmarg/states.hpp"

namespace qmarg {

// Joint probability table over a product of finite alphabets, indexed with the
// same row-major convention as tensor products.
class ClassicalJoint {
 public:
  // Throws InvalidArgument unless probs are nonnegative and sum to 1 within tol.
  ClassicalJoint(FactorShape dims, std::vector<double> probs, double tol = 1e-12);

  const FactorShape& dims() const noexcept { return dims_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

  ClassicalJoint marginal(std::span<const std::size_t> keep) const;
  ClassicalJoint marginal(std::initializer_list<std::size_t> keep) const;
  double shannon_entropy() const;
  // Diagonal embedding as a density matrix with the same factor shape.
  DensityMatrix to_density() const;

 private:
  FactorShape dims_;
  std::vector<double> probs_;
};

// p123(x,y,z) = p12(x,y) p23(y,z) / p2(y); zero on fibers with p2(y) <= 1e-14.
// Throws IncompatibleMarginals when the y-marginals differ by more than tol.
ClassicalJoint classical_extension(const ClassicalJoint& p12, const ClassicalJoint& p23,
                                   double tol = 1e-12);

// joints[j] is over (x_j, x_{j+1}). Throws IncompatibleMarginals with the
// offending junction index as the error value.
ClassicalJoint chain_extension(std::span<const ClassicalJoint> joints, double tol = 1e-12);

struct GoldenThompsonResult {
  ComplexMatrix R;  // exp(log rho12 (x) I + I (x) log rho23 - I (x) log rho2 (x) I)
  double trace = 0;
};

// Throws NotPositiveDefinite naming rho12, rho23 or rho2.
GoldenThompsonResult golden_thompson_R(const CompatiblePair& pair, double min_eig = 1e-10);

struct SeparableEnsemble {
  std::vector<double> weights;
  std::vector<DensityMatrix> rho, sigma, tau;

  // Throws InvalidEnsemble on non-positive weights, bad normalization, or
  // mismatched lengths and dimensions.
  void validate() const;
};

struct SeparableExtension {
  DensityMatrix rho12, rho23, rho123;
};

SeparableExtension matched_separable_extension(const SeparableEnsemble& ens);

// rho123 + [r12' - r12] (x) r3' + r1' (x) [r23' - r23] + r1' (x) [r2 - r2'] (x) r3'
// where primes denote the new pair. The result always has the new marginals; it
// is only guaranteed positive for small perturbations.
ComplexMatrix perturbation_candidate(const DensityMatrix& base123, const CompatiblePair& new_pair);

// As above, validated: throws NotPSD carrying lambda_min when the candidate has
// an eigenvalue below -psd_tol, NotPositiveDefinite if the base is singular.
DensityMatrix perturbation_extension(const DensityMatrix& base123, const CompatiblePair& new_pair,
                                     double psd_tol = 1e-10);

// rho12 = diag(lambdas) (x) |Phi><Phi| on H1 = C^m (x) C^n, H2 = C^n, with
// Phi = sum_k sqrt(mu_k) e_k (x) e_k. Satisfies S12 = S1 - S2.
DensityMatrix build_triangle_equality_state(std::span<const double> lambdas,
                                            std::span<const double> mus);

}  // namespace qmarg
