#pragma once

// Numerical decision procedure for the existence of a common extension.
//
// solve() first discards the directions every extension must annihilate
// (u (x) x for u in ker rho12, x (x) v for v in ker rho23). If nothing is left
// the forced vectors form a null-space certificate. Otherwise it runs Dykstra's
// alternating projections between the PSD cone and the marginal affine set on
// the surviving subspace. Thin feasible sets (low-rank extensions) make Dykstra
// sublinear, so the iterate is periodically refined by Gauss-Newton on a PSD
// factorization; any refined point is accepted only through the same residual check.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qmarg/states.hpp"

namespace qmarg {

// Isometric real coordinates of an n x n Hermitian matrix: diagonal entries,
// then sqrt(2) Re and sqrt(2) Im of each strict upper entry.
std::vector<double> hermitian_coords(const ComplexMatrix& h);
ComplexMatrix from_hermitian_coords(std::size_t n, std::span<const double> x);

// Affine constraint system { x : A x = b } over Hermitian coordinates, with A
// assembled column by column from a linear map and factored once. Redundant
// rows are dropped through the pseudo-inverse of A A^T (eigenvalues below
// rel_rank_tol * max are treated as zero).
class LinearConstraintSystem {
 public:
  using Map = std::function<std::vector<double>(const ComplexMatrix&)>;

  LinearConstraintSystem(std::size_t input_side, const Map& map, double rel_rank_tol = 1e-10);

  std::size_t input_dim() const noexcept { return n_; }
  std::size_t output_dim() const noexcept { return m_; }
  std::size_t rank() const noexcept { return rank_; }

  std::vector<double> apply(std::span<const double> x) const;
  // x <- x - A^T (A A^T)^+ (A x - b)
  void project(std::vector<double>& x, std::span<const double> b) const;
  // Euclidean distance from b to the range of A.
  double inconsistency(std::span<const double> b) const;

 private:
  std::size_t n_ = 0, m_ = 0, rank_ = 0;
  std::vector<double> a_;     // m x n
  std::vector<double> pinv_;  // n x m, A^T (A A^T)^+
};

// The constraints Tr3 X = rho12, Tr1 X = rho23 for a fixed shape (d1, d2, d3).
class MarginalProjector {
 public:
  explicit MarginalProjector(const FactorShape& shape);

  const FactorShape& shape() const noexcept { return shape_; }
  const LinearConstraintSystem& system() const noexcept { return system_; }
  std::vector<double> targets(const CompatiblePair& pair) const;
  ComplexMatrix project(const ComplexMatrix& x, const CompatiblePair& pair) const;

 private:
  FactorShape shape_;
  LinearConstraintSystem system_;
};

// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
ComplexMatrix project_psd(const ComplexMatrix& a);
ComplexMatrix project_marginal_affine(const ComplexMatrix& x, const CompatiblePair& pair);

// max(||Tr3 X - rho12||_1, ||Tr1 X - rho23||_1)
double marginal_residual(const ComplexMatrix& x, const CompatiblePair& pair);

struct NullspaceCertificate {
  std::vector<std::vector<cplx>> vectors;
  std::size_t span_dim = 0;
};

enum class Verdict { Feasible, Infeasible, Undecided };
enum class Evidence { None, Witness, NullspaceCertificate, InconsistentConstraints, GapStall };

std::string_view to_string(Verdict v);
std::string_view to_string(Evidence e);

struct SolveOptions {
  int max_iter = 5000;
  double feas_tol = 1e-9;
  double infeas_tol = 1e-6;
  int stall_window = 100;
  double stall_rel_change = 1e-12;
  bool facial_reduction = true;
  double rank_tol = 1e-10;  // eigenvalues of rho12 / rho23 at or below this span their kernels
  // Replace the PSD cone by the (non-convex) set of rank <= 1 PSD matrices.
  bool rank_one = false;
  // Accept rho12 (x) rho3 or rho1 (x) rho23 before iterating when either is an extension.
  bool try_products = true;
  // Every polish_every iterations, and once before giving up, try a factored
  // Levenberg-Marquardt refinement X = W W^dagger from the current iterate.
  // Skipped when the reduced dimension exceeds polish_max_dim; 0 disables it.
  int polish_every = 100;
  std::size_t polish_max_dim = 16;
  // Starting point on H1 (x) H2 (x) H3; defaults to rho1 (x) rho2 (x) rho3.
  std::optional<ComplexMatrix> start;
};

struct FeasibilityVerdict {
  Verdict status = Verdict::Undecided;
  Evidence evidence = Evidence::None;
  std::optional<DensityMatrix> witness;
  std::optional<NullspaceCertificate> certificate;
  double residual = 0.0;  // marginal residual of the best PSD iterate (or witness)
  double gap = 0.0;       // distance between the last PSD and affine iterates
  int iterations = 0;
  std::size_t reduced_dim = 0;
  std::string diagnostics;
};

FeasibilityVerdict solve(const CompatiblePair& pair, const SolveOptions& opts = {});

// Vectors forced into the kernel of every extension by the kernels of the marginals.
NullspaceCertificate forced_nullspace(const CompatiblePair& pair, double rank_tol = 1e-10);

// Checks each vector factorizes as u (x) x with u in ker rho12 or x (x) u with u
// in ker rho23, and that the vectors span the whole tripartite space.
bool verify_certificate(const CompatiblePair& pair, const NullspaceCertificate& cert,
                        double null_tol = 1e-12);

// Rank-2 qubit state rho2 = sum mu_j |psi_j><psi_j| = sum nu_j |phi_j><phi_j|.
struct TwoDecompositions {
  std::array<std::vector<cplx>, 2> psi;
  std::array<double, 2> mu{};
  std::array<std::vector<cplx>, 2> phi;
  std::array<double, 2> nu{};
};

// nu1 = 1 / <phi1, rho2^{-1} phi1>; the remainder rho2 - nu1 |phi1><phi1| is nu2 |phi2><phi2|.
// When rho2 is degenerate the eigenbasis is taken to be the standard basis.
// Throws DegenerateChoice when phi1 is an eigenvector, InvalidArgument when rho2 is not rank 2.
TwoDecompositions lemma_two_decompositions(const DensityMatrix& rho2, std::span<const cplx> phi1);

struct CounterexampleSpec {
  double mu1 = 0.5;                          // larger eigenvalue of rho2, in [1/2, 1)
  double phi1_angle = 0.7853981633974483;    // phi1 = (cos a, sin a)
  double eta_skew = 0.0;                     // eta = {(1,0), (sin s, cos s)}
};

struct Counterexample {
  CompatiblePair pair;
  NullspaceCertificate certificate;
};

// (z, w) -> (-conj(w), conj(z))
std::vector<cplx> perp(std::span<const cplx> v);

// Builds rho12 = sum mu_j |eta_j psi_j><.|, rho23 = sum nu_j |phi_j chi_j><.| and the
// eight forced kernel vectors. Throws CertificateDegenerate if they do not span C^8.
Counterexample build_counterexample(const CounterexampleSpec& spec);

// Same construction from explicit qubit bases (each a pair of unit vectors).
Counterexample build_counterexample(std::span<const double, 2> mu, std::span<const double, 2> nu,
                                    const std::array<std::vector<cplx>, 2>& eta,
                                    const std::array<std::vector<cplx>, 2>& psi,
                                    const std::array<std::vector<cplx>, 2>& phi,
                                    const std::array<std::vector<cplx>, 2>& chi);

// Four orthonormal qubit bases with no vector in common and all weights 1/2.
Counterexample build_four_basis_pair();

// True iff the nonzero spectra of (rho12, rho3) and of (rho23, rho1) agree and a
// rank-one common extension is found.
bool common_purification_check(const CompatiblePair& pair, const SolveOptions& opts = {});

}  // namespace qmarg
