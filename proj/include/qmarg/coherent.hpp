#pragma once

// Spin-1/2 coherent states, upper symbols and the conditioning lift on (S^2)^3.
//
// Normalization: integrals are against the uniform probability measure on S^2,
// so the coherent projectors resolve I/2. Upper symbols therefore carry a factor
// of 2 on the identity: the symbol of I is the constant 2, and the symbol of
// sigma_i is 6 n_i.

#include <array>
#include <vector>

#include "qmarg/states.hpp"

namespace qmarg {

struct SpherePoint {
  double theta = 0.0;  // [0, pi]
  double phi = 0.0;    // [0, 2 pi)

  SpherePoint() = default;
  // Throws InvalidArgument outside the stated ranges.
  SpherePoint(double theta, double phi);
  std::array<double, 3> unit_vector() const;
};

// Product quadrature: Gauss-Legendre in cos(theta) times the trapezoid rule in phi.
class SphereGrid {
 public:
  static constexpr std::size_t kDefaultLegendreOrder = 8;
  static constexpr std::size_t kDefaultPhiNodes = 16;

  // Builds the grid and verifies exactness on monomials x^a y^b z^c up to order().
  explicit SphereGrid(std::size_t legendre_order = kDefaultLegendreOrder,
                      std::size_t phi_nodes = kDefaultPhiNodes);

  const std::vector<SpherePoint>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<std::array<double, 3>>& unit_vectors() const noexcept { return units_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  // Highest total degree integrated exactly.
  std::size_t order() const noexcept { return order_; }

 private:
  std::vector<SpherePoint> nodes_;
  std::vector<double> weights_;
  std::vector<std::array<double, 3>> units_;
  std::size_t order_ = 0;
};

// Exact average of x^a y^b z^c over the unit sphere.
double sphere_monomial_mean(int a, int b, int c);

// (I + n . sigma) / 2
ComplexMatrix coherent_projector(const SpherePoint& omega);
ComplexMatrix coherent_projector(const std::array<double, 3>& n);

// a(n) = c0 + c . n
struct QubitSymbol {
  double c0 = 0.0;
  std::array<double, 3> c{};

  double operator()(const std::array<double, 3>& n) const { return c0 + c[0] * n[0] + c[1] * n[1] + c[2] * n[2]; }
  double operator()(const SpherePoint& p) const { return (*this)(p.unit_vector()); }
};

// Throws WrongDimension (not 2x2) or NotHermitian.
QubitSymbol upper_symbol(const ComplexMatrix& a);

// Upper symbol of a two-qubit operator: a(n1, n2) = sum_ab t_ab s_a(n1) s_b(n2)
// with s_0 = 1 and s_i = n_i; coefficients already include the 2 / 6 scalings.
struct TwoQubitSymbol {
  std::array<std::array<double, 4>, 4> t{};

  double operator()(const std::array<double, 3>& n1, const std::array<double, 3>& n2) const;
};

TwoQubitSymbol upper_symbol_2q(const ComplexMatrix& a);

// sum_k w_k f_k |Omega_k><Omega_k|
ComplexMatrix quantize(const SphereGrid& grid, std::span<const double> values);
ComplexMatrix quantize(const SphereGrid& grid, const QubitSymbol& symbol);

struct CoherentLift {
  DensityMatrix rho123;
  double marginal_error = 0.0;   // max trace-norm residual of the two marginals
  double min_symbol = 0.0;       // smallest bipartite symbol value seen on the grids
  double min_denominator = 0.0;  // smallest middle symbol value
};

struct CoherentGrids {
  SphereGrid g1 = SphereGrid(), g2 = SphereGrid(), g3 = SphereGrid();
};

constexpr double kSymbolFloor = 1e-8;

// Conditions the two bipartite symbols on the middle sphere and quantizes the
// result. Throws WrongDimension unless all factors are qubits, NegativeSymbol
// (value = the offending symbol value) and SmallDenominator.
CoherentLift coherent_lift_extension(const CompatiblePair& pair, const CoherentGrids& grids = CoherentGrids(),
                                     double denominator_floor = kSymbolFloor);

}  // namespace qmarg
