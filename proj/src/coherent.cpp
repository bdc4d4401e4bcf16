#include "qmarg/coherent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qmarg/error.hpp"

namespace qmarg {

namespace {

const std::array<ComplexMatrix, 4>& pauli() {
  static const std::array<ComplexMatrix, 4> p = {
      ComplexMatrix{{1.0, 0.0}, {0.0, 1.0}},
      ComplexMatrix{{0.0, 1.0}, {1.0, 0.0}},
      ComplexMatrix{{0.0, cplx(0.0, -1.0)}, {cplx(0.0, 1.0), 0.0}},
      ComplexMatrix{{1.0, 0.0}, {0.0, -1.0}},
  };
  return p;
}

// Nodes and weights of n-point Gauss-Legendre on [-1, 1] by Newton iteration.
void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

double double_factorial(int n) {
  double r = 1.0;
  for (int k = n; k > 1; k -= 2) r *= k;
  return r;
}

}  // namespace

SpherePoint::SpherePoint(double theta_, double phi_) : theta(theta_), phi(phi_) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi) || !(phi >= 0.0 && phi < 2.0 * std::numbers::pi)) {
    throw Error(ErrorKind::InvalidArgument, "sphere point out of range");
  }
}

std::array<double, 3> SpherePoint::unit_vector() const {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

double sphere_monomial_mean(int a, int b, int c) {
  if (a % 2 || b % 2 || c % 2) return 0.0;
  return double_factorial(a - 1) * double_factorial(b - 1) * double_factorial(c - 1) /
         double_factorial(a + b + c + 1);
}

SphereGrid::SphereGrid(std::size_t legendre_order, std::size_t phi_nodes) {
  if (legendre_order < 1 || phi_nodes < 1) throw Error(ErrorKind::InvalidArgument, "empty sphere grid");
  std::vector<double> z, wz;
  gauss_legendre(legendre_order, z, wz);
  for (std::size_t i = 0; i < legendre_order; ++i) {
    const double theta = std::acos(std::clamp(z[i], -1.0, 1.0));
    for (std::size_t k = 0; k < phi_nodes; ++k) {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(phi_nodes);
      nodes_.emplace_back(theta, phi);
      weights_.push_back(0.5 * wz[i] / static_cast<double>(phi_nodes));
      units_.push_back(nodes_.back().unit_vector());
    }
  }
  order_ = std::min(2 * legendre_order - 1, phi_nodes - 1);

  for (int a = 0; a <= static_cast<int>(order_); ++a)
    for (int b = 0; a + b <= static_cast<int>(order_); ++b)
      for (int c = 0; a + b + c <= static_cast<int>(order_); ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
          const auto& n = units_[k];
          s += weights_[k] * std::pow(n[0], a) * std::pow(n[1], b) * std::pow(n[2], c);
        }
        const double err = std::abs(s - sphere_monomial_mean(a, b, c));
        if (err > 1e-12) {
          throw Error(ErrorKind::InvalidArgument,
                      "sphere quadrature inexact on x^" + std::to_string(a) + " y^" + std::to_string(b) +
                          " z^" + std::to_string(c),
                      err);
        }
      }
}

ComplexMatrix coherent_projector(const std::array<double, 3>& n) {
  return ComplexMatrix{{0.5 * (1.0 + n[2]), 0.5 * cplx(n[0], -n[1])},
                       {0.5 * cplx(n[0], n[1]), 0.5 * (1.0 - n[2])}};
}

ComplexMatrix coherent_projector(const SpherePoint& omega) { return coherent_projector(omega.unit_vector()); }

QubitSymbol upper_symbol(const ComplexMatrix& a) {
  if (a.rows() != 2 || a.cols() != 2) throw Error(ErrorKind::WrongDimension, "upper symbols need a 2x2 operator");
  require_hermitian(a);
  QubitSymbol s;
  s.c0 = 2.0 * (0.5 * a.trace().real());
  for (int i = 0; i < 3; ++i) s.c[i] = 6.0 * 0.5 * (a * pauli()[i + 1]).trace().real();
  return s;
}

double TwoQubitSymbol::operator()(const std::array<double, 3>& n1, const std::array<double, 3>& n2) const {
  const std::array<double, 4> s1 = {1.0, n1[0], n1[1], n1[2]};
  const std::array<double, 4> s2 = {1.0, n2[0], n2[1], n2[2]};
  double v = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) v += t[a][b] * s1[a] * s2[b];
  return v;
}

TwoQubitSymbol upper_symbol_2q(const ComplexMatrix& a) {
  if (a.rows() != 4 || a.cols() != 4) {
    throw Error(ErrorKind::WrongDimension, "two-qubit upper symbols need a 4x4 operator");
  }
  require_hermitian(a);
  TwoQubitSymbol s;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double c = (a * kron(pauli()[i], pauli()[j])).trace().real() / 4.0;
      s.t[i][j] = c * (i == 0 ? 2.0 : 6.0) * (j == 0 ? 2.0 : 6.0);
    }
  return s;
}

ComplexMatrix quantize(const SphereGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw Error(ErrorKind::ShapeMismatch, "grid function size");
  ComplexMatrix out(2, 2);
  for (std::size_t k = 0; k < grid.size(); ++k)
    out += coherent_projector(grid.unit_vectors()[k]) * cplx(grid.weights()[k] * values[k]);
  return out;
}

ComplexMatrix quantize(const SphereGrid& grid, const QubitSymbol& symbol) {
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) v[k] = symbol(grid.unit_vectors()[k]);
  return quantize(grid, v);
}

CoherentLift coherent_lift_extension(const CompatiblePair& pair, const CoherentGrids& grids,
                                     double denominator_floor) {
  if (pair.d1() != 2 || pair.d2() != 2 || pair.d3() != 2) {
    throw Error(ErrorKind::WrongDimension, "coherent lift is implemented for qubit factors only");
  }
  const auto s12 = upper_symbol_2q(pair.rho12().mat());
  const auto s23 = upper_symbol_2q(pair.rho23().mat());
  const auto& g1 = grids.g1;
  const auto& g2 = grids.g2;
  const auto& g3 = grids.g3;

  CoherentLift out{maximally_mixed(1)};
  out.min_symbol = std::numeric_limits<double>::infinity();
  out.min_denominator = std::numeric_limits<double>::infinity();

  // sym12[j][i] = rho12~(Omega1_i, Omega2_j), sym23[j][k] = rho23~(Omega2_j, Omega3_k)
  std::vector<std::vector<double>> sym12(g2.size(), std::vector<double>(g1.size()));
  std::vector<std::vector<double>> sym23(g2.size(), std::vector<double>(g3.size()));
  for (std::size_t j = 0; j < g2.size(); ++j) {
    const auto& n2 = g2.unit_vectors()[j];
    for (std::size_t i = 0; i < g1.size(); ++i) {
      const double v = s12(g1.unit_vectors()[i], n2);
      if (v < 0.0) {
        throw Error(ErrorKind::NegativeSymbol,
                    "rho12 symbol negative at (node1 " + std::to_string(i) + ", node2 " + std::to_string(j) + ")",
                    v);
      }
      out.min_symbol = std::min(out.min_symbol, v);
      sym12[j][i] = v;
    }
    for (std::size_t k = 0; k < g3.size(); ++k) {
      const double v = s23(n2, g3.unit_vectors()[k]);
      if (v < 0.0) {
        throw Error(ErrorKind::NegativeSymbol,
                    "rho23 symbol negative at (node2 " + std::to_string(j) + ", node3 " + std::to_string(k) + ")",
                    v);
      }
      out.min_symbol = std::min(out.min_symbol, v);
      sym23[j][k] = v;
    }
  }

  // rho123 = sum_j w2_j / rho2~(j) * A_j (x) P(Omega2_j) (x) B_j, the triple sum factorized
  // over the middle sphere.
  ComplexMatrix m123(8, 8);
  for (std::size_t j = 0; j < g2.size(); ++j) {
    double denom = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) denom += g1.weights()[i] * sym12[j][i];
    if (denom < denominator_floor) {
      throw Error(ErrorKind::SmallDenominator, "middle symbol below floor at node2 " + std::to_string(j), denom);
    }
    out.min_denominator = std::min(out.min_denominator, denom);
    const auto a = quantize(g1, sym12[j]);
    const auto b = quantize(g3, sym23[j]);
    const auto p2 = coherent_projector(g2.unit_vectors()[j]);
    m123 += kron({a, p2, b}) * cplx(g2.weights()[j] / denom);
  }

  StateTolerances tol;
  tol.trace = 1e-6;
  const double tr = m123.trace().real();
  m123 *= cplx(1.0 / tr);
  out.rho123 = DensityMatrix(hermitian_part(m123), FactorShape{2, 2, 2}, tol);
  const double e12 = trace_norm(out.rho123.marginal({0, 1}).mat() - pair.rho12().mat());
  const double e23 = trace_norm(out.rho123.marginal({1, 2}).mat() - pair.rho23().mat());
  out.marginal_error = std::max(e12, e23);
  return out;
}

}  // namespace qmarg
