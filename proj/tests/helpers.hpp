#pragma once

#include <cmath>
#include <random>

#include "qmarg/matcore.hpp"

namespace qmarg::testing {

inline ComplexMatrix random_hermitian(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const cplx z(g(rng), i == j ? 0.0 : g(rng));
      a(i, j) = z;
      a(j, i) = std::conj(z);
    }
  return a;
}

inline ComplexMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix a(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) a(i, j) = cplx(g(rng), g(rng));
  return a;
}

inline std::vector<cplx> ket(std::initializer_list<cplx> v) { return v; }

}  // namespace qmarg::testing
