#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "qmarg/error.hpp"
#include "qmarg/matcore.hpp"

using namespace qmarg;
using qmarg::testing::random_hermitian;
using qmarg::testing::random_matrix;

TEST_CASE("herm_eig on a diagonal input returns the diagonal and identity columns") {
  const std::vector<double> d = {0.3, 0.7};
  const auto eig = herm_eig(ComplexMatrix::diagonal(d));
  CHECK(eig.eigenvalues[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(eig.eigenvalues[1] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(max_abs_diff(eig.eigenvectors, ComplexMatrix::identity(2)) < 1e-14);
}

TEST_CASE("herm_eig on sigma_x") {
  const ComplexMatrix sx{{0.0, 1.0}, {1.0, 0.0}};
  const auto ev = eigenvalues(sx);
  CHECK(ev[0] == doctest::Approx(-1.0));
  CHECK(ev[1] == doctest::Approx(1.0));
}

TEST_CASE("herm_eig reconstructs random Hermitian matrices") {
  std::mt19937_64 rng(7);
  for (std::size_t n : {1u, 2u, 3u, 8u, 16u}) {
    const auto a = random_hermitian(n, rng);
    const auto eig = herm_eig(a);
    ComplexMatrix lam(n, n);
    for (std::size_t k = 0; k < n; ++k) lam(k, k) = eig.eigenvalues[k];
    const auto rebuilt = eig.eigenvectors * lam * eig.eigenvectors.adjoint();
    CHECK(max_abs_diff(rebuilt, a) <= 1e-10 * a.max_abs());
    CHECK(max_abs_diff(eig.eigenvectors.adjoint() * eig.eigenvectors, ComplexMatrix::identity(n)) < 1e-12);
    for (std::size_t k = 1; k < n; ++k) CHECK(eig.eigenvalues[k - 1] <= eig.eigenvalues[k]);
  }
}

TEST_CASE("herm_eig rejects non-Hermitian input") {
  const ComplexMatrix a{{0.0, 1.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(herm_eig(a), Error);
  try {
    herm_eig(a);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotHermitian);
  }
}

TEST_CASE("kron examples") {
  CHECK(max_abs_diff(kron(ComplexMatrix::identity(2), ComplexMatrix::identity(2)), ComplexMatrix::identity(4)) == 0.0);
  const std::vector<double> ab = {2.0, 3.0}, cd = {5.0, 7.0}, expect = {10.0, 14.0, 15.0, 21.0};
  CHECK(max_abs_diff(kron(ComplexMatrix::diagonal(ab), ComplexMatrix::diagonal(cd)), ComplexMatrix::diagonal(expect)) ==
        0.0);
  std::mt19937_64 rng(3);
  const auto A = random_matrix(2, 2, rng), B = random_matrix(2, 2, rng), C = random_matrix(2, 2, rng),
             D = random_matrix(2, 2, rng);
  CHECK(max_abs_diff(kron(A, B) * kron(C, D), kron(A * C, B * D)) < 1e-12);
}

TEST_CASE("kron of vectors matches the index convention") {
  const std::vector<cplx> a = {1.0, 2.0}, b = {3.0, 5.0, 7.0};
  const auto v = kron(a, b);
  REQUIRE(v.size() == 6);
  CHECK(v[0] == cplx(3.0));
  CHECK(v[4] == cplx(10.0));  // i1 = 1, i2 = 1
}

TEST_CASE("partial_trace examples") {
  std::mt19937_64 rng(11);
  auto psd = [&](std::size_t n) {
    const auto g = random_matrix(n, n, rng);
    auto r = g * g.adjoint();
    return r * cplx(1.0 / r.trace().real());
  };
  const auto rho = psd(2), sigma = psd(2);
  CHECK(max_abs_diff(partial_trace(kron(rho, sigma), FactorShape{2, 2}, {0}), rho) < 1e-14);
  CHECK(max_abs_diff(partial_trace(kron(rho, sigma), FactorShape{2, 2}, {1}), sigma) < 1e-14);

  const double h = 1.0 / std::numbers::sqrt2;
  const std::vector<cplx> bell = {h, 0.0, 0.0, h};
  const auto half = ComplexMatrix::identity(2) * cplx(0.5);
  CHECK(max_abs_diff(partial_trace(ComplexMatrix::projector(bell), FactorShape{2, 2}, {1}), half) < 1e-15);

  const auto r3 = psd(8);
  const FactorShape s3{2, 2, 2};
  const auto direct = partial_trace(r3, s3, {1});
  const auto iterated = partial_trace(partial_trace(r3, s3, {1, 2}), FactorShape{2, 2}, {0});
  CHECK(max_abs_diff(direct, iterated) < 1e-14);
}

TEST_CASE("partial_trace with unequal factor sizes keeps the ordering") {
  std::mt19937_64 rng(5);
  const auto a = random_hermitian(2, rng), b = random_hermitian(3, rng), c = random_hermitian(4, rng);
  const auto abc = kron({a, b, c});
  const FactorShape shape{2, 3, 4};
  CHECK(max_abs_diff(partial_trace(abc, shape, {0, 2}), kron(a, c) * (b.trace())) < 1e-11);
  CHECK(max_abs_diff(partial_trace(abc, shape, {1}), b * (a.trace() * c.trace())) < 1e-11);
}

TEST_CASE("partial_trace rejects a bad shape") {
  CHECK_THROWS_AS(partial_trace(ComplexMatrix::identity(4), FactorShape{2, 3}, {0}), Error);
}

TEST_CASE("matrix exp and log") {
  CHECK(matrix_log(ComplexMatrix::identity(3)).max_abs() < 1e-15);
  const std::vector<double> d = {0.0, std::log(2.0)}, e = {1.0, 2.0};
  CHECK(max_abs_diff(matrix_exp(ComplexMatrix::diagonal(d)), ComplexMatrix::diagonal(e)) < 1e-14);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 10; ++k) {
    const auto g = random_matrix(4, 4, rng);
    auto rho = g * g.adjoint() + ComplexMatrix::identity(4) * cplx(0.01);
    rho *= cplx(1.0 / rho.trace().real());
    CHECK(max_abs_diff(matrix_exp(matrix_log(rho)), rho) < 1e-9);
  }
  const std::vector<double> singular = {1.0, 0.0};
  CHECK_THROWS_AS(matrix_log(ComplexMatrix::diagonal(singular)), Error);
}

TEST_CASE("trace_norm") {
  const std::vector<double> d = {0.5, -0.5};
  CHECK(trace_norm(ComplexMatrix::diagonal(d)) == doctest::Approx(1.0));
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    const auto a = random_matrix(2, 2, rng), b = random_matrix(2, 2, rng);
    auto r = a * a.adjoint();
    auto s = b * b.adjoint();
    r *= cplx(1.0 / r.trace().real());
    s *= cplx(1.0 / s.trace().real());
    CHECK(trace_norm(r) == doctest::Approx(1.0).epsilon(1e-12));
    // Traceless 2x2 difference: eigenvalues are +-l, so the norm is 2 l_max.
    const auto diff = r - s;
    CHECK(trace_norm(diff) == doctest::Approx(2.0 * eigenvalues(diff).back()).epsilon(1e-12));
  }
}

TEST_CASE("numerical_rank and range_basis") {
  const std::vector<std::vector<cplx>> vs = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {1.0, 1.0, 0.0}};
  CHECK(numerical_rank(vs) == 2);
  const std::vector<double> d = {0.0, 0.5, 0.5};
  CHECK(range_basis(ComplexMatrix::diagonal(d), 1e-12).cols() == 2);
}

TEST_CASE("ComplexMatrix validates construction") {
  CHECK_THROWS_AS(ComplexMatrix(2, 2, std::vector<cplx>(3)), Error);
  CHECK_THROWS_AS(ComplexMatrix(1, 1, std::vector<cplx>{cplx(std::nan(""), 0.0)}), Error);
}
