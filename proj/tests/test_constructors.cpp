#include <doctest.h>

#include <cmath>
#include <random>

#include "qmarg/constructors.hpp"
#include "qmarg/criteria.hpp"
#include "qmarg/error.hpp"

using namespace qmarg;

namespace {

std::vector<double> random_probs(std::size_t n, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) s += (x = g(rng) + 1e-3);
  for (auto& x : p) x /= s;
  return p;
}

ClassicalJoint product_joint(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> p;
  for (double x : a)
    for (double y : b) p.push_back(x * y);
  return {FactorShape{a.size(), b.size()}, p, 1e-9};
}

// Random joint over (x, y) with a prescribed y-marginal.
ClassicalJoint joint_with_right_marginal(std::size_t nx, const std::vector<double>& py, std::mt19937_64& rng) {
  std::vector<double> p(nx * py.size());
  for (std::size_t y = 0; y < py.size(); ++y) {
    const auto cond = random_probs(nx, rng);
    for (std::size_t x = 0; x < nx; ++x) p[x * py.size() + y] = cond[x] * py[y];
  }
  return {FactorShape{nx, py.size()}, p, 1e-9};
}

ClassicalJoint joint_with_left_marginal(const std::vector<double>& py, std::size_t nz, std::mt19937_64& rng) {
  std::vector<double> p(py.size() * nz);
  for (std::size_t y = 0; y < py.size(); ++y) {
    const auto cond = random_probs(nz, rng);
    for (std::size_t z = 0; z < nz; ++z) p[y * nz + z] = py[y] * cond[z];
  }
  return {FactorShape{py.size(), nz}, p, 1e-9};
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("classical_extension of independent tables is the product") {
  const std::vector<double> p1 = {0.2, 0.8}, p2 = {0.5, 0.3, 0.2}, p3 = {0.6, 0.4};
  const auto ext = classical_extension(product_joint(p1, p2), product_joint(p2, p3));
  std::vector<double> expect;
  for (double a : p1)
    for (double b : p2)
      for (double c : p3) expect.push_back(a * b * c);
  CHECK(max_diff(ext.probs(), expect) < 1e-15);
}

TEST_CASE("classical_extension of uniform tables is uniform") {
  const std::vector<double> u(4, 0.25);
  const ClassicalJoint p({2, 2}, u);
  const auto ext = classical_extension(p, p);
  for (double x : ext.probs()) CHECK(x == doctest::Approx(0.125));
}

TEST_CASE("classical_extension on 3x3x3: marginals and the entropy identity") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto py = random_probs(3, rng);
    const auto p12 = joint_with_right_marginal(3, py, rng);
    const auto p23 = joint_with_left_marginal(py, 3, rng);
    const auto ext = classical_extension(p12, p23);
    CHECK(max_diff(ext.marginal({0, 1}).probs(), p12.probs()) < 1e-12);
    CHECK(max_diff(ext.marginal({1, 2}).probs(), p23.probs()) < 1e-12);
    const double h2 = p12.marginal({1}).shannon_entropy();
    CHECK(ext.shannon_entropy() == doctest::Approx(p12.shannon_entropy() + p23.shannon_entropy() - h2).epsilon(1e-12));
  }
}

TEST_CASE("classical_extension rejects mismatched middle marginals") {
  const std::vector<double> a = {0.5, 0.5}, b = {0.3, 0.7};
  try {
    classical_extension(product_joint(a, a), product_joint(b, a));
    FAIL("expected IncompatibleMarginals");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IncompatibleMarginals);
  }
}

TEST_CASE("classical_extension handles zero-probability fibers") {
  const ClassicalJoint p12({2, 2}, {0.5, 0.0, 0.5, 0.0});
  const ClassicalJoint p23({2, 2}, {0.3, 0.7, 0.0, 0.0});
  const auto ext = classical_extension(p12, p23);
  CHECK(max_diff(ext.marginal({0, 1}).probs(), p12.probs()) < 1e-15);
  CHECK(max_diff(ext.marginal({1, 2}).probs(), p23.probs()) < 1e-15);
}

TEST_CASE("chain_extension") {
  std::mt19937_64 rng(5);
  const auto py = random_probs(3, rng);
  const auto a = joint_with_right_marginal(2, py, rng), b = joint_with_left_marginal(py, 4, rng);
  const std::vector<ClassicalJoint> two = {a, b};
  CHECK(max_diff(chain_extension(two).probs(), classical_extension(a, b).probs()) < 1e-15);

  const ClassicalJoint u({2, 2}, {0.25, 0.25, 0.25, 0.25});
  const std::vector<ClassicalJoint> uniform = {u, u, u};
  const auto uniform_chain = chain_extension(uniform);
  CHECK(uniform_chain.probs().size() == 16);
  for (double x : uniform_chain.probs()) CHECK(x == doctest::Approx(1.0 / 16.0));

  // Random ternary chain x1 - x2 - x3 - x4.
  const auto m2 = random_probs(3, rng), m3 = random_probs(3, rng);
  const auto j1 = joint_with_right_marginal(3, m2, rng);
  std::vector<double> p23(9);
  {
    // Coupling of m2 and m3 via the classical product plus a zero-sum twist.
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 3; ++k) p23[i * 3 + k] = m2[i] * m3[k];
    const double eps = 0.2 * std::min({m2[0], m2[1], m3[0], m3[1]}) * std::min(m2[0], m3[0]);
    p23[0] += eps;
    p23[1] -= eps;
    p23[3] -= eps;
    p23[4] += eps;
  }
  const ClassicalJoint j2({3, 3}, p23, 1e-9);
  const auto j3 = joint_with_left_marginal(m3, 3, rng);
  const std::vector<ClassicalJoint> chain = {j1, j2, j3};
  const auto ext = chain_extension(chain);
  CHECK(ext.dims() == FactorShape{3, 3, 3, 3});
  CHECK(max_diff(ext.marginal({0, 1}).probs(), j1.probs()) < 1e-12);
  CHECK(max_diff(ext.marginal({1, 2}).probs(), j2.probs()) < 1e-12);
  CHECK(max_diff(ext.marginal({2, 3}).probs(), j3.probs()) < 1e-12);

  const std::vector<ClassicalJoint> broken = {j1, j3, j2};
  try {
    chain_extension(broken);
    FAIL("expected IncompatibleMarginals");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IncompatibleMarginals);
    CHECK(e.value() == 1.0);
  }
}

TEST_CASE("golden_thompson_R: commuting pairs saturate") {
  std::mt19937_64 rng(3);
  const auto py = random_probs(2, rng);
  const auto p12 = joint_with_right_marginal(2, py, rng), p23 = joint_with_left_marginal(py, 2, rng);
  const CompatiblePair pair(p12.to_density(), p23.to_density());
  const auto gt = golden_thompson_R(pair);
  CHECK(gt.trace == doctest::Approx(1.0).epsilon(1e-12));
  const auto ext = classical_extension(p12, p23).to_density();
  CHECK(max_abs_diff(gt.R, ext.mat()) < 1e-12);
}

TEST_CASE("golden_thompson_R: product pair gives the product") {
  const auto r1 = random_density(2, 2, 1), r2 = random_density(2, 2, 2), r3 = random_density(2, 2, 3);
  const auto gt = golden_thompson_R(CompatiblePair(tensor(r1, r2), tensor(r2, r3)));
  CHECK(gt.trace == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(max_abs_diff(gt.R, tensor(r1, r2, r3).mat()) < 1e-10);
}

TEST_CASE("golden_thompson_R: trace bound on random pairs, error on singular input") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto rho = random_density(8, 8, 500 + s).reshaped({2, 2, 2});
    const CompatiblePair pair(rho.marginal({0, 1}), rho.marginal({1, 2}));
    CHECK(golden_thompson_R(pair).trace <= 1.0 + 1e-9);
  }
  const auto pure = pure_state(std::vector<cplx>{0.6, 0.0, 0.0, 0.8}, FactorShape{2, 2});
  try {
    golden_thompson_R(CompatiblePair(pure, tensor(pure.marginal({1}), maximally_mixed(2))));
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
  }
}

TEST_CASE("matched_separable_extension") {
  SeparableEnsemble one{{1.0}, {random_density(2, 1, 1)}, {random_density(2, 1, 2)}, {random_density(3, 1, 3)}};
  const auto e1 = matched_separable_extension(one);
  CHECK(e1.rho123.is_pure());
  CHECK(trace_distance(e1.rho123, tensor(one.rho[0], one.sigma[0], one.tau[0])) < 1e-12);

  SeparableEnsemble two{{0.3, 0.7},
                        {random_density(2, 1, 4), random_density(2, 1, 5)},
                        {random_density(2, 1, 6), random_density(2, 1, 7)},
                        {random_density(2, 1, 8), random_density(2, 1, 9)}};
  const auto e2 = matched_separable_extension(two);
  CHECK(trace_distance(e2.rho123.marginal({0, 1}), e2.rho12) < 1e-12);
  CHECK(trace_distance(e2.rho123.marginal({1, 2}), e2.rho23) < 1e-12);

  SeparableEnsemble degenerate = two;
  degenerate.weights = {1.0, 0.0};
  try {
    degenerate.validate();
    FAIL("expected InvalidEnsemble");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidEnsemble);
  }
}

TEST_CASE("perturbation_extension") {
  const auto base = maximally_mixed(8).reshaped({2, 2, 2});
  const CompatiblePair same(base.marginal({0, 1}), base.marginal({1, 2}));
  CHECK(max_abs_diff(perturbation_extension(base, same).mat(), base.mat()) < 1e-15);

  // Small step toward a separable rho12; rho23 stays the matching product.
  const double t = 1e-3;
  const auto sep = tensor(random_density(2, 2, 11), random_density(2, 2, 12));
  const DensityMatrix new12(maximally_mixed(4).mat() * cplx(1 - t) + sep.mat() * cplx(t), FactorShape{2, 2});
  const CompatiblePair pair(new12, tensor(new12.marginal({1}), maximally_mixed(2)));
  const auto ext = perturbation_extension(base, pair);
  CHECK(ext.min_eigenvalue() >= 0.0);
  CHECK(trace_norm(ext.marginal({0, 1}).mat() - pair.rho12().mat()) < 1e-12);
  CHECK(trace_norm(ext.marginal({1, 2}).mat() - pair.rho23().mat()) < 1e-12);

  // Far toward a pure entangled rho12 the candidate goes negative.
  const auto bell = pure_coupling(maximally_mixed(2), maximally_mixed(2));
  const DensityMatrix far12(maximally_mixed(4).mat() * cplx(0.05) + bell.mat() * cplx(0.95), FactorShape{2, 2});
  const auto rho2 = far12.marginal({1});
  const DensityMatrix far23(hermitian_part(pure_coupling(rho2, rho2).mat() * cplx(0.95) +
                                           maximally_mixed(4).mat() * cplx(0.05)),
                            FactorShape{2, 2});
  try {
    perturbation_extension(base, CompatiblePair(far12, far23));
    FAIL("expected NotPSD");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPSD);
    CHECK(e.value() < 0.0);
  }

  const auto singular = pure_state(std::vector<cplx>(8, cplx(1.0 / std::sqrt(8.0))), FactorShape{2, 2, 2});
  CHECK_THROWS_AS(perturbation_extension(singular, same), Error);
}

TEST_CASE("build_triangle_equality_state") {
  const std::vector<double> one = {1.0};
  const auto p = build_triangle_equality_state(one, one);
  CHECK(p.is_pure());
  CHECK(entropy(p) == doctest::Approx(0.0));

  const std::vector<double> mu = {0.2, 0.3, 0.5};
  const auto q = build_triangle_equality_state(one, mu);
  CHECK(q.is_pure());
  CHECK(entropy(q.marginal({0})) == doctest::Approx(entropy(q.marginal({1}))).epsilon(1e-12));

  const std::vector<double> lam = {0.5, 0.5}, mu2 = {1.0 / 3.0, 2.0 / 3.0};
  const auto r = build_triangle_equality_state(lam, mu2);
  const auto spec1 = r.marginal({0}).spectrum();
  const std::vector<double> expect = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0};
  for (std::size_t k = 0; k < 4; ++k) CHECK(spec1[k] == doctest::Approx(expect[k]).epsilon(1e-12));
  const double s12 = entropy(r), s1 = entropy(r.marginal({0})), s2 = entropy(r.marginal({1}));
  CHECK(s12 == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(s1 - s2 == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const std::vector<double> bad = {0.5, 0.6};
  CHECK_THROWS_AS(build_triangle_equality_state(bad, mu), Error);
}
