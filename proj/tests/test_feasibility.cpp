#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "qmarg/constructors.hpp"
#include "qmarg/criteria.hpp"
#include "qmarg/error.hpp"
#include "qmarg/feasibility.hpp"

using namespace qmarg;

namespace {

CompatiblePair traced_pair(std::size_t rank, std::uint64_t seed) {
  const auto rho = random_density(8, rank, seed).reshaped({2, 2, 2});
  return {rho.marginal({0, 1}), rho.marginal({1, 2})};
}

void check_witness(const FeasibilityVerdict& v, const CompatiblePair& pair) {
  REQUIRE(v.witness.has_value());
  CHECK(v.witness->min_eigenvalue() >= -1e-9);
  CHECK(trace_norm(v.witness->marginal({0, 1}).mat() - pair.rho12().mat()) <= 1e-8);
  CHECK(trace_norm(v.witness->marginal({1, 2}).mat() - pair.rho23().mat()) <= 1e-8);
}

}  // namespace

TEST_CASE("hermitian coordinates are an isometry") {
  std::mt19937_64 rng(1);
  const auto a = qmarg::testing::random_hermitian(5, rng), b = qmarg::testing::random_hermitian(5, rng);
  const auto x = hermitian_coords(a), y = hermitian_coords(b);
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  CHECK(dot == doctest::Approx(real_inner(a, b)).epsilon(1e-12));
  CHECK(max_abs_diff(from_hermitian_coords(5, x), a) < 1e-14);
}

TEST_CASE("project_psd") {
  const auto rho = random_density(4, 3, 2);
  CHECK(max_abs_diff(project_psd(rho.mat()), rho.mat()) < 1e-12);
  const std::vector<double> d = {1.0, -1.0}, e = {1.0, 0.0};
  CHECK(max_abs_diff(project_psd(ComplexMatrix::diagonal(d)), ComplexMatrix::diagonal(e)) < 1e-15);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const auto a = qmarg::testing::random_hermitian(3, rng);
    const auto p = project_psd(a);
    CHECK(eigenvalues(p).front() >= -1e-12);
    const double best = (a - p).frobenius_norm();
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto x = random_density(3, 1 + s % 3, 1000 * k + s).mat() * cplx(1.0 + static_cast<double>(s % 5));
      CHECK(best <= (a - x).frobenius_norm() + 1e-12);
    }
  }
}

TEST_CASE("project_marginal_affine") {
  const auto pair = traced_pair(8, 5);
  const MarginalProjector proj(pair.joint_shape());
  const auto ext = random_density(8, 8, 5).mat();
  CHECK(max_abs_diff(proj.project(ext, pair), ext) < 1e-11);

  // Traceless perturbation that breaks the constraints.
  std::mt19937_64 rng(6);
  auto pert = qmarg::testing::random_hermitian(8, rng);
  pert -= ComplexMatrix::identity(8) * (pert.trace() / 8.0);
  const auto fixed = proj.project(ext + pert * cplx(0.1), pair);
  CHECK(trace_norm(partial_trace(fixed, pair.joint_shape(), {0, 1}) - pair.rho12().mat()) < 1e-10);
  CHECK(trace_norm(partial_trace(fixed, pair.joint_shape(), {1, 2}) - pair.rho23().mat()) < 1e-10);

  const auto x = qmarg::testing::random_hermitian(8, rng);
  const auto once = project_marginal_affine(x, pair);
  CHECK(max_abs_diff(project_marginal_affine(once, pair), once) < 1e-11);
  CHECK(proj.system().rank() == 28);  // 16 + 16 constraints, 4 shared through rho2
}

TEST_CASE("solve: product pair is feasible") {
  const auto r1 = random_density(2, 2, 1), r2 = random_density(2, 2, 2), r3 = random_density(2, 2, 3);
  const CompatiblePair pair(tensor(r1, r2), tensor(r2, r3));
  const auto v = solve(pair);
  CHECK(v.status == Verdict::Feasible);
  CHECK(v.evidence == Evidence::Witness);
  check_witness(v, pair);
  CHECK(trace_distance(*v.witness, tensor(r1, r2, r3)) < 1e-8);
}

TEST_CASE("solve: pure rho12 with product rho23 has witness rho12 (x) rho3") {
  const auto rho12 = pure_state(std::vector<cplx>{0.8, 0.0, 0.0, 0.6}, FactorShape{2, 2});
  const auto rho3 = random_density(2, 2, 4);
  const CompatiblePair pair(rho12, tensor(rho12.marginal({1}), rho3));
  const auto v = solve(pair);
  REQUIRE(v.status == Verdict::Feasible);
  check_witness(v, pair);
  CHECK(trace_distance(*v.witness, tensor(rho12, rho3)) < 1e-8);
}

TEST_CASE("solve: product candidates and the iterative path") {
  const std::vector<double> lam{0.3, 0.7}, mu{0.4, 0.6};
  const auto rho12 = build_triangle_equality_state(lam, mu);
  const auto rho3 = random_density(2, 2, 5);
  const CompatiblePair pair(rho12, tensor(rho12.marginal({1}), rho3));

  // Extensions are not unique here; the product candidate is picked first.
  const auto v = solve(pair);
  REQUIRE(v.status == Verdict::Feasible);
  CHECK(v.iterations == 0);
  CHECK(trace_distance(*v.witness, tensor(rho12, rho3)) < 1e-12);

  SolveOptions opts;
  opts.try_products = false;
  const auto w = solve(pair, opts);
  REQUIRE(w.status == Verdict::Feasible);
  CHECK(w.iterations > 0);
  check_witness(w, pair);
}

TEST_CASE("solve: matched separable pairs are feasible") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    SeparableEnsemble ens{{0.2, 0.3, 0.5}, {}, {}, {}};
    for (std::uint64_t j = 0; j < 3; ++j) {
      ens.rho.push_back(random_density(2, 1 + j % 2, 10 * s + j));
      ens.sigma.push_back(random_density(2, 1, 10 * s + j + 3));
      ens.tau.push_back(random_density(2, 2, 10 * s + j + 6));
    }
    const auto ext = matched_separable_extension(ens);
    const CompatiblePair pair(ext.rho12, ext.rho23);
    const auto v = solve(pair);
    CHECK(v.status == Verdict::Feasible);
    if (v.witness) check_witness(v, pair);
  }
}

TEST_CASE("solve: traced random states are feasible") {
  for (std::uint64_t s = 0; s < 12; ++s) {
    const auto pair = traced_pair(1 + s % 8, 300 + s);
    const auto v = solve(pair);
    CHECK(v.status == Verdict::Feasible);
    if (v.witness) check_witness(v, pair);
  }
}

TEST_CASE("solve: counterexample is infeasible with a verified certificate") {
  const auto ce = build_counterexample(CounterexampleSpec{});
  const auto v = solve(ce.pair);
  CHECK(v.status == Verdict::Infeasible);
  CHECK(v.evidence == Evidence::NullspaceCertificate);
  REQUIRE(v.certificate.has_value());
  CHECK(verify_certificate(ce.pair, *v.certificate));
}

TEST_CASE("solve without facial reduction stays sound on the counterexample") {
  const auto ce = build_counterexample(CounterexampleSpec{});
  SolveOptions opts;
  opts.facial_reduction = false;
  opts.max_iter = 2000;
  const auto v = solve(ce.pair, opts);
  CHECK(v.status != Verdict::Feasible);
}

TEST_CASE("solve: triangle-equality state with non-product rho23 is never feasible") {
  const std::vector<double> lam = {0.3, 0.7}, mu = {0.4, 0.6};
  const auto t = build_triangle_equality_state(lam, mu);
  const auto rho2 = t.marginal({1});
  const DensityMatrix rho23(tensor(rho2, rho2).mat() * cplx(0.8) + pure_coupling(rho2, rho2).mat() * cplx(0.2),
                            FactorShape{2, 2});
  const auto v = solve(CompatiblePair(t, rho23));
  CHECK(v.status == Verdict::Infeasible);
  CHECK(v.evidence == Evidence::InconsistentConstraints);
}

TEST_CASE("forced_nullspace and verify_certificate") {
  const auto ce = build_counterexample(CounterexampleSpec{});
  CHECK(ce.certificate.span_dim == 8);
  CHECK(verify_certificate(ce.pair, ce.certificate));

  auto dropped = ce.certificate;
  dropped.vectors.pop_back();
  CHECK(numerical_rank(dropped.vectors) == 7);
  CHECK_FALSE(verify_certificate(ce.pair, dropped));

  // A pair with an extension: no vector set can pass.
  const auto r = random_density(2, 2, 9);
  const CompatiblePair product(tensor(r, r), tensor(r, r));
  NullspaceCertificate basis;
  for (std::size_t k = 0; k < 8; ++k) {
    std::vector<cplx> e(8, 0.0);
    e[k] = 1.0;
    basis.vectors.push_back(e);
  }
  basis.span_dim = 8;
  CHECK_FALSE(verify_certificate(product, basis));
  CHECK_FALSE(verify_certificate(product, ce.certificate));

  const auto forced = forced_nullspace(ce.pair);
  CHECK(forced.span_dim == 8);
  CHECK(verify_certificate(ce.pair, forced));
}

TEST_CASE("lemma_two_decompositions") {
  const double h = 1.0 / std::numbers::sqrt2;
  const std::vector<cplx> plus = {h, h};
  const auto a = lemma_two_decompositions(maximally_mixed(2), plus);
  CHECK(a.nu[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a.nu[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(std::abs(a.phi[1][0] * h - a.phi[1][1] * h) - 1.0) < 1e-12);  // phi2 ~ (1, -1)/sqrt 2

  const std::vector<double> d = {0.7, 0.3};
  const DensityMatrix rho2(ComplexMatrix::diagonal(d));
  const auto b = lemma_two_decompositions(rho2, plus);
  CHECK(b.nu[0] == doctest::Approx(0.42).epsilon(1e-12));
  const auto remainder = rho2.mat() - ComplexMatrix::projector(b.phi[0]) * cplx(b.nu[0]);
  CHECK(std::abs(eigenvalues(remainder).front()) < 1e-12);
  const auto rebuilt = ComplexMatrix::projector(b.phi[0]) * cplx(b.nu[0]) + ComplexMatrix::projector(b.phi[1]) * cplx(b.nu[1]);
  CHECK(max_abs_diff(rebuilt, rho2.mat()) < 1e-12);

  try {
    lemma_two_decompositions(rho2, std::vector<cplx>{1.0, 0.0});
    FAIL("expected DegenerateChoice");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateChoice);
  }
}

TEST_CASE("build_counterexample variants") {
  const auto a = build_counterexample(CounterexampleSpec{0.6, std::numbers::pi / 4, 0.0});
  CHECK(a.certificate.span_dim == 8);
  CHECK(std::abs(entropy_report(a.pair).slack_pol) < 1e-9);
  CHECK(verify_certificate(a.pair, a.certificate));

  const auto b = build_counterexample(CounterexampleSpec{0.5, std::numbers::pi / 4, 0.1});
  CHECK(b.certificate.span_dim == 8);
  CHECK(entropy_report(b.pair).slack_pol > 1e-4);
  CHECK(verify_certificate(b.pair, b.certificate));

  // eta2 = eta1 collapses the certificate.
  try {
    build_counterexample(CounterexampleSpec{0.5, std::numbers::pi / 4, std::numbers::pi / 2});
    FAIL("expected CertificateDegenerate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CertificateDegenerate);
  }
  CHECK_THROWS_AS(build_counterexample(CounterexampleSpec{0.4, 0.5, 0.0}), Error);
}

TEST_CASE("rho2 marginals of the counterexample agree") {
  const auto ce = build_counterexample(CounterexampleSpec{0.7, 0.3, 0.2});
  CHECK(ce.pair.middle_distance() < 1e-12);
  const auto rep = entropy_report(ce.pair);
  CHECK(rep.slack_pol >= -1e-9);
  CHECK_FALSE(necessary_conditions(ce.pair).blocked);
}

TEST_CASE("four-basis pair") {
  const auto fb = build_four_basis_pair();
  CHECK(fb.certificate.span_dim == 8);
  CHECK(verify_certificate(fb.pair, fb.certificate));
  for (const auto* r : {&fb.pair.rho12(), &fb.pair.rho23()}) {
    CHECK(r->spectrum()[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r->spectrum()[3] == doctest::Approx(0.5).epsilon(1e-12));
  }
  CHECK(solve(fb.pair).status == Verdict::Infeasible);
  CHECK_FALSE(common_purification_check(fb.pair));
}

TEST_CASE("common_purification_check") {
  const auto rho12 = pure_state(std::vector<cplx>{0.6, 0.0, 0.0, 0.8}, FactorShape{2, 2});
  const auto rho3 = pure_state(std::vector<cplx>{0.0, 1.0});
  CHECK(common_purification_check(CompatiblePair(rho12, tensor(rho12.marginal({1}), rho3))));

  const auto pair = traced_pair(8, 77);
  CHECK_FALSE(common_purification_check(pair));

  // Marginals of a random pure tripartite state do have a common purification.
  const auto psi = random_density(8, 1, 78).reshaped({2, 2, 2});
  CHECK(common_purification_check(CompatiblePair(psi.marginal({0, 1}), psi.marginal({1, 2}))));
}

TEST_CASE("to_string of verdicts") {
  CHECK(to_string(Verdict::Feasible) == "FEASIBLE");
  CHECK(to_string(Verdict::Infeasible) == "INFEASIBLE");
  CHECK(to_string(Verdict::Undecided) == "UNDECIDED");
}
