#include "qmarg/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qmarg/error.hpp"

namespace qmarg {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return "FEASIBLE";
    case Verdict::Infeasible: return "INFEASIBLE";
    case Verdict::Undecided: return "UNDECIDED";
  }
  return "UNKNOWN";
}

std::string_view to_string(Evidence e) {
  switch (e) {
    case Evidence::None: return "none";
    case Evidence::Witness: return "witness";
    case Evidence::NullspaceCertificate: return "nullspace-certificate";
    case Evidence::InconsistentConstraints: return "inconsistent-reduced-constraints";
    case Evidence::GapStall: return "gap-stall";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Hermitian coordinates

std::vector<double> hermitian_coords(const ComplexMatrix& h) {
  const std::size_t n = h.rows();
  std::vector<double> x;
  x.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) x.push_back(h(i, i).real());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx v = 0.5 * (h(i, j) + std::conj(h(j, i)));
      x.push_back(std::numbers::sqrt2 * v.real());
      x.push_back(std::numbers::sqrt2 * v.imag());
    }
  return x;
}

ComplexMatrix from_hermitian_coords(std::size_t n, std::span<const double> x) {
  if (x.size() != n * n) throw Error(ErrorKind::ShapeMismatch, "coordinate vector length");
  ComplexMatrix h(n, n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) h(i, i) = x[k++];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx v(x[k] / std::numbers::sqrt2, x[k + 1] / std::numbers::sqrt2);
      k += 2;
      h(i, j) = v;
      h(j, i) = std::conj(v);
    }
  return h;
}

// ---------------------------------------------------------------------------
// Linear constraint systems

LinearConstraintSystem::LinearConstraintSystem(std::size_t input_side, const Map& map, double rel_rank_tol)
    : n_(input_side * input_side) {
  std::vector<double> unit(n_, 0.0);
  for (std::size_t c = 0; c < n_; ++c) {
    unit[c] = 1.0;
    const auto col = map(from_hermitian_coords(input_side, unit));
    unit[c] = 0.0;
    if (c == 0) {
      m_ = col.size();
      a_.assign(m_ * n_, 0.0);
    } else if (col.size() != m_) {
      throw Error(ErrorKind::ShapeMismatch, "linear map output length varies");
    }
    for (std::size_t r = 0; r < m_; ++r) a_[r * n_ + c] = col[r];
  }

  ComplexMatrix gram(m_, m_);
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = i; j < m_; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n_; ++k) s += a_[i * n_ + k] * a_[j * n_ + k];
      gram(i, j) = s;
      gram(j, i) = s;
    }
  pinv_.assign(n_ * m_, 0.0);
  if (m_ == 0) return;
  const auto eig = herm_eig(gram);
  const double top = std::max(eig.eigenvalues.back(), 0.0);
  // G^+ = sum_{lambda > tol} v v^T / lambda; the eigenvectors of a real symmetric
  // matrix from the complex solver may carry a global phase per column, which
  // cancels in v v^dagger.
  ComplexMatrix gpinv(m_, m_);
  for (std::size_t k = 0; k < m_; ++k) {
    const double l = eig.eigenvalues[k];
    if (l <= rel_rank_tol * top || l <= 0.0) continue;
    ++rank_;
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < m_; ++j)
        gpinv(i, j) += eig.eigenvectors(i, k) * std::conj(eig.eigenvectors(j, k)) / l;
  }
  for (std::size_t c = 0; c < n_; ++c)
    for (std::size_t j = 0; j < m_; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m_; ++i) s += a_[i * n_ + c] * gpinv(i, j).real();
      pinv_[c * m_ + j] = s;
    }
}

std::vector<double> LinearConstraintSystem::apply(std::span<const double> x) const {
  std::vector<double> out(m_, 0.0);
  for (std::size_t r = 0; r < m_; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n_; ++c) s += a_[r * n_ + c] * x[c];
    out[r] = s;
  }
  return out;
}

void LinearConstraintSystem::project(std::vector<double>& x, std::span<const double> b) const {
  auto r = apply(x);
  for (std::size_t i = 0; i < m_; ++i) r[i] -= b[i];
  for (std::size_t c = 0; c < n_; ++c) {
    double s = 0.0;
    for (std::size_t j = 0; j < m_; ++j) s += pinv_[c * m_ + j] * r[j];
    x[c] -= s;
  }
}

double LinearConstraintSystem::inconsistency(std::span<const double> b) const {
  std::vector<double> x(n_, 0.0);
  project(x, b);
  const auto ax = apply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < m_; ++i) s += (ax[i] - b[i]) * (ax[i] - b[i]);
  return std::sqrt(s);
}

namespace {

std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void require_tripartite(const FactorShape& shape) {
  if (shape.size() != 3) throw Error(ErrorKind::ShapeMismatch, "expected a tripartite shape");
}

}  // namespace

MarginalProjector::MarginalProjector(const FactorShape& shape)
    : shape_(shape), system_(shape.total(), [&](const ComplexMatrix& x) {
        require_tripartite(shape);
        return concat(hermitian_coords(partial_trace(x, shape, {0, 1})),
                      hermitian_coords(partial_trace(x, shape, {1, 2})));
      }) {}

std::vector<double> MarginalProjector::targets(const CompatiblePair& pair) const {
  if (pair.joint_shape() != shape_) throw Error(ErrorKind::ShapeMismatch, "pair does not match projector shape");
  return concat(hermitian_coords(pair.rho12().mat()), hermitian_coords(pair.rho23().mat()));
}

ComplexMatrix MarginalProjector::project(const ComplexMatrix& x, const CompatiblePair& pair) const {
  if (x.rows() != shape_.total()) throw Error(ErrorKind::ShapeMismatch, "matrix does not match projector shape");
  require_hermitian(x);
  auto coords = hermitian_coords(x);
  system_.project(coords, targets(pair));
  return from_hermitian_coords(x.rows(), coords);
}

ComplexMatrix project_psd(const ComplexMatrix& a) {
  return apply_spectral(a, [](double l) { return l > 0.0 ? l : 0.0; });
}

ComplexMatrix project_marginal_affine(const ComplexMatrix& x, const CompatiblePair& pair) {
  return MarginalProjector(pair.joint_shape()).project(x, pair);
}

double marginal_residual(const ComplexMatrix& x, const CompatiblePair& pair) {
  const auto shape = pair.joint_shape();
  const double r12 = trace_norm(partial_trace(x, shape, {0, 1}) - pair.rho12().mat());
  const double r23 = trace_norm(partial_trace(x, shape, {1, 2}) - pair.rho23().mat());
  return std::max(r12, r23);
}

// ---------------------------------------------------------------------------
// Certificates

namespace {

// Columns of the eigenvector matrix whose eigenvalue is <= tol.
std::vector<std::vector<cplx>> kernel_vectors(const ComplexMatrix& rho, double tol) {
  const auto eig = herm_eig(rho);
  std::vector<std::vector<cplx>> out;
  for (std::size_t k = 0; k < eig.eigenvalues.size(); ++k)
    if (eig.eigenvalues[k] <= tol) out.push_back(eig.eigenvectors.column(k));
  return out;
}

std::vector<cplx> basis_vector(std::size_t n, std::size_t k) {
  std::vector<cplx> e(n, 0.0);
  e[k] = 1.0;
  return e;
}

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

// If v (as a p x q matrix, row index = first factor) is u (x) x, returns u.
std::optional<std::vector<cplx>> left_factor(std::span<const cplx> v, std::size_t p, std::size_t q) {
  ComplexMatrix m(p, q);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) m(i, j) = v[i * q + j];
  const auto eig = herm_eig(m * m.adjoint());
  const auto u = eig.eigenvectors.column(p - 1);
  // x = u^dagger M, then compare u (x) x against v.
  std::vector<cplx> x(q, 0.0);
  for (std::size_t j = 0; j < q; ++j)
    for (std::size_t i = 0; i < p; ++i) x[j] += std::conj(u[i]) * m(i, j);
  const auto rebuilt = kron(u, x);
  double err = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) err += std::norm(rebuilt[k] - v[k]);
  if (err > 1e-18 * std::max(norm2(v), 1e-300)) return std::nullopt;
  return u;
}

double expectation(const ComplexMatrix& rho, std::span<const cplx> u) {
  const auto ru = rho * u;
  cplx s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += std::conj(u[i]) * ru[i];
  return s.real() / norm2(u);
}

}  // namespace

NullspaceCertificate forced_nullspace(const CompatiblePair& pair, double rank_tol) {
  const std::size_t d1 = pair.d1(), d3 = pair.d3();
  NullspaceCertificate cert;
  for (const auto& u : kernel_vectors(pair.rho12().mat(), rank_tol))
    for (std::size_t k = 0; k < d3; ++k) cert.vectors.push_back(kron(u, basis_vector(d3, k)));
  for (const auto& u : kernel_vectors(pair.rho23().mat(), rank_tol))
    for (std::size_t k = 0; k < d1; ++k) cert.vectors.push_back(kron(basis_vector(d1, k), u));
  cert.span_dim = numerical_rank(cert.vectors);
  return cert;
}

bool verify_certificate(const CompatiblePair& pair, const NullspaceCertificate& cert, double null_tol) {
  const std::size_t d1 = pair.d1(), d2 = pair.d2(), d3 = pair.d3();
  const std::size_t total = d1 * d2 * d3;
  for (const auto& v : cert.vectors) {
    if (v.size() != total || norm2(v) == 0.0) return false;
    bool forced = false;
    if (auto u = left_factor(v, d1 * d2, d3)) forced = expectation(pair.rho12().mat(), *u) <= null_tol;
    if (!forced) {
      // v = x (x) u with u on H2 (x) H3: transpose the factor order via the
      // (d1) x (d2 d3) layout and take the right factor.
      ComplexMatrix m(d1, d2 * d3);
      for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d2 * d3; ++j) m(i, j) = v[i * d2 * d3 + j];
      const auto mt = m.transpose();
      std::vector<cplx> swapped(mt.data().begin(), mt.data().end());
      if (auto u = left_factor(swapped, d2 * d3, d1)) forced = expectation(pair.rho23().mat(), *u) <= null_tol;
    }
    if (!forced) return false;
  }
  return numerical_rank(cert.vectors) == total;
}

// ---------------------------------------------------------------------------
// Solver

namespace {

struct ReducedProblem {
  ComplexMatrix basis;  // D x s, orthonormal columns
  std::size_t dim = 0;
};

ReducedProblem reduce(const CompatiblePair& pair, const SolveOptions& opts) {
  const std::size_t total = pair.d1() * pair.d2() * pair.d3();
  if (!opts.facial_reduction) return {ComplexMatrix::identity(total), total};
  auto range_projector = [&](const ComplexMatrix& rho) {
    const auto b = range_basis(rho, opts.rank_tol);
    return b * b.adjoint();
  };
  const auto p12 = range_projector(pair.rho12().mat());
  const auto p23 = range_projector(pair.rho23().mat());
  auto sum = kron(p12, ComplexMatrix::identity(pair.d3()));
  sum += kron(ComplexMatrix::identity(pair.d1()), p23);
  // The intersection of the two ranges is the eigenspace of the sum at eigenvalue 2.
  auto basis = range_basis(hermitian_part(sum), 2.0 - 1e-10);
  const std::size_t s = basis.cols();
  return {std::move(basis), s};
}

ComplexMatrix lift(const ReducedProblem& rp, const ComplexMatrix& y) {
  return hermitian_part(rp.basis * y * rp.basis.adjoint());
}

ComplexMatrix restrict_to(const ReducedProblem& rp, const ComplexMatrix& x) {
  return hermitian_part(rp.basis.adjoint() * x * rp.basis);
}

ComplexMatrix project_rank_one(const ComplexMatrix& a) {
  const auto eig = herm_eig(a);
  const double top = std::max(eig.eigenvalues.back(), 0.0);
  const auto v = eig.eigenvectors.column(a.rows() - 1);
  return ComplexMatrix::projector(v) * cplx(top);
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::optional<DensityMatrix> as_witness(const ComplexMatrix& x, const CompatiblePair& pair, double tol,
                                        double& residual) {
  const double tr = x.trace().real();
  if (!(tr > 0.0)) return std::nullopt;
  auto normalized = hermitian_part(x * cplx(1.0 / tr));
  residual = marginal_residual(normalized, pair);
  if (residual > tol) return std::nullopt;
  try {
    StateTolerances st;
    st.psd = tol;
    return DensityMatrix(std::move(normalized), pair.joint_shape(), st);
  } catch (const Error&) {
    return std::nullopt;
  }
}


// Solves (G + lambda I) z = r for a symmetric positive semidefinite G by Cholesky.
std::optional<std::vector<double>> damped_solve(std::vector<double> g, std::size_t m, double lambda,
                                                std::vector<double> r) {
  for (std::size_t i = 0; i < m; ++i) g[i * m + i] += lambda;
  for (std::size_t j = 0; j < m; ++j) {
    double d = g[j * m + j];
    for (std::size_t k = 0; k < j; ++k) d -= g[j * m + k] * g[j * m + k];
    if (!(d > 0.0)) return std::nullopt;
    d = std::sqrt(d);
    g[j * m + j] = d;
    for (std::size_t i = j + 1; i < m; ++i) {
      double v = g[i * m + j];
      for (std::size_t k = 0; k < j; ++k) v -= g[i * m + k] * g[j * m + k];
      g[i * m + j] = v / d;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < i; ++k) r[i] -= g[i * m + k] * r[k];
    r[i] /= g[i * m + i];
  }
  for (std::size_t i = m; i-- > 0;) {
    for (std::size_t k = i + 1; k < m; ++k) r[i] -= g[k * m + i] * r[k];
    r[i] /= g[i * m + i];
  }
  return r;
}

// Levenberg-Marquardt on || A(W W^dagger) - b || starting from W = sqrt(Y0).
// Returns W W^dagger, which is PSD by construction.
ComplexMatrix factored_polish(const LinearConstraintSystem& system, std::span<const double> b, const ComplexMatrix& y0,
                              int max_steps) {
  const std::size_t s = y0.rows();
  const std::size_t m = system.output_dim();
  ComplexMatrix w = matrix_sqrt_psd(project_psd(y0));
  auto residual = [&](const ComplexMatrix& wm) {
    auto r = system.apply(hermitian_coords(wm * wm.adjoint()));
    for (std::size_t i = 0; i < m; ++i) r[i] -= b[i];
    return r;
  };
  auto norm = [](const std::vector<double>& v) {
    double t = 0.0;
    for (double x : v) t += x * x;
    return std::sqrt(t);
  };

  auto r = residual(w);
  double rn = norm(r);
  double lambda = 1e-6;
  const std::size_t params = 2 * s * s;
  std::vector<double> jac(m * params);
  for (int step = 0; step < max_steps && rn > 1e-15; ++step) {
    // Column for parameter (i, j, part): A(E W^dagger + W E^dagger) with E = e_i e_j^T (times i).
    const auto wa = w.adjoint();
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        for (int part = 0; part < 2; ++part) {
          const cplx unit = part == 0 ? cplx(1.0) : cplx(0.0, 1.0);
          ComplexMatrix d(s, s);
          for (std::size_t c = 0; c < s; ++c) d(i, c) += unit * wa(j, c);
          for (std::size_t rr = 0; rr < s; ++rr) d(rr, i) += w(rr, j) * std::conj(unit);
          const auto col = system.apply(hermitian_coords(d));
          const std::size_t p = (i * s + j) * 2 + static_cast<std::size_t>(part);
          for (std::size_t k = 0; k < m; ++k) jac[k * params + p] = col[k];
        }
    std::vector<double> g(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t c = a; c < m; ++c) {
        double t = 0.0;
        for (std::size_t p = 0; p < params; ++p) t += jac[a * params + p] * jac[c * params + p];
        g[a * m + c] = t;
        g[c * m + a] = t;
      }
    bool improved = false;
    for (int tries = 0; tries < 12 && !improved; ++tries) {
      const auto z = damped_solve(g, m, lambda, r);
      if (z) {
        ComplexMatrix trial = w;
        for (std::size_t i = 0; i < s; ++i)
          for (std::size_t j = 0; j < s; ++j) {
            double re = 0.0, im = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
              re += jac[k * params + (i * s + j) * 2] * (*z)[k];
              im += jac[k * params + (i * s + j) * 2 + 1] * (*z)[k];
            }
            trial(i, j) -= cplx(re, im);
          }
        auto rt = residual(trial);
        const double rtn = norm(rt);
        if (rtn < rn) {
          w = std::move(trial);
          r = std::move(rt);
          rn = rtn;
          lambda = std::max(lambda * 0.1, 1e-18);
          improved = true;
          continue;
        }
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return w * w.adjoint();
}

}  // namespace

FeasibilityVerdict solve(const CompatiblePair& pair, const SolveOptions& opts) {
  FeasibilityVerdict out;
  const auto shape = pair.joint_shape();
  const std::size_t total = shape.total();
  std::ostringstream diag;

  // Product candidates are exact extensions whenever one marginal factorizes.
  if (opts.try_products && !opts.rank_one) {
    for (const auto& cand : {tensor(pair.rho12(), pair.rho3()), tensor(pair.rho1(), pair.rho23())}) {
      double wres = 0.0;
      if (auto w = as_witness(cand.mat(), pair, opts.feas_tol, wres)) {
        out.status = Verdict::Feasible;
        out.evidence = Evidence::Witness;
        out.residual = wres;
        out.witness = std::move(w);
        out.diagnostics = "product candidate is an extension";
        return out;
      }
    }
  }

  const auto rp = reduce(pair, opts);
  out.reduced_dim = rp.dim;
  if (rp.dim == 0) {
    auto cert = forced_nullspace(pair, opts.rank_tol);
    out.gap = 1.0;
    if (cert.span_dim == total) {
      out.status = Verdict::Infeasible;
      out.evidence = Evidence::NullspaceCertificate;
      out.certificate = std::move(cert);
      out.diagnostics = "forced kernel spans the whole space";
    } else {
      out.diagnostics = "empty reduced space but forced kernel has rank " + std::to_string(cert.span_dim);
    }
    return out;
  }

  const LinearConstraintSystem system(rp.dim, [&](const ComplexMatrix& y) {
    const auto x = lift(rp, y);
    return concat(hermitian_coords(partial_trace(x, shape, {0, 1})),
                  hermitian_coords(partial_trace(x, shape, {1, 2})));
  });
  const auto b = concat(hermitian_coords(pair.rho12().mat()), hermitian_coords(pair.rho23().mat()));

  const double inconsistency = system.inconsistency(b);
  diag << "reduced dim " << rp.dim << " of " << total << ", constraint rank " << system.rank()
       << ", affine inconsistency " << inconsistency;
  if (inconsistency > opts.infeas_tol) {
    out.status = Verdict::Infeasible;
    out.evidence = Evidence::InconsistentConstraints;
    out.gap = inconsistency;
    out.residual = inconsistency;
    out.diagnostics = diag.str();
    return out;
  }

  const ComplexMatrix start = opts.start ? *opts.start
                                         : kron({pair.rho1().mat(), pair.rho2().mat(), pair.rho3().mat()});
  std::vector<double> x = hermitian_coords(restrict_to(rp, start));
  std::vector<double> q(x.size(), 0.0);
  std::vector<double> gaps;
  gaps.reserve(static_cast<std::size_t>(std::max(opts.max_iter, 0)));
  double best_residual = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= opts.max_iter; ++it) {
    auto y = x;
    system.project(y, b);

    std::vector<double> z(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) z[i] = y[i] + (opts.rank_one ? 0.0 : q[i]);
    const auto zm = from_hermitian_coords(rp.dim, z);
    const auto xm = opts.rank_one ? project_rank_one(zm) : project_psd(zm);
    x = hermitian_coords(xm);
    if (!opts.rank_one)
      for (std::size_t i = 0; i < z.size(); ++i) q[i] = z[i] - x[i];

    const double gap = distance(x, y);
    gaps.push_back(gap);
    out.iterations = it;
    out.gap = gap;

    const auto full = lift(rp, xm);
    const double res = marginal_residual(full, pair);
    best_residual = std::min(best_residual, res);
    out.residual = res;
    if (res <= opts.feas_tol) {
      double wres = 0.0;
      if (auto w = as_witness(full, pair, opts.feas_tol, wres)) {
        out.status = Verdict::Feasible;
        out.evidence = Evidence::Witness;
        out.residual = wres;
        out.witness = std::move(w);
        diag << ", converged after " << it << " iterations";
        out.diagnostics = diag.str();
        return out;
      }
    }

    const bool last = it == opts.max_iter;
    if (!opts.rank_one && opts.polish_every > 0 && rp.dim <= opts.polish_max_dim &&
        (it % opts.polish_every == 0 || last)) {
      const auto polished = lift(rp, factored_polish(system, b, xm, 30));
      double wres = 0.0;
      if (auto w = as_witness(polished, pair, opts.feas_tol, wres)) {
        out.status = Verdict::Feasible;
        out.evidence = Evidence::Witness;
        out.residual = wres;
        out.witness = std::move(w);
        diag << ", polished witness after " << it << " iterations";
        out.diagnostics = diag.str();
        return out;
      }
    }

    const auto window = static_cast<std::size_t>(opts.stall_window);
    if (!opts.rank_one && gaps.size() > window && gap >= opts.infeas_tol) {
      const double before = gaps[gaps.size() - 1 - window];
      if (std::abs(gap - before) <= opts.stall_rel_change * gap) {
        out.status = Verdict::Infeasible;
        out.evidence = Evidence::GapStall;
        diag << ", gap stalled at " << gap << " after " << it << " iterations";
        out.diagnostics = diag.str();
        return out;
      }
    }
  }
  diag << ", no decision after " << opts.max_iter << " iterations (best residual " << best_residual
       << ", final gap " << out.gap << ")";
  out.diagnostics = diag.str();
  return out;
}

// ---------------------------------------------------------------------------
// Separable compatible pairs without an extension

std::vector<cplx> perp(std::span<const cplx> v) {
  if (v.size() != 2) throw Error(ErrorKind::WrongDimension, "perp is defined on C^2");
  return {-std::conj(v[1]), std::conj(v[0])};
}

TwoDecompositions lemma_two_decompositions(const DensityMatrix& rho2, std::span<const cplx> phi1) {
  if (rho2.dim() != 2 || phi1.size() != 2) throw Error(ErrorKind::WrongDimension, "lemma needs qubit inputs");
  if (rho2.rank() != 2) throw Error(ErrorKind::InvalidArgument, "rho2 must have rank 2");
  const double n = std::sqrt(norm2(phi1));
  std::vector<cplx> f1 = {phi1[0] / n, phi1[1] / n};

  TwoDecompositions out;
  const auto eig = herm_eig(rho2.mat());
  if (std::abs(eig.eigenvalues[1] - eig.eigenvalues[0]) < 1e-12) {
    out.psi = {basis_vector(2, 0), basis_vector(2, 1)};
  } else {
    out.psi = {eig.eigenvectors.column(1), eig.eigenvectors.column(0)};
  }
  for (int j = 0; j < 2; ++j) {
    cplx overlap = 0.0;
    for (int i = 0; i < 2; ++i) overlap += std::conj(out.psi[j][i]) * f1[i];
    out.mu[j] = expectation(rho2.mat(), out.psi[j]);
    if (std::abs(overlap) > 1.0 - 1e-10) {
      throw Error(ErrorKind::DegenerateChoice, "phi1 is proportional to an eigenvector of rho2", std::abs(overlap));
    }
  }

  const auto inv = apply_spectral(rho2.mat(), [](double l) { return 1.0 / l; });
  const double nu1 = 1.0 / expectation(inv, f1);
  const auto remainder = rho2.mat() - ComplexMatrix::projector(f1) * cplx(nu1);
  const auto reig = herm_eig(hermitian_part(remainder));
  out.phi = {f1, reig.eigenvectors.column(1)};
  out.nu = {nu1, 1.0 - nu1};
  return out;
}

Counterexample build_counterexample(std::span<const double, 2> mu, std::span<const double, 2> nu,
                                    const std::array<std::vector<cplx>, 2>& eta,
                                    const std::array<std::vector<cplx>, 2>& psi,
                                    const std::array<std::vector<cplx>, 2>& phi,
                                    const std::array<std::vector<cplx>, 2>& chi) {
  ComplexMatrix m12(4, 4), m23(4, 4);
  for (int j = 0; j < 2; ++j) {
    m12 += ComplexMatrix::projector(kron(eta[j], psi[j])) * cplx(mu[j]);
    m23 += ComplexMatrix::projector(kron(phi[j], chi[j])) * cplx(nu[j]);
  }
  CompatiblePair pair(DensityMatrix(m12, FactorShape{2, 2}), DensityMatrix(m23, FactorShape{2, 2}));

  const auto e1 = perp(eta[0]), e2 = perp(eta[1]);
  const auto f1 = perp(phi[0]), f2 = perp(phi[1]);
  NullspaceCertificate cert;
  cert.vectors = {
      kron(kron(e1, psi[0]), chi[0]), kron(kron(e1, psi[0]), chi[1]),
      kron(kron(e2, psi[1]), chi[0]), kron(kron(e2, psi[1]), chi[1]),
      kron(kron(e1, f1), chi[0]),     kron(kron(e1, f2), chi[1]),
      kron(kron(e2, f1), chi[0]),     kron(kron(e2, f2), chi[1]),
  };
  cert.span_dim = numerical_rank(cert.vectors);
  if (cert.span_dim < 8) {
    throw Error(ErrorKind::CertificateDegenerate,
                "forced kernel vectors span only " + std::to_string(cert.span_dim) + " dimensions",
                static_cast<double>(cert.span_dim));
  }
  return {std::move(pair), std::move(cert)};
}

Counterexample build_counterexample(const CounterexampleSpec& spec) {
  if (!(spec.mu1 >= 0.5 && spec.mu1 < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "mu1 must lie in [1/2, 1)", spec.mu1);
  }
  if (!(spec.eta_skew >= 0.0)) throw Error(ErrorKind::InvalidArgument, "eta_skew must be nonnegative");
  const std::array<double, 2> mu = {spec.mu1, 1.0 - spec.mu1};
  const DensityMatrix rho2(ComplexMatrix::diagonal(mu));
  const std::vector<cplx> phi1 = {std::cos(spec.phi1_angle), std::sin(spec.phi1_angle)};
  const auto lemma = lemma_two_decompositions(rho2, phi1);

  const std::array<std::vector<cplx>, 2> standard = {basis_vector(2, 0), basis_vector(2, 1)};
  const std::array<std::vector<cplx>, 2> eta = {
      basis_vector(2, 0), std::vector<cplx>{std::sin(spec.eta_skew), std::cos(spec.eta_skew)}};
  return build_counterexample(mu, lemma.nu, eta, standard, lemma.phi, standard);
}

Counterexample build_four_basis_pair() {
  const double h = 1.0 / std::numbers::sqrt2;
  const double c = std::cos(std::numbers::pi / 8), s = std::sin(std::numbers::pi / 8);
  const std::array<std::vector<cplx>, 2> eta = {std::vector<cplx>{h, h}, std::vector<cplx>{h, -h}};
  const std::array<std::vector<cplx>, 2> psi = {basis_vector(2, 0), basis_vector(2, 1)};
  const std::array<std::vector<cplx>, 2> phi = {std::vector<cplx>{c, s}, std::vector<cplx>{-s, c}};
  const std::array<std::vector<cplx>, 2> chi = {std::vector<cplx>{h, cplx(0.0, h)},
                                                std::vector<cplx>{h, cplx(0.0, -h)}};
  const std::array<double, 2> half = {0.5, 0.5};
  return build_counterexample(half, half, eta, psi, phi, chi);
}

// ---------------------------------------------------------------------------
// Common purifications

namespace {

bool same_nonzero_spectrum(const DensityMatrix& a, const DensityMatrix& b, double tol) {
  auto nonzero_desc = [](const DensityMatrix& r) {
    std::vector<double> out;
    for (auto it = r.spectrum().rbegin(); it != r.spectrum().rend(); ++it)
      if (*it >= 1e-12) out.push_back(*it);
    return out;
  };
  const auto x = nonzero_desc(a), y = nonzero_desc(b);
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i] - y[i]) > tol) return false;
  return true;
}

}  // namespace

bool common_purification_check(const CompatiblePair& pair, const SolveOptions& opts) {
  if (!same_nonzero_spectrum(pair.rho12(), pair.rho3(), 1e-9)) return false;
  if (!same_nonzero_spectrum(pair.rho23(), pair.rho1(), 1e-9)) return false;

  if (solve(pair, opts).status == Verdict::Infeasible) return false;

  // Start from a purification of rho12 whose purifying system carries rho3.
  const auto flat12 = pair.rho12().reshaped(FactorShape{pair.d1() * pair.d2()});
  const auto omega = pure_coupling(flat12, pair.rho3());
  SolveOptions pure_opts = opts;
  pure_opts.rank_one = true;
  pure_opts.start = omega.mat();
  return solve(pair, pure_opts).status == Verdict::Feasible;
}

}  // namespace qmarg
