#include "qmarg/criteria.hpp"

#include <cmath>

namespace qmarg {

CompatiblePair check_compatible(const DensityMatrix& rho12, const DensityMatrix& rho23, double tol) {
  return {rho12, rho23, tol};
}

EntropyReport entropy_report(const CompatiblePair& pair, const CriteriaOptions& opts) {
  EntropyReport r;
  r.S1 = entropy(pair.rho1());
  r.S2 = entropy(pair.rho2());
  r.S3 = entropy(pair.rho3());
  r.S12 = entropy(pair.rho12());
  r.S23 = entropy(pair.rho23());
  r.slack_cheap = r.S12 + r.S23 - r.S2;
  r.slack_pol = r.S12 + r.S23 - r.S1 - r.S3;
  r.al_slack12 = r.S12 - std::abs(r.S1 - r.S2);
  r.al_slack23 = r.S23 - std::abs(r.S2 - r.S3);
  r.triangle_equality_12 = std::abs(r.S12 - (r.S1 - r.S2)) <= opts.equality_tol;
  r.triangle_equality_23 = std::abs(r.S23 - (r.S3 - r.S2)) <= opts.equality_tol;
  return r;
}

NecessityVerdict necessary_conditions(const CompatiblePair& pair, const CriteriaOptions& opts) {
  const auto rep = entropy_report(pair, opts);
  NecessityVerdict v;
  v.compatible = true;  // a CompatiblePair cannot exist otherwise
  v.passes_cheap = rep.slack_cheap >= -opts.slack_tol;
  v.passes_pol = rep.slack_pol >= -opts.slack_tol;
  v.product_only_obstruction = rep.triangle_equality_12 || rep.triangle_equality_23;

  // The product-only obstruction is checked first: it is the more specific
  // reason, and for pure rho12 it co-occurs with a failed second SSA form.
  if (rep.triangle_equality_12 &&
      trace_distance(pair.rho23(), tensor(pair.rho2(), pair.rho3())) > opts.product_tol) {
    v.blocked = true;
    v.reason = "product-only obstruction: S12 = S1 - S2 but rho23 is not rho2 (x) rho3";
  } else if (rep.triangle_equality_23 &&
             trace_distance(pair.rho12(), tensor(pair.rho1(), pair.rho2())) > opts.product_tol) {
    v.blocked = true;
    v.reason = "product-only obstruction: S23 = S3 - S2 but rho12 is not rho1 (x) rho2";
  } else if (!v.passes_pol) {
    v.blocked = true;
    v.reason = "S12 + S23 < S1 + S3";
  } else if (!v.passes_cheap) {
    v.blocked = true;
    v.reason = "S12 + S23 < S2";
  }
  return v;
}

bool implication_check(const CompatiblePair& pair, const CriteriaOptions& opts) {
  const auto v = necessary_conditions(pair, opts);
  return !v.passes_pol || v.passes_cheap;
}

}  // namespace qmarg
