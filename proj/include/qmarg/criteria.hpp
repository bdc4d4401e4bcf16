#pragma once

// Entropic necessary conditions for a common extension of (rho12, rho23).

#include <string>

#include "qmarg/states.hpp"

namespace qmarg {

struct CriteriaOptions {
  double slack_tol = 1e-9;     // an inequality passes when its slack >= -slack_tol
  double equality_tol = 1e-7;  // entropy equality detection (Araki-Lieb triangle)
  double product_tol = 1e-7;   // trace distance below which rho23 counts as rho2 (x) rho3
};

// All entropies in nats.
struct EntropyReport {
  double S1 = 0, S2 = 0, S3 = 0, S12 = 0, S23 = 0;
  double slack_cheap = 0;  // S12 + S23 - S2
  double slack_pol = 0;    // S12 + S23 - S1 - S3
  double al_slack12 = 0;   // S12 - |S1 - S2|
  double al_slack23 = 0;   // S23 - |S2 - S3|
  bool triangle_equality_12 = false;  // S12 = S1 - S2
  bool triangle_equality_23 = false;  // S23 = S3 - S2
};

struct NecessityVerdict {
  bool compatible = false;
  bool passes_cheap = false;
  bool passes_pol = false;
  bool product_only_obstruction = false;  // a triangle equality holds on either side
  bool blocked = false;
  std::string reason;  // empty unless blocked
};

// Throws Incompatible(distance) or ShapeMismatch.
CompatiblePair check_compatible(const DensityMatrix& rho12, const DensityMatrix& rho23,
                                double tol = 1e-9);

EntropyReport entropy_report(const CompatiblePair& pair, const CriteriaOptions& opts = {});

NecessityVerdict necessary_conditions(const CompatiblePair& pair, const CriteriaOptions& opts = {});

// True iff passing the S1 + S3 form of strong subadditivity implies passing the S2 form.
bool implication_check(const CompatiblePair& pair, const CriteriaOptions& opts = {});

}  // namespace qmarg
