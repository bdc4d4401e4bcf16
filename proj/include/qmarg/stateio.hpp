#pragma once

// JSON state files: {"dims": [...], "matrix": [[[re, im], ...], ...]}.
// Writers emit a canonical layout (sorted keys, %.17g numbers, LF line ends),
// so write(parse(f)) reproduces a canonical file byte for byte.

#include <string>

#include <json.hpp>

#include "qmarg/constructors.hpp"
#include "qmarg/feasibility.hpp"

namespace qmarg {

// Thrown for malformed files; what() names the source and the violated invariant.
class StateFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double x);  // %.17g

DensityMatrix state_from_json(const nlohmann::json& j, const std::string& source,
                              const StateTolerances& tol = {});
std::string state_to_string(const DensityMatrix& rho, int indent = 0);

std::string read_text(const std::string& path);  // "-" reads stdin
void write_text(const std::string& path, const std::string& text);

DensityMatrix read_state(const std::string& path, const StateTolerances& tol = {});
void write_state(const std::string& path, const DensityMatrix& rho);

// {"rho12": StateFile, "rho23": StateFile}
std::string pair_bundle_to_string(const DensityMatrix& rho12, const DensityMatrix& rho23);

// {"dims": [nx, ny], "probs": [...]}
ClassicalJoint read_classical(const std::string& path);

// {"weights": [...], "rho": [StateFile...], "sigma": [...], "tau": [...]}
SeparableEnsemble read_ensemble(const std::string& path, const StateTolerances& tol = {});

// {"span_dim": n, "vectors": [[[re, im], ...], ...]}
std::string certificate_to_string(const NullspaceCertificate& cert);

}  // namespace qmarg
