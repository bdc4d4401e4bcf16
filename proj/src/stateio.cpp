#include "qmarg/stateio.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "qmarg/error.hpp"

namespace qmarg {

using nlohmann::json;

std::string format_double(double x) {
  if (x == 0.0) x = 0.0;  // drop the sign of negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

[[noreturn]] void fail(const std::string& source, const std::string& what) {
  throw StateFileError(source + ": " + what);
}

std::string complex_entry(cplx z) { return "[" + format_double(z.real()) + ", " + format_double(z.imag()) + "]"; }

std::string pad(int n) { return std::string(static_cast<std::size_t>(n), ' '); }

std::string dims_string(const FactorShape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + "]";
}

std::string vector_string(std::span<const cplx> v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + complex_entry(v[i]);
  return s + "]";
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(source, std::string("malformed JSON (") + e.what() + ")");
  }
}

}  // namespace

DensityMatrix state_from_json(const json& j, const std::string& source, const StateTolerances& tol) {
  if (!j.is_object() || !j.contains("dims") || !j.contains("matrix")) {
    fail(source, "state file needs \"dims\" and \"matrix\" fields");
  }
  const auto& jd = j.at("dims");
  if (!jd.is_array() || jd.empty()) fail(source, "\"dims\" must be a non-empty integer list");
  std::vector<std::size_t> dims;
  for (const auto& d : jd) {
    if (!d.is_number_integer() || d.get<long long>() < 1) fail(source, "\"dims\" entries must be positive integers");
    dims.push_back(d.get<std::size_t>());
  }
  const FactorShape shape(dims);
  const std::size_t n = shape.total();
  const auto& jm = j.at("matrix");
  if (!jm.is_array() || jm.size() != n) {
    fail(source, "\"matrix\" must have " + std::to_string(n) + " rows (product of dims)");
  }
  std::vector<cplx> entries;
  entries.reserve(n * n);
  for (const auto& row : jm) {
    if (!row.is_array() || row.size() != n) fail(source, "every matrix row must have " + std::to_string(n) + " entries");
    for (const auto& e : row) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        fail(source, "matrix entries must be [re, im] number pairs");
      }
      entries.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  }
  try {
    return DensityMatrix(ComplexMatrix(n, n, std::move(entries)), shape, tol);
  } catch (const Error& e) {
    fail(source, std::string("not a density matrix: ") + e.what());
  }
}

std::string state_to_string(const DensityMatrix& rho, int indent) {
  const auto& m = rho.mat();
  std::ostringstream os;
  os << "{\n" << pad(indent + 2) << "\"dims\": " << dims_string(rho.shape()) << ",\n";
  os << pad(indent + 2) << "\"matrix\": [\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<cplx> row(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    os << pad(indent + 4) << vector_string(row) << (r + 1 < m.rows() ? ",\n" : "\n");
  }
  os << pad(indent + 2) << "]\n" << pad(indent) << "}";
  if (indent == 0) os << "\n";
  return os.str();
}

std::string read_text(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateFileError(path + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StateFileError(path + ": cannot open file for writing");
  out << text;
  if (!out) throw StateFileError(path + ": write failed");
}

DensityMatrix read_state(const std::string& path, const StateTolerances& tol) {
  return state_from_json(parse_json(read_text(path), path), path, tol);
}

void write_state(const std::string& path, const DensityMatrix& rho) { write_text(path, state_to_string(rho)); }

std::string pair_bundle_to_string(const DensityMatrix& rho12, const DensityMatrix& rho23) {
  return "{\n  \"rho12\": " + state_to_string(rho12, 2) + ",\n  \"rho23\": " + state_to_string(rho23, 2) + "\n}\n";
}

ClassicalJoint read_classical(const std::string& path) {
  const auto j = parse_json(read_text(path), path);
  if (!j.is_object() || !j.contains("dims") || !j.contains("probs")) {
    fail(path, "probability table needs \"dims\" and \"probs\" fields");
  }
  try {
    return {FactorShape(j.at("dims").get<std::vector<std::size_t>>()), j.at("probs").get<std::vector<double>>(), 1e-9};
  } catch (const json::exception& e) {
    fail(path, std::string("bad probability table: ") + e.what());
  } catch (const Error& e) {
    fail(path, std::string("bad probability table: ") + e.what());
  }
}

SeparableEnsemble read_ensemble(const std::string& path, const StateTolerances& tol) {
  const auto j = parse_json(read_text(path), path);
  SeparableEnsemble ens;
  try {
    ens.weights = j.at("weights").get<std::vector<double>>();
    auto states = [&](const char* key) {
      std::vector<DensityMatrix> out;
      for (const auto& s : j.at(key)) out.push_back(state_from_json(s, path + ":" + key, tol));
      return out;
    };
    ens.rho = states("rho");
    ens.sigma = states("sigma");
    ens.tau = states("tau");
  } catch (const json::exception& e) {
    fail(path, std::string("ensemble needs weights, rho, sigma, tau: ") + e.what());
  }
  return ens;
}

std::string certificate_to_string(const NullspaceCertificate& cert) {
  std::ostringstream os;
  os << "{\n  \"span_dim\": " << cert.span_dim << ",\n  \"vectors\": [\n";
  for (std::size_t k = 0; k < cert.vectors.size(); ++k)
    os << "    " << vector_string(cert.vectors[k]) << (k + 1 < cert.vectors.size() ? ",\n" : "\n");
  os << "  ]\n}\n";
  return os.str();
}

}  // namespace qmarg
