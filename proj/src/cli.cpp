#include "qmarg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "qmarg/coherent.hpp"
#include "qmarg/constructors.hpp"
#include "qmarg/criteria.hpp"
#include "qmarg/error.hpp"
#include "qmarg/feasibility.hpp"
#include "qmarg/stateio.hpp"

namespace qmarg {

namespace {

using nlohmann::json;

// Machine block writer: sorted keys, %.17g floats.
void dump_machine(const json& j, std::ostream& os, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    std::size_t k = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++k) {
      os << inner << json(it.key()).dump() << ": ";
      dump_machine(it.value(), os, indent + 2);
      os << (k + 1 < j.size() ? ",\n" : "\n");
    }
    os << pad << "}";
  } else if (j.is_array()) {
    os << "[";
    for (std::size_t k = 0; k < j.size(); ++k) {
      if (k) os << ", ";
      dump_machine(j[k], os, indent);
    }
    os << "]";
  } else if (j.is_number_float()) {
    const double x = j.get<double>();
    if (std::isfinite(x)) os << format_double(x);
    else os << "null";
  } else {
    os << j.dump();
  }
}

std::string hex_digest(const std::vector<std::string>& texts) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (const auto& t : texts) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string g6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string e1(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.1e", x);
  return buf;
}

struct Report {
  explicit Report(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  std::vector<std::string> inputs;  // raw texts, for the digest
  json data = json::object();
  std::vector<std::string> lines;

  void line(const std::string& s) { lines.push_back(s); }
  void value(const std::string& key, double x) {
    data[key] = x;
    lines.push_back(key + " = " + g6(x));
  }
};

struct Settings {
  double tol = 1e-10;         // state validation (PSD clipping / hermiticity / trace)
  double compat_tol = 1e-9;   // middle marginal agreement
  double slack_tol = 1e-9;
  double equality_tol = 1e-7;
  double product_tol = 1e-7;
  double feas_tol = 1e-9;
  double infeas_tol = 1e-6;
  int max_iter = 5000;
  std::optional<std::uint64_t> seed;
  bool json_out = false;
  std::string out;

  StateTolerances state_tol() const { return {tol, tol, tol}; }
  CriteriaOptions criteria() const { return {slack_tol, equality_tol, product_tol}; }
};

void emit(const Report& r, const Settings& s, std::ostream& out) {
  if (s.json_out) {
    json j = r.data;
    j["command"] = r.command;
    j["inputs_digest"] = hex_digest(r.inputs);
    j["summary"] = r.lines;
    dump_machine(j, out, 0);
    out << "\n";
    return;
  }
  out << "command: " << r.command << "\n";
  out << "inputs digest: " << hex_digest(r.inputs) << "\n";
  for (const auto& l : r.lines) out << l << "\n";
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") out << text;
  else write_text(path, text);
}

void add_tolerances(Report& r, const Settings& s, bool solver) {
  json t = {{"state", s.tol}, {"compat", s.compat_tol}, {"slack", s.slack_tol},
            {"equality", s.equality_tol}, {"product", s.product_tol}};
  std::string line = "tolerances: state " + g6(s.tol) + ", compat " + g6(s.compat_tol) + ", slack " +
                     g6(s.slack_tol) + ", equality " + g6(s.equality_tol) + ", product " + g6(s.product_tol);
  if (solver) {
    t["feas"] = s.feas_tol;
    t["infeas"] = s.infeas_tol;
    t["max_iter"] = s.max_iter;
    line += ", feas " + g6(s.feas_tol) + ", infeas " + g6(s.infeas_tol) + ", max-iter " + std::to_string(s.max_iter);
  }
  r.data["tolerances"] = t;
  r.line(line);
}

// One positional argument: a {"rho12", "rho23"} bundle (or "-"); two: separate files.
CompatiblePair load_pair(const std::vector<std::string>& files, const Settings& s, Report& r) {
  DensityMatrix rho12 = maximally_mixed(1), rho23 = maximally_mixed(1);
  if (files.size() == 1) {
    const auto text = read_text(files[0]);
    r.inputs.push_back(text);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw StateFileError(files[0] + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("rho12") || !j.contains("rho23")) {
      throw StateFileError(files[0] + ": a single input must be a bundle with \"rho12\" and \"rho23\"");
    }
    rho12 = state_from_json(j["rho12"], files[0] + ":rho12", s.state_tol());
    rho23 = state_from_json(j["rho23"], files[0] + ":rho23", s.state_tol());
  } else if (files.size() == 2) {
    for (const auto& f : files) r.inputs.push_back(read_text(f));
    auto parse = [&](std::size_t k) {
      auto j = json::parse(r.inputs[k], nullptr, false);
      if (j.is_discarded()) throw StateFileError(files[k] + ": malformed JSON");
      return state_from_json(j, files[k], s.state_tol());
    };
    rho12 = parse(0);
    rho23 = parse(1);
  } else {
    throw StateFileError("expected RHO12 RHO23 files or one bundle file");
  }
  if (rho12.shape().size() != 2) throw StateFileError(files[0] + ": rho12 must be bipartite (two dims)");
  if (rho23.shape().size() != 2) throw StateFileError(files.back() + ": rho23 must be bipartite (two dims)");
  if (rho12.shape()[1] != rho23.shape()[0]) {
    throw StateFileError("shapes do not share d2: " + std::to_string(rho12.shape()[1]) + " vs " +
                         std::to_string(rho23.shape()[0]));
  }
  try {
    return CompatiblePair(std::move(rho12), std::move(rho23), s.compat_tol);
  } catch (const Error& e) {
    throw StateFileError(std::string("pair is not compatible: ") + e.what());
  }
}

void add_entropies(Report& r, const EntropyReport& e) {
  r.value("S1", e.S1);
  r.value("S2", e.S2);
  r.value("S3", e.S3);
  r.value("S12", e.S12);
  r.value("S23", e.S23);
  r.value("slack_cheap", e.slack_cheap);
  r.value("slack_pol", e.slack_pol);
  r.value("araki_lieb_slack_12", e.al_slack12);
  r.value("araki_lieb_slack_23", e.al_slack23);
}

std::vector<double> parse_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "expected a comma-separated list of numbers");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_check(const std::vector<std::string>& files, const Settings& s, std::ostream& out) {
  Report r{"check " + files.front() + (files.size() > 1 ? " " + files.back() : "")};
  const auto pair = load_pair(files, s, r);
  const auto e = entropy_report(pair, s.criteria());
  const auto v = necessary_conditions(pair, s.criteria());
  add_tolerances(r, s, false);
  r.value("compatibility_distance", pair.middle_distance());
  add_entropies(r, e);
  r.data["product_only_obstruction"] = v.product_only_obstruction;
  r.line(std::string("product-only obstruction: ") + (v.product_only_obstruction ? "yes" : "no"));
  r.data["blocked"] = v.blocked;
  r.data["reason"] = v.reason;
  r.line(v.blocked ? "BLOCKED: " + v.reason : "not blocked by the entropy conditions");
  emit(r, s, out);
  return v.blocked ? exit_code::kBlocked : exit_code::kOk;
}

int cmd_entropy(const std::string& file, const Settings& s, std::ostream& out) {
  Report r{"entropy " + file};
  r.inputs.push_back(read_text(file));
  json j;
  try {
    j = json::parse(r.inputs.back());
  } catch (const json::parse_error& e) {
    throw StateFileError(file + ": malformed JSON (" + e.what() + ")");
  }
  const auto rho = state_from_json(j, file, s.state_tol());
  add_tolerances(r, s, false);
  r.value("S", entropy(rho));
  const std::size_t n = rho.shape().size();
  if (n > 1) {
    for (std::size_t f = 0; f < n; ++f) {
      const std::size_t keep[] = {f};
      r.value("S" + std::to_string(f + 1), entropy(rho.marginal(keep)));
    }
    if (n == 3) {
      r.value("S12", entropy(rho.marginal({0, 1})));
      r.value("S23", entropy(rho.marginal({1, 2})));
      r.value("S13", entropy(rho.marginal({0, 2})));
    }
  }
  emit(r, s, out);
  return exit_code::kOk;
}

struct ConstructArgs {
  std::string kind;
  std::vector<std::string> inputs;
  std::string p12, p23, joints, ensemble, base, lambdas, mus;
};

void report_marginals(Report& r, const DensityMatrix& rho123, const CompatiblePair& pair) {
  r.value("marginal_error_12", trace_norm(rho123.marginal({0, 1}).mat() - pair.rho12().mat()));
  r.value("marginal_error_23", trace_norm(rho123.marginal({1, 2}).mat() - pair.rho23().mat()));
  r.value("lambda_min", rho123.min_eigenvalue());
}

int cmd_construct(const ConstructArgs& a, const Settings& s, std::ostream& out, std::ostream& err) {
  Report r{"construct " + a.kind};
  add_tolerances(r, s, false);
  std::optional<DensityMatrix> result;

  if (a.kind == "classical") {
    if (a.p12.empty() || a.p23.empty()) throw CLI::ValidationError("classical", "needs --p12 and --p23");
    const auto p12 = read_classical(a.p12), p23 = read_classical(a.p23);
    const auto p123 = classical_extension(p12, p23, s.compat_tol);
    const double h2 = p12.marginal({1}).shannon_entropy();
    r.value("H123", p123.shannon_entropy());
    r.value("H12 + H23 - H2", p12.shannon_entropy() + p23.shannon_entropy() - h2);
    result = p123.to_density();
  } else if (a.kind == "chain") {
    if (a.joints.empty()) throw CLI::ValidationError("chain", "needs --joints f1,f2,...");
    std::vector<ClassicalJoint> joints;
    std::stringstream ss(a.joints);
    std::string f;
    while (std::getline(ss, f, ',')) joints.push_back(read_classical(f));
    const auto chain = chain_extension(joints, s.compat_tol);
    r.value("H", chain.shannon_entropy());
    result = chain.to_density();
  } else if (a.kind == "separable") {
    if (a.ensemble.empty()) throw CLI::ValidationError("separable", "needs --ensemble");
    const auto ext = matched_separable_extension(read_ensemble(a.ensemble, s.state_tol()));
    const CompatiblePair pair(ext.rho12, ext.rho23, s.compat_tol);
    report_marginals(r, ext.rho123, pair);
    result = ext.rho123;
  } else if (a.kind == "perturb") {
    if (a.base.empty()) throw CLI::ValidationError("perturb", "needs --base and the new pair");
    const auto base = read_state(a.base, s.state_tol());
    const auto pair = load_pair(a.inputs, s, r);
    r.value("candidate_lambda_min", eigenvalues(perturbation_candidate(base, pair)).front());
    const auto ext = perturbation_extension(base, pair, s.tol);
    report_marginals(r, ext, pair);
    result = ext;
  } else if (a.kind == "coherent") {
    const auto pair = load_pair(a.inputs, s, r);
    const auto lift = coherent_lift_extension(pair);
    r.value("marginal_error", lift.marginal_error);
    r.value("min_symbol", lift.min_symbol);
    r.value("min_denominator", lift.min_denominator);
    report_marginals(r, lift.rho123, pair);
    result = lift.rho123;
  } else if (a.kind == "triangle") {
    if (a.lambdas.empty() || a.mus.empty()) throw CLI::ValidationError("triangle", "needs --lambdas and --mus");
    const auto lam = parse_list(a.lambdas, "--lambdas");
    const auto mu = parse_list(a.mus, "--mus");
    const auto rho = build_triangle_equality_state(lam, mu);
    const double s12 = entropy(rho), s1 = entropy(rho.marginal({0})), s2 = entropy(rho.marginal({1}));
    r.data["S12"] = s12;
    r.data["S1"] = s1;
    r.data["S2"] = s2;
    r.data["triangle_defect"] = s12 - (s1 - s2);
    const double defect = std::abs(s12 - (s1 - s2)) < 1e-9 ? 0.0 : s12 - (s1 - s2);
    r.line("S12 - (S1 - S2) = " + e1(defect) + " +/- 1e-9");
    result = rho;
  } else if (a.kind == "gt") {
    const auto pair = load_pair(a.inputs, s, r);
    const auto gt = golden_thompson_R(pair);
    r.data["trace_R"] = gt.trace;
    char buf[64];
    std::snprintf(buf, sizeof buf, "trace(R) = %.9f", gt.trace);
    r.line(buf);
    // R is written normalized to unit trace so the output is a valid state file.
    result = DensityMatrix(hermitian_part(gt.R * cplx(1.0 / gt.trace)), pair.joint_shape(), s.state_tol());
  } else {
    throw CLI::ValidationError("kind", "unknown construct kind '" + a.kind + "'");
  }

  if (!s.out.empty()) {
    write_output(s.out, state_to_string(*result), out);
    r.line("wrote " + s.out);
  }
  emit(r, s, s.out == "-" ? err : out);
  return exit_code::kOk;
}

int cmd_solve(const std::vector<std::string>& files, const Settings& s, std::ostream& out) {
  Report r{"solve " + files.front() + (files.size() > 1 ? " " + files.back() : "")};
  const auto pair = load_pair(files, s, r);
  SolveOptions opts;
  opts.max_iter = s.max_iter;
  opts.feas_tol = s.feas_tol;
  opts.infeas_tol = s.infeas_tol;
  if (s.seed) opts.start = random_density(pair.joint_shape().total(), pair.joint_shape().total(), *s.seed).mat();
  const auto v = solve(pair, opts);
  add_tolerances(r, s, true);
  r.data["verdict"] = std::string(to_string(v.status));
  r.data["evidence"] = std::string(to_string(v.evidence));
  r.line("verdict: " + std::string(to_string(v.status)) + " (" + std::string(to_string(v.evidence)) + ")");
  r.value("residual", v.residual);
  r.value("gap", v.gap);
  r.data["iterations"] = v.iterations;
  r.line("iterations = " + std::to_string(v.iterations));
  r.data["reduced_dim"] = v.reduced_dim;
  r.data["diagnostics"] = v.diagnostics;
  r.line("diagnostics: " + v.diagnostics);
  if (v.certificate) {
    r.data["certificate_span_dim"] = v.certificate->span_dim;
    r.line("certificate: " + std::to_string(v.certificate->vectors.size()) +
           " forced kernel vectors spanning dimension " + std::to_string(v.certificate->span_dim));
  }
  if (v.witness && !s.out.empty()) {
    write_output(s.out, state_to_string(*v.witness), out);
    r.line("witness written to " + s.out);
  }
  emit(r, s, out);
  switch (v.status) {
    case Verdict::Feasible: return exit_code::kOk;
    case Verdict::Infeasible: return exit_code::kInfeasible;
    case Verdict::Undecided: return exit_code::kUndecided;
  }
  return exit_code::kUndecided;
}

int cmd_counterexample(const CounterexampleSpec& spec, const Settings& s, std::ostream& out, std::ostream& err) {
  Report r{"counterexample"};
  const auto ce = build_counterexample(spec);
  add_tolerances(r, s, false);
  r.data["mu1"] = spec.mu1;
  r.data["phi1_angle"] = spec.phi1_angle;
  r.data["eta_skew"] = spec.eta_skew;
  r.data["span_dim"] = ce.certificate.span_dim;
  r.line("span_dim = " + std::to_string(ce.certificate.span_dim));
  const bool verified = verify_certificate(ce.pair, ce.certificate);
  r.data["certificate_verified"] = verified;
  r.line(std::string("certificate verified: ") + (verified ? "yes" : "no"));
  const auto e = entropy_report(ce.pair, s.criteria());
  add_entropies(r, e);

  if (s.out.empty() || s.out == "-") {
    // Bundle on stdout so the output can be piped into `solve -`; report on stderr.
    out << pair_bundle_to_string(ce.pair.rho12(), ce.pair.rho23());
    emit(r, s, err);
    return exit_code::kOk;
  }
  write_text(s.out + "_rho12.json", state_to_string(ce.pair.rho12()));
  write_text(s.out + "_rho23.json", state_to_string(ce.pair.rho23()));
  write_text(s.out + "_certificate.json", certificate_to_string(ce.certificate));
  r.line("wrote " + s.out + "_rho12.json, " + s.out + "_rho23.json, " + s.out + "_certificate.json");
  emit(r, s, out);
  return exit_code::kOk;
}

std::vector<std::string> split_words(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

int run_batch(const std::string& path, std::ostream& out, std::ostream& err) {
  std::istringstream lines(read_text(path));
  std::vector<std::vector<std::string>> jobs;
  for (std::string line; std::getline(lines, line);) {
    auto words = split_words(line);
    if (words.empty() || words[0].starts_with("#")) continue;
    if (std::find(words.begin(), words.end(), "-") != words.end()) {
      throw StateFileError(path + ": batch jobs cannot read stdin");
    }
    jobs.push_back(std::move(words));
  }
  struct Result {
    int code;
    std::string out, err;
  };
  std::vector<std::future<Result>> futures;
  for (const auto& job : jobs) {
    futures.push_back(std::async(std::launch::async, [job] {
      std::ostringstream o, e;
      const int code = run_cli(job, o, e);
      return Result{code, o.str(), e.str()};
    }));
  }
  int worst = exit_code::kOk;
  for (std::size_t k = 0; k < futures.size(); ++k) {
    const auto res = futures[k].get();
    out << "== job " << k + 1 << ": ";
    for (const auto& w : jobs[k]) out << w << ' ';
    out << "-> exit " << res.code << "\n" << res.out;
    err << res.err;
    worst = std::max(worst, res.code);
  }
  return worst;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Common extensions of overlapping quantum marginals", "qmarg"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  Settings s;
  std::string batch;
  app.add_option("--tol", s.tol, "state validation tolerance (hermiticity, PSD clipping, trace)")
      ->capture_default_str();
  app.add_option("--compat-tol", s.compat_tol, "middle-marginal agreement tolerance")->capture_default_str();
  app.add_option("--slack-tol", s.slack_tol, "entropy inequality tolerance")->capture_default_str();
  app.add_option("--equality-tol", s.equality_tol, "entropy equality tolerance")->capture_default_str();
  app.add_option("--product-tol", s.product_tol, "product-state detection tolerance")->capture_default_str();
  app.add_option("--feas-tol", s.feas_tol, "solver: marginal residual accepted as feasible")->capture_default_str();
  app.add_option("--infeas-tol", s.infeas_tol, "solver: minimum stalled gap reported as infeasible")
      ->capture_default_str();
  app.add_option("--max-iter", s.max_iter, "solver iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--seed", s.seed, "solver: random full-rank starting point from this seed");
  app.add_option("--out", s.out, "output path ('-' for stdout)");
  app.add_flag("--json", s.json_out, "print the machine-readable report block");
  app.add_option("--batch", batch, "file with one job (argument list) per line, run in parallel");

  std::vector<std::string> files;
  auto* check = app.add_subcommand("check", "entropy necessary conditions for a pair");
  check->add_option("files", files, "RHO12 RHO23, or one bundle file ('-' for stdin)")->required()->expected(1, 2);

  auto* entropy_cmd = app.add_subcommand("entropy", "von Neumann entropies of a state and its marginals");
  std::string entropy_file;
  entropy_cmd->add_option("file", entropy_file, "state file")->required();

  ConstructArgs ca;
  auto* construct = app.add_subcommand("construct", "build an explicit extension");
  construct->add_option("kind", ca.kind, "classical|chain|separable|perturb|coherent|triangle|gt")
      ->required()
      ->check(CLI::IsMember({"classical", "chain", "separable", "perturb", "coherent", "triangle", "gt"}));
  construct->add_option("inputs", ca.inputs, "RHO12 RHO23 or a bundle (perturb, coherent, gt)");
  construct->add_option("--p12", ca.p12, "classical: table {dims, probs} over (x, y)");
  construct->add_option("--p23", ca.p23, "classical: table over (y, z)");
  construct->add_option("--joints", ca.joints, "chain: comma-separated table files");
  construct->add_option("--ensemble", ca.ensemble, "separable: {weights, rho, sigma, tau}");
  construct->add_option("--base", ca.base, "perturb: positive-definite tripartite base state");
  construct->add_option("--lambdas", ca.lambdas, "triangle: spectrum of the first factor");
  construct->add_option("--mus", ca.mus, "triangle: Schmidt weights of the pure part");

  auto* solve_cmd = app.add_subcommand("solve", "decide whether a common extension exists");
  solve_cmd->add_option("files", files, "RHO12 RHO23, or one bundle file ('-' for stdin)")->required()->expected(1, 2);

  CounterexampleSpec spec;
  auto* ce = app.add_subcommand("counterexample", "separable compatible pair with no common extension");
  ce->add_option("--mu1", spec.mu1, "larger eigenvalue of rho2")->capture_default_str();
  ce->add_option("--phi1", spec.phi1_angle, "angle a of phi1 = (cos a, sin a)")->capture_default_str();
  ce->add_option("--skew", spec.eta_skew, "eta2 = (sin s, cos s)")->capture_default_str();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_code::kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_code::kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_code::kUsage;
  }

  try {
    if (!batch.empty()) return run_batch(batch, out, err);
    if (check->parsed()) return cmd_check(files, s, out);
    if (entropy_cmd->parsed()) return cmd_entropy(entropy_file, s, out);
    if (construct->parsed()) return cmd_construct(ca, s, out, err);
    if (solve_cmd->parsed()) return cmd_solve(files, s, out);
    if (ce->parsed()) return cmd_counterexample(spec, s, out, err);
    out << app.help();
    return exit_code::kUsage;
  } catch (const StateFileError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kUsage;
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_code::kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    const bool module_error = construct->parsed() || ce->parsed();
    return module_error ? exit_code::kBlocked : exit_code::kUsage;
  }
}

}  // namespace qmarg
