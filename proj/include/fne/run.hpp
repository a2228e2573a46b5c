#pragma once

// One run of the command-line tool: read the inputs, do the work, write the
// artifacts, print a summary, return the exit code.
//
//   0  every requested certificate passes / the solve converged
//   1  a certificate fails, or the problem is refused (bad subsolution, psi
//      too low, inadmissible initial guess)
//   2  bad input: parse errors, missing files, bad parameters
//   3  the solver did not converge; the last iterate is written next to the
//      outputs as <prefix>.snapshot.bin

#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fne/io.hpp"

namespace fne {

struct RunConfig {
  std::string command;  ///< verify-operator, verify-cone, verify-subsolution, solve, sweep, barrier-check

  std::string spec_path;             ///< operator JSON (verify-operator, verify-cone)
  std::optional<Json> spec_inline;   ///< operator given directly, overrides spec_path
  std::string problem_path;          ///< problem JSON (verify-subsolution, solve, sweep, barrier-check)
  std::string out;                   ///< output prefix; default: problem or spec path without extension

  std::vector<std::string> conditions{"monotone", "concave", "sum_fi_lambdai"};
  std::uint64_t seed = 0;
  std::optional<int> samples;        ///< default 10000; 100 per node for cone-mode subsolution checks
  std::optional<double> sigma;       ///< level; default f(1, ..., 1)
  double delta0 = 0.05;              ///< negative_entry_share threshold
  double radius = 0.0;               ///< negative_entry_share: 0 = whole level set

  std::vector<double> mu;            ///< verify-cone; default (2, ..., 2)
  double epsilon = 0.05;
  double R = 10.0;

  std::string mode = "inequality";   ///< verify-subsolution: inequality | cone

  double sweep_lo = 0.0, sweep_hi = 1.0;
  int sweep_count = 11;
  double sweep_base = 1.0;

  double gap = 0.5;                  ///< barrier-check strict subsolution gap
  std::optional<double> t, N, delta; ///< barrier-check; all three or none (search)
};

namespace detail {

inline std::string default_prefix(const RunConfig& c) {
  const std::string& src = c.problem_path.empty() ? c.spec_path : c.problem_path;
  if (src.empty()) return "fne";
  std::filesystem::path p(src);
  return (p.parent_path() / p.stem()).string();
}

inline std::string prefix(const RunConfig& c) { return c.out.empty() ? default_prefix(c) : c.out; }

inline OperatorSpec load_operator(const RunConfig& c) {
  if (c.spec_inline) return parse_operator(*c.spec_inline);
  if (c.spec_path.empty()) throw ParseError("no operator given (use --spec or --kind/--k/--n)");
  return parse_operator(read_json_file(c.spec_path), 0, c.spec_path);
}

inline ProblemFile load_problem_of(const RunConfig& c) {
  if (c.problem_path.empty()) throw ParseError("no problem file given (use --problem)");
  try {
    return load_problem(c.problem_path);
  } catch (const ParseError& e) {
    const std::string what = e.what();
    if (what.rfind(c.problem_path, 0) == 0) throw;
    throw ParseError(c.problem_path + ": " + what);
  }
}

inline int samples_or(const RunConfig& c, int fallback) { return c.samples ? *c.samples : fallback; }

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void print_witness(const Certificate& c, std::ostream& err) {
  err << condition_name(c.condition) << " fails: margin " << fmt(c.margin);
  if (!c.witnesses.empty()) {
    const Witness& w = c.witnesses.front();
    err << ", worst witness value " << fmt(w.value);
    if (!w.point.empty()) {
      err << " at (";
      for (std::size_t i = 0; i < w.point.size(); ++i) err << (i ? ", " : "") << fmt(w.point[i]);
      err << ")";
    }
    if (w.node >= 0) err << " node " << w.node;
  }
  err << "\n";
}

inline Certificate verify_condition(const OperatorSpec& spec, ConditionId id, const RunConfig& c) {
  const double sigma = c.sigma ? *c.sigma : unit_level(spec);
  switch (id) {
    case ConditionId::Monotone: return verify_monotone(spec, samples_or(c, 10000), c.seed);
    case ConditionId::Concave: return verify_concave(spec, samples_or(c, 10000), c.seed);
    case ConditionId::SumFiLambdai: return verify_sum_fi_lambdai(spec, samples_or(c, 10000), c.seed);
    case ConditionId::NegativeEntryShare:
      return verify_negative_entry_share(spec, c.delta0, sigma, samples_or(c, 10000), c.seed, c.radius);
    case ConditionId::SumFiDivergent:
    case ConditionId::SumFiBounded:
    case ConditionId::SumFiLambdaSqDivergent:
    case ConditionId::BoundedBelowAtZero:
      return verify_growth(spec, id, sigma, default_growth_radii(spec, id, sigma), samples_or(c, 10000), c.seed);
    default:
      throw ParameterError("condition \"" + condition_name(id) + "\" is not an operator condition");
  }
}

inline int verify_operator(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const OperatorSpec spec = load_operator(c);
  if (c.conditions.empty()) throw ParameterError("no conditions requested");
  std::vector<ConditionId> ids;
  for (const auto& name : c.conditions) {
    const auto id = parse_condition(name);
    if (!id) throw ParameterError("unknown condition \"" + name + "\"");
    ids.push_back(*id);
  }
  Json arr = Json::array();
  std::vector<Certificate> certs;
  for (ConditionId id : ids) {
    certs.push_back(verify_condition(spec, id, c));
    arr.push_back(to_json(certs.back()));
  }
  const std::string text = to_text(arr);
  write_text(prefix(c) + ".certificates.json", text);

  out << "operator " << spec.name() << " k=" << spec.k();
  if (spec.kind() == OperatorKind::SigmaQuotient) out << " l=" << spec.l();
  out << " n=" << spec.n() << ", " << samples_or(c, 10000) << " samples, seed " << c.seed << "\n";
  out << std::left << std::setw(28) << "condition" << std::setw(16) << "margin" << "verdict\n";
  bool all = true;
  for (const auto& cert : certs) {
    out << std::left << std::setw(28) << condition_name(cert.condition) << std::setw(16) << fmt(cert.margin)
        << (cert.pass ? "pass" : "FAIL") << "\n";
    if (!cert.pass) print_witness(cert, err);
    all = all && cert.pass;
  }
  out << text;
  return all ? 0 : 1;
}

inline int verify_cone(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const OperatorSpec spec = load_operator(c);
  const double sigma = c.sigma ? *c.sigma : unit_level(spec);
  const Spectrum mu = c.mu.empty() ? Spectrum::constant(spec.n(), 2.0) : Spectrum(c.mu);
  const auto cert = tangent_cone_plus_test(spec, sigma, mu, c.epsilon, c.R, samples_or(c, 10000), c.seed);
  const std::string text = to_text(to_json(cert));
  write_text(prefix(c) + ".cone.json", text);
  out << "tangent cone test: theta " << fmt(cert.theta_estimate) << " at R " << fmt(cert.R_used) << ", "
      << (cert.pass ? "pass" : "FAIL") << "\n"
      << text;
  if (!cert.pass) {
    err << "tangent cone test fails: worst sample (";
    for (std::size_t i = 0; i < cert.worst_sample.size(); ++i) err << (i ? ", " : "") << fmt(cert.worst_sample[i]);
    err << ")\n";
  }
  return cert.pass ? 0 : 1;
}

inline int verify_subsolution_cmd(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const ProblemFile pf = load_problem_of(c);
  const ProblemSpec& p = pf.problem;
  validate(p);
  SubsolutionMode mode;
  if (c.mode == "inequality") mode = SubsolutionMode::Inequality;
  else if (c.mode == "cone") mode = SubsolutionMode::Cone;
  else throw ParameterError("mode must be \"inequality\" or \"cone\"");
  const Certificate cert =
      verify_subsolution(p.ubar, p.chi, p.psi, p.spec, mode, {c.epsilon, c.R, samples_or(c, 100), c.seed});
  const std::string text = to_text(to_json(cert));
  write_text(prefix(c) + ".subsolution.json", text);
  out << condition_name(cert.condition) << ": margin " << fmt(cert.margin) << ", " << (cert.pass ? "pass" : "FAIL")
      << "\n"
      << text;
  if (!cert.pass) print_witness(cert, err);
  return cert.pass ? 0 : 1;
}

inline SolveResult solve_with(const ProblemFile& pf) {
  if (pf.solver.method == "newton") {
    validate(pf.problem);
    return newton_solve(pf.problem, pf.solver.options.newton);
  }
  return continuity_solve(pf.problem, pf.solver.options);
}

inline void print_report(const SolveReport& r, std::ostream& out) {
  out << (r.converged ? "converged" : "not converged") << ": residual " << fmt(r.residual) << ", "
      << r.newton_iters << " Newton iterations, " << r.gmres_iters << " GMRES iterations, "
      << r.continuation_steps << " continuation steps\n"
      << "monitor: max|hess| interior " << fmt(r.monitor.max_hess_interior) << ", boundary "
      << fmt(r.monitor.max_hess_boundary) << ", max|grad| " << fmt(r.monitor.max_grad) << ", ratio "
      << fmt(r.monitor.ratio) << "\n";
}

inline int solve_cmd(const RunConfig& c, std::ostream& out, std::ostream&) {
  const ProblemFile pf = load_problem_of(c);
  const SolveResult r = solve_with(pf);
  const std::string pre = prefix(c);
  write_field(pre + ".solution.bin", r.u);
  write_field_csv(pre + ".solution.csv", r.u);
  write_text(pre + ".report.json", to_text(to_json(r.report)));
  print_report(r.report, out);
  out << "wrote " << pre << ".solution.bin, " << pre << ".solution.csv, " << pre << ".report.json\n";
  return 0;
}

inline int sweep_cmd(const RunConfig& c, std::ostream& out, std::ostream&) {
  if (c.sweep_count < 1) throw ParameterError("sweep needs at least one value");
  const ProblemFile pf = load_problem_of(c);
  validate(pf.problem);
  std::vector<double> s;
  for (int i = 0; i < c.sweep_count; ++i)
    s.push_back(c.sweep_count == 1 ? c.sweep_lo
                                   : c.sweep_lo + (c.sweep_hi - c.sweep_lo) * i / (c.sweep_count - 1));
  const auto rows = psi_amplitude_sweep(pf.problem, s, c.sweep_base, pf.solver.options);
  const std::string csv = sweep_csv(rows);
  write_text(prefix(c) + ".sweep.csv", csv);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    lo = std::fmin(lo, r.monitor.ratio);
    hi = std::fmax(hi, r.monitor.ratio);
  }
  out << csv << "ratio range [" << fmt(lo) << ", " << fmt(hi) << "], variation " << fmt(hi / lo) << "\n";
  return 0;
}

inline int barrier_cmd(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const ProblemFile pf = load_problem_of(c);
  const SolveResult sol = solve_with(pf);
  const SolveResult sub = strict_subsolution(pf.problem, c.gap, pf.solver.options);
  const int given = static_cast<int>(c.t.has_value()) + c.N.has_value() + c.delta.has_value();
  if (given != 0 && given != 3) throw ParameterError("barrier-check needs all of --t, --N, --delta or none");
  const Certificate cert = given == 3 ? barrier_check(sol.u, sub.u, pf.problem, *c.t, *c.N, *c.delta,
                                                      boundary_distance(pf.problem.grid()))
                                      : barrier_search(sol.u, sub.u, pf.problem);
  const std::string text = to_text(to_json(cert));
  write_text(prefix(c) + ".barrier.json", text);
  out << "barrier: t " << fmt(cert.detail("t")) << ", N " << fmt(cert.detail("N")) << ", delta "
      << fmt(cert.detail("delta")) << ", min v " << fmt(cert.detail("min_v")) << ", epsilon "
      << fmt(cert.detail("epsilon")) << ", " << (cert.pass ? "pass" : "FAIL") << "\n"
      << text;
  if (!cert.pass) print_witness(cert, err);
  return cert.pass ? 0 : 1;
}

}  // namespace detail

/// Run config JSON: {"command": ..., plus any of the RunConfig fields by
/// name; "operator" may hold an operator object or a path}. Relative paths are
/// taken relative to the config file.
inline RunConfig parse_run_config(const Json& j, const std::filesystem::path& base = ".") {
  using detail::get_as;
  if (!j.is_object() || j.empty()) throw ParseError("run config: expected a non-empty JSON object");
  RunConfig c;
  c.command = get_as<std::string>(detail::member(j, "command", "run config"), "command");
  auto path = [&](const char* key) { return detail::resolve(get_as<std::string>(j.at(key), key), base); };
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const Json& v = it.value();
    if (k == "command") continue;
    else if (k == "operator") {
      if (v.is_object()) c.spec_inline = v;
      else c.spec_path = path("operator");
    } else if (k == "problem") c.problem_path = path("problem");
    else if (k == "out") c.out = path("out");
    else if (k == "conditions") c.conditions = get_as<std::vector<std::string>>(v, k);
    else if (k == "seed") c.seed = get_as<std::uint64_t>(v, k);
    else if (k == "samples") c.samples = get_as<int>(v, k);
    else if (k == "sigma") c.sigma = get_as<double>(v, k);
    else if (k == "delta0") c.delta0 = get_as<double>(v, k);
    else if (k == "radius") c.radius = get_as<double>(v, k);
    else if (k == "mu") c.mu = get_as<std::vector<double>>(v, k);
    else if (k == "epsilon") c.epsilon = get_as<double>(v, k);
    else if (k == "R") c.R = get_as<double>(v, k);
    else if (k == "mode") c.mode = get_as<std::string>(v, k);
    else if (k == "range") {
      const auto r = get_as<std::vector<double>>(v, k);
      if (r.size() != 3) throw ParseError("range: expected [lo, hi, count]");
      c.sweep_lo = r[0];
      c.sweep_hi = r[1];
      c.sweep_count = static_cast<int>(r[2]);
    } else if (k == "base") c.sweep_base = get_as<double>(v, k);
    else if (k == "gap") c.gap = get_as<double>(v, k);
    else if (k == "t") c.t = get_as<double>(v, k);
    else if (k == "N") c.N = get_as<double>(v, k);
    else if (k == "delta") c.delta = get_as<double>(v, k);
    else throw ParseError("run config: unknown key \"" + k + "\"");
  }
  return c;
}

inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    if (c.command == "verify-operator") return detail::verify_operator(c, out, err);
    if (c.command == "verify-cone") return detail::verify_cone(c, out, err);
    if (c.command == "verify-subsolution") return detail::verify_subsolution_cmd(c, out, err);
    if (c.command == "solve") return detail::solve_cmd(c, out, err);
    if (c.command == "sweep") return detail::sweep_cmd(c, out, err);
    if (c.command == "barrier-check") return detail::barrier_cmd(c, out, err);
    throw ParseError("unknown command \"" + c.command + "\"");
  } catch (const NonconvergenceError& e) {
    err << "error: " << e.what() << "\n";
    try {
      const ProblemFile pf = load_problem(c.problem_path);
      if (e.snapshot().size() == pf.problem.grid()->size()) {
        const std::string snap = detail::prefix(c) + ".snapshot.bin";
        write_field(snap, ScalarField(pf.problem.grid(), e.snapshot()));
        err << "last iterate (t = " << e.last_good_t() << ") written to " << snap << "\n";
      }
    } catch (const std::exception& w) {
      err << "could not write snapshot: " << w.what() << "\n";
    }
    return 3;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const PreconditionError& e) {
    err << "refused: " << e.what() << "\n";
    return 1;
  } catch (const AdmissibilityError& e) {
    err << "refused: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

/// `fne run config.json`.
inline int run_file(const std::string& path, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    c = parse_run_config(read_json_file(path), std::filesystem::path(path).parent_path());
  } catch (const ParseError& e) {
    const std::string what = e.what();
    err << "error: " << (what.rfind(path, 0) == 0 ? what : path + ": " + what) << "\n";
    return 2;
  }
  return run(c, out, err);
}

}  // namespace fne
