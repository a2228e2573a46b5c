// fne: structure checks for spectral operators and a finite-difference
// Dirichlet solver for f(lambda[hess u + chi]) = psi.

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fne/run.hpp"

namespace {

using fne::RunConfig;

void add_operator_flags(CLI::App* app, RunConfig& c, std::string& kind, std::size_t& k, std::size_t& l,
                        std::size_t& n) {
  app->add_option("--spec", c.spec_path, "Operator JSON file {\"kind\", \"k\", [\"l\"], \"n\"}");
  app->add_option("--kind", kind,
                  "Operator kind instead of --spec: linear, sigma, sigma_root, sigma_quotient, log_pk, pk");
  app->add_option("--k", k, "Operator order k (with --kind)");
  app->add_option("--l", l, "Lower order l of sigma_quotient (with --kind)");
  app->add_option("--n", n, "Dimension n (with --kind)");
}

void add_common_flags(CLI::App* app, RunConfig& c) {
  app->add_option("--seed", c.seed, "Random seed (default 0)");
  app->add_option("--samples", c.samples, "Number of random samples");
  app->add_option("--out", c.out, "Output prefix for written artifacts (default: input path without extension)");
}

void add_problem_flag(CLI::App* app, RunConfig& c) {
  app->add_option("--problem", c.problem_path, "Problem JSON file")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure checks and Dirichlet solver for fully nonlinear elliptic operators.\n"
               "Exit codes: 0 pass/converged, 1 certificate failure or refused problem, 2 bad input, "
               "3 nonconvergence."};
  app.require_subcommand(1);
  RunConfig c;
  std::string kind;
  std::size_t k = 1, l = 0, n = 0;
  std::string run_path, param = "psi_amp", range;

  auto verify_operator_flags = [&](CLI::App* s) {
    add_operator_flags(s, c, kind, k, l, n);
    add_common_flags(s, c);
    s->add_option("--conditions", c.conditions,
                  "Conditions to check (default monotone concave sum_fi_lambdai). Also: negative_entry_share, "
                  "sum_fi_divergent, sum_fi_bounded, sum_fi_lambda_sq_divergent, bounded_below_at_zero")
        ->delimiter(',');
    s->add_option("--sigma", c.sigma, "Level sigma for level-set samples (default f(1,...,1))");
    s->add_option("--delta0", c.delta0, "Threshold for negative_entry_share (default 0.05)");
    s->add_option("--radius", c.radius, "negative_entry_share: only |lambda| >= radius (default 0 = all)");
  };
  auto verify_cone_flags = [&](CLI::App* s) {
    add_operator_flags(s, c, kind, k, l, n);
    add_common_flags(s, c);
    s->add_option("--mu", c.mu, "Point mu to test (default (2,...,2))")->delimiter(',');
    s->add_option("--sigma", c.sigma, "Level sigma (default f(1,...,1))");
    s->add_option("--epsilon", c.epsilon, "Required margin epsilon (default 0.05)");
    s->add_option("--R", c.R, "Sampling radius R (default 10)");
  };
  auto verify_sub_flags = [&](CLI::App* s) {
    add_problem_flag(s, c);
    add_common_flags(s, c);
    s->add_option("--mode", c.mode, "inequality (default) or cone");
    s->add_option("--epsilon", c.epsilon, "Cone mode: margin epsilon (default 0.05)");
    s->add_option("--R", c.R, "Cone mode: sampling radius (default 10)");
  };

  auto* verify = app.add_subcommand("verify", "Certificate checks");
  verify->require_subcommand(1);
  auto* v_op = verify->add_subcommand("operator", "Check structure conditions of an operator");
  auto* v_cone = verify->add_subcommand("cone", "Tangent cone test for a point mu");
  auto* v_sub = verify->add_subcommand("subsolution", "Check that ubar of a problem is a subsolution");
  auto* a_op = app.add_subcommand("verify-operator", "Same as 'verify operator'");
  auto* a_cone = app.add_subcommand("verify-cone", "Same as 'verify cone'");
  auto* a_sub = app.add_subcommand("verify-subsolution", "Same as 'verify subsolution'");
  for (auto* s : {v_op, a_op}) verify_operator_flags(s);
  for (auto* s : {v_cone, a_cone}) verify_cone_flags(s);
  for (auto* s : {v_sub, a_sub}) verify_sub_flags(s);

  auto* solve = app.add_subcommand("solve", "Solve a Dirichlet problem");
  add_problem_flag(solve, c);
  solve->add_option("--out", c.out, "Output prefix (default: problem path without extension)");

  auto* sweep = app.add_subcommand("sweep", "Solve along psi_s = (1 - s) base + s psi and record the monitor");
  add_problem_flag(sweep, c);
  sweep->add_option("--out", c.out, "Output prefix (default: problem path without extension)");
  sweep->add_option("--param", param, "Swept parameter; only psi_amp is supported")->check(CLI::IsMember({"psi_amp"}));
  sweep->add_option("--range", range, "lo:hi:count (default 0:1:11)");
  sweep->add_option("--base", c.sweep_base, "Constant psi at s = 0 (default 1)");

  auto* barrier = app.add_subcommand("barrier-check", "Solve, build a strict subsolution and check the barrier");
  add_problem_flag(barrier, c);
  barrier->add_option("--out", c.out, "Output prefix (default: problem path without extension)");
  barrier->add_option("--gap", c.gap, "Strict subsolution solves F = psi + gap (default 0.5)");
  barrier->add_option("--t", c.t, "Barrier t (with --N and --delta; default: search)");
  barrier->add_option("--N", c.N, "Barrier N");
  barrier->add_option("--delta", c.delta, "Collar width delta <= 2t/N");

  auto* run = app.add_subcommand("run", "Run a JSON config file {\"command\": ..., ...}");
  run->add_option("config", run_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) return fne::run_file(run_path, std::cout, std::cerr);

  if (v_op->parsed() || a_op->parsed()) c.command = "verify-operator";
  else if (v_cone->parsed() || a_cone->parsed()) c.command = "verify-cone";
  else if (v_sub->parsed() || a_sub->parsed()) c.command = "verify-subsolution";
  else if (solve->parsed()) c.command = "solve";
  else if (sweep->parsed()) c.command = "sweep";
  else if (barrier->parsed()) c.command = "barrier-check";

  if (!kind.empty()) {
    if (n == 0) {
      std::cerr << "error: --kind needs --n\n";
      return 2;
    }
    fne::Json j;
    j["kind"] = kind;
    j["k"] = k;
    j["l"] = l;
    j["n"] = n;
    c.spec_inline = j;
  }
  if (!range.empty()) {
    std::istringstream in(range);
    char c1 = 0, c2 = 0;
    if (!(in >> c.sweep_lo >> c1 >> c.sweep_hi >> c2 >> c.sweep_count) || c1 != ':' || c2 != ':' || !in.eof()) {
      std::cerr << "error: --range expects lo:hi:count\n";
      return 2;
    }
  }
  return fne::run(c, std::cout, std::cerr);
}
