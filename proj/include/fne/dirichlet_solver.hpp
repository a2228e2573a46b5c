#pragma once

// Dirichlet problem F(hess u + chi) = psi in the box, u = phi on its faces:
// damped Newton inside the admissible cone, a continuation path anchored at
// a subsolution, and the estimate and barrier diagnostics.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fne/geometry_field.hpp"
#include "fne/krylov.hpp"
#include "fne/matrix_calculus.hpp"
#include "fne/structure_verifier.hpp"

namespace fne {

struct ProblemSpec {
  OperatorSpec spec;
  SymMatrixField chi;
  ScalarField psi;
  ScalarField phi;   ///< only the boundary values are used
  ScalarField ubar;  ///< subsolution, also the default initial guess
  double delta = 1e-6;  ///< required gap psi - sup over the cone boundary of f

  const GridPtr& grid() const noexcept { return psi.grid(); }
};

/// Structural checks: shared grid, matching dimension, a boundary on every
/// axis, and psi > sup f on the cone boundary + delta at interior nodes.
/// Throws DomainError for shape problems, PreconditionError for psi.
inline void validate(const ProblemSpec& p) {
  const GridPtr& g = p.grid();
  if (!g) throw DomainError("problem: psi has no grid");
  if (p.chi.grid() != g || p.phi.grid() != g || p.ubar.grid() != g)
    throw DomainError("problem: fields live on different grids");
  if (p.spec.n() != g->dims()) throw DomainError("problem: operator dimension differs from the grid dimension");
  for (std::size_t a = 0; a < g->dims(); ++a)
    if (g->periodic(a)) throw DomainError("problem: the Dirichlet solver needs a boundary on every axis");
  const double floor = p.spec.sup_on_cone_boundary() + p.delta;
  for (std::size_t q = 0; q < g->size(); ++q)
    if (!g->on_boundary(q) && !(p.psi[q] > floor))
      throw PreconditionError("problem: psi = " + std::to_string(p.psi[q]) + " at node " + std::to_string(q) +
                              " is not above sup f on the cone boundary + delta");
}

namespace detail {

struct Evaluation {
  std::vector<double> r;
  std::vector<SymMatrix> dF;  // F^{ij} per node (interior only)
  std::vector<double> sum_fi;
  double norm = 0.0;  // max |r|
};

// Residual (and optionally F^{ij}) of u; nullopt with the first bad node
// when u is not admissible at an interior node.
inline std::optional<Evaluation> evaluate(const ProblemSpec& p, const ScalarField& u, bool with_derivative,
                                          std::size_t* bad_node = nullptr, Spectrum* bad_lambda = nullptr) {
  const MetricGrid& g = *p.grid();
  const auto hess = covariant_hessian(u);
  const ConeSpec cone = p.spec.cone();
  Evaluation e;
  e.r.resize(g.size());
  if (with_derivative) {
    e.dF.assign(g.size(), SymMatrix(g.dims()));
    e.sum_fi.assign(g.size(), 0.0);
  }
  for (std::size_t q = 0; q < g.size(); ++q) {
    if (g.on_boundary(q)) {
      e.r[q] = u[q] - p.phi[q];
    } else {
      const SymMatrix a = hess[q] + p.chi[q];
      const MetricTensor& m = g.metric(q);
      if (with_derivative) {
        const MetricEigen ev = eig_metric(a, m);
        if (!in_cone(cone, ev.lambda)) {
          if (bad_node) *bad_node = q;
          if (bad_lambda) *bad_lambda = ev.lambda;
          return std::nullopt;
        }
        const SpectralPoint sp = spectral_point(a, m, p.spec);
        e.r[q] = sp.value - p.psi[q];
        e.dF[q] = sp.dF;
        for (double v : sp.fi) e.sum_fi[q] += v;
      } else {
        const Spectrum l = eig_metric(a, m).lambda;
        if (!in_cone(cone, l)) {
          if (bad_node) *bad_node = q;
          if (bad_lambda) *bad_lambda = l;
          return std::nullopt;
        }
        e.r[q] = f_eval(p.spec, l) - p.psi[q];
      }
    }
    e.norm = std::fmax(e.norm, std::fabs(e.r[q]));
  }
  return e;
}

inline Evaluation evaluate_or_throw(const ProblemSpec& p, const ScalarField& u, bool with_derivative) {
  std::size_t node = 0;
  Spectrum lambda = Spectrum::constant(p.spec.n(), 0.0);
  auto e = evaluate(p, u, with_derivative, &node, &lambda);
  if (!e)
    throw AdmissibilityError("not admissible at node " + std::to_string(node), lambda.vector(),
                             violated_inequality(p.spec.cone(), lambda));
  return std::move(*e);
}

// Rows F^{ij} (D_ij - Gamma^k_ij D_k) at interior nodes; boundary rows are
// the identity, or empty when boundary_identity is false.
inline CsrMatrix assemble_linearization(const MetricGrid& g, const std::vector<SymMatrix>& dF,
                                        bool boundary_identity) {
  const std::size_t n = g.dims();
  CsrMatrix jac(g.size());
  std::vector<std::pair<std::size_t, double>> row;
  auto add_row = [&row](const CsrMatrix& m, std::size_t q, double c) {
    if (c == 0.0) return;
    for (std::size_t k = m.row_ptr()[q]; k < m.row_ptr()[q + 1]; ++k) row.emplace_back(m.col()[k], c * m.val()[k]);
  };
  for (std::size_t q = 0; q < g.size(); ++q) {
    row.clear();
    if (g.on_boundary(q)) {
      if (boundary_identity) row.emplace_back(q, 1.0);
    } else {
      const SymMatrix& f = dF[q];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) add_row(g.d2(i, j), q, (i == j ? 1.0 : 2.0) * f(i, j));
      if (!g.is_flat())
        for (std::size_t k = 0; k < n; ++k) {
          double b = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) b -= f(i, j) * g.christoffel(q, k, i, j);
          add_row(g.d1(k), q, b);
        }
    }
    jac.push_row(row);
  }
  return jac;
}

}  // namespace detail

/// r = F(hess u + chi) - psi at interior nodes, u - phi on the boundary.
/// Throws AdmissibilityError naming the first inadmissible interior node.
inline ScalarField residual(const ScalarField& u, const ProblemSpec& p) {
  return ScalarField(p.grid(), detail::evaluate_or_throw(p, u, false).r);
}

/// The linearized operator as a sparse matrix (zero rows on the boundary).
inline CsrMatrix linearized_operator(const ScalarField& u, const ProblemSpec& p) {
  return detail::assemble_linearization(*p.grid(), detail::evaluate_or_throw(p, u, true).dF, false);
}

/// F^{ij}(hess u + chi) nabla_ij v at interior nodes, 0 on the boundary.
inline ScalarField linearized_apply(const ScalarField& u, const ProblemSpec& p, const ScalarField& v) {
  std::vector<double> out;
  linearized_operator(u, p).apply(v.values(), out);
  return ScalarField(p.grid(), std::move(out));
}

struct EstimateMonitor {
  double max_hess_interior = 0.0;  ///< max over interior nodes of |hess u|_g
  double max_hess_boundary = 0.0;  ///< max over boundary nodes (one-sided stencils)
  double max_grad = 0.0;           ///< max |grad u|_g
  double ratio = 0.0;              ///< max_hess_interior / (1 + max_hess_boundary)
};

inline EstimateMonitor estimate_monitor(const ScalarField& u) {
  const MetricGrid& g = *u.grid();
  const auto hess = covariant_hessian(u);
  const auto grad = gradient_norm(u);
  EstimateMonitor m;
  for (std::size_t q = 0; q < g.size(); ++q) {
    const double h = g.metric(q).normalize(hess[q]).frobenius_norm();
    if (g.on_boundary(q)) m.max_hess_boundary = std::fmax(m.max_hess_boundary, h);
    else m.max_hess_interior = std::fmax(m.max_hess_interior, h);
    m.max_grad = std::fmax(m.max_grad, grad[q]);
  }
  m.ratio = m.max_hess_interior / (1.0 + m.max_hess_boundary);
  return m;
}

struct SolveReport {
  bool converged = false;
  double residual = 0.0;  ///< final max |r|
  EstimateMonitor monitor;
  int newton_iters = 0;
  long gmres_iters = 0;
  int continuation_steps = 0;
  std::vector<double> t_history;  ///< accepted continuation parameters
  double wall_seconds = 0.0;
};

struct SolveResult {
  ScalarField u;
  SolveReport report;
};

enum class KrylovPreconditioner { Jacobi, Ilu0 };

struct NewtonOptions {
  double tol = 1e-10;  ///< on max |r|
  int max_iters = 50;
  int max_halvings = 20;
  GmresOptions gmres{};
  KrylovPreconditioner preconditioner = KrylovPreconditioner::Jacobi;
};

/// Damped Newton from an admissible u0. Each step solves J delta = -r by
/// GMRES and takes the largest alpha in {1, 1/2, ..., 2^-max_halvings} that
/// keeps every interior node admissible and lowers max |r|.
inline SolveResult newton_solve(const ProblemSpec& p, ScalarField u0, const NewtonOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  validate(p);
  if (u0.grid() != p.grid()) throw DomainError("newton_solve: initial guess lives on another grid");
  SolveResult res{std::move(u0), {}};
  auto& rep = res.report;
  detail::Evaluation ev = detail::evaluate_or_throw(p, res.u, true);
  std::vector<double> step(ev.r.size()), rhs(ev.r.size());
  for (;;) {
    if (ev.norm <= opt.tol) {
      rep.converged = true;
      break;
    }
    if (rep.newton_iters >= opt.max_iters)
      throw NonconvergenceError("newton_solve: no convergence after " + std::to_string(opt.max_iters) +
                                    " iterations, max |r| = " + std::to_string(ev.norm),
                                res.u.values());
    const CsrMatrix jac = detail::assemble_linearization(*p.grid(), ev.dF, true);
    const Preconditioner pc = opt.preconditioner == KrylovPreconditioner::Ilu0 ? ilu0_preconditioner(jac)
                                                                               : jacobi_preconditioner(jac);
    for (std::size_t q = 0; q < rhs.size(); ++q) rhs[q] = -ev.r[q];
    std::fill(step.begin(), step.end(), 0.0);
    rep.gmres_iters += static_cast<long>(gmres(jac, rhs, step, pc, opt.gmres).iterations);
    ++rep.newton_iters;

    bool accepted = false;
    double alpha = 1.0;
    for (int h = 0; h <= opt.max_halvings; ++h, alpha *= 0.5) {
      ScalarField trial = res.u;
      for (std::size_t q = 0; q < step.size(); ++q) trial[q] += alpha * step[q];
      auto te = detail::evaluate(p, trial, true);
      if (te && te->norm < ev.norm) {
        res.u = std::move(trial);
        ev = std::move(*te);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NonconvergenceError("newton_solve: line search stalled at max |r| = " + std::to_string(ev.norm),
                                res.u.values());
  }
  rep.residual = ev.norm;
  rep.monitor = estimate_monitor(res.u);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

inline SolveResult newton_solve(const ProblemSpec& p, const NewtonOptions& opt = {}) {
  return newton_solve(p, p.ubar, opt);
}

struct ContinuationOptions {
  int steps = 4;            ///< initial number of equal steps in t
  double min_step = 1e-4;
  NewtonOptions newton{};
};

/// Continuation from the subsolution: psi_t = t psi + (1 - t) F(hess ubar + chi)
/// and phi_t = t phi + (1 - t) ubar, so u = ubar solves the t = 0 problem
/// exactly. Steps halve on failure and grow back by 1.5x on success, never
/// beyond the initial step. Refuses to start unless ubar passes the
/// subsolution inequality.
inline SolveResult continuity_solve(const ProblemSpec& p, const ContinuationOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  validate(p);
  if (opt.steps < 1 || !(opt.min_step > 0.0)) throw ParameterError("continuity_solve: bad step parameters");
  const Certificate sub = verify_subsolution(p.ubar, p.chi, p.psi, p.spec, SubsolutionMode::Inequality);
  if (!sub.pass)
    throw PreconditionError("continuity_solve: ubar is not a subsolution (margin " + std::to_string(sub.margin) +
                            " at node " + std::to_string(sub.witnesses.at(0).node) + ")");

  const MetricGrid& g = *p.grid();
  const auto h0 = covariant_hessian(p.ubar);
  ScalarField psi0(p.grid());
  for (std::size_t q = 0; q < g.size(); ++q)
    psi0[q] = g.on_boundary(q) ? p.psi[q] : big_f(h0[q] + p.chi[q], g.metric(q), p.spec);

  auto at = [&](double t) {
    ProblemSpec pt = p;
    for (std::size_t q = 0; q < g.size(); ++q) {
      pt.psi[q] = t * p.psi[q] + (1.0 - t) * psi0[q];
      pt.phi[q] = t * p.phi[q] + (1.0 - t) * p.ubar[q];
    }
    // psi_t sits between psi and F(ubar): feasibility holds when it holds for psi
    pt.delta = -std::numeric_limits<double>::infinity();
    return pt;
  };

  SolveResult res{p.ubar, {}};
  auto& rep = res.report;
  const double dt0 = 1.0 / opt.steps;
  double t = 0.0;
  double dt = dt0;
  while (t < 1.0) {
    const double tn = std::fmin(1.0, t + dt);
    try {
      auto r = newton_solve(at(tn), res.u, opt.newton);
      res.u = std::move(r.u);
      rep.newton_iters += r.report.newton_iters;
      rep.gmres_iters += r.report.gmres_iters;
      rep.residual = r.report.residual;
      t = tn;
      rep.t_history.push_back(t);
      ++rep.continuation_steps;
      dt = std::fmin(dt0, 1.5 * dt);
    } catch (const NonconvergenceError&) {
      dt *= 0.5;
    } catch (const LinearSolverError&) {
      dt *= 0.5;
    }
    if (t < 1.0 && dt < opt.min_step)
      throw NonconvergenceError("continuity_solve: step fell below " + std::to_string(opt.min_step) + " at t = " +
                                    std::to_string(t),
                                res.u.values(), t);
  }
  rep.converged = true;
  rep.monitor = estimate_monitor(res.u);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

/// A strict subsolution with the problem's boundary data: the solution of
/// F = psi + gap, so that F(hess w + chi) - psi = gap > 0 at interior nodes.
inline SolveResult strict_subsolution(const ProblemSpec& p, double gap, const ContinuationOptions& opt = {}) {
  if (!(gap > 0.0)) throw ParameterError("strict_subsolution: gap must be positive");
  ProblemSpec shifted = p;
  for (std::size_t q = 0; q < p.grid()->size(); ++q) shifted.psi[q] += gap;
  return continuity_solve(shifted, opt);
}

struct SweepRow {
  double s = 0.0;
  EstimateMonitor monitor;
  double residual = 0.0;
  int iters = 0;
};

/// Solves the family psi_s = (1 - s) base + s psi for each s, warm-starting
/// Newton from the previous solution and falling back to continuation from
/// ubar when that fails.
inline std::vector<SweepRow> psi_amplitude_sweep(const ProblemSpec& p, const std::vector<double>& s_values,
                                                 double base = 1.0, const ContinuationOptions& opt = {}) {
  std::vector<SweepRow> rows;
  std::optional<ScalarField> prev;
  for (double s : s_values) {
    ProblemSpec ps = p;
    for (std::size_t q = 0; q < p.grid()->size(); ++q) ps.psi[q] = (1.0 - s) * base + s * p.psi[q];
    std::optional<SolveResult> r;
    if (prev) {
      try {
        r = newton_solve(ps, *prev, opt.newton);
      } catch (const NonconvergenceError&) {
      } catch (const LinearSolverError&) {
      } catch (const AdmissibilityError&) {
      }
    }
    if (!r) r = continuity_solve(ps, opt);
    rows.push_back({s, r->report.monitor, r->report.residual, r->report.newton_iters});
    prev = std::move(r->u);
  }
  return rows;
}

/// Barrier diagnostic for v = (u - ubar) + t d - N d^2 / 2 on the collar
/// M_delta = {d < delta}:
///   min_v   = min of v over nodes with d <= delta (needs >= -1e-10),
///   epsilon = min over interior collar nodes of
///             -F^{ij}(u) nabla_ij v / (1 + sum f_i)  (needs > 0).
/// margin = epsilon; pass iff both hold. Throws ParameterError unless
/// t > 0, N >= 0, delta > 0 and delta <= 2t/N.
inline Certificate barrier_check(const ScalarField& u, const ScalarField& ubar, const ProblemSpec& p, double t,
                                 double N, double delta, const ScalarField& d) {
  if (!(t > 0.0) || !(N >= 0.0) || !(delta > 0.0)) throw ParameterError("barrier_check: need t > 0, N >= 0, delta > 0");
  if (N > 0.0 && delta > 2.0 * t / N * (1.0 + 1e-12))
    throw ParameterError("barrier_check: delta = " + std::to_string(delta) + " exceeds 2t/N = " +
                         std::to_string(2.0 * t / N));
  const MetricGrid& g = *p.grid();
  ScalarField v(p.grid());
  for (std::size_t q = 0; q < g.size(); ++q) v[q] = u[q] - ubar[q] + t * d[q] - 0.5 * N * d[q] * d[q];
  const detail::Evaluation ev = detail::evaluate_or_throw(p, u, true);
  const CsrMatrix lin = detail::assemble_linearization(g, ev.dF, false);
  std::vector<double> lv;
  lin.apply(v.values(), lv);

  Certificate c;
  c.condition = ConditionId::Barrier;
  c.spec = p.spec;
  c.margin = std::numeric_limits<double>::infinity();
  double min_v = std::numeric_limits<double>::infinity();
  int collar = 0;
  Witness wv, we;
  for (std::size_t q = 0; q < g.size(); ++q) {
    if (d[q] > delta) continue;
    if (v[q] < min_v) {
      min_v = v[q];
      wv = {{}, v[q], static_cast<std::int64_t>(q)};
    }
    if (g.on_boundary(q) || !(d[q] < delta)) continue;
    ++collar;
    const double eps = -lv[q] / (1.0 + ev.sum_fi[q]);
    if (eps < c.margin) {
      c.margin = eps;
      we = {{}, eps, static_cast<std::int64_t>(q)};
    }
  }
  c.n_samples = collar;
  c.details = {{"t", t}, {"N", N}, {"delta", delta}, {"min_v", min_v}, {"epsilon", c.margin}};
  c.witnesses = {wv, we};
  if (collar == 0) c.note = "no interior node within distance delta of the boundary";
  c.pass = collar > 0 && min_v >= -1e-10 && c.margin > 0.0;
  return c;
}

/// Tries t in {1, 1/2, 1/4, 1/10, 1/20} and N in {0, 1, 10, 100, 1000} with
/// delta = min(2t/N, delta_cap) and returns the first passing certificate, or
/// the one with the largest epsilon when none passes.
inline Certificate barrier_search(const ScalarField& u, const ScalarField& ubar, const ProblemSpec& p,
                                  double delta_cap = 0.25) {
  const ScalarField d = boundary_distance(p.grid());
  std::optional<Certificate> best;
  for (double t : {1.0, 0.5, 0.25, 0.1, 0.05})
    for (double N : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
      const double delta = N > 0.0 ? std::fmin(2.0 * t / N, delta_cap) : delta_cap;
      Certificate c = barrier_check(u, ubar, p, t, N, delta, d);
      if (c.pass) return c;
      if (c.n_samples > 0 && (!best || c.margin > best->margin)) best = std::move(c);
    }
  if (!best) throw ParameterError("barrier_search: no collar contains an interior node");
  return *best;
}

}  // namespace fne
