#pragma once

// Files in and out: certificates and reports as JSON with fixed 17-digit
// floats, fields as a one-line JSON header followed by little-endian f64
// values, CSV tables for plotting, and problem files.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fne/cone_geometry.hpp"
#include "fne/dirichlet_solver.hpp"
#include "fne/expression.hpp"
#include "fne/structure_verifier.hpp"
#include "json.hpp"

namespace fne {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON text

inline std::string format_double(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void dump(const Json& j, std::string& out, int level) {
  const std::string pad(static_cast<std::size_t>(2 * level), ' ');
  const std::string inner(static_cast<std::size_t>(2 * level + 2), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(it.key()).dump() + ": ";
        dump(it.value(), out, level + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      bool scalars = true;
      for (const auto& e : j) scalars = scalars && !e.is_structured();
      if (j.empty()) {
        out += "[]";
      } else if (scalars) {  // keep number lists on one line
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          dump(j[i], out, level + 1);
        }
        out += "]";
      } else {
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ",\n";
          out += inner;
          dump(j[i], out, level + 1);
        }
        out += "\n" + pad + "]";
      }
      return;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Deterministic pretty printer: insertion-ordered keys, floats as %.17g,
/// non-finite floats as the strings "inf", "-inf", "nan".
inline std::string to_text(const Json& j) {
  std::string out;
  detail::dump(j, out, 0);
  out += "\n";
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw Error("write failed: " + path);
}

inline Json read_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError(path + ": cannot open file");
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ParseError(path + ": empty file");
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Operators and certificates

inline Json to_json(const OperatorSpec& s) {
  Json j;
  j["kind"] = s.name();
  j["k"] = s.k();
  if (s.kind() == OperatorKind::SigmaQuotient) j["l"] = s.l();
  j["n"] = s.n();
  return j;
}

namespace detail {

inline const Json& member(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

template <class T>
T get_as(const Json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(where + ": wrong type (" + std::string(j.type_name()) + ")");
  }
}

}  // namespace detail

/// {"kind": "sigma_root", "k": 2, "n": 3}; "l" for sigma_quotient. n may be
/// omitted when default_n > 0.
inline OperatorSpec parse_operator(const Json& j, std::size_t default_n = 0, const std::string& where = "operator") {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  const auto kind = detail::get_as<std::string>(detail::member(j, "kind", where), where + ".kind");
  const std::size_t n = j.contains("n") ? detail::get_as<std::size_t>(j.at("n"), where + ".n") : default_n;
  if (n == 0) throw ParseError(where + ": missing \"n\"");
  const std::size_t k = j.contains("k") ? detail::get_as<std::size_t>(j.at("k"), where + ".k") : 1;
  try {
    if (kind == "linear") return OperatorSpec::linear(n);
    if (kind == "sigma") return OperatorSpec::sigma(k, n);
    if (kind == "sigma_root") return OperatorSpec::sigma_root(k, n);
    if (kind == "log_pk") return OperatorSpec::log_pk(k, n);
    if (kind == "pk") return OperatorSpec::pk(k, n);
    if (kind == "sigma_quotient")
      return OperatorSpec::sigma_quotient(k, detail::get_as<std::size_t>(detail::member(j, "l", where), where + ".l"),
                                          n);
  } catch (const DomainError& e) {
    throw ParseError(where + ": " + e.what());
  }
  throw ParseError(where + ".kind: unknown operator kind \"" + kind + "\"");
}

inline Json to_json(const Certificate& c) {
  Json j;
  j["condition"] = condition_name(c.condition);
  j["operator"] = c.spec ? to_json(*c.spec) : Json();
  j["n_samples"] = c.n_samples;
  j["seed"] = c.seed;
  j["margin"] = c.margin;
  j["tolerance"] = c.tolerance;
  j["verdict"] = c.pass ? "pass" : "fail";
  Json w = Json::array();
  for (const auto& x : c.witnesses) {
    Json e;
    e["point"] = x.point;
    e["value"] = x.value;
    if (x.node >= 0) e["node"] = x.node;
    w.push_back(e);
  }
  j["witnesses"] = w;
  Json d = Json::object();
  for (const auto& [k, v] : c.details) d[k] = v;
  j["details"] = d;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

inline Json to_json(const ConeMembershipCertificate& c) {
  Json j;
  j["condition"] = "tangent_cone_plus";
  j["operator"] = to_json(c.spec);
  j["mu"] = c.mu.vector();
  j["sigma"] = c.sigma;
  j["epsilon"] = c.epsilon;
  j["theta_estimate"] = c.theta_estimate;
  j["R_used"] = c.R_used;
  j["worst_sample"] = c.worst_sample.vector();
  j["n_samples"] = c.n_samples;
  j["seed"] = c.seed;
  j["verdict"] = c.pass ? "pass" : "fail";
  return j;
}

inline Json to_json(const EstimateMonitor& m) {
  Json j;
  j["max_hess_interior"] = m.max_hess_interior;
  j["max_hess_boundary"] = m.max_hess_boundary;
  j["max_grad"] = m.max_grad;
  j["ratio"] = m.ratio;
  return j;
}

inline Json to_json(const SolveReport& r) {
  Json j;
  j["converged"] = r.converged;
  j["residual_inf"] = r.residual;
  j["monitor"] = to_json(r.monitor);
  j["newton_iters"] = r.newton_iters;
  j["gmres_iters"] = r.gmres_iters;
  j["continuation_steps"] = r.continuation_steps;
  j["t_history"] = r.t_history;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

// ---------------------------------------------------------------------------
// Field files

struct FieldHeader {
  std::size_t dims = 2;
  std::vector<std::size_t> shape;
  std::vector<double> lo, hi;
  std::vector<bool> periodic;
  std::size_t components = 1;
};

struct FieldFile {
  FieldHeader header;
  std::vector<double> values;  ///< node-major, components contiguous per node
};

namespace detail {

inline Json header_json(const MetricGrid& g, std::size_t components) {
  Json j;
  j["format"] = "fne-field";
  j["version"] = 1;
  j["dims"] = g.dims();
  std::vector<std::size_t> shape;
  std::vector<double> lo, hi, h;
  std::vector<bool> per;
  for (std::size_t a = 0; a < g.dims(); ++a) {
    shape.push_back(g.shape(a));
    lo.push_back(g.lo(a));
    hi.push_back(g.hi(a));
    h.push_back(g.spacing(a));
    per.push_back(g.periodic(a));
  }
  j["shape"] = shape;
  j["lo"] = lo;
  j["hi"] = hi;
  j["spacing"] = h;
  j["periodic"] = per;
  j["components"] = components;
  j["encoding"] = "f64le";
  j["order"] = "row-major, first axis fastest";
  return j;
}

inline void write_payload(std::ostream& f, const std::vector<double>& v) {
  std::vector<char> bytes(8 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto u = std::bit_cast<std::uint64_t>(v[i]);
    for (int b = 0; b < 8; ++b) bytes[8 * i + static_cast<std::size_t>(b)] = static_cast<char>((u >> (8 * b)) & 0xff);
  }
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void write_field_file(const std::string& path, const MetricGrid& g, std::size_t components,
                             const std::vector<double>& v) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << header_json(g, components).dump() << '\n';
  write_payload(f, v);
  if (!f) throw Error("write failed: " + path);
}

}  // namespace detail

inline void write_field(const std::string& path, const ScalarField& u) {
  detail::write_field_file(path, *u.grid(), 1, u.values());
}

inline void write_field(const std::string& path, const SymMatrixField& m) {
  const std::size_t n = m.grid()->dims();
  std::vector<double> v;
  v.reserve(m.size() * n * (n + 1) / 2);
  for (std::size_t p = 0; p < m.size(); ++p)
    for (std::size_t k = 0; k < m[p].packed_size(); ++k) v.push_back(m[p].packed(k));
  detail::write_field_file(path, *m.grid(), n * (n + 1) / 2, v);
}

inline FieldFile read_field(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError(path + ": cannot open field file");
  std::string line;
  if (!std::getline(f, line)) throw ParseError(path + ": missing header");
  Json h;
  try {
    h = Json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": header: " + e.what());
  }
  if (h.value("format", "") != "fne-field" || h.value("encoding", "") != "f64le")
    throw ParseError(path + ": not an f64le field file");
  FieldFile out;
  try {
    out.header.dims = h.at("dims").get<std::size_t>();
    out.header.shape = h.at("shape").get<std::vector<std::size_t>>();
    out.header.lo = h.at("lo").get<std::vector<double>>();
    out.header.hi = h.at("hi").get<std::vector<double>>();
    out.header.periodic = h.at("periodic").get<std::vector<bool>>();
    out.header.components = h.at("components").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": header: " + e.what());
  }
  std::size_t count = out.header.components;
  for (std::size_t s : out.header.shape) count *= s;
  std::vector<char> bytes(8 * count);
  f.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(f.gcount()) != bytes.size()) throw ParseError(path + ": truncated payload");
  out.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b)
      u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 * i + static_cast<std::size_t>(b)])) << (8 * b);
    out.values[i] = std::bit_cast<double>(u);
  }
  return out;
}

namespace detail {

inline void require_same_grid(const FieldHeader& h, const MetricGrid& g, const std::string& path) {
  bool ok = h.dims == g.dims() && h.shape.size() == g.dims() && h.lo.size() == g.dims() && h.hi.size() == g.dims() &&
            h.periodic.size() == g.dims();
  for (std::size_t a = 0; ok && a < g.dims(); ++a)
    ok = h.shape[a] == g.shape(a) && h.lo[a] == g.lo(a) && h.hi[a] == g.hi(a) && h.periodic[a] == g.periodic(a);
  if (!ok) throw ParseError(path + ": field grid does not match the problem grid");
}

}  // namespace detail

inline ScalarField read_scalar_field(const std::string& path, const GridPtr& grid) {
  FieldFile f = read_field(path);
  detail::require_same_grid(f.header, *grid, path);
  if (f.header.components != 1) throw ParseError(path + ": expected a scalar field");
  return ScalarField(grid, std::move(f.values));
}

inline SymMatrixField read_sym_field(const std::string& path, const GridPtr& grid) {
  const FieldFile f = read_field(path);
  detail::require_same_grid(f.header, *grid, path);
  const std::size_t n = grid->dims();
  const std::size_t c = n * (n + 1) / 2;
  if (f.header.components != c) throw ParseError(path + ": expected " + std::to_string(c) + " components per node");
  SymMatrixField m(grid);
  for (std::size_t p = 0; p < grid->size(); ++p)
    for (std::size_t k = 0; k < c; ++k) m[p].packed(k) = f.values[p * c + k];
  return m;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_field_csv(const std::string& path, const ScalarField& u) {
  const MetricGrid& g = *u.grid();
  std::string out = g.dims() == 2 ? "x,y,value\n" : "x,y,z,value\n";
  char buf[40];
  for (std::size_t p = 0; p < g.size(); ++p) {
    const Point x = g.coords(p);
    for (std::size_t a = 0; a < g.dims(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g,", x[a]);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", u[p]);
    out += buf;
  }
  write_text(path, out);
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "s,max_hess_interior,max_hess_boundary,max_grad,residual,iters\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.s, r.monitor.max_hess_interior,
                  r.monitor.max_hess_boundary, r.monitor.max_grad, r.residual, r.iters);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Problem files

struct SolverConfig {
  std::string method = "continuation";  ///< or "newton"
  ContinuationOptions options{};
};

struct ProblemFile {
  ProblemSpec problem;
  SolverConfig solver;
};

namespace detail {

inline std::string resolve(const std::string& file, const std::filesystem::path& base) {
  const std::filesystem::path p(file);
  return p.is_absolute() ? file : (base / p).string();
}

// A number, an expression string, or {"file": path}.
inline ScalarField parse_scalar(const Json& j, const GridPtr& g, const std::filesystem::path& base,
                                const std::string& where) {
  if (j.is_number()) return ScalarField(g, j.get<double>());
  if (j.is_string()) {
    Expression e;
    try {
      e = Expression::parse(j.get<std::string>());
    } catch (const ParseError& err) {
      throw ParseError(where + ": " + err.what());
    }
    return ScalarField::from_function(g, e);
  }
  if (j.is_object() && j.contains("file"))
    return read_scalar_field(resolve(get_as<std::string>(j.at("file"), where + ".file"), base), g);
  throw ParseError(where + ": expected a number, an expression string or {\"file\": ...}");
}

inline SymMatrixField parse_matrix(const Json& j, const GridPtr& g, const std::filesystem::path& base,
                                   const std::string& where) {
  const std::size_t n = g->dims();
  if (j.is_object() && j.contains("file"))
    return read_sym_field(resolve(get_as<std::string>(j.at("file"), where + ".file"), base), g);
  if (!j.is_array() || j.size() != n) throw ParseError(where + ": expected an " + std::to_string(n) + "x" +
                                                       std::to_string(n) + " array or {\"file\": ...}");
  std::vector<std::vector<Expression>> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_array() || j[i].size() != n) throw ParseError(where + ": row " + std::to_string(i) + " has wrong size");
    for (std::size_t k = 0; k < n; ++k) {
      const Json& x = j[i][k];
      try {
        if (x.is_number()) e[i].push_back(Expression::parse(format_double(x.get<double>())));
        else if (x.is_string()) e[i].push_back(Expression::parse(x.get<std::string>()));
        else throw ParseError("expected a number or an expression string");
      } catch (const ParseError& err) {
        throw ParseError(where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]: " + err.what());
      }
    }
  }
  SymMatrixField m(g);
  for (std::size_t p = 0; p < g->size(); ++p) {
    const Point x = g->coords(p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i; k < n; ++k) m[p](i, k) = 0.5 * (e[i][k](x) + e[k][i](x));
  }
  return m;
}

}  // namespace detail

/// Problem JSON:
///   operator   {"kind", "k", ["l"], ["n"]}; n defaults to the grid dimension
///   grid       {"shape": [..], "lo": [..], "hi": [..]}
///   metric     "flat" (default) | {"conformal": w} for g = exp(2 w) I, w an
///              expression or [{"c": c, "p": [i, j, k]}, ...] | {"tensor_file": path}
///   chi        n x n array of numbers / expressions, or {"file": path}; default 0
///   psi, phi   number | expression in x, y, z | {"file": path}
///   ubar       as psi; the subsolution and initial guess
///   delta      feasibility gap, default 1e-6
///   solver     {"method": "continuation"|"newton", "tol", "max_iters", "steps",
///               "min_step", "preconditioner": "jacobi"|"ilu0", "gmres_restart",
///               "gmres_tol", "gmres_max_iters"}
/// Relative file paths are taken relative to base_dir.
inline ProblemFile parse_problem(const Json& j, const std::filesystem::path& base_dir = ".") {
  using detail::get_as;
  using detail::member;
  if (!j.is_object()) throw ParseError("problem: expected a JSON object");
  const Json& gj = member(j, "grid", "problem");
  const auto shape = get_as<std::vector<std::size_t>>(member(gj, "shape", "grid"), "grid.shape");
  const auto lo = get_as<std::vector<double>>(member(gj, "lo", "grid"), "grid.lo");
  const auto hi = get_as<std::vector<double>>(member(gj, "hi", "grid"), "grid.hi");
  std::optional<MetricGrid> mg;
  try {
    mg.emplace(shape, lo, hi);
  } catch (const DomainError& e) {
    throw ParseError(std::string("grid: ") + e.what());
  }
  if (j.contains("metric")) {
    const Json& m = j.at("metric");
    if (m.is_string() && m.get<std::string>() == "flat") {
    } else if (m.is_object() && m.contains("conformal")) {
      const Json& w = m.at("conformal");
      if (w.is_string()) {
        mg->set_conformal(Expression::parse(w.get<std::string>()));
      } else if (w.is_array()) {
        Polynomial poly;
        for (const auto& t : w) {
          const auto p = get_as<std::vector<int>>(member(t, "p", "metric.conformal[]"), "metric.conformal[].p");
          if (p.size() != 3) throw ParseError("metric.conformal[].p: expected three exponents");
          poly.terms.push_back({get_as<double>(member(t, "c", "metric.conformal[]"), "metric.conformal[].c"),
                                {p[0], p[1], p[2]}});
        }
        mg->set_conformal(poly);
      } else {
        throw ParseError("metric.conformal: expected an expression string or a list of {c, p} terms");
      }
    } else if (m.is_object() && m.contains("tensor_file")) {
      const auto tmp = make_grid(*mg);
      const auto t = read_sym_field(
          detail::resolve(get_as<std::string>(m.at("tensor_file"), "metric.tensor_file"), base_dir), tmp);
      std::vector<SymMatrix> gs(tmp->size());
      for (std::size_t p = 0; p < gs.size(); ++p) gs[p] = t[p];
      mg->set_metric(gs);
    } else {
      throw ParseError("metric: expected \"flat\", {\"conformal\": ...} or {\"tensor_file\": ...}");
    }
  }
  const GridPtr g = make_grid(std::move(*mg));
  const OperatorSpec spec = parse_operator(member(j, "operator", "problem"), g->dims());
  SymMatrixField chi = j.contains("chi") ? detail::parse_matrix(j.at("chi"), g, base_dir, "chi") : SymMatrixField(g);
  ProblemFile out{{spec, std::move(chi), detail::parse_scalar(member(j, "psi", "problem"), g, base_dir, "psi"),
                   detail::parse_scalar(member(j, "phi", "problem"), g, base_dir, "phi"),
                   detail::parse_scalar(member(j, "ubar", "problem"), g, base_dir, "ubar")},
                  {}};
  if (j.contains("delta")) out.problem.delta = get_as<double>(j.at("delta"), "delta");
  if (j.contains("solver")) {
    const Json& s = j.at("solver");
    auto& o = out.solver.options;
    if (s.contains("method")) out.solver.method = get_as<std::string>(s.at("method"), "solver.method");
    if (out.solver.method != "continuation" && out.solver.method != "newton")
      throw ParseError("solver.method: expected \"continuation\" or \"newton\"");
    if (s.contains("tol")) o.newton.tol = get_as<double>(s.at("tol"), "solver.tol");
    if (s.contains("max_iters")) o.newton.max_iters = get_as<int>(s.at("max_iters"), "solver.max_iters");
    if (s.contains("steps")) o.steps = get_as<int>(s.at("steps"), "solver.steps");
    if (s.contains("min_step")) o.min_step = get_as<double>(s.at("min_step"), "solver.min_step");
    if (s.contains("gmres_restart"))
      o.newton.gmres.restart = get_as<std::size_t>(s.at("gmres_restart"), "solver.gmres_restart");
    if (s.contains("gmres_tol")) o.newton.gmres.rel_tol = get_as<double>(s.at("gmres_tol"), "solver.gmres_tol");
    if (s.contains("gmres_max_iters"))
      o.newton.gmres.max_iters = get_as<std::size_t>(s.at("gmres_max_iters"), "solver.gmres_max_iters");
    if (s.contains("preconditioner")) {
      const auto pc = get_as<std::string>(s.at("preconditioner"), "solver.preconditioner");
      if (pc == "jacobi") o.newton.preconditioner = KrylovPreconditioner::Jacobi;
      else if (pc == "ilu0") o.newton.preconditioner = KrylovPreconditioner::Ilu0;
      else throw ParseError("solver.preconditioner: expected \"jacobi\" or \"ilu0\"");
    }
  }
  return out;
}

inline ProblemFile load_problem(const std::string& path) {
  return parse_problem(read_json_file(path), std::filesystem::path(path).parent_path());
}

}  // namespace fne
