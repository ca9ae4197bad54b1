#pragma once

// Command-line driver core: a resolved run configuration, deterministic
// sweep execution for each command, and CSV/JSON emission with 17
// significant digits.  Exit protocol: 0 when every enabled per-row
// assertion passes, 1 on the first tolerance failure (identified in the
// output), 2 on usage errors (thrown as UsageError before any rows are
// produced).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "disk.hpp"
#include "halfline.hpp"
#include "perturbation.hpp"
#include "potentials.hpp"
#include "scattering.hpp"

namespace bsdet {

struct UsageError : Error {
  using Error::Error;
};

struct RunConfig {
  std::string command;
  std::string potential = "square";
  std::map<std::string, std::string> params;  // --param key=value
  double z_start = -5.0, z_stop = -0.1;
  int z_count = 20;
  double lambda_start = 0.1, lambda_stop = 10.0;
  int lambda_count = 50;
  int nodes = -1;    // -1: per-command default
  int panels = 1;
  double cutoff = -1.0;  // -1: per-potential default
  int lmax = -1;
  int mmax = 20;
  int p = 1;
  std::string format = "csv";
  std::string out;  // empty: stdout (handled by the caller)
  std::uint64_t seed = 7;
  double tol = -1.0;  // -1: per-command default
};

namespace cli_detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double param_double(const RunConfig& cfg, const std::string& key,
                           double fallback) {
  auto it = cfg.params.find(key);
  if (it == cfg.params.end()) return fallback;
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw UsageError("parameter '" + key + "' is not a number: " + it->second);
  }
}

inline int param_int(const RunConfig& cfg, const std::string& key,
                     int fallback) {
  double v = param_double(cfg, key, static_cast<double>(fallback));
  int i = static_cast<int>(std::lround(v));
  if (std::abs(v - i) > 1e-12)
    throw UsageError("parameter '" + key + "' must be an integer");
  return i;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw UsageError("grid needs at least one point");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = a;
    return g;
  }
  for (int j = 0; j < n; ++j) g[j] = a + (b - a) * j / (n - 1.0);
  return g;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<int> deviation_columns;  // indices checked against tol
  double tol = 0.0;
};

struct RowFailure {
  bool failed = false;
  std::size_t row = 0;
  int column = 0;
  double value = 0.0;
};

inline RowFailure first_failure(const Table& t) {
  RowFailure f;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (int c : t.deviation_columns)
      if (!(t.rows[r][c] < t.tol)) {  // catches NaN too
        f.failed = true;
        f.row = r;
        f.column = c;
        f.value = t.rows[r][c];
        return f;
      }
  return f;
}

}  // namespace cli_detail

// Resolved (post-default) configuration entries, in emission order.
inline std::vector<std::pair<std::string, std::string>> resolved_config(
    const RunConfig& cfg, int nodes, double tol) {
  using cli_detail::fmt17;
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("command", cfg.command);
  kv.emplace_back("potential", cfg.potential);
  std::string flat;
  for (const auto& [k, v] : cfg.params) {
    if (!flat.empty()) flat += ";";
    flat += k + "=" + v;
  }
  kv.emplace_back("params", flat);
  kv.emplace_back("z_start", fmt17(cfg.z_start));
  kv.emplace_back("z_stop", fmt17(cfg.z_stop));
  kv.emplace_back("z_count", std::to_string(cfg.z_count));
  kv.emplace_back("lambda_start", fmt17(cfg.lambda_start));
  kv.emplace_back("lambda_stop", fmt17(cfg.lambda_stop));
  kv.emplace_back("lambda_count", std::to_string(cfg.lambda_count));
  kv.emplace_back("nodes", std::to_string(nodes));
  kv.emplace_back("panels", std::to_string(cfg.panels));
  kv.emplace_back("cutoff", fmt17(cfg.cutoff));
  kv.emplace_back("lmax", std::to_string(cfg.lmax));
  kv.emplace_back("mmax", std::to_string(cfg.mmax));
  kv.emplace_back("p", std::to_string(cfg.p));
  kv.emplace_back("format", cfg.format);
  kv.emplace_back("out", cfg.out);
  kv.emplace_back("seed", std::to_string(cfg.seed));
  kv.emplace_back("tol", fmt17(tol));
  return kv;
}

// Built-in potential profiles; `table` reads whitespace (r, V) pairs.
inline RadialPotential build_potential(const RunConfig& cfg) {
  using cli_detail::param_double;
  const std::string& name = cfg.potential;
  if (name == "square" || name == "well" || name == "barrier") {
    double value = param_double(cfg, "value", -2.0);
    double radius = param_double(cfg, "radius", 1.0);
    if (cfg.cutoff > 0.0) radius = cfg.cutoff;
    require(radius > 0.0, "square potential: radius must be positive");
    return square_potential(value, radius);
  }
  if (name == "gaussian") {
    double amp = param_double(cfg, "amp", -1.0);
    double center = param_double(cfg, "center", 0.0);
    double width = param_double(cfg, "width", 0.25);
    double cutoff = cfg.cutoff > 0.0 ? cfg.cutoff : param_double(cfg, "cutoff", 1.0);
    return gaussian_bump(amp, center, width, cutoff);
  }
  if (name == "expdecay") {
    double amp = param_double(cfg, "amp", -1.0);
    double rate = param_double(cfg, "rate", 2.0);
    double cutoff = cfg.cutoff > 0.0 ? cfg.cutoff : param_double(cfg, "cutoff", 1.0);
    return truncated_exponential(amp, rate, cutoff);
  }
  if (name == "table") {
    auto it = cfg.params.find("path");
    if (it == cfg.params.end())
      throw UsageError("table potential requires --param path=FILE");
    return tabulated_potential(it->second);
  }
  if (name == "zero") {
    double radius = param_double(cfg, "radius", 1.0);
    if (cfg.cutoff > 0.0) radius = cfg.cutoff;
    return square_potential(0.0, radius);
  }
  throw UsageError("unknown potential '" + name +
                   "' (square|gaussian|expdecay|table|zero)");
}

namespace cli_detail {

inline QuadratureRule command_rule(const RunConfig& cfg, int nodes,
                                   double support) {
  if (cfg.panels > 1) {
    int per = std::max(4, nodes / cfg.panels);
    return halfline_rule(per, cfg.panels, support);
  }
  return gauss_legendre(nodes, 0.0, support);
}

// --- jost: Jost solution values at the origin over a z sweep, with the
// Wronskian-against-regular-solution identity as the per-row check.
inline Table run_jost(const RunConfig& cfg, int nodes, double tol) {
  RadialPotential pot = build_potential(cfg);
  Table t;
  t.columns = {"re_z",       "im_z",       "re_f0",  "im_f0",
               "re_fprime0", "im_fprime0", "wronskian_dev"};
  t.deviation_columns = {6};
  t.tol = tol;
  for (double zr : linspace(cfg.z_start, cfg.z_stop, cfg.z_count)) {
    Complex z(zr, 0.0);
    JostSolution f = jost_solution(pot, z, nodes);
    RegularSolutions reg = regular_solutions(pot, z, nodes);
    // W(f, phi) = f phi' - f' phi is x-independent and equals f(z,0);
    // evaluate at the far end where every term has been marched.
    int last = nodes;
    Complex w = f.f[last] * reg.phip[last] - f.fp[last] * reg.phi[last];
    Complex f0 = f.f0();
    double dev = std::abs(w - f0) / std::max(1e-300, std::abs(f0));
    t.rows.push_back({z.real(), z.imag(), f0.real(), f0.imag(),
                      f.fprime0().real(), f.fprime0().imag(), dev});
  }
  return t;
}

// --- det1d: boundary determinants against the Jost oracle.
inline Table run_det1d(const RunConfig& cfg, int nodes, double tol) {
  RadialPotential pot = build_potential(cfg);
  Table t;
  t.columns = {"re_z",        "im_z",        "re_det_d", "im_det_d",
               "re_oracle_d", "im_oracle_d", "dev_d",    "re_det_n",
               "im_det_n",    "re_oracle_n", "im_oracle_n", "dev_n"};
  t.deviation_columns = {6, 11};
  t.tol = tol;
  QuadratureRule rule = command_rule(cfg, nodes, pot.support);
  for (double zr : linspace(cfg.z_start, cfg.z_stop, cfg.z_count)) {
    Complex z(zr, 0.0);
    Complex dd = det_dirichlet(pot, z, rule, cfg.p);
    Complex dn = det_neumann(pot, z, rule, cfg.p);
    JostSolution f = jost_solution(pot, z);
    Complex od = f.f0();
    Complex on = f.fprime0() / (Complex(0, 1) * sqrt_up(z));
    if (cfg.p == 2) {
      // det_2 = det * exp(tr K); the quadrature trace of -K supplies tr K.
      Complex trmk_d =
          boundary_kernel_trace(pot, z, rule, BoundaryCondition::Dirichlet);
      Complex trmk_n =
          boundary_kernel_trace(pot, z, rule, BoundaryCondition::Neumann);
      od *= std::exp(-trmk_d);
      on *= std::exp(-trmk_n);
    }
    double dev_d = std::abs(dd - od) / std::max(1e-300, std::abs(od));
    double dev_n = std::abs(dn - on) / std::max(1e-300, std::abs(on));
    t.rows.push_back({z.real(), z.imag(), dd.real(), dd.imag(), od.real(),
                      od.imag(), dev_d, dn.real(), dn.imag(), on.real(),
                      on.imag(), dev_n});
  }
  return t;
}

// --- ratio1d: three independent routes to det_N/det_D.
inline Table run_ratio1d(const RunConfig& cfg, int nodes, double tol) {
  RadialPotential pot = build_potential(cfg);
  Table t;
  t.columns = {"re_z",       "im_z",       "re_det_ratio", "im_det_ratio",
               "re_m_ratio", "im_m_ratio", "re_boundary",  "im_boundary",
               "dev_det_m",  "dev_det_b",  "dev_m_b"};
  t.deviation_columns = {8, 9, 10};
  t.tol = tol;
  QuadratureRule rule = command_rule(cfg, nodes, pot.support);
  for (double zr : linspace(cfg.z_start, cfg.z_stop, cfg.z_count)) {
    Complex z(zr, 0.0);
    Complex dd = det_dirichlet(pot, z, rule, 1);
    Complex dn = det_neumann(pot, z, rule, 1);
    if (std::abs(dd) < 1e-300)
      throw SingularPointError("ratio1d: Dirichlet determinant vanished");
    Complex det_ratio = dn / dd;
    WeylMData md = mfunctions(pot, z);
    Complex m_ratio = md.m_dirichlet / md.m0_dirichlet;
    Complex boundary = boundary_det_ratio(pot, z);
    auto rel = [](Complex a, Complex b) {
      return std::abs(a - b) / std::max(1e-300, std::abs(b));
    };
    t.rows.push_back({z.real(), z.imag(), det_ratio.real(), det_ratio.imag(),
                      m_ratio.real(), m_ratio.imag(), boundary.real(),
                      boundary.imag(), rel(det_ratio, m_ratio),
                      rel(det_ratio, boundary), rel(m_ratio, boundary)});
  }
  return t;
}

// --- wa: seeded multiplicity bookkeeping across contours.
inline Table run_wa(const RunConfig& cfg, int /*nodes*/, double tol) {
  Table t;
  t.columns = {"contour",   "re_center", "im_center", "radius",
               "m_h",       "m_h0",      "lhs",       "rhs",
               "mismatch"};
  t.deviation_columns = {8};
  t.tol = tol;
  InstanceGenerator gen(cfg.seed);
  int contours = cfg.z_count;
  for (int j = 0; j < contours; ++j) {
    FactoredPerturbation fp = gen.dense_instance(6, 3, 0.55);
    Eigen::ComplexEigenSolver<ComplexMatrix> eh(fp.H());
    Eigen::ComplexEigenSolver<ComplexMatrix> e0(fp.H0);
    // Center on one eigenvalue of H, radius at 40% of the gap to the rest
    // of either spectrum, so the contour stays clear of all spectral points.
    int pick = j % fp.dim();
    Complex center = eh.eigenvalues()(pick);
    double gap = 1e9;
    for (int i = 0; i < fp.dim(); ++i) {
      if (i != pick)
        gap = std::min(gap, std::abs(eh.eigenvalues()(i) - center));
      gap = std::min(gap, std::abs(e0.eigenvalues()(i) - center));
    }
    ContourSpec contour{center, std::max(1e-3, 0.4 * gap), 256};
    WAResult r = cfg.p == 1 ? local_wa_check(fp, contour)
                            : global_wa_check(fp, contour, cfg.p);
    t.rows.push_back({static_cast<double>(j), center.real(), center.imag(),
                      contour.radius, static_cast<double>(r.m_h),
                      static_cast<double>(r.m_h0), static_cast<double>(r.lhs),
                      static_cast<double>(r.rhs),
                      static_cast<double>(std::abs(r.lhs - r.rhs))});
  }
  return t;
}

// --- ssf: spectral shift function over a lambda sweep.
inline Table run_ssf(const RunConfig& cfg, int nodes, double tol) {
  RadialPotential pot = build_potential(cfg);
  int dim = param_int(cfg, "dim", 3);
  Table t;
  t.columns = {"lambda",        "xi",
               "theta",         "re_det2_plus",
               "im_det2_plus",  "re_det2_minus",
               "im_det2_minus", "correction",
               "xi_imag_residue_abs"};
  t.deviation_columns = {8};
  t.tol = tol;
  std::vector<double> grid =
      linspace(cfg.lambda_start, cfg.lambda_stop, cfg.lambda_count);
  std::vector<SpectralShiftPoint> pts =
      spectral_shift(dim, pot, grid, nodes, cfg.lmax);
  for (const SpectralShiftPoint& p : pts)
    t.rows.push_back({p.lambda, p.xi, p.theta, p.det2_plus.real(),
                      p.det2_plus.imag(), p.det2_minus.real(),
                      p.det2_minus.imag(), p.correction,
                      std::abs(p.xi_imag_residue)});
  return t;
}

// --- sdet: scattering-matrix determinant, unitarity, and the exponential
// link to the spectral shift function.
inline Table run_sdet(const RunConfig& cfg, int nodes, double tol) {
  RadialPotential pot = build_potential(cfg);
  int dim = param_int(cfg, "dim", 3);
  Table t;
  t.columns = {"lambda",        "re_det_s", "im_det_s", "unitarity_dev",
               "xi",            "euler_dev"};
  t.deviation_columns = {3, 5};
  t.tol = tol;
  std::vector<double> grid =
      linspace(cfg.lambda_start, cfg.lambda_stop, cfg.lambda_count);
  std::vector<SpectralShiftPoint> pts =
      spectral_shift(dim, pot, grid, nodes, cfg.lmax);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    SMatrixDet s = scattering_det(dim, pot, grid[j], nodes, cfg.lmax);
    Complex euler = std::exp(Complex(0.0, -2.0 * M_PI * pts[j].xi));
    t.rows.push_back({grid[j], s.value.real(), s.value.imag(),
                      std::abs(std::abs(s.value) - 1.0), pts[j].xi,
                      std::abs(s.value - euler)});
  }
  return t;
}

// --- disk: boundary-condition determinant ratio against its boundary-data
// factorization, evaluated at different resolutions so the comparison tests
// the continuum identity rather than a shared matrix identity.
inline Table run_disk(const RunConfig& cfg, int nodes, double tol) {
  RadialPotential pot = build_potential(cfg);
  require(pot.support <= 1.0, "disk: potential must be supported inside the unit disk");
  Table t;
  t.columns = {"re_z",   "im_z",   "re_lhs", "im_lhs",
               "re_rhs", "im_rhs", "rel_dev"};
  t.deviation_columns = {6};
  t.tol = tol;
  int rhs_nodes = nodes + nodes / 2;
  for (double zr : linspace(cfg.z_start, cfg.z_stop, cfg.z_count)) {
    Complex z(zr, 0.0);
    Complex lhs = bc_det_ratio(pot, z, cfg.mmax, nodes);
    Complex rhs = boundary_factorization(pot, z, cfg.mmax, rhs_nodes);
    double dev = std::abs(lhs - rhs) / std::max(1e-300, std::abs(rhs));
    t.rows.push_back(
        {z.real(), z.imag(), lhs.real(), lhs.imag(), rhs.real(), rhs.imag(), dev});
  }
  return t;
}

// --- sweep: determinant refinement diagnostics along a z grid.
inline Table run_sweep(const RunConfig& cfg, int nodes, double tol) {
  RadialPotential pot = build_potential(cfg);
  Table t;
  t.columns = {"re_z",     "im_z",     "re_det_n", "im_det_n",
               "re_det_2n", "im_det_2n", "abs_diff"};
  t.deviation_columns = {6};
  t.tol = tol;
  for (double zr : linspace(cfg.z_start, cfg.z_stop, cfg.z_count)) {
    Complex z(zr, 0.0);
    QuadratureRule coarse = command_rule(cfg, nodes, pot.support);
    QuadratureRule fine = command_rule(cfg, 2 * nodes, pot.support);
    Complex a = det_dirichlet(pot, z, coarse, cfg.p);
    Complex b = det_dirichlet(pot, z, fine, cfg.p);
    t.rows.push_back({z.real(), z.imag(), a.real(), a.imag(), b.real(),
                      b.imag(), std::abs(a - b)});
  }
  return t;
}

inline void emit_csv(std::ostream& os, const std::string& command,
                     const Table& t,
                     const std::vector<std::pair<std::string, std::string>>& cfg,
                     const RowFailure& fail) {
  os << "# schema=" << command << "/v1\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    os << t.columns[c] << (c + 1 < t.columns.size() ? "," : "\n");
  for (const auto& [k, v] : cfg) os << "# config " << k << "=" << v << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      os << fmt17(row[c]) << (c + 1 < row.size() ? "," : "\n");
  }
  os << "# status=" << (fail.failed ? 1 : 0) << "\n";
  if (fail.failed)
    os << "# first_failing_row=" << fail.row << " column="
       << t.columns[fail.column] << " value=" << fmt17(fail.value)
       << " tol=" << fmt17(t.tol) << "\n";
}

inline void emit_json(std::ostream& os, const std::string& command,
                      const Table& t,
                      const std::vector<std::pair<std::string, std::string>>& cfg,
                      const RowFailure& fail) {
  os << "{\n  \"schema\": \"" << json_escape(command) << "/v1\",\n";
  os << "  \"config\": {";
  for (std::size_t j = 0; j < cfg.size(); ++j)
    os << (j ? ", " : "") << "\"" << json_escape(cfg[j].first) << "\": \""
       << json_escape(cfg[j].second) << "\"";
  os << "},\n  \"rows\": [\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    os << "    {";
    for (std::size_t c = 0; c < t.columns.size(); ++c)
      os << (c ? ", " : "") << "\"" << json_escape(t.columns[c])
         << "\": " << fmt17(t.rows[r][c]);
    os << "}" << (r + 1 < t.rows.size() ? "," : "") << "\n";
  }
  os << "  ],\n  \"status\": " << (fail.failed ? 1 : 0);
  if (fail.failed)
    os << ",\n  \"first_failing_row\": {\"index\": " << fail.row
       << ", \"column\": \"" << json_escape(t.columns[fail.column])
       << "\", \"value\": " << fmt17(fail.value)
       << ", \"tol\": " << fmt17(t.tol) << "}";
  os << "\n}\n";
}

}  // namespace cli_detail

// Execute one command; returns the process exit status (0 pass, 1 tolerance
// failure).  Usage problems throw UsageError (exit 2 at the driver level).
inline int run_command(const RunConfig& cfg, std::ostream& os) {
  using namespace cli_detail;
  struct CommandSpec {
    const char* name;
    int default_nodes;
    double default_tol;
    Table (*fn)(const RunConfig&, int, double);
  };
  static const CommandSpec table[] = {
      {"jost", 32768, 1e-8, run_jost},    {"det1d", 256, 1e-6, run_det1d},
      {"ratio1d", 256, 1e-8, run_ratio1d}, {"wa", 0, 0.5, run_wa},
      {"ssf", 128, 1e-8, run_ssf},        {"sdet", 128, 1e-6, run_sdet},
      {"disk", 128, 1e-4, run_disk},      {"sweep", 256, 1e-8, run_sweep},
  };
  const CommandSpec* spec = nullptr;
  for (const CommandSpec& s : table)
    if (cfg.command == s.name) spec = &s;
  if (!spec)
    throw UsageError(
        "unknown command '" + cfg.command +
        "' (jost|det1d|ratio1d|wa|ssf|sdet|disk|sweep)");
  if (cfg.p != 1 && cfg.p != 2) throw UsageError("--p must be 1 or 2");
  if (cfg.format != "csv" && cfg.format != "json")
    throw UsageError("--format must be csv or json");
  if (cfg.z_count < 1 || cfg.lambda_count < 1)
    throw UsageError("grid counts must be at least 1");
  if (cfg.nodes == 0 || cfg.nodes < -1)
    throw UsageError("--nodes must be positive");
  if (cfg.panels < 1) throw UsageError("--panels must be at least 1");

  int nodes = cfg.nodes > 0 ? cfg.nodes : spec->default_nodes;
  double tol = cfg.tol > 0.0 ? cfg.tol : spec->default_tol;
  Table t = spec->fn(cfg, nodes, tol);
  RowFailure fail = first_failure(t);
  auto kv = resolved_config(cfg, nodes, tol);
  if (cfg.format == "csv")
    emit_csv(os, cfg.command, t, kv, fail);
  else
    emit_json(os, cfg.command, t, kv, fail);
  return fail.failed ? 1 : 0;
}

}  // namespace bsdet
