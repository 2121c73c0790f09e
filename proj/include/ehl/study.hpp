#pragma once

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehl/solver.hpp"

namespace ehl {

enum class CoefficientMode { constant, nonlinear };

inline const char* to_string(CoefficientMode m) { return m == CoefficientMode::constant ? "constant" : "nonlinear"; }

/// A problem -div(eps(u) grad u) + xi(u)/eps_p = f with known solution.
struct ManufacturedCase {
  std::string name;
  DomainSpec domain;  // coarsest mesh
  ScalarFunction exact;
  GradientFunction gradient;
  ScalarFunction forcing;
  CoefficientMode coefficient = CoefficientMode::constant;
  bool penalty = false;
  /// Known to lie in the polynomial space of this degree (0: no).
  int polynomial_degree = 0;
};

/// eps(u) = 1 + u^2 for the nonlinear cases.
inline CoefficientValue manufactured_coefficient(double u) { return {1.0 + u * u, 2.0 * u, 0.0, false}; }

/// f = -div(eps(u) grad u) by fourth-order central differences of the flux.
/// With step 1e-3 the truncation error is about 1e-12 times the fifth
/// derivative of the flux.
inline ScalarFunction numeric_forcing(const ScalarFunction& u, const GradientFunction& grad, int dim,
                                      double step = 1e-3) {
  return [u, grad, dim, step](const Point& x) {
    double f = 0.0;
    for (int a = 0; a < dim; ++a) {
      auto flux = [&](double off) {
        Point y = x;
        y[static_cast<std::size_t>(a)] += off;
        const double v = u(y);
        return manufactured_coefficient(v).value * grad(y)[static_cast<std::size_t>(a)];
      };
      f -= (-flux(2 * step) + 8 * flux(step) - 8 * flux(-step) + flux(-2 * step)) / (12 * step);
    }
    return f;
  };
}

inline DomainSpec unit_domain(int dim, int cells) {
  DomainSpec d;
  d.dim = dim;
  d.lower = {0.0, 0.0};
  d.upper = {1.0, 1.0};
  d.cells = {cells, cells};
  return d;
}

/// u = sin(pi x) e^x on (0, 1).
inline ManufacturedCase smooth_1d(CoefficientMode mode = CoefficientMode::constant, int cells = 8) {
  using std::numbers::pi;
  ManufacturedCase c;
  c.name = "smooth_1d";
  c.domain = unit_domain(1, cells);
  c.coefficient = mode;
  c.exact = [](const Point& x) { return std::sin(pi * x[0]) * std::exp(x[0]); };
  c.gradient = [](const Point& x) {
    return Point{std::exp(x[0]) * (pi * std::cos(pi * x[0]) + std::sin(pi * x[0])), 0.0};
  };
  auto second = [](double x) { return std::exp(x) * ((1 - pi * pi) * std::sin(pi * x) + 2 * pi * std::cos(pi * x)); };
  if (mode == CoefficientMode::constant) {
    c.forcing = [second](const Point& x) { return -second(x[0]); };
  } else {
    auto u = c.exact;
    auto g = c.gradient;
    c.forcing = [u, g, second](const Point& x) {
      const double v = u(x);
      const double d = g(x)[0];
      return -(2 * v * d * d + (1 + v * v) * second(x[0]));
    };
  }
  return c;
}

/// u = sin(pi x) sin(pi y) e^(x + y) on the unit square.
inline ManufacturedCase smooth_2d(CoefficientMode mode = CoefficientMode::constant, int cells = 4) {
  using std::numbers::pi;
  ManufacturedCase c;
  c.name = "smooth_2d";
  c.domain = unit_domain(2, cells);
  c.coefficient = mode;
  c.exact = [](const Point& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]) * std::exp(x[0] + x[1]); };
  auto d1 = [](double t) { return pi * std::cos(pi * t) + std::sin(pi * t); };
  auto d2 = [](double t) { return (1 - pi * pi) * std::sin(pi * t) + 2 * pi * std::cos(pi * t); };
  c.gradient = [d1](const Point& x) {
    const double e = std::exp(x[0] + x[1]);
    return Point{e * std::sin(pi * x[1]) * d1(x[0]), e * std::sin(pi * x[0]) * d1(x[1])};
  };
  if (mode == CoefficientMode::constant) {
    c.forcing = [d2](const Point& x) {
      const double e = std::exp(x[0] + x[1]);
      return -e * (std::sin(pi * x[1]) * d2(x[0]) + std::sin(pi * x[0]) * d2(x[1]));
    };
  } else {
    c.forcing = numeric_forcing(c.exact, c.gradient, 2);
  }
  return c;
}

/// u = x^(5/2) (1 - x): second derivative unbounded in slope at x = 0.
inline ManufacturedCase limited_1d(int cells = 8) {
  ManufacturedCase c;
  c.name = "limited_1d";
  c.domain = unit_domain(1, cells);
  c.exact = [](const Point& x) { return std::pow(x[0], 2.5) * (1 - x[0]); };
  c.gradient = [](const Point& x) { return Point{2.5 * std::pow(x[0], 1.5) - 3.5 * std::pow(x[0], 2.5), 0.0}; };
  c.forcing = [](const Point& x) { return -(3.75 * std::sqrt(x[0]) - 8.75 * std::pow(x[0], 1.5)); };
  return c;
}

/// u = x (1 - x), f = 2: in every space with p >= 2.
inline ManufacturedCase quadratic_1d(int cells = 8) {
  ManufacturedCase c;
  c.name = "quadratic_1d";
  c.domain = unit_domain(1, cells);
  c.exact = [](const Point& x) { return x[0] * (1 - x[0]); };
  c.gradient = [](const Point& x) { return Point{1 - 2 * x[0], 0.0}; };
  c.forcing = [](const Point&) { return 2.0; };
  c.polynomial_degree = 2;
  return c;
}

/// Obstacle problem -u'' = f, u >= 0 on (0, 1) with f = 1 left of 1/2 and
/// f = -1 right of it. The contact set is [s, 1] with s = 1/sqrt(2):
/// u = x (1 - s - x/2) on (0, 1/2), (x - s)^2/2 on (1/2, s), 0 beyond.
inline ManufacturedCase obstacle_1d(int cells = 256) {
  const double s = 1.0 / std::numbers::sqrt2;
  ManufacturedCase c;
  c.name = "obstacle_1d";
  c.domain = unit_domain(1, cells);
  c.penalty = true;
  c.exact = [s](const Point& p) {
    const double x = p[0];
    if (x <= 0.5) return x * (1 - s - 0.5 * x);
    if (x <= s) return 0.5 * (x - s) * (x - s);
    return 0.0;
  };
  c.gradient = [s](const Point& p) {
    const double x = p[0];
    if (x <= 0.5) return Point{1 - s - x, 0.0};
    if (x <= s) return Point{x - s, 0.0};
    return Point{0.0, 0.0};
  };
  c.forcing = [](const Point& p) { return p[0] < 0.5 ? 1.0 : -1.0; };
  return c;
}

/// -u'' = -1, u >= 0: the solution is u = 0.
inline ManufacturedCase obstacle_trivial(int cells = 256) {
  ManufacturedCase c;
  c.name = "obstacle_trivial";
  c.domain = unit_domain(1, cells);
  c.penalty = true;
  c.exact = [](const Point&) { return 0.0; };
  c.gradient = [](const Point&) { return Point{0.0, 0.0}; };
  c.forcing = [](const Point&) { return -1.0; };
  return c;
}

struct StudyOptions {
  FormParams form = [] {
    FormParams f;
    f.theta = 1.0;
    return f;
  }();
  SolveConfig solve;
  SpaceOptions space;
  /// Used when the case has the penalty on and no explicit list is given.
  double eps_p = 1e-6;
};

struct RateRow {
  double h = 0.0;
  int p = 1;
  double eps_p = 0.0;  // 0: penalty off
  double err_l2 = 0.0;
  double err_energy = 0.0;
  double err_energy_nu = 0.0;
  std::optional<double> rate_l2;
  std::optional<double> rate_energy;
  std::string status = "ok";  // ok | exact | failed
  double min_u = 0.0;
  std::string message;
};

struct RateTable {
  std::string case_name;
  std::string config_hash;
  std::vector<RateRow> rows;
};

/// Least-squares slope of log e against log h.
inline double estimate_rate(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size()) throw std::invalid_argument("estimate_rate: size mismatch");
  if (errors.size() < 2) throw std::invalid_argument("estimate_rate: needs at least two points");
  const auto n = static_cast<double>(errors.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i] > 0.0) || !(hs[i] > 0.0)) throw std::invalid_argument("estimate_rate: values must be positive");
    sx += std::log(hs[i]);
    sy += std::log(errors[i]);
  }
  const double mx = sx / n, my = sy / n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const double dx = std::log(hs[i]) - mx;
    num += dx * (std::log(errors[i]) - my);
    den += dx * dx;
  }
  if (den == 0.0) throw std::invalid_argument("estimate_rate: all h equal");
  return num / den;
}

/// The discrete problem of a case on a mesh; eps_p <= 0 or infinite turns
/// the penalty off.
inline Problem case_problem(const ManufacturedCase& mc, const Mesh& mesh, const StudyOptions& opt, double eps_p) {
  Problem pb;
  pb.space = make_space(mesh, opt.space);
  pb.forcing = mc.forcing;
  pb.form = opt.form;
  if (mc.coefficient == CoefficientMode::nonlinear)
    pb.coefficient = [](double u, double, const Point&) { return manufactured_coefficient(u); };
  pb.penalty.enabled = eps_p > 0.0 && std::isfinite(eps_p);
  if (pb.penalty.enabled) pb.penalty.eps_p = eps_p;
  return pb;
}

/// Solve one case on one mesh. Solver failures are caught into the row.
inline RateRow solve_case(const ManufacturedCase& mc, const Mesh& mesh, const StudyOptions& opt,
                          std::optional<double> eps_p = std::nullopt, SolveReport* report = nullptr) {
  RateRow row;
  row.h = (mesh.spec().upper[0] - mesh.spec().lower[0]) / mesh.spec().cells[0];
  row.p = mesh.element(0).degree;
  const double eps = eps_p.value_or(mc.penalty ? opt.eps_p : 0.0);
  const Problem pb = case_problem(mc, mesh, opt, eps);
  if (pb.penalty.enabled) row.eps_p = eps;
  try {
    const SolveReport rep = solve_with_force_balance(pb, DgField(pb.space), 0.0, opt.solve);
    if (report) *report = rep;
    if (!rep.converged) {
      row.status = "failed";
      row.message = rep.message;
      return row;
    }
    row.err_l2 = l2_error(rep.pressure, mc.exact);
    const EnergyErrors ee = energy_errors(rep.pressure, mc.exact, mc.gradient, opt.form.norm());
    row.err_energy = ee.energy;
    row.err_energy_nu = ee.energy_nu;
    row.min_u = rep.min_u;
    if (mc.polynomial_degree > 0 && row.p >= mc.polynomial_degree) row.status = "exact";
  } catch (const std::exception& e) {
    row.status = "failed";
    row.message = e.what();
  }
  return row;
}

/// Fill in rates between consecutive rows of the same (p, eps_p) group whose
/// h differs. Exact and failed rows carry no rates.
inline void compute_rates(RateTable& t) {
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const RateRow& a = t.rows[i - 1];
    RateRow& b = t.rows[i];
    if (a.p != b.p || a.eps_p != b.eps_p || !(b.h < a.h)) continue;
    if (a.status != "ok" || b.status != "ok") continue;
    if (a.err_l2 > 0 && b.err_l2 > 0) b.rate_l2 = std::log(a.err_l2 / b.err_l2) / std::log(a.h / b.h);
    if (a.err_energy > 0 && b.err_energy > 0)
      b.rate_energy = std::log(a.err_energy / b.err_energy) / std::log(a.h / b.h);
  }
}

/// Nested uniform refinement of the case's coarse mesh, `levels` meshes per degree.
inline RateTable run_h_sweep(const ManufacturedCase& mc, const std::vector<int>& degrees, int levels,
                             const StudyOptions& opt = {}) {
  if (degrees.empty() || levels < 1) throw std::invalid_argument("h sweep needs degrees and at least one level");
  RateTable t;
  t.case_name = mc.name;
  for (int p : degrees) {
    Mesh mesh = Mesh::build(mc.domain, p);
    for (int l = 0; l < levels; ++l) {
      t.rows.push_back(solve_case(mc, mesh, opt));
      if (l + 1 < levels) mesh = mesh.refine_uniform();
    }
  }
  compute_rates(t);
  return t;
}

/// Fixed mesh, degrees in the given order. Rows differ in p so no h-rates appear.
inline RateTable run_p_sweep(const ManufacturedCase& mc, const std::vector<int>& degrees, const StudyOptions& opt = {}) {
  if (degrees.empty()) throw std::invalid_argument("p sweep needs degrees");
  RateTable t;
  t.case_name = mc.name;
  for (int p : degrees) t.rows.push_back(solve_case(mc, Mesh::build(mc.domain, p), opt));
  compute_rates(t);
  return t;
}

/// One solve per eps_p on the case's mesh. A non-finite or non-positive
/// entry switches the penalty off.
inline RateTable run_penalty_sweep(const ManufacturedCase& mc, const std::vector<double>& eps_list, int degree = 1,
                                   const StudyOptions& opt = {}) {
  if (eps_list.empty()) throw std::invalid_argument("penalty sweep needs eps_p values");
  RateTable t;
  t.case_name = mc.name;
  const Mesh mesh = Mesh::build(mc.domain, degree);
  for (double eps : eps_list) {
    t.rows.push_back(solve_case(mc, mesh, opt, eps));
    if (!(eps > 0.0) || !std::isfinite(eps)) t.rows.back().eps_p = std::numeric_limits<double>::infinity();
  }
  return t;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kRatesHeader = "h,p,eps_p,err_l2,err_energy,err_energy_nu,rate_l2,rate_energy,status";
inline constexpr const char* kPenaltyHeader = "eps_p,err_l2,min_u,status";

inline void write_rates_csv(std::ostream& os, const RateTable& t) {
  os << kRatesHeader << "\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_g17(*v) : std::string(); };
  for (const RateRow& r : t.rows) {
    os << format_g17(r.h) << ',' << r.p << ',' << format_g17(r.eps_p) << ',' << format_g17(r.err_l2) << ','
       << format_g17(r.err_energy) << ',' << format_g17(r.err_energy_nu) << ',' << opt(r.rate_l2) << ','
       << opt(r.rate_energy) << ',' << r.status << "\n";
  }
}

inline void write_penalty_csv(std::ostream& os, const RateTable& t) {
  os << kPenaltyHeader << "\n";
  for (const RateRow& r : t.rows)
    os << format_g17(r.eps_p) << ',' << format_g17(r.err_l2) << ',' << format_g17(r.min_u) << ',' << r.status << "\n";
}

}  // namespace ehl
