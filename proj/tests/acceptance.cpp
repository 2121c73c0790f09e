// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "ehl/cli.hpp"

using namespace ehl;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << what << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DomainSpec interval(double a, double b, int n) {
  DomainSpec d;
  d.dim = 1;
  d.lower = {a, 0.0};
  d.upper = {b, 0.0};
  d.cells = {n, 1};
  return d;
}

DomainSpec square(double a, double b, int n) {
  DomainSpec d;
  d.dim = 2;
  d.lower = {a, a};
  d.upper = {b, b};
  d.cells = {n, n};
  return d;
}

// Rate windows on an h-sweep table: L2 in [p+0.9, p+1.2], energy in [p-0.1, p+0.2].
bool rates_in_window(const RateTable& t, std::string& detail) {
  bool ok = true;
  std::vector<int> degrees;
  for (const RateRow& r : t.rows) {
    if (r.status != "ok") {
      detail += " failed row h=" + fmt(r.h) + " p=" + std::to_string(r.p) + " (" + r.message + ")";
      ok = false;
    }
    if (std::find(degrees.begin(), degrees.end(), r.p) == degrees.end()) degrees.push_back(r.p);
  }
  if (!ok) return false;
  for (int p : degrees) {
    std::vector<double> el, ee, hs;
    for (const RateRow& r : t.rows)
      if (r.p == p) {
        el.push_back(r.err_l2);
        ee.push_back(r.err_energy);
        hs.push_back(r.h);
      }
    const double rl = estimate_rate(el, hs), re = estimate_rate(ee, hs);
    detail += " p=" + std::to_string(p) + ": L2 " + fmt(rl) + ", energy " + fmt(re) + ";";
    ok = ok && rl >= p + 0.9 && rl <= p + 1.2 && re >= p - 0.1 && re <= p + 0.2;
  }
  return ok;
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const RateTable t = run_h_sweep(smooth_1d(CoefficientMode::nonlinear, 8), {1, 2}, 5);
  const double secs = seconds_since(t0);
  std::string detail;
  const bool rates = rates_in_window(t, detail);
  report(1, rates && secs < 60.0, "1D h-sweep h=1/8..1/128," + detail + " time " + fmt(secs, 3) + " s");
}

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const RateTable t = run_h_sweep(smooth_2d(CoefficientMode::nonlinear, 4), {1}, 4);
  const double secs = seconds_since(t0);
  std::string detail;
  const bool rates = rates_in_window(t, detail);
  report(2, rates && secs < 300.0, "2D h-sweep 4x4..32x32," + detail + " time " + fmt(secs, 3) + " s");
}

void criterion3() {
  const std::vector<double> eps = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  const RateTable t = run_penalty_sweep(obstacle_1d(256), eps, 1);
  const double fmax = 1.0;
  bool ok = true;
  double floor = 1e300;
  for (const RateRow& r : t.rows) floor = std::min(floor, r.err_l2);
  std::string detail;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const RateRow& r = t.rows[i];
    detail += " eps=" + fmt(eps[i], 1) + " err=" + fmt(r.err_l2, 3) + " min_u=" + fmt(r.min_u, 3) + ";";
    if (r.status != "ok") ok = false;
    if (r.min_u < -10.0 * eps[i] * fmax) ok = false;
    // decreasing, or flat within 10% once at the discretization floor
    if (i > 0 && r.err_l2 > t.rows[i - 1].err_l2 && r.err_l2 > 1.1 * floor) ok = false;
  }
  report(3, ok, "obstacle penalty sweep on 256 elements," + detail);
}

void criterion4() {
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> U(-1e3, 1e3);
  long violations = 0;
  for (int i = 0; i < 1000000; ++i) {
    const double a = U(rng), b = U(rng);
    if ((xi(a) - xi(b)) * (a - b) < 0.0) ++violations;
    if (std::abs(xi(a)) > std::abs(a)) ++violations;
  }
  report(4, violations == 0, "penalty operator on 1e6 random pairs, " + std::to_string(violations) + " violations");
}

double fd_jacobian_error(int cells) {
  const SpacePtr space = make_space(Mesh::build(interval(-4, 2, cells), 1));
  const DeformationKernel kernel = build_kernel(space, ContactKind::line);
  LubricantOptions lo;
  lo.clamp = false;
  const PhysicalInputs in = paper_defaults();
  const Lubricant lub = Lubricant::from(derive(in, ContactKind::line), in, lo);
  Problem pb;
  pb.space = space;
  pb.coefficient = [lub](double u, double h, const Point& x) { return lub.epsilon_star(u, h, x); };
  pb.density = [lub](double u) { return lub.density_value(u); };
  pb.kernel = &kernel;
  pb.h00 = 2.0;
  pb.penalty.enabled = true;
  pb.penalty.eps_p = 1e-2;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.01, 0.3);
  DgField u(space);
  for (auto& c : u.coefficients) c = U(rng);
  const Eigen::MatrixXd J = assemble_newton(pb, u).jacobian.to_dense();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < u.coefficients.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(u.coefficients[j]));
    DgField a = u, b = u;
    a.coefficients[j] += h;
    b.coefficients[j] -= h;
    const Eigen::VectorXd fd = (residual(pb, a) - residual(pb, b)) / (2 * h);
    worst = std::max(worst, (fd - J.col(j)).norm() / fd.norm());
  }
  return worst;
}

void criterion5() {
  const double e2 = fd_jacobian_error(2), e8 = fd_jacobian_error(8);
  report(5, e2 <= 1e-5 && e8 <= 1e-5,
         "Newton Jacobian vs central differences, worst column error " + fmt(e2, 3) + " (2 el), " + fmt(e8, 3) + " (8 el)");
}

void criterion6() {
  const PhysicalInputs in = paper_defaults();
  const Lubricant lub = Lubricant::from(derive(in, ContactKind::line), in, LubricantOptions{});
  const double eta0 = lub.viscosity(0.0), rho0 = lub.density(0.0);
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i <= 100000; ++i) {
    const double r = lub.density(10.0 * i / 100000.0);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  const bool ok = std::abs(eta0 - 1.0) <= 2.0 * std::numeric_limits<double>::epsilon() &&
                  std::abs(rho0 - 1.0) <= 2.0 * std::numeric_limits<double>::epsilon() && lo >= 1.0 && hi <= 1.34;
  report(6, ok, "eta(0)=" + fmt(eta0, 17) + " rho(0)=" + fmt(rho0, 17) + " rho range [" + fmt(lo, 6) + ", " + fmt(hi, 6) + "]");
}

// Composite Gauss on a well-separated element; the integrand is smooth there.
double log_entry_oracle(double x, double a, double b, int j) {
  const QuadratureRule r = gauss_legendre(20);
  double s = 0.0;
  const int pieces = 64;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + (b - a) * k / pieces, hi = a + (b - a) * (k + 1) / pieces;
    for (std::size_t q = 0; q < r.size(); ++q) {
      const double t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * r.points[q];
      s += 0.5 * (hi - lo) * r.weights[q] * std::log(std::abs(x - t)) * legendre(j, (2 * t - a - b) / (b - a)).value;
    }
  }
  return -s / pi;
}

double inverse_distance_oracle(double x, double y, const Cell& c, int jx, int jy) {
  const QuadratureRule r = gauss_legendre(30);
  double s = 0.0;
  for (std::size_t a = 0; a < r.size(); ++a)
    for (std::size_t b = 0; b < r.size(); ++b) {
      const double X = 0.5 * (c.lower[0] + c.upper[0]) + 0.5 * c.extent(0) * r.points[a];
      const double Y = 0.5 * (c.lower[1] + c.upper[1]) + 0.5 * c.extent(1) * r.points[b];
      s += r.weights[a] * r.weights[b] * 0.25 * c.extent(0) * c.extent(1) * legendre(jx, r.points[a]).value *
           legendre(jy, r.points[b]).value / std::hypot(x - X, y - Y);
    }
  return 2.0 / (pi * pi) * s;
}

void criterion7() {
  // zero pressure: offset plus parabola, exactly
  const SpacePtr s1 = make_space(Mesh::build(interval(-4, 2, 64), 2));
  const DeformationKernel k1 = build_kernel(s1, ContactKind::line);
  const Eigen::VectorXd h = film_thickness(DgField(s1), k1, 0.25);
  const auto pts = quadrature_points(*s1);
  bool parabola = true;
  for (std::size_t q = 0; q < pts.size(); ++q)
    parabola = parabola && h[static_cast<Eigen::Index>(q)] == 0.25 + 0.5 * pts[q][0] * pts[q][0];

  // entries for points at least one element away from the source element
  double worst = 0.0;
  const SpacePtr sl = make_space(Mesh::build(interval(-4, 2, 12), 2));
  const DeformationKernel kl = build_kernel(sl, ContactKind::line);
  const auto pl = quadrature_points(*sl);
  for (std::size_t q = 0; q < pl.size(); ++q)
    for (int e = 0; e < sl->mesh().num_elements(); ++e) {
      const Cell& c = sl->mesh().element(e);
      if (pl[q][0] > c.lower[0] - c.extent(0) && pl[q][0] < c.upper[0] + c.extent(0)) continue;
      for (int j = 0; j <= 2; ++j)
        worst = std::max(worst, std::abs(kl.matrix()(static_cast<Eigen::Index>(q), sl->offset(e) + j) -
                                         log_entry_oracle(pl[q][0], c.lower[0], c.upper[0], j)));
    }
  const SpacePtr sp = make_space(Mesh::build(square(-2, 2, 4), 1));
  const DeformationKernel kp = build_kernel(sp, ContactKind::point);
  const auto pp = quadrature_points(*sp);
  for (std::size_t q = 0; q < pp.size(); q += 3)
    for (int e = 0; e < sp->mesh().num_elements(); ++e) {
      const Cell& c = sp->mesh().element(e);
      const double dx = std::max({c.lower[0] - pp[q][0], 0.0, pp[q][0] - c.upper[0]});
      const double dy = std::max({c.lower[1] - pp[q][1], 0.0, pp[q][1] - c.upper[1]});
      if (std::hypot(dx, dy) < sp->mesh().element_size(e)) continue;
      for (int j = 0; j < 4; ++j)
        worst = std::max(worst, std::abs(kp.matrix()(static_cast<Eigen::Index>(q), sp->offset(e) + j) -
                                         inverse_distance_oracle(pp[q][0], pp[q][1], c, j % 2, j / 2)));
    }

  const bool bits = (build_kernel(s1, ContactKind::line).matrix().array() == k1.matrix().array()).all() &&
                    (build_kernel(sp, ContactKind::point).matrix().array() == kp.matrix().array()).all();
  report(7, parabola && worst <= 1e-10 && bits,
         std::string("film at zero pressure ") + (parabola ? "exact" : "inexact") + ", far-entry error " + fmt(worst, 3) +
             ", kernel " + (bits ? "bit-identical" : "differs") + " on rebuild");
}

void criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const ContactRun run = solve_contact(contact_defaults(ContactKind::line, 256, 1));
  const SolveReport& r = run.report;
  const double load = integral(r.pressure);
  const double eps_final = r.penalty_levels.empty() ? 0.0 : r.penalty_levels.back();
  const bool contact_ok = r.converged && std::abs(load - pi / 2) <= 1e-4 && r.min_u >= -1e-3 && eps_final == 1e-6;

  const SpacePtr s = make_space(Mesh::build(interval(-4, 2, 256), 2));
  const DgField semi = interpolate(s, [](const Point& x) { return std::abs(x[0]) < 1 ? std::sqrt(1 - x[0] * x[0]) : 0.0; });
  const double semi_err = std::abs(integral(semi) - pi / 2);
  report(8, contact_ok && semi_err <= 1e-6,
         std::string("line contact ") + (r.converged ? "converged" : "did not converge (" + r.message + ")") +
             ", |int u - pi/2| = " + fmt(std::abs(load - pi / 2), 3) + ", min u = " + fmt(r.min_u, 3) +
             ", final eps_p = " + fmt(eps_final, 2) + ", time " + fmt(seconds_since(t0), 3) +
             " s; semicircle p=2 error " + fmt(semi_err, 3));
}

void criterion9() {
  FormParams form;  // a_k = 10, beta = 1
  form.theta = 1.0;
  double worst = 1e300;
  for (int p : {1, 2})
    for (int n = 8; n <= 128; n *= 2)
      worst = std::min(worst, coercivity_probe(make_space(Mesh::build(interval(0, 1, n), p)), form, 20).probe_min);
  for (int n = 4; n <= 32; n *= 2)
    worst = std::min(worst, coercivity_probe(make_space(Mesh::build(square(0, 1, n), 1)), form, 20).probe_min);
  const SpacePtr s = make_space(Mesh::build(interval(0, 1, 16), 2));
  const double at10 = coercivity_probe(s, form, 20).exact_min;
  FormParams weak = form;
  weak.a_k = 0.5;
  const double at05 = coercivity_probe(s, weak, 20).exact_min;
  const bool ok = worst > 0.0 && at05 < 0.5 * at10;
  report(9, ok, "SIPG a_k=10 min quotient over study meshes " + fmt(worst, 4) + "; p=2 a_k=0.5 quotient " + fmt(at05, 4) +
                    " vs " + fmt(at10, 4) + " at a_k=10");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool identical_runs(const std::string& config, const fs::path& root, std::string& detail) {
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "case.cfg";
  std::ofstream(cfg) << config;
  std::vector<int> codes;
  for (const char* tag : {"a", "b"}) {
    ::setenv("EHL_OUT", (root / tag).c_str(), 1);
    std::streambuf* saved = std::cerr.rdbuf();
    std::ostringstream sink;
    std::cerr.rdbuf(sink.rdbuf());
    codes.push_back(cli::run(cfg.string()));
    std::cerr.rdbuf(saved);
    ::unsetenv("EHL_OUT");
  }
  bool ok = codes[0] == cli::ok && codes[1] == cli::ok;
  int files = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const fs::path other = root / "b" / entry.path().filename();
    ok = ok && fs::exists(other) && slurp(entry.path()) == slurp(other);
    ++files;
  }
  detail += " " + root.filename().string() + ": " + std::to_string(files) + " files;";
  return ok && files > 0;
}

void criterion10() {
  const fs::path root = fs::temp_directory_path() / "ehl_acceptance";
  std::string detail;
  const bool study = identical_runs(
      "[case]\nkind = manufactured\nname = smooth_2d\ncoefficient = nonlinear\n[domain]\nlower = 0,0\nupper = 1,1\n"
      "cells = 8\n",
      root / "manufactured", detail);
  const bool contact = identical_runs(write_config(default_run_config()), root / "line", detail);
  report(10, study && contact, "repeated runs byte-identical," + detail);
}

}  // namespace

int main() {
  const std::vector<void (*)()> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                            criterion6, criterion7, criterion8, criterion9, criterion10};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, std::string("exception: ") + e.what());
    }
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
