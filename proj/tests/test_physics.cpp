#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ehl/physics.hpp"

using namespace ehl;
using std::numbers::pi;

namespace {

Lubricant paper_lubricant(LubricantOptions opt = {}) {
  const PhysicalInputs in = paper_defaults();
  return Lubricant::from(derive(in, ContactKind::line), in, opt);
}

/// A lubricant with eta = 1 (alpha = 0) for the algebraic checks of eps*.
Lubricant unit_lubricant(double lambda) {
  Lubricant l;
  l.alpha = 0.0;
  l.z = 1.0;
  l.pH = 1.0;
  l.p0 = 1.0;
  l.lambda = lambda;
  l.options.clamp = false;
  return l;
}

DomainSpec interval(double a, double b, int n) {
  DomainSpec d;
  d.dim = 1;
  d.lower = {a, 0.0};
  d.upper = {b, 0.0};
  d.cells = {n, 1};
  return d;
}

DomainSpec rectangle(double a, double b, int n) {
  DomainSpec d;
  d.dim = 2;
  d.lower = {a, a};
  d.upper = {b, b};
  d.cells = {n, n};
  return d;
}

/// int_a^b log|x - t| L_j(xi(t)) dt by geometric grading towards x.
double log_oracle(double x, double a, double b, int j) {
  const QuadratureRule r = gauss_legendre(20);
  auto piece = [&](double lo, double hi) {
    double s = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) {
      const double t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * r.points[q];
      const double xi = (2 * t - a - b) / (b - a);
      s += 0.5 * (hi - lo) * r.weights[q] * std::log(std::abs(x - t)) * legendre(j, xi).value;
    }
    return s;
  };
  auto graded = [&](double far, double near) {
    // intervals [near + (far - near) 0.15^(k+1), near + (far - near) 0.15^k]
    double s = 0.0;
    double hi = far;
    for (int k = 0; k < 18; ++k) {  // the untreated tail is below 1e-12
      const double lo = near + (far - near) * std::pow(0.15, k + 1);
      s += piece(std::min(lo, hi), std::max(lo, hi));
      hi = lo;
    }
    return s;
  };
  if (x <= a) return graded(b, a);
  if (x >= b) return graded(a, b);
  return graded(a, x) + graded(b, x);
}

}  // namespace

TEST(Physics, ValuesAtZeroAreOne) {
  const Lubricant l = paper_lubricant();
  EXPECT_EQ(l.viscosity(0.0), 1.0);
  EXPECT_EQ(l.density(0.0), 1.0);
}

TEST(Physics, DensityLaw) {
  Lubricant l = paper_lubricant();
  l.pH = 0.59e9;
  EXPECT_DOUBLE_EQ(l.density(1.0), 1.17);
  EXPECT_NEAR(l.density(1e12), 1.34, 1e-3);
  const Lubricant d = paper_lubricant();
  for (int i = 0; i <= 1000; ++i) {
    const double u = 10.0 * i / 1000.0;
    EXPECT_GE(d.density(u), 1.0);
    EXPECT_LE(d.density(u), 1.34);
  }
}

TEST(Physics, ViscosityMatchesLongDouble) {
  const Lubricant l = paper_lubricant();
  const long double u = 0.5L;
  const long double base = 1.0L + u * static_cast<long double>(l.pH) / static_cast<long double>(l.p0);
  const long double ex = std::exp(static_cast<long double>(l.alpha) * l.p0 / l.z * (-1.0L + std::pow(base, static_cast<long double>(l.z))));
  EXPECT_NEAR(l.viscosity(0.5), static_cast<double>(ex), 1e-13);
}

TEST(Physics, ViscosityMonotoneAndAtLeastOne) {
  const Lubricant l = paper_lubricant();
  double prev = l.viscosity(0.0);
  for (int i = 1; i <= 200; ++i) {
    const double v = l.viscosity(0.05 * i);
    EXPECT_GE(v, prev);
    EXPECT_GE(v, 1.0);
    prev = v;
  }
  EXPECT_THROW((void)l.viscosity(-1.0), EvaluationError);
}

TEST(Physics, DensityDerivativeMatchesDifference) {
  Lubricant l = paper_lubricant();
  l.pH = 0.59e9;
  for (double u : {0.1, 1.0, 3.0}) {
    const double d = 1e-6;
    EXPECT_NEAR(l.density_derivative(u), (l.density(u + d) - l.density(u - d)) / (2 * d), 1e-8);
  }
}

TEST(Physics, EpsilonStarAlgebra) {
  EXPECT_DOUBLE_EQ(unit_lubricant(1.0).epsilon_star(0.0, 1.0).value, 1.0);
  EXPECT_DOUBLE_EQ(unit_lubricant(4.0).epsilon_star(0.0, 2.0).value, 2.0);
  const Lubricant l = unit_lubricant(0.3);
  EXPECT_DOUBLE_EQ(l.epsilon_star(0.2, 1.4).value * 8.0, l.epsilon_star(0.2, 2.8).value);
}

TEST(Physics, EpsilonStarDerivatives) {
  Lubricant l = unit_lubricant(0.7);
  l.alpha = 0.3;
  l.z = 0.6;
  l.pH = 2.0;
  l.density_a = 1.5;
  for (double u : {0.2, 1.1}) {
    const double h = 0.8;
    const CoefficientValue c = l.epsilon_star(u, h);
    const double d = 1e-6;
    EXPECT_NEAR(c.d_du, (l.epsilon_star(u + d, h).value - l.epsilon_star(u - d, h).value) / (2 * d), 1e-7);
    EXPECT_NEAR(c.d_dh, (l.epsilon_star(u, h + d).value - l.epsilon_star(u, h - d).value) / (2 * d), 1e-7);
  }
}

TEST(Physics, FilmCollapseRaised) {
  const Lubricant l = unit_lubricant(1.0);
  EXPECT_THROW((void)l.epsilon_star(0.0, 0.0), FilmCollapse);
  EXPECT_THROW((void)l.epsilon_star(0.0, -1e-3), FilmCollapse);
  LubricantOptions o;
  o.clamp_collapse = true;
  const CoefficientValue c = paper_lubricant(o).epsilon_star(0.0, -1e-3);
  EXPECT_EQ(c.value, o.eps_min);
  EXPECT_TRUE(c.clamped);
}

TEST(Physics, ClampBounds) {
  const Lubricant l = paper_lubricant();
  const CoefficientValue c = l.epsilon_star(0.0, 1.0);
  EXPECT_EQ(c.value, 1e12);  // 1/lambda ~ 1.7e20 is beyond the upper clamp
  EXPECT_TRUE(c.clamped);
  EXPECT_EQ(c.d_du, 0.0);
}

TEST(Physics, NegativePressureExtensions) {
  LubricantOptions o;
  o.negative = NegativePressure::positive_part;
  Lubricant l = paper_lubricant(o);
  EXPECT_EQ(l.density_value(-0.3).value, 1.0);
  EXPECT_EQ(l.density_value(-0.3).d_du, 0.0);
  l.options.negative = NegativePressure::reflect;
  EXPECT_NEAR(l.density_value(-1e-6).value * l.density(1e-6), 1.0, 1e-15);
}

TEST(Kernel, ZeroPressureGivesParabola1D) {
  const auto s = make_space(Mesh::build(interval(-4, 2, 12), 2));
  const DeformationKernel k = build_kernel(s, ContactKind::line);
  const DgField zero(s);
  const Eigen::VectorXd h = film_thickness(zero, k, 0.37);
  const auto pts = quadrature_points(*s);
  ASSERT_EQ(h.size(), static_cast<Eigen::Index>(pts.size()));
  for (std::size_t q = 0; q < pts.size(); ++q) EXPECT_EQ(h[static_cast<Eigen::Index>(q)], 0.37 + 0.5 * pts[q][0] * pts[q][0]);
  EXPECT_EQ(k.deformation(zero.coefficients).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Kernel, ZeroPressureGivesParaboloid2D) {
  const auto s = make_space(Mesh::build(rectangle(-2, 2, 3), 1));
  const DeformationKernel k = build_kernel(s, ContactKind::point);
  const Eigen::VectorXd h = film_thickness(DgField(s), k, 0.1);
  const auto pts = quadrature_points(*s);
  for (std::size_t q = 0; q < pts.size(); ++q)
    EXPECT_EQ(h[static_cast<Eigen::Index>(q)], 0.1 + (0.5 * pts[q][0] * pts[q][0] + 0.5 * pts[q][1] * pts[q][1]));
}

TEST(Kernel, LogKernelMatchesOracle) {
  const auto s = make_space(Mesh::build(interval(-4, 2, 6), 3));
  const DeformationKernel k = build_kernel(s, ContactKind::line);
  const auto pts = quadrature_points(*s);
  for (std::size_t q = 0; q < pts.size(); q += 3) {
    for (int e = 0; e < s->mesh().num_elements(); ++e) {
      const Cell& c = s->mesh().element(e);
      for (int j = 0; j <= 3; ++j) {
        const double oracle = -log_oracle(pts[q][0], c.lower[0], c.upper[0], j) / pi;
        EXPECT_NEAR(k.matrix()(static_cast<Eigen::Index>(q), s->offset(e) + j), oracle, 1e-10)
            << "x=" << pts[q][0] << " e=" << e << " j=" << j;
      }
    }
  }
}

TEST(Kernel, ConstantModeAnalytic1D) {
  // Indicator of one element: -(1/pi) int_a^b log|x - t| dt in closed form.
  const auto s = make_space(Mesh::build(interval(-4, 2, 6), 1));
  const DeformationKernel k = build_kernel(s, ContactKind::line);
  const auto pts = quadrature_points(*s);
  const Cell& c = s->mesh().element(3);
  auto F = [](double d) { return d == 0.0 ? 0.0 : d * (std::log(std::abs(d)) - 1.0); };
  for (std::size_t q = 0; q < pts.size(); ++q) {
    const double x = pts[q][0];
    const double exact = -(F(x - c.lower[0]) - F(x - c.upper[0])) / pi;
    EXPECT_NEAR(k.matrix()(static_cast<Eigen::Index>(q), s->offset(3)), exact, 1e-12);
  }
}

TEST(Kernel, InverseDistanceFarMatchesTensorOracle) {
  const auto s = make_space(Mesh::build(rectangle(-2, 2, 4), 1));
  const DeformationKernel k = build_kernel(s, ContactKind::point);
  const auto pts = quadrature_points(*s);
  const QuadratureRule r = gauss_legendre(30);
  int checked = 0;
  for (std::size_t q = 0; q < pts.size(); q += 7) {
    for (int e = 0; e < s->mesh().num_elements(); ++e) {
      const Cell& c = s->mesh().element(e);
      const double dx = std::max({c.lower[0] - pts[q][0], 0.0, pts[q][0] - c.upper[0]});
      const double dy = std::max({c.lower[1] - pts[q][1], 0.0, pts[q][1] - c.upper[1]});
      if (std::hypot(dx, dy) < s->mesh().element_size(e)) continue;
      for (int j = 0; j < 4; ++j) {
        double sum = 0.0;
        for (std::size_t a = 0; a < r.size(); ++a)
          for (std::size_t b = 0; b < r.size(); ++b) {
            const double xi = r.points[a], eta = r.points[b];
            const double X = 0.5 * (c.lower[0] + c.upper[0]) + 0.5 * c.extent(0) * xi;
            const double Y = 0.5 * (c.lower[1] + c.upper[1]) + 0.5 * c.extent(1) * eta;
            const double phi = legendre(j % 2, xi).value * legendre(j / 2, eta).value;
            sum += r.weights[a] * r.weights[b] * 0.25 * c.extent(0) * c.extent(1) * phi /
                   std::hypot(pts[q][0] - X, pts[q][1] - Y);
          }
        EXPECT_NEAR(k.matrix()(static_cast<Eigen::Index>(q), s->offset(e) + j), 2.0 / (pi * pi) * sum, 1e-10);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Kernel, InverseDistanceSingularConstantMode) {
  // int over a square of side 2a of 1/r from its centre = 8 a asinh(1).
  DomainSpec d = rectangle(-1.5, 1.5, 3);
  const auto s = make_space(Mesh::build(d, 1));
  const DeformationKernel k = build_kernel(s, ContactKind::point);
  const auto pts = quadrature_points(*s);
  const int centre = 4;
  for (std::size_t q = 0; q < pts.size(); ++q) {
    if (std::abs(pts[q][0]) > 1e-14 || std::abs(pts[q][1]) > 1e-14) continue;
    const double exact = 2.0 / (pi * pi) * 8.0 * 0.5 * std::asinh(1.0);
    EXPECT_NEAR(k.matrix()(static_cast<Eigen::Index>(q), s->offset(centre)), exact, 1e-10);
  }
}

TEST(Kernel, BitReproducible) {
  const auto s = make_space(Mesh::build(interval(-4, 2, 16), 2));
  const DeformationKernel a = build_kernel(s, ContactKind::line);
  const DeformationKernel b = build_kernel(s, ContactKind::line);
  EXPECT_TRUE((a.matrix().array() == b.matrix().array()).all());
  const auto s2 = make_space(Mesh::build(rectangle(-1, 1, 3), 1));
  EXPECT_TRUE((build_kernel(s2, ContactKind::point).matrix().array() == build_kernel(s2, ContactKind::point).matrix().array()).all());
}

TEST(Kernel, FilmIsAffine) {
  const auto s = make_space(Mesh::build(interval(-4, 2, 8), 2));
  const DeformationKernel k = build_kernel(s, ContactKind::line);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  DgField u1(s), u2(s);
  for (auto& c : u1.coefficients) c = U(rng);
  for (auto& c : u2.coefficients) c = U(rng);
  DgField mix(s, 0.3 * u1.coefficients + 1.7 * u2.coefficients);
  const Eigen::VectorXd base = film_thickness(DgField(s), k, 0.2);
  const Eigen::VectorXd lhs = film_thickness(mix, k, 0.2) - base;
  const Eigen::VectorXd rhs = 0.3 * (film_thickness(u1, k, 0.2) - base) + 1.7 * (film_thickness(u2, k, 0.2) - base);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Kernel, DeformationBoundStableUnderRefinement) {
  double c[2];
  for (int level = 0; level < 2; ++level) {
    const auto s = make_space(Mesh::build(interval(-4, 2, 16 << level), 1));
    const DeformationKernel k = build_kernel(s, ContactKind::line);
    double worst = 0.0;
    for (unsigned seed = 0; seed < 30; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> U(-1, 1);
      const DgField u = interpolate(s, [&, a = U(rng), b = U(rng)](const Point& x) { return std::cos(a * x[0] + b); });
      worst = std::max(worst, k.deformation(u.coefficients).cwiseAbs().maxCoeff() / l2_norm(u));
    }
    c[level] = worst;
  }
  EXPECT_NEAR(c[1] / c[0], 1.0, 0.1);
}

TEST(Kernel, MeshMismatchRejected) {
  const auto s = make_space(Mesh::build(interval(-4, 2, 8), 1));
  const auto t = make_space(Mesh::build(interval(-4, 2, 4), 1));
  const DeformationKernel k = build_kernel(s, ContactKind::line);
  EXPECT_THROW(film_thickness(DgField(t), k, 0.0), std::invalid_argument);
  EXPECT_THROW(build_kernel(s, ContactKind::point), std::invalid_argument);
}

TEST(ForceBalance, Residuals) {
  const auto s = make_space(Mesh::build(interval(-4, 2, 6), 1));
  EXPECT_DOUBLE_EQ(force_balance_residual(DgField(s), ContactKind::line), -pi / 2);
  const auto unit = make_space(Mesh::build(interval(0, 1, 3), 2));
  const DgField c = interpolate(unit, [](const Point&) { return 2.5; });
  EXPECT_NEAR(force_balance_residual(c, ContactKind::line), 2.5 - pi / 2, 1e-14);
  EXPECT_DOUBLE_EQ(force_target(ContactKind::point), 3 * pi / 2);
}

TEST(ForceBalance, SemicircleIntegratesToTarget) {
  auto semi = [](const Point& x) { return std::abs(x[0]) < 1 ? std::sqrt(1 - x[0] * x[0]) : 0.0; };
  for (int n : {32, 100, 256}) {
    const auto s = make_space(Mesh::build(interval(-4, 2, n), 2));
    EXPECT_LT(std::abs(force_balance_residual(interpolate(s, semi), ContactKind::line)), 1e-12) << "n=" << n;
  }
}
