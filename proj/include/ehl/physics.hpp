#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehl/dgspace.hpp"
#include "ehl/params.hpp"
#include "ehl/quadrature.hpp"

namespace ehl {

/// A constitutive law evaluated outside its domain.
class EvaluationError : public std::domain_error {
 public:
  EvaluationError(const std::string& what, double u) : std::domain_error(what), value(u) {}
  double value;
};

/// Non-positive film thickness at a quadrature point.
class FilmCollapse : public std::runtime_error {
 public:
  FilmCollapse(double h, const Point& x)
      : std::runtime_error("film collapse: h = " + std::to_string(h) + " at x = " + std::to_string(x[0])), film(h) {}
  double film;
};

/// Value of eps*(u, h) = rho(u) h^3 / (eta(u) lambda) with its partial
/// derivatives. Derivatives are zero where the clamp is active.
struct CoefficientValue {
  double value = 1.0;
  double d_du = 0.0;
  double d_dh = 0.0;
  bool clamped = false;
};

struct DensityValue {
  double value = 1.0;
  double d_du = 0.0;
};

enum class NegativePressure {
  /// The printed laws as they are; throws outside their domain.
  as_printed,
  /// Laws evaluated at max(u, 0).
  positive_part,
  /// f(u) = 1 / f(-u) for u < 0: positive, bounded, C1 at u = 0.
  reflect,
  /// Laws evaluated at the smooth positive part (u + sqrt(u^2 + w^2))/2.
  smooth,
};

enum class ClampMode {
  /// min(max(eps, eps_min), eps_max); derivatives vanish where active.
  hard,
  /// eps_min + eps eps_max / (eps + eps_max): smooth and monotone.
  soft,
};

struct LubricantOptions {
  bool clamp = true;
  ClampMode clamp_mode = ClampMode::hard;
  double eps_min = 1e-12;
  double eps_max = 1e12;
  /// Behaviour of the viscosity and density laws for u < 0, where the
  /// printed laws break down (penalized iterates dip slightly below zero).
  NegativePressure negative = NegativePressure::reflect;
  /// Derivatives are taken at max(|u|, derivative_floor). The viscosity slope
  /// alpha pH (1 + u pH/p0)^(z-1) collapses over |u| ~ p0/pH, far below
  /// double resolution at the default constants.
  double derivative_floor = 1e-12;
  /// Width w of the smooth positive part.
  double smoothing_width = 1e-3;
  /// With the clamp on, h <= 0 maps to eps_min (the continuous extension of
  /// the lower clamp branch) instead of raising a film-collapse error.
  bool clamp_collapse = false;
  /// Soft mode with clamp_collapse: the film inside eps* is replaced by
  /// (h + sqrt(h^2 + w^2))/2 with this width w.
  double collapse_width = 1e-9;
};

/// Roelands-type viscosity and Dowson-Higginson-type density in
/// dimensionless pressure u, with the speed parameter lambda.
struct Lubricant {
  double pH = 1.0;
  double z = 1.0;
  double alpha = 0.0;
  double p0 = 1.0;
  double lambda = 1.0;
  double density_a = 0.59e9;
  double density_b = 1.34;
  LubricantOptions options;

  static Lubricant from(const DerivedParams& d, const PhysicalInputs& in, LubricantOptions opt = {}) {
    Lubricant l;
    l.pH = d.pH;
    l.z = d.z;
    l.alpha = in.alpha;
    l.p0 = in.p0;
    l.lambda = d.lambda;
    l.options = opt;
    return l;
  }

  /// eta(u) = exp{(alpha p0 / z)(-1 + (1 + u pH/p0)^z)}.
  [[nodiscard]] double viscosity(double u) const {
    const double base = 1.0 + u * pH / p0;
    if (!(base > 0.0)) throw EvaluationError("viscosity: 1 + u pH/p0 must be positive", u);
    return std::exp((alpha * p0 / z) * (-1.0 + std::pow(base, z)));
  }

  [[nodiscard]] double viscosity_derivative(double u) const {
    const double base = 1.0 + u * pH / p0;
    if (!(base > 0.0)) throw EvaluationError("viscosity: 1 + u pH/p0 must be positive", u);
    return viscosity(u) * alpha * pH * std::pow(base, z - 1.0);
  }

  /// rho(u) = (0.59e9 + 1.34 u pH) / (0.59e9 + u pH).
  [[nodiscard]] double density(double u) const {
    const double den = density_a + u * pH;
    if (den == 0.0) throw EvaluationError("density: vanishing denominator", u);
    return (density_a + density_b * u * pH) / den;
  }

  [[nodiscard]] double density_derivative(double u) const {
    const double den = density_a + u * pH;
    if (den == 0.0) throw EvaluationError("density: vanishing denominator", u);
    return (density_b - 1.0) * density_a * pH / (den * den);
  }

  /// Value and derivative of a law extended to u < 0 per the options.
  template <class F, class D>
  [[nodiscard]] std::pair<double, double> extended(double u, F&& f, D&& df) const {
    const double fl = options.derivative_floor;
    if (options.negative == NegativePressure::smooth) {
      const double r = std::hypot(u, options.smoothing_width);
      const double sp = 0.5 * (u + r);
      return {f(sp), df(std::max(sp, fl)) * 0.5 * (1.0 + u / r)};
    }
    if (u >= 0.0 || options.negative == NegativePressure::as_printed) {
      return {f(u), u >= 0.0 && u < fl ? df(fl) : df(u)};
    }
    if (options.negative == NegativePressure::positive_part) return {f(0.0), 0.0};
    const double v = f(-u);
    return {1.0 / v, df(std::max(-u, fl)) / (v * v)};
  }

  [[nodiscard]] DensityValue density_value(double u) const {
    const auto [v, d] = extended(u, [this](double t) { return density(t); }, [this](double t) { return density_derivative(t); });
    return {v, d};
  }

  [[nodiscard]] CoefficientValue epsilon_star(double u, double h, const Point& x = {0.0, 0.0}) const {
    const bool soft = options.clamp && options.clamp_mode == ClampMode::soft;
    const bool collapse_ok = options.clamp && options.clamp_collapse && std::isfinite(h);
    double hf = h;
    double dhf = 1.0;
    if (soft && collapse_ok) {
      const double r = std::hypot(h, options.collapse_width);
      hf = 0.5 * (h + r);
      dhf = 0.5 * (1.0 + h / r);
    } else if (!(h > 0.0)) {
      if (collapse_ok) return {options.eps_min, 0.0, 0.0, true};
      throw FilmCollapse(h, x);
    }
    const auto [rho, drho] = extended(u, [this](double t) { return density(t); }, [this](double t) { return density_derivative(t); });
    const auto [eta, deta] = extended(u, [this](double t) { return viscosity(t); }, [this](double t) { return viscosity_derivative(t); });
    CoefficientValue c;
    c.value = rho * hf * hf * hf / (eta * lambda);
    c.d_du = (drho / rho - deta / eta) * c.value;
    c.d_dh = 3.0 * c.value / hf * dhf;
    if (!options.clamp) return c;
    const bool outside = c.value < options.eps_min || c.value > options.eps_max;
    if (soft) {
      const double M = options.eps_max;
      const double g = c.value * M / (c.value + M);
      const double dg = (M / (c.value + M)) * (M / (c.value + M));
      c.value = options.eps_min + g;
      c.d_du *= dg;
      c.d_dh *= dg;
      c.clamped = outside;
    } else if (outside) {
      c.value = std::clamp(c.value, options.eps_min, options.eps_max);
      c.d_du = 0.0;
      c.d_dh = 0.0;
      c.clamped = true;
    }
    return c;
  }
};

struct KernelOptions {
  /// +1 keeps the printed sign of the deformation integral (minus for the
  /// line-contact log kernel, plus for the point-contact 1/r kernel).
  double sign = 1.0;
};

/// Dense map from pressure coefficients to elastic deformation at every
/// quadrature point (volume points first, then face points).
class DeformationKernel {
 public:
  DeformationKernel() = default;
  DeformationKernel(SpacePtr space, ContactKind kind, Eigen::MatrixXd matrix, std::vector<double> geometry)
      : space_(std::move(space)), kind_(kind), matrix_(std::move(matrix)), geometry_(std::move(geometry)) {}

  [[nodiscard]] const SpacePtr& space() const { return space_; }
  [[nodiscard]] ContactKind kind() const { return kind_; }
  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return matrix_; }
  [[nodiscard]] const std::vector<double>& geometry() const { return geometry_; }

  /// Deformation values D c.
  [[nodiscard]] Eigen::VectorXd deformation(const Eigen::VectorXd& coefficients) const { return matrix_ * coefficients; }

  /// Film thickness h00 + h_geom(x) + D c at all quadrature points.
  [[nodiscard]] Eigen::VectorXd film(const Eigen::VectorXd& coefficients, double h00) const {
    Eigen::VectorXd h = matrix_ * coefficients;
    for (Eigen::Index q = 0; q < h.size(); ++q) h[q] += h00 + geometry_[static_cast<std::size_t>(q)];
    return h;
  }

 private:
  SpacePtr space_;
  ContactKind kind_ = ContactKind::line;
  Eigen::MatrixXd matrix_;
  std::vector<double> geometry_;
};

/// Coordinates of every quadrature point in global order.
inline std::vector<Point> quadrature_points(const DgSpace& s) {
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(s.num_quadrature_points()));
  for (int e = 0; e < s.mesh().num_elements(); ++e) {
    const auto& vq = s.volume(e);
    pts.insert(pts.end(), vq.points.begin(), vq.points.end());
  }
  for (int k = 0; k < s.mesh().num_faces(); ++k) {
    const auto& fq = s.face(k);
    pts.insert(pts.end(), fq.points.begin(), fq.points.end());
  }
  return pts;
}

namespace detail {

constexpr int kMaxDegree = 15;

/// Tensor Legendre basis values at a local point, without allocation.
inline void basis_values(int dim, int p, double xi, double eta, double* out) {
  std::array<double, kMaxDegree + 1> vx{}, vy{}, dx{}, dy{};
  legendre_all(p, xi, vx.data(), dx.data());
  if (dim == 1) {
    for (int i = 0; i <= p; ++i) out[i] = vx[static_cast<std::size_t>(i)];
    return;
  }
  legendre_all(p, eta, vy.data(), dy.data());
  const int n = p + 1;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out[j * n + i] = vx[static_cast<std::size_t>(i)] * vy[static_cast<std::size_t>(j)];
}

/// Integrals over a 1D element [a, b] of ln|x - x'| P_j(xi(x')) for all j.
inline void log_element_integrals(double x, double a, double b, int p, const QuadratureRule& far_rule, double* out) {
  const int n = p + 1;
  std::fill(out, out + n, 0.0);
  const double len = b - a;
  const double dist = x < a ? a - x : (x > b ? x - b : 0.0);
  std::array<double, kMaxDegree + 1> phi{};
  auto xi_of = [&](double xp) { return (2.0 * xp - a - b) / len; };
  if (dist >= len) {
    for (std::size_t q = 0; q < far_rule.size(); ++q) {
      const double xp = 0.5 * (a + b) + 0.5 * len * far_rule.points[q];
      basis_values(1, p, far_rule.points[q], 0.0, phi.data());
      const double w = 0.5 * len * far_rule.weights[q] * std::log(std::abs(x - xp));
      for (int j = 0; j < n; ++j) out[j] += w * phi[static_cast<std::size_t>(j)];
    }
    return;
  }
  // Singular or near-singular: integrals of ln(t) g(t) over [0, L] with g the
  // basis extended polynomially, direction +1 (x' = x + t) or -1 (x' = x - t).
  const QuadratureRule rule = gauss_legendre(p + 1);
  auto accumulate = [&](double length, double direction, double factor) {
    if (length <= 0.0) return;
    std::array<double, kMaxDegree + 1> proj{}, leg{}, dleg{};
    std::array<double, kMaxDegree + 1> plain{};
    std::array<double, (kMaxDegree + 1) * (kMaxDegree + 1)> coeff{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double s = 0.5 * (rule.points[q] + 1.0);
      const double w = 0.5 * rule.weights[q];
      basis_values(1, p, xi_of(x + direction * length * s), 0.0, proj.data());
      legendre_all(p, rule.points[q], leg.data(), dleg.data());
      for (int j = 0; j < n; ++j) {
        plain[static_cast<std::size_t>(j)] += w * proj[static_cast<std::size_t>(j)];
        for (int k = 0; k <= p; ++k) coeff[static_cast<std::size_t>(j * n + k)] += w * proj[static_cast<std::size_t>(j)] * leg[static_cast<std::size_t>(k)];
      }
    }
    const double log_len = std::log(length);
    for (int j = 0; j < n; ++j) {
      double weighted = 0.0;
      for (int k = 0; k <= p; ++k) weighted += (2.0 * k + 1.0) * coeff[static_cast<std::size_t>(j * n + k)] * log_moment_shifted_legendre(k);
      out[j] += factor * length * (log_len * plain[static_cast<std::size_t>(j)] + weighted);
    }
  };
  if (x <= a) {
    accumulate(b - x, 1.0, 1.0);
    accumulate(a - x, 1.0, -1.0);
  } else if (x >= b) {
    accumulate(x - a, -1.0, 1.0);
    accumulate(x - b, -1.0, -1.0);
  } else {
    accumulate(x - a, -1.0, 1.0);
    accumulate(b - x, 1.0, 1.0);
  }
}

/// Integrals over a rectangle of P_j(xi) P_k(eta) / |X - x'| for all basis
/// functions, for a target X near or inside the rectangle. The rectangle is
/// decomposed into signed triangles with apex X; each triangle is integrated
/// along its base edge with panels graded toward the foot of the
/// perpendicular from X, which removes the 1/r singularity analytically.
inline void inverse_distance_near(const Point& X, const Cell& c, int p, const QuadratureRule& edge_rule,
                                  const QuadratureRule& radial_rule, double* out) {
  const int nb = (p + 1) * (p + 1);
  std::fill(out, out + nb, 0.0);
  const std::array<Point, 4> corners{Point{c.lower[0], c.lower[1]}, Point{c.upper[0], c.lower[1]},
                                     Point{c.upper[0], c.upper[1]}, Point{c.lower[0], c.upper[1]}};
  const double cx = 0.5 * (c.lower[0] + c.upper[0]);
  const double cy = 0.5 * (c.lower[1] + c.upper[1]);
  const double hx = c.extent(0);
  const double hy = c.extent(1);
  std::array<double, (kMaxDegree + 1) * (kMaxDegree + 1)> phi{};
  for (int edge = 0; edge < 4; ++edge) {
    const Point& P0 = corners[static_cast<std::size_t>(edge)];
    const Point& P1 = corners[static_cast<std::size_t>((edge + 1) % 4)];
    const double L = std::hypot(P1[0] - P0[0], P1[1] - P0[1]);
    const double tx = (P1[0] - P0[0]) / L;
    const double ty = (P1[1] - P0[1]) / L;
    const double rx = P0[0] - X[0];
    const double ry = P0[1] - X[1];
    const double d = rx * ty - ry * tx;  // signed: positive for a CCW triangle
    if (std::abs(d) <= 1e-14 * L) continue;
    const double s0 = -(rx * tx + ry * ty);  // foot of the perpendicular
    const double ad = std::abs(d);
    // Panel boundaries s0 + sgn * {0, d/2, d, 2d, 4d, ...} clipped to [0, L].
    std::vector<double> breaks{0.0, L};
    for (double sgn : {-1.0, 1.0}) {
      double offset = 0.5 * ad;
      breaks.push_back(s0);
      while (offset < 2.0 * L + std::abs(s0)) {
        breaks.push_back(s0 + sgn * offset);
        offset *= 2.0;
      }
    }
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> panels;
    for (double v : breaks) {
      if (v < 0.0 || v > L) continue;
      if (panels.empty() || v - panels.back() > 1e-15 * L) panels.push_back(v);
    }
    for (std::size_t k = 0; k + 1 < panels.size(); ++k) {
      const double lo = panels[k];
      const double hi = panels[k + 1];
      const double half = 0.5 * (hi - lo);
      for (std::size_t qs = 0; qs < edge_rule.size(); ++qs) {
        const double s = 0.5 * (lo + hi) + half * edge_rule.points[qs];
        const double px = P0[0] + s * tx;
        const double py = P0[1] + s * ty;
        const double dist = std::hypot(px - X[0], py - X[1]);
        const double ws = half * edge_rule.weights[qs] * d / dist;
        for (std::size_t qt = 0; qt < radial_rule.size(); ++qt) {
          const double t = 0.5 * (radial_rule.points[qt] + 1.0);
          const double wt = 0.5 * radial_rule.weights[qt] * ws;
          const double yx = X[0] + t * (px - X[0]);
          const double yy = X[1] + t * (py - X[1]);
          basis_values(2, p, 2.0 * (yx - cx) / hx, 2.0 * (yy - cy) / hy, phi.data());
          for (int j = 0; j < nb; ++j) out[j] += wt * phi[static_cast<std::size_t>(j)];
        }
      }
    }
  }
}

inline double distance_to_cell(const Point& X, const Cell& c, int dim) {
  const double dx = std::max({c.lower[0] - X[0], 0.0, X[0] - c.upper[0]});
  if (dim == 1) return dx;
  const double dy = std::max({c.lower[1] - X[1], 0.0, X[1] - c.upper[1]});
  return std::hypot(dx, dy);
}

}  // namespace detail

/// Builds the deformation kernel of the space:
///   line:  -(1/pi) int_Omega ln|x - x'| u(x') dx'
///   point: +(2/pi^2) int_Omega u(x', y') / |X - X'| dX'
/// with geometry x^2/2 (+ y^2/2). Rows are independent target points.
inline DeformationKernel build_kernel(const SpacePtr& space, ContactKind kind, KernelOptions options = {}) {
  const DgSpace& s = *space;
  const Mesh& mesh = s.mesh();
  if ((kind == ContactKind::line) != (s.dim() == 1)) {
    throw std::invalid_argument("build_kernel: line contact needs a 1D mesh, point contact a 2D mesh");
  }
  const std::vector<Point> targets = quadrature_points(s);
  const int nq = static_cast<int>(targets.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nq, s.size());
  std::vector<double> geometry(static_cast<std::size_t>(nq));
  for (int q = 0; q < nq; ++q) {
    const Point& x = targets[static_cast<std::size_t>(q)];
    geometry[static_cast<std::size_t>(q)] = 0.5 * x[0] * x[0] + (s.dim() == 2 ? 0.5 * x[1] * x[1] : 0.0);
  }
  std::array<double, (detail::kMaxDegree + 1) * (detail::kMaxDegree + 1)> buf{};
  if (kind == ContactKind::line) {
    const double factor = -options.sign / std::numbers::pi;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const Cell& c = mesh.element(e);
      if (c.degree > detail::kMaxDegree) throw std::invalid_argument("build_kernel: degree too high");
      const QuadratureRule far_rule = gauss_legendre(c.degree + 12);
      const int off = s.offset(e);
      for (int q = 0; q < nq; ++q) {
        detail::log_element_integrals(targets[static_cast<std::size_t>(q)][0], c.lower[0], c.upper[0], c.degree, far_rule,
                                      buf.data());
        for (int j = 0; j <= c.degree; ++j) D(q, off + j) = factor * buf[static_cast<std::size_t>(j)];
      }
    }
  } else {
    const double factor = options.sign * 2.0 / (std::numbers::pi * std::numbers::pi);
    const QuadratureRule edge_rule = gauss_legendre(12);
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const Cell& c = mesh.element(e);
      if (c.degree > detail::kMaxDegree) throw std::invalid_argument("build_kernel: degree too high");
      const int p = c.degree;
      const int nb = (p + 1) * (p + 1);
      const QuadratureRule far_rule = gauss_legendre(p + 10);
      const QuadratureRule radial_rule = gauss_legendre(p + 1);
      const double diam = mesh.element_size(e);
      const double cx = 0.5 * (c.lower[0] + c.upper[0]);
      const double cy = 0.5 * (c.lower[1] + c.upper[1]);
      const double jac = 0.25 * c.extent(0) * c.extent(1);
      // Far-field tensor rule: points and basis values shared by all targets.
      const std::size_t nf = far_rule.size() * far_rule.size();
      std::vector<Point> fp(nf);
      std::vector<double> fw(nf);
      Eigen::MatrixXd fphi(static_cast<Eigen::Index>(nf), nb);
      for (std::size_t a = 0; a < far_rule.size(); ++a) {
        for (std::size_t b = 0; b < far_rule.size(); ++b) {
          const std::size_t k = a * far_rule.size() + b;
          fp[k] = {cx + 0.5 * c.extent(0) * far_rule.points[b], cy + 0.5 * c.extent(1) * far_rule.points[a]};
          fw[k] = jac * far_rule.weights[a] * far_rule.weights[b];
          detail::basis_values(2, p, far_rule.points[b], far_rule.points[a], buf.data());
          for (int j = 0; j < nb; ++j) fphi(static_cast<Eigen::Index>(k), j) = buf[static_cast<std::size_t>(j)];
        }
      }
      Eigen::VectorXd weights(static_cast<Eigen::Index>(nf));
      const int off = s.offset(e);
      for (int q = 0; q < nq; ++q) {
        const Point& X = targets[static_cast<std::size_t>(q)];
        if (detail::distance_to_cell(X, c, 2) >= diam) {
          for (std::size_t k = 0; k < nf; ++k) {
            weights[static_cast<Eigen::Index>(k)] = fw[k] / std::hypot(X[0] - fp[k][0], X[1] - fp[k][1]);
          }
          D.row(q).segment(off, nb) = factor * (fphi.transpose() * weights).transpose();
        } else {
          detail::inverse_distance_near(X, c, p, edge_rule, radial_rule, buf.data());
          for (int j = 0; j < nb; ++j) D(q, off + j) = factor * buf[static_cast<std::size_t>(j)];
        }
      }
    }
  }
  return DeformationKernel(space, kind, std::move(D), std::move(geometry));
}

/// Film thickness at all quadrature points for a pressure field.
inline Eigen::VectorXd film_thickness(const DgField& pressure, const DeformationKernel& kernel, double h00) {
  if (pressure.space.get() != kernel.space().get() && !pressure.space->mesh().same_layout(kernel.space()->mesh())) {
    throw std::invalid_argument("film_thickness: pressure and kernel live on different meshes");
  }
  return kernel.film(pressure.coefficients, h00);
}

/// Default force-balance target: pi/2 (line) or 3 pi/2 (point).
inline double force_target(ContactKind kind) {
  return kind == ContactKind::line ? std::numbers::pi / 2.0 : 3.0 * std::numbers::pi / 2.0;
}

/// int_Omega u minus the load target.
inline double force_balance_residual(const DgField& pressure, ContactKind kind) {
  return integral(pressure) - force_target(kind);
}

inline double force_balance_residual(const DgField& pressure, double target) { return integral(pressure) - target; }

}  // namespace ehl
