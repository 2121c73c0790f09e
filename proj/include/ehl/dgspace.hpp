#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ehl/mesh.hpp"
#include "ehl/quadrature.hpp"

namespace ehl {

using ScalarFunction = std::function<double(const Point&)>;
using GradientFunction = std::function<Point(const Point&)>;

struct SpaceOptions {
  /// Extra Gauss points per axis on top of the default p + 2.
  int extra_points = 0;
};

/// Quadrature data of one element: physical points, scaled weights and the
/// tensor Legendre basis with physical gradients at every point.
struct VolumeQuadrature {
  int first = 0;  // global quadrature point index of the first point
  std::vector<Point> points;
  std::vector<double> weights;
  Eigen::MatrixXd phi;   // (points x basis)
  Eigen::MatrixXd dphi_dx;
  Eigen::MatrixXd dphi_dy;
};

/// Quadrature data of one face. Normal derivatives are taken along the unit
/// normal exterior to the left element for both sides.
struct FaceQuadrature {
  int first = 0;
  std::vector<Point> points;
  std::vector<double> weights;
  Eigen::MatrixXd phi_left;
  Eigen::MatrixXd dn_left;
  Eigen::MatrixXd phi_right;  // empty on boundary faces
  Eigen::MatrixXd dn_right;
};

/// Broken polynomial space: per-element tensor Legendre basis of degree p_i
/// on the master cell [-1, 1]^dim, with no inter-element continuity.
class DgSpace {
 public:
  explicit DgSpace(Mesh mesh, SpaceOptions options = {}) : mesh_(std::move(mesh)), options_(options) {
    const int ne = mesh_.num_elements();
    offsets_.resize(static_cast<std::size_t>(ne) + 1, 0);
    for (int i = 0; i < ne; ++i) offsets_[static_cast<std::size_t>(i) + 1] = offsets_[static_cast<std::size_t>(i)] + local_size(i);
    build_volume();
    build_faces();
  }

  [[nodiscard]] const Mesh& mesh() const { return mesh_; }
  [[nodiscard]] int dim() const { return mesh_.dim(); }
  [[nodiscard]] const SpaceOptions& options() const { return options_; }
  [[nodiscard]] int degree(int element) const { return mesh_.element(element).degree; }
  [[nodiscard]] int local_size(int element) const {
    const int n = degree(element) + 1;
    return dim() == 1 ? n : n * n;
  }
  [[nodiscard]] int offset(int element) const { return offsets_.at(static_cast<std::size_t>(element)); }
  [[nodiscard]] int size() const { return offsets_.back(); }

  [[nodiscard]] const VolumeQuadrature& volume(int element) const { return volume_.at(static_cast<std::size_t>(element)); }
  [[nodiscard]] const FaceQuadrature& face(int k) const { return faces_.at(static_cast<std::size_t>(k)); }
  [[nodiscard]] int num_volume_points() const { return num_volume_points_; }
  [[nodiscard]] int num_quadrature_points() const { return num_volume_points_ + num_face_points_; }

  /// Number of Gauss points per axis used for an element of degree p.
  [[nodiscard]] int points_per_axis(int p) const { return p + 2 + options_.extra_points; }

  /// Basis values and physical gradients at a local point of an element.
  void basis(int element, const Point& local, Eigen::VectorXd& value, Eigen::VectorXd& gx, Eigen::VectorXd& gy) const {
    const Cell& c = mesh_.element(element);
    const int p = c.degree;
    const int n = p + 1;
    std::vector<double> vx(static_cast<std::size_t>(n)), dx(static_cast<std::size_t>(n));
    legendre_all(p, local[0], vx.data(), dx.data());
    const double sx = 2.0 / c.extent(0);
    if (dim() == 1) {
      value.resize(n);
      gx.resize(n);
      gy.setZero(n);
      for (int i = 0; i < n; ++i) {
        value[i] = vx[static_cast<std::size_t>(i)];
        gx[i] = sx * dx[static_cast<std::size_t>(i)];
      }
      return;
    }
    std::vector<double> vy(static_cast<std::size_t>(n)), dy(static_cast<std::size_t>(n));
    legendre_all(p, local[1], vy.data(), dy.data());
    const double sy = 2.0 / c.extent(1);
    value.resize(n * n);
    gx.resize(n * n);
    gy.resize(n * n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const int k = j * n + i;
        value[k] = vx[static_cast<std::size_t>(i)] * vy[static_cast<std::size_t>(j)];
        gx[k] = sx * dx[static_cast<std::size_t>(i)] * vy[static_cast<std::size_t>(j)];
        gy[k] = sy * vx[static_cast<std::size_t>(i)] * dy[static_cast<std::size_t>(j)];
      }
    }
  }

  [[nodiscard]] Point to_physical(int element, const Point& local) const {
    const Cell& c = mesh_.element(element);
    Point x{0.5 * (c.lower[0] + c.upper[0]) + 0.5 * c.extent(0) * local[0], 0.0};
    if (dim() == 2) x[1] = 0.5 * (c.lower[1] + c.upper[1]) + 0.5 * c.extent(1) * local[1];
    return x;
  }

  [[nodiscard]] Point to_local(int element, const Point& x) const {
    const Cell& c = mesh_.element(element);
    Point xi{(2.0 * x[0] - c.lower[0] - c.upper[0]) / c.extent(0), 0.0};
    if (dim() == 2) xi[1] = (2.0 * x[1] - c.lower[1] - c.upper[1]) / c.extent(1);
    return xi;
  }

  /// Integral of the squared basis function k over an element (orthogonal basis).
  [[nodiscard]] double basis_norm2(int element, int k) const {
    const Cell& c = mesh_.element(element);
    const int n = c.degree + 1;
    if (dim() == 1) return 0.5 * c.extent(0) * legendre_norm2(k);
    return 0.25 * c.extent(0) * c.extent(1) * legendre_norm2(k % n) * legendre_norm2(k / n);
  }

  /// Tensor Gauss rule with `n` points per axis mapped onto an element.
  template <class F>
  void for_each_point(int element, int n, F&& f) const {
    const QuadratureRule rule = gauss_legendre(n);
    const Cell& c = mesh_.element(element);
    Eigen::VectorXd value, gx, gy;
    if (dim() == 1) {
      const double jac = 0.5 * c.extent(0);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point local{rule.points[q], 0.0};
        basis(element, local, value, gx, gy);
        f(to_physical(element, local), rule.weights[q] * jac, value, gx, gy);
      }
      return;
    }
    const double jac = 0.25 * c.extent(0) * c.extent(1);
    for (std::size_t qy = 0; qy < rule.size(); ++qy) {
      for (std::size_t qx = 0; qx < rule.size(); ++qx) {
        const Point local{rule.points[qx], rule.points[qy]};
        basis(element, local, value, gx, gy);
        f(to_physical(element, local), rule.weights[qx] * rule.weights[qy] * jac, value, gx, gy);
      }
    }
  }

 private:
  void build_volume() {
    const int ne = mesh_.num_elements();
    volume_.resize(static_cast<std::size_t>(ne));
    int counter = 0;
    for (int e = 0; e < ne; ++e) {
      VolumeQuadrature& vq = volume_[static_cast<std::size_t>(e)];
      vq.first = counter;
      const int n = points_per_axis(degree(e));
      const int nq = dim() == 1 ? n : n * n;
      const int nb = local_size(e);
      vq.phi.resize(nq, nb);
      vq.dphi_dx.resize(nq, nb);
      vq.dphi_dy.resize(nq, nb);
      int q = 0;
      for_each_point(e, n, [&](const Point& x, double w, const Eigen::VectorXd& v, const Eigen::VectorXd& gx,
                               const Eigen::VectorXd& gy) {
        vq.points.push_back(x);
        vq.weights.push_back(w);
        vq.phi.row(q) = v.transpose();
        vq.dphi_dx.row(q) = gx.transpose();
        vq.dphi_dy.row(q) = gy.transpose();
        ++q;
      });
      counter += nq;
    }
    num_volume_points_ = counter;
  }

  void build_faces() {
    const int nf = mesh_.num_faces();
    faces_.resize(static_cast<std::size_t>(nf));
    int counter = num_volume_points_;
    Eigen::VectorXd value, gx, gy;
    for (int k = 0; k < nf; ++k) {
      const Face& f = mesh_.face(k);
      FaceQuadrature& fq = faces_[static_cast<std::size_t>(k)];
      fq.first = counter;
      std::vector<double> tang_points;
      std::vector<double> tang_weights;
      if (dim() == 1) {
        tang_points = {0.0};
        tang_weights = {1.0};
      } else {
        const QuadratureRule rule = gauss_legendre(points_per_axis(mesh_.face_degree(f)));
        const double jac = 0.5 * (f.span_upper - f.span_lower);
        for (std::size_t q = 0; q < rule.size(); ++q) {
          tang_points.push_back(0.5 * (f.span_lower + f.span_upper) + jac * rule.points[q]);
          tang_weights.push_back(jac * rule.weights[q]);
        }
      }
      const int nq = static_cast<int>(tang_points.size());
      for (int q = 0; q < nq; ++q) {
        Point x{0.0, 0.0};
        x[static_cast<std::size_t>(f.axis)] = f.position;
        if (dim() == 2) x[static_cast<std::size_t>(1 - f.axis)] = tang_points[static_cast<std::size_t>(q)];
        fq.points.push_back(x);
        fq.weights.push_back(tang_weights[static_cast<std::size_t>(q)]);
      }
      auto fill = [&](int element, Eigen::MatrixXd& phi, Eigen::MatrixXd& dn) {
        const int nb = local_size(element);
        phi.resize(nq, nb);
        dn.resize(nq, nb);
        for (int q = 0; q < nq; ++q) {
          Point local = to_local(element, fq.points[static_cast<std::size_t>(q)]);
          // Snap the normal coordinate onto the element boundary.
          local[static_cast<std::size_t>(f.axis)] = std::round(local[static_cast<std::size_t>(f.axis)]);
          basis(element, local, value, gx, gy);
          phi.row(q) = value.transpose();
          dn.row(q) = (f.normal_sign * (f.axis == 0 ? gx : gy)).transpose();
        }
      };
      fill(f.left, fq.phi_left, fq.dn_left);
      if (!f.boundary()) fill(f.right, fq.phi_right, fq.dn_right);
      counter += nq;
    }
    num_face_points_ = counter - num_volume_points_;
  }

  Mesh mesh_;
  SpaceOptions options_;
  std::vector<int> offsets_;
  std::vector<VolumeQuadrature> volume_;
  std::vector<FaceQuadrature> faces_;
  int num_volume_points_ = 0;
  int num_face_points_ = 0;
};

using SpacePtr = std::shared_ptr<const DgSpace>;

inline SpacePtr make_space(Mesh mesh, SpaceOptions options = {}) {
  return std::make_shared<const DgSpace>(std::move(mesh), options);
}

/// Coefficient vector of a broken polynomial function.
struct DgField {
  SpacePtr space;
  Eigen::VectorXd coefficients;

  DgField() = default;
  explicit DgField(SpacePtr s) : space(std::move(s)), coefficients(Eigen::VectorXd::Zero(space->size())) {}
  DgField(SpacePtr s, Eigen::VectorXd c) : space(std::move(s)), coefficients(std::move(c)) {
    if (coefficients.size() != space->size()) throw std::invalid_argument("DgField: coefficient vector has wrong length");
  }

  [[nodiscard]] auto block(int element) const {
    return coefficients.segment(space->offset(element), space->local_size(element));
  }
  [[nodiscard]] bool finite() const { return coefficients.allFinite(); }
};

struct FieldValue {
  double value = 0.0;
  Point gradient{0.0, 0.0};
};

/// Value and physical gradient at a point of the master cell.
inline FieldValue evaluate(const DgField& field, int element, const Point& local) {
  const DgSpace& s = *field.space;
  if (element < 0 || element >= s.mesh().num_elements()) throw std::out_of_range("evaluate: element index out of range");
  Eigen::VectorXd v, gx, gy;
  s.basis(element, local, v, gx, gy);
  const auto c = field.block(element);
  return {v.dot(c), {gx.dot(c), s.dim() == 2 ? gy.dot(c) : 0.0}};
}

/// Locates the element containing a physical point (structured grid lookup).
inline int locate(const DgSpace& space, const Point& x) {
  const DomainSpec& spec = space.mesh().spec();
  auto index = [&](int axis) {
    const double t = (x[static_cast<std::size_t>(axis)] - spec.lower[static_cast<std::size_t>(axis)]) /
                     (spec.upper[static_cast<std::size_t>(axis)] - spec.lower[static_cast<std::size_t>(axis)]);
    const int n = spec.cells[static_cast<std::size_t>(axis)];
    return std::clamp(static_cast<int>(std::floor(t * n)), 0, n - 1);
  };
  if (space.dim() == 1) return index(0);
  return index(1) * spec.cells[0] + index(0);
}

inline FieldValue evaluate_at(const DgField& field, const Point& x) {
  const int e = locate(*field.space, x);
  return evaluate(field, e, field.space->to_local(e, x));
}

namespace detail {

/// Projection moments of f against the basis over a box [lo, hi] of local
/// coordinates (the second axis is ignored in 1D).
inline Eigen::VectorXd box_moments(const DgSpace& s, int e, const ScalarFunction& f, const QuadratureRule& rule,
                                   const Point& lo, const Point& hi) {
  const Cell& c = s.mesh().element(e);
  const bool two = s.dim() == 2;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s.local_size(e));
  Eigen::VectorXd value, gx, gy;
  const double jx = 0.25 * (hi[0] - lo[0]) * c.extent(0);
  const double jy = two ? 0.25 * (hi[1] - lo[1]) * c.extent(1) : 1.0;
  const std::size_t ny = two ? rule.size() : 1;
  for (std::size_t qy = 0; qy < ny; ++qy) {
    for (std::size_t qx = 0; qx < rule.size(); ++qx) {
      Point local{0.5 * (lo[0] + hi[0]) + 0.5 * (hi[0] - lo[0]) * rule.points[qx], 0.0};
      double w = rule.weights[qx] * jx;
      if (two) {
        local[1] = 0.5 * (lo[1] + hi[1]) + 0.5 * (hi[1] - lo[1]) * rule.points[qy];
        w *= rule.weights[qy] * jy;
      }
      s.basis(e, local, value, gx, gy);
      out += (w * f(s.to_physical(e, local))) * value;
    }
  }
  return out;
}

/// Adaptive bisection: a box is accepted when its moments agree with the sum
/// over its children.
inline Eigen::VectorXd adaptive_moments(const DgSpace& s, int e, const ScalarFunction& f, const QuadratureRule& rule,
                                        const Point& lo, const Point& hi, const Eigen::VectorXd& whole, double tol,
                                        int depth) {
  const bool two = s.dim() == 2;
  const Point mid{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
  std::vector<std::pair<Point, Point>> kids;
  if (two) {
    kids = {{lo, mid}, {{mid[0], lo[1]}, {hi[0], mid[1]}}, {{lo[0], mid[1]}, {mid[0], hi[1]}}, {mid, hi}};
  } else {
    kids = {{lo, {mid[0], 0.0}}, {{mid[0], 0.0}, hi}};
  }
  std::vector<Eigen::VectorXd> parts;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(whole.size());
  for (const auto& [a, b] : kids) {
    parts.push_back(box_moments(s, e, f, rule, a, b));
    sum += parts.back();
  }
  if ((sum - whole).lpNorm<Eigen::Infinity>() <= tol || depth == 0) return sum;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(whole.size());
  for (std::size_t k = 0; k < kids.size(); ++k)
    out += adaptive_moments(s, e, f, rule, kids[k].first, kids[k].second, parts[k], tol / std::sqrt(kids.size()),
                            depth - 1);
  return out;
}

}  // namespace detail

/// Elementwise L2 projection of f onto the local polynomial spaces. Moments
/// are integrated adaptively, so kinks and square-root edges inside an
/// element are resolved.
inline DgField interpolate(const SpacePtr& space, const ScalarFunction& f) {
  DgField out(space);
  const DgSpace& s = *space;
  const bool two = s.dim() == 2;
  for (int e = 0; e < s.mesh().num_elements(); ++e) {
    const QuadratureRule rule = gauss_legendre(s.degree(e) + 6);
    const Point lo{-1.0, two ? -1.0 : 0.0}, hi{1.0, two ? 1.0 : 0.0};
    const Eigen::VectorXd whole = detail::box_moments(s, e, f, rule, lo, hi);
    const double tol = 1e-15 * std::max(1.0, whole.lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd rhs = detail::adaptive_moments(s, e, f, rule, lo, hi, whole, tol, two ? 8 : 40);
    for (int k = 0; k < s.local_size(e); ++k) out.coefficients[s.offset(e) + k] = rhs[k] / s.basis_norm2(e, k);
  }
  return out;
}

/// One-sided traces on a face at a tangential parameter t in [-1, 1]
/// (ignored in 1D). On boundary faces the exterior value is zero.
struct TracePair {
  double left = 0.0;
  double right = 0.0;
  bool boundary = false;

  /// {q}: arithmetic mean on interior faces, the interior trace on the boundary.
  [[nodiscard]] double average() const { return boundary ? left : 0.5 * (left + right); }
  /// Scalar jump along the left element's exterior normal: [q] = q_L - q_R.
  [[nodiscard]] double jump() const { return boundary ? left : left - right; }
};

inline TracePair trace_pair(const DgField& field, int face, double t = 0.0) {
  const DgSpace& s = *field.space;
  const Face& f = s.mesh().face(face);
  Point x{0.0, 0.0};
  x[static_cast<std::size_t>(f.axis)] = f.position;
  if (s.dim() == 2) x[static_cast<std::size_t>(1 - f.axis)] = 0.5 * (f.span_lower + f.span_upper) + 0.5 * (f.span_upper - f.span_lower) * t;
  auto side = [&](int element) {
    Point local = s.to_local(element, x);
    local[static_cast<std::size_t>(f.axis)] = std::round(local[static_cast<std::size_t>(f.axis)]);
    return evaluate(field, element, local).value;
  };
  TracePair tp;
  tp.boundary = f.boundary();
  tp.left = side(f.left);
  tp.right = f.boundary() ? 0.0 : side(f.right);
  return tp;
}

/// Parameters of the mesh-dependent norms: stabilization scale a_k and the
/// face-measure exponent beta.
struct NormParams {
  double a_k = 10.0;
  double beta = 1.0;
};

inline double stabilization_weight(const DgSpace& s, const Face& f, double a_k, double beta) {
  const double p = s.mesh().face_degree(f);
  return a_k * p * p / std::pow(f.measure, beta);
}

namespace detail {

/// Shared implementation of the broken norms of (reference - field). With no
/// reference the norms of the field itself are returned.
struct BrokenParts {
  double gradient = 0.0;
  double jump = 0.0;
  double flux = 0.0;
};

inline BrokenParts broken_parts(const DgField& field, const NormParams& np, const GradientFunction* ref_grad,
                                const ScalarFunction* ref_value) {
  const DgSpace& s = *field.space;
  BrokenParts parts;
  for (int e = 0; e < s.mesh().num_elements(); ++e) {
    const auto c = field.block(e);
    s.for_each_point(e, s.degree(e) + 4, [&](const Point& x, double w, const Eigen::VectorXd&, const Eigen::VectorXd& gx,
                                            const Eigen::VectorXd& gy) {
      double dx = gx.dot(c);
      double dy = s.dim() == 2 ? gy.dot(c) : 0.0;
      if (ref_grad) {
        const Point g = (*ref_grad)(x);
        dx -= g[0];
        dy -= g[1];
      }
      parts.gradient += w * (dx * dx + dy * dy);
    });
  }
  // Faces: a finer tangential rule than the assembly rule.
  for (int k = 0; k < s.mesh().num_faces(); ++k) {
    const Face& f = s.mesh().face(k);
    const double weight = stabilization_weight(s, f, np.a_k, np.beta);
    const double p = s.mesh().face_degree(f);
    const double flux_weight = std::pow(f.measure, np.beta) / (p * p);
    std::vector<double> ts{0.0};
    std::vector<double> ws{1.0};
    if (s.dim() == 2) {
      const QuadratureRule rule = gauss_legendre(static_cast<int>(p) + 4);
      ts = rule.points;
      ws = rule.weights;
      for (double& w : ws) w *= 0.5 * f.measure;
    }
    for (std::size_t q = 0; q < ts.size(); ++q) {
      Point x{0.0, 0.0};
      x[static_cast<std::size_t>(f.axis)] = f.position;
      if (s.dim() == 2) x[static_cast<std::size_t>(1 - f.axis)] = 0.5 * (f.span_lower + f.span_upper) + 0.5 * f.measure * ts[q];
      auto side = [&](int element) {
        Point local = s.to_local(element, x);
        local[static_cast<std::size_t>(f.axis)] = std::round(local[static_cast<std::size_t>(f.axis)]);
        return evaluate(field, element, local);
      };
      const FieldValue l = side(f.left);
      const double n = f.normal_sign;
      double dn_l = n * l.gradient[static_cast<std::size_t>(f.axis)];
      double jump = l.value;
      double avg_dn = dn_l;
      if (!f.boundary()) {
        const FieldValue r = side(f.right);
        jump -= r.value;
        avg_dn = 0.5 * (dn_l + n * r.gradient[static_cast<std::size_t>(f.axis)]);
      }
      if (ref_value) {
        // The reference is continuous and vanishes on the boundary, so it
        // does not contribute to jumps; only its normal flux enters.
        const Point g = (*ref_grad)(x);
        avg_dn -= n * g[static_cast<std::size_t>(f.axis)];
        if (f.boundary()) jump -= (*ref_value)(x);
      }
      parts.jump += ws[q] * weight * jump * jump;
      parts.flux += ws[q] * flux_weight * avg_dn * avg_dn;
    }
  }
  return parts;
}

}  // namespace detail

/// |||v|||^2 = sum_K int |grad v|^2 + sum_e a_k p_k^2/|e|^beta int [v]^2.
inline double broken_norm(const DgField& field, const NormParams& np) {
  const auto parts = detail::broken_parts(field, np, nullptr, nullptr);
  return std::sqrt(parts.gradient + parts.jump);
}

/// |||v|||_nu^2 = |||v|||^2 + sum_e |e|^beta/p_k^2 int {dv/dnu}^2.
inline double broken_norm_nu(const DgField& field, const NormParams& np) {
  const auto parts = detail::broken_parts(field, np, nullptr, nullptr);
  return std::sqrt(parts.gradient + parts.jump + parts.flux);
}

struct EnergyErrors {
  double energy = 0.0;
  double energy_nu = 0.0;
};

/// Broken-norm errors of a field against a smooth reference u with gradient.
inline EnergyErrors energy_errors(const DgField& field, const ScalarFunction& u, const GradientFunction& grad,
                                  const NormParams& np) {
  const auto parts = detail::broken_parts(field, np, &grad, &u);
  return {std::sqrt(parts.gradient + parts.jump), std::sqrt(parts.gradient + parts.jump + parts.flux)};
}

/// L2 norm of (field - reference) with a rule exact beyond degree 2p + 2.
inline double l2_error(const DgField& field, const ScalarFunction& reference) {
  const DgSpace& s = *field.space;
  double sum = 0.0;
  for (int e = 0; e < s.mesh().num_elements(); ++e) {
    const auto c = field.block(e);
    s.for_each_point(e, s.degree(e) + 4, [&](const Point& x, double w, const Eigen::VectorXd& v, const Eigen::VectorXd&,
                                            const Eigen::VectorXd&) {
      const double d = v.dot(c) - (reference ? reference(x) : 0.0);
      sum += w * d * d;
    });
  }
  return std::sqrt(sum);
}

inline double l2_norm(const DgField& field) { return l2_error(field, nullptr); }

/// Integral of the field over the domain.
inline double integral(const DgField& field) {
  const DgSpace& s = *field.space;
  double sum = 0.0;
  for (int e = 0; e < s.mesh().num_elements(); ++e) {
    // The constant mode carries the mean of an orthogonal Legendre expansion.
    sum += field.coefficients[s.offset(e)] * s.mesh().element_measure(e);
  }
  return sum;
}

/// Field values at every volume quadrature point, in global point order.
inline Eigen::VectorXd volume_values(const DgField& field) {
  const DgSpace& s = *field.space;
  Eigen::VectorXd out(s.num_volume_points());
  for (int e = 0; e < s.mesh().num_elements(); ++e) {
    const VolumeQuadrature& vq = s.volume(e);
    out.segment(vq.first, static_cast<Eigen::Index>(vq.points.size())) = vq.phi * field.block(e);
  }
  return out;
}

/// Smallest value over all volume and face quadrature points.
inline double min_value(const DgField& field) {
  const DgSpace& s = *field.space;
  double m = volume_values(field).minCoeff();
  for (int k = 0; k < s.mesh().num_faces(); ++k) {
    const FaceQuadrature& fq = s.face(k);
    const Face& f = s.mesh().face(k);
    m = std::min(m, (fq.phi_left * field.block(f.left)).minCoeff());
    if (!f.boundary()) m = std::min(m, (fq.phi_right * field.block(f.right)).minCoeff());
  }
  return m;
}

}  // namespace ehl
