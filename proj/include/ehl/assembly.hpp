#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "ehl/dgspace.hpp"
#include "ehl/penalty.hpp"
#include "ehl/physics.hpp"

namespace ehl {

class LinearSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the interior-penalty weight a_k p_k^2/|e_k|^beta is scaled on a face.
enum class PenaltyWeighting {
  /// As printed: no coefficient scaling.
  none,
  /// Multiplied by the face average of eps*; identical to `none` when
  /// eps* = 1, keeps the scheme stable when eps* spans many decades.
  coefficient,
};

struct FormParams {
  double a_k = 10.0;
  double beta = 1.0;
  /// Symmetrization: 1 = SIPG, 0 = IIPG (the bilinear form as printed), -1 = NIPG.
  double theta = 0.0;
  /// Transport direction of the wedge term.
  Point wedge{1.0, 0.0};
  PenaltyWeighting weighting = PenaltyWeighting::coefficient;

  [[nodiscard]] NormParams norm() const { return {a_k, beta}; }
  void validate() const {
    if (!(a_k > 0.0)) throw std::invalid_argument("form parameter a_k must be positive");
    if (!(beta >= 1.0)) throw std::invalid_argument("form parameter beta must be >= 1");
  }
};

using CoefficientModel = std::function<CoefficientValue(double u, double h, const Point& x)>;
using DensityModel = std::function<DensityValue(double u)>;

/// The penalized, DG-discretized problem
///   -div(eps*(u, h) grad u) + d/dx(rho(u) h) + xi(u)/eps_p = f,  u = 0 on the boundary,
/// with h = h00 + h_geom + D u when a deformation kernel is attached.
inline PenaltyConfig disabled_penalty() {
  PenaltyConfig p;
  p.enabled = false;
  return p;
}

struct Problem {
  SpacePtr space;
  CoefficientModel coefficient;  // empty: eps* = 1
  DensityModel density;          // empty: no wedge term
  const DeformationKernel* kernel = nullptr;
  double h00 = 0.0;
  ScalarFunction film_profile;  // film when there is no kernel (default 1)
  ScalarFunction forcing;       // empty: f = 0
  FormParams form;
  PenaltyConfig penalty = disabled_penalty();

  [[nodiscard]] CoefficientValue eps(double u, double h, const Point& x) const {
    return coefficient ? coefficient(u, h, x) : CoefficientValue{};
  }
};

/// Film thickness at every quadrature point for coefficient vector c.
inline Eigen::VectorXd film_values(const Problem& pb, const Eigen::VectorXd& c) {
  if (pb.kernel) return pb.kernel->film(c, pb.h00);
  const DgSpace& s = *pb.space;
  Eigen::VectorXd h(s.num_quadrature_points());
  if (!pb.film_profile) {
    h.setOnes();
    return h;
  }
  const auto pts = quadrature_points(s);
  for (Eigen::Index q = 0; q < h.size(); ++q) h[q] = pb.film_profile(pts[static_cast<std::size_t>(q)]);
  return h;
}

/// Square system over the global DG coefficients: a sparse part (element and
/// face-neighbour blocks) plus an optional dense part (elastic film coupling).
class SystemMatrix {
 public:
  SystemMatrix() = default;
  explicit SystemMatrix(Eigen::SparseMatrix<double> sparse) : sparse_(std::move(sparse)) {}
  SystemMatrix(Eigen::SparseMatrix<double> sparse, Eigen::MatrixXd dense)
      : sparse_(std::move(sparse)), dense_(std::move(dense)) {}

  [[nodiscard]] Eigen::Index size() const { return sparse_.rows(); }
  [[nodiscard]] const Eigen::SparseMatrix<double>& sparse() const { return sparse_; }
  [[nodiscard]] bool has_dense() const { return dense_.size() > 0; }
  [[nodiscard]] const Eigen::MatrixXd& dense() const { return dense_; }

  [[nodiscard]] Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd(sparse_);
    if (has_dense()) m += dense_;
    return m;
  }

  [[nodiscard]] Eigen::VectorXd multiply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = sparse_ * v;
    if (has_dense()) out += dense_ * v;
    return out;
  }

  /// Solves A x = b with rows equilibrated by their largest entry.
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    if (has_dense()) {
      Eigen::MatrixXd m = to_dense();
      Eigen::VectorXd rhs = b;
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double s = m.row(i).cwiseAbs().maxCoeff();
        if (s > 0.0) {
          m.row(i) /= s;
          rhs[i] /= s;
        }
      }
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
      Eigen::VectorXd x = lu.solve(rhs);
      if (!x.allFinite()) throw LinearSolveError("dense LU produced a non-finite solution");
      return x;
    }
    Eigen::SparseMatrix<double> m = sparse_;
    Eigen::VectorXd scale = Eigen::VectorXd::Zero(m.rows());
    for (int k = 0; k < m.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
        scale[it.row()] = std::max(scale[it.row()], std::abs(it.value()));
    for (Eigen::Index i = 0; i < scale.size(); ++i) scale[i] = scale[i] > 0.0 ? 1.0 / scale[i] : 1.0;
    m = scale.asDiagonal() * m;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) throw LinearSolveError("sparse LU factorization failed: " + lu.lastErrorMessage());
    Eigen::VectorXd x = lu.solve(scale.asDiagonal() * b);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw LinearSolveError("sparse LU solve failed");
    return x;
  }

 private:
  Eigen::SparseMatrix<double> sparse_;
  Eigen::MatrixXd dense_;
};

struct LinearSystem {
  SystemMatrix matrix;
  Eigen::VectorXd rhs;
};

struct NewtonSystem {
  SystemMatrix jacobian;
  Eigen::VectorXd residual;
  /// d(residual)/d(h00); empty without a kernel.
  Eigen::VectorXd film_sensitivity;
};

/// Which derivative couplings enter the Newton Jacobian.
struct NewtonTerms {
  bool coefficient = true;  // eps*_u, rho_u and the face-weight derivative
  bool film = true;         // dense elastic coupling through dh/dc = D
  bool penalty = true;      // (1/eps_p) xi'(u)
};

namespace detail {

struct FaceSide {
  int element = -1;
  int offset = 0;
  const Eigen::MatrixXd* phi = nullptr;
  const Eigen::MatrixXd* dn = nullptr;
  double jump_sign = 1.0;
  double avg = 0.5;
};

inline std::vector<FaceSide> face_sides(const DgSpace& s, int k) {
  const Face& f = s.mesh().face(k);
  const FaceQuadrature& fq = s.face(k);
  std::vector<FaceSide> sides;
  sides.push_back({f.left, s.offset(f.left), &fq.phi_left, &fq.dn_left, 1.0, f.boundary() ? 1.0 : 0.5});
  if (!f.boundary()) sides.push_back({f.right, s.offset(f.right), &fq.phi_right, &fq.dn_right, -1.0, 0.5});
  return sides;
}

/// Core evaluation shared by both assembly routes.
///  - frozen == true: coefficients evaluated at `state` and the film `h`
///    (Picard); returns matrix + right-hand side for the unknown u.
///  - frozen == false: nonlinear residual at `state` and its Jacobian.
struct Accumulator {
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<Eigen::Triplet<double>> film_triplets;  // (dof row, quadrature point)
  Eigen::VectorXd vec;
};

}  // namespace detail

/// Frozen-coefficient system of the Picard map: the matrix holds all terms
/// linear in the unknown (diffusion, consistency and symmetrization fluxes,
/// interior-penalty stabilization, semi-implicit penalty), the right-hand side
/// holds the wedge terms in rho(Phi) h, the forcing and the explicit penalty.
inline LinearSystem assemble_picard(const Problem& pb, const DgField& state, const Eigen::VectorXd& film) {
  const DgSpace& s = *pb.space;
  if (state.space.get() != pb.space.get()) throw std::invalid_argument("assemble_picard: state lives on another space");
  if (film.size() != s.num_quadrature_points()) throw std::invalid_argument("assemble_picard: film has wrong length");
  pb.form.validate();
  const int n = s.size();
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  const double inv_eps = pb.penalty.inverse();
  const bool semi = pb.penalty.treatment == PenaltyTreatment::semi_implicit;
  const Point beta = pb.form.wedge;

  for (int e = 0; e < s.mesh().num_elements(); ++e) {
    const VolumeQuadrature& vq = s.volume(e);
    const auto c = state.block(e);
    const int nb = s.local_size(e);
    const int off = s.offset(e);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nb, nb);
    for (int q = 0; q < static_cast<int>(vq.points.size()); ++q) {
      const Point& x = vq.points[static_cast<std::size_t>(q)];
      const double w = vq.weights[static_cast<std::size_t>(q)];
      const double phi_state = vq.phi.row(q).dot(c);
      const double h = film[vq.first + q];
      const CoefficientValue eps = pb.eps(phi_state, h, x);
      if (!std::isfinite(eps.value)) throw std::domain_error("assemble_picard: non-finite coefficient");
      const auto dx = vq.dphi_dx.row(q);
      const auto dy = vq.dphi_dy.row(q);
      const auto ph = vq.phi.row(q);
      local.noalias() += (w * eps.value) * (dx.transpose() * dx + dy.transpose() * dy);
      if (inv_eps > 0.0) {
        if (semi) {
          const double d = xi_derivative(phi_state);
          local.noalias() += (w * inv_eps * d) * (ph.transpose() * ph);
          rhs.segment(off, nb) -= (w * inv_eps * (xi(phi_state) - d * phi_state)) * ph.transpose();
        } else {
          rhs.segment(off, nb) -= (w * inv_eps * xi(phi_state)) * ph.transpose();
        }
      }
      if (pb.density) {
        const double rho_h = pb.density(phi_state).value * h;
        rhs.segment(off, nb) += (w * rho_h) * (beta[0] * dx + beta[1] * dy).transpose();
      }
      if (pb.forcing) rhs.segment(off, nb) += (w * pb.forcing(x)) * ph.transpose();
    }
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) trip.emplace_back(off + i, off + j, local(i, j));
  }

  for (int k = 0; k < s.mesh().num_faces(); ++k) {
    const Face& f = s.mesh().face(k);
    const FaceQuadrature& fq = s.face(k);
    const auto sides = detail::face_sides(s, k);
    const double sigma = stabilization_weight(s, f, pb.form.a_k, pb.form.beta);
    const double beta_n = beta[static_cast<std::size_t>(f.axis)] * f.normal_sign;
    const int nsides = static_cast<int>(sides.size());
    std::vector<Eigen::MatrixXd> blocks;
    for (int a = 0; a < nsides; ++a)
      for (int b = 0; b < nsides; ++b)
        blocks.emplace_back(Eigen::MatrixXd::Zero(sides[static_cast<std::size_t>(a)].phi->cols(),
                                                  sides[static_cast<std::size_t>(b)].phi->cols()));
    for (int q = 0; q < static_cast<int>(fq.points.size()); ++q) {
      const Point& x = fq.points[static_cast<std::size_t>(q)];
      const double w = fq.weights[static_cast<std::size_t>(q)];
      const double h = film[fq.first + q];
      std::vector<double> eps_side(static_cast<std::size_t>(nsides));
      double rho_avg = 0.0;
      double eps_avg = 0.0;
      for (int a = 0; a < nsides; ++a) {
        const auto& sd = sides[static_cast<std::size_t>(a)];
        const double us = sd.phi->row(q).dot(state.block(sd.element));
        eps_side[static_cast<std::size_t>(a)] = pb.eps(us, h, x).value;
        eps_avg += sd.avg * eps_side[static_cast<std::size_t>(a)];
        if (pb.density) rho_avg += sd.avg * pb.density(us).value;
      }
      const double omega = pb.form.weighting == PenaltyWeighting::coefficient ? eps_avg : 1.0;
      for (int a = 0; a < nsides; ++a) {  // test side
        const auto& ti = sides[static_cast<std::size_t>(a)];
        const auto phi_i = ti.phi->row(q);
        const auto dn_i = ti.dn->row(q);
        for (int b = 0; b < nsides; ++b) {  // trial side
          const auto& tj = sides[static_cast<std::size_t>(b)];
          const auto phi_j = tj.phi->row(q);
          const auto dn_j = tj.dn->row(q);
          Eigen::MatrixXd& blk = blocks[static_cast<std::size_t>(a * nsides + b)];
          // -{eps grad u . n}[v]
          blk.noalias() -= (w * ti.jump_sign * tj.avg * eps_side[static_cast<std::size_t>(b)]) * (phi_i.transpose() * dn_j);
          // -theta {eps grad v . n}[u]
          blk.noalias() -= (w * pb.form.theta * ti.avg * eps_side[static_cast<std::size_t>(a)] * tj.jump_sign) * (dn_i.transpose() * phi_j);
          // + sigma omega [u][v]
          blk.noalias() += (w * sigma * omega * ti.jump_sign * tj.jump_sign) * (phi_i.transpose() * phi_j);
        }
        if (pb.density) rhs.segment(ti.offset, phi_i.size()) -= (w * rho_avg * h * beta_n * ti.jump_sign) * phi_i.transpose();
      }
    }
    for (int a = 0; a < nsides; ++a)
      for (int b = 0; b < nsides; ++b) {
        const Eigen::MatrixXd& blk = blocks[static_cast<std::size_t>(a * nsides + b)];
        const int ro = sides[static_cast<std::size_t>(a)].offset;
        const int co = sides[static_cast<std::size_t>(b)].offset;
        for (int i = 0; i < blk.rows(); ++i)
          for (int j = 0; j < blk.cols(); ++j) trip.emplace_back(ro + i, co + j, blk(i, j));
      }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return {SystemMatrix(std::move(A)), std::move(rhs)};
}

/// Nonlinear residual R(u) (the penalized DG form applied to u minus the
/// forcing) and its Jacobian with the selected derivative couplings.
inline NewtonSystem assemble_newton(const Problem& pb, const DgField& state, NewtonTerms terms = {},
                                    bool with_jacobian = true) {
  const DgSpace& s = *pb.space;
  if (state.space.get() != pb.space.get()) throw std::invalid_argument("assemble_newton: state lives on another space");
  pb.form.validate();
  const int n = s.size();
  const Eigen::VectorXd film = film_values(pb, state.coefficients);
  const bool film_coupled = with_jacobian && pb.kernel != nullptr;
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<Eigen::Triplet<double>> gtrip;  // d(residual)/d(film) at each point
  Eigen::VectorXd res = Eigen::VectorXd::Zero(n);
  const double inv_eps = pb.penalty.inverse();
  const Point beta = pb.form.wedge;

  for (int e = 0; e < s.mesh().num_elements(); ++e) {
    const VolumeQuadrature& vq = s.volume(e);
    const auto c = state.block(e);
    const int nb = s.local_size(e);
    const int off = s.offset(e);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nb, nb);
    for (int q = 0; q < static_cast<int>(vq.points.size()); ++q) {
      const Point& x = vq.points[static_cast<std::size_t>(q)];
      const double w = vq.weights[static_cast<std::size_t>(q)];
      const auto ph = vq.phi.row(q);
      const auto dx = vq.dphi_dx.row(q);
      const auto dy = vq.dphi_dy.row(q);
      const double u = ph.dot(c);
      const double ux = dx.dot(c);
      const double uy = dy.dot(c);
      const double h = film[vq.first + q];
      const CoefficientValue eps = pb.eps(u, h, x);
      if (!std::isfinite(eps.value)) throw std::domain_error("assemble_newton: non-finite coefficient");
      const Eigen::RowVectorXd grad_dot = ux * dx + uy * dy;      // grad u . grad phi_i
      const Eigen::RowVectorXd beta_dot = beta[0] * dx + beta[1] * dy;
      DensityValue rho{0.0, 0.0};
      if (pb.density) rho = pb.density(u);
      Eigen::RowVectorXd r = eps.value * grad_dot - (rho.value * h) * beta_dot;
      if (inv_eps > 0.0) r += (inv_eps * xi(u)) * ph;
      if (pb.forcing) r -= pb.forcing(x) * ph;
      res.segment(off, nb) += w * r.transpose();
      if (!with_jacobian) continue;
      local.noalias() += (w * eps.value) * (dx.transpose() * dx + dy.transpose() * dy);
      if (terms.coefficient) {
        local.noalias() += (w * eps.d_du) * (grad_dot.transpose() * ph);
        if (pb.density) local.noalias() -= (w * rho.d_du * h) * (beta_dot.transpose() * ph);
      }
      if (terms.penalty && inv_eps > 0.0) local.noalias() += (w * inv_eps * xi_derivative(u)) * (ph.transpose() * ph);
      if (film_coupled) {
        const Eigen::RowVectorXd g = w * (eps.d_dh * grad_dot - rho.value * beta_dot);
        for (int i = 0; i < nb; ++i) gtrip.emplace_back(off + i, vq.first + q, g[i]);
      }
    }
    if (!with_jacobian) continue;
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) trip.emplace_back(off + i, off + j, local(i, j));
  }

  for (int k = 0; k < s.mesh().num_faces(); ++k) {
    const Face& f = s.mesh().face(k);
    const FaceQuadrature& fq = s.face(k);
    const auto sides = detail::face_sides(s, k);
    const int nsides = static_cast<int>(sides.size());
    const double sigma = stabilization_weight(s, f, pb.form.a_k, pb.form.beta);
    const double beta_n = beta[static_cast<std::size_t>(f.axis)] * f.normal_sign;
    const bool weighted = pb.form.weighting == PenaltyWeighting::coefficient;
    std::vector<Eigen::MatrixXd> blocks;
    if (with_jacobian) {
      for (int a = 0; a < nsides; ++a)
        for (int b = 0; b < nsides; ++b)
          blocks.emplace_back(Eigen::MatrixXd::Zero(sides[static_cast<std::size_t>(a)].phi->cols(),
                                                    sides[static_cast<std::size_t>(b)].phi->cols()));
    }
    for (int q = 0; q < static_cast<int>(fq.points.size()); ++q) {
      const Point& x = fq.points[static_cast<std::size_t>(q)];
      const double w = fq.weights[static_cast<std::size_t>(q)];
      const double h = film[fq.first + q];
      std::vector<double> us(static_cast<std::size_t>(nsides)), gn(static_cast<std::size_t>(nsides));
      std::vector<CoefficientValue> eps(static_cast<std::size_t>(nsides));
      std::vector<DensityValue> rho(static_cast<std::size_t>(nsides), DensityValue{0.0, 0.0});
      double jump = 0.0, flux = 0.0, flux_h = 0.0, omega = 0.0, omega_h = 0.0, rho_avg = 0.0;
      for (int a = 0; a < nsides; ++a) {
        const auto& sd = sides[static_cast<std::size_t>(a)];
        const auto cb = state.block(sd.element);
        const std::size_t ia = static_cast<std::size_t>(a);
        us[ia] = sd.phi->row(q).dot(cb);
        gn[ia] = sd.dn->row(q).dot(cb);
        eps[ia] = pb.eps(us[ia], h, x);
        if (pb.density) rho[ia] = pb.density(us[ia]);
        jump += sd.jump_sign * us[ia];
        flux += sd.avg * eps[ia].value * gn[ia];
        flux_h += sd.avg * eps[ia].d_dh * gn[ia];
        omega += sd.avg * eps[ia].value;
        omega_h += sd.avg * eps[ia].d_dh;
        rho_avg += sd.avg * rho[ia].value;
      }
      if (!weighted) {
        omega = 1.0;
        omega_h = 0.0;
      }
      for (int a = 0; a < nsides; ++a) {
        const auto& ti = sides[static_cast<std::size_t>(a)];
        const std::size_t ia = static_cast<std::size_t>(a);
        const auto phi_i = ti.phi->row(q);
        const auto dn_i = ti.dn->row(q);
        const Eigen::RowVectorXd r = (-flux * ti.jump_sign + sigma * omega * jump * ti.jump_sign +
                                      rho_avg * h * beta_n * ti.jump_sign) * phi_i -
                                     (pb.form.theta * ti.avg * eps[ia].value * jump) * dn_i;
        res.segment(ti.offset, phi_i.size()) += w * r.transpose();
        if (!with_jacobian) continue;
        for (int b = 0; b < nsides; ++b) {
          const auto& tj = sides[static_cast<std::size_t>(b)];
          const std::size_t ib = static_cast<std::size_t>(b);
          const auto phi_j = tj.phi->row(q);
          const auto dn_j = tj.dn->row(q);
          Eigen::MatrixXd& blk = blocks[static_cast<std::size_t>(a * nsides + b)];
          blk.noalias() -= (w * ti.jump_sign * tj.avg * eps[ib].value) * (phi_i.transpose() * dn_j);
          blk.noalias() -= (w * pb.form.theta * ti.avg * eps[ia].value * tj.jump_sign) * (dn_i.transpose() * phi_j);
          blk.noalias() += (w * sigma * omega * ti.jump_sign * tj.jump_sign) * (phi_i.transpose() * phi_j);
          if (terms.coefficient) {
            blk.noalias() -= (w * ti.jump_sign * tj.avg * eps[ib].d_du * gn[ib]) * (phi_i.transpose() * phi_j);
            if (a == b) blk.noalias() -= (w * pb.form.theta * ti.avg * eps[ia].d_du * jump) * (dn_i.transpose() * phi_j);
            if (weighted) blk.noalias() += (w * sigma * jump * ti.jump_sign * tj.avg * eps[ib].d_du) * (phi_i.transpose() * phi_j);
            if (pb.density) blk.noalias() += (w * beta_n * ti.jump_sign * tj.avg * rho[ib].d_du * h) * (phi_i.transpose() * phi_j);
          }
        }
        if (film_coupled) {
          const Eigen::RowVectorXd g =
              w * ((-flux_h * ti.jump_sign + sigma * omega_h * jump * ti.jump_sign + rho_avg * beta_n * ti.jump_sign) * phi_i -
                   (pb.form.theta * ti.avg * eps[ia].d_dh * jump) * dn_i);
          for (int i = 0; i < g.size(); ++i) gtrip.emplace_back(ti.offset + i, fq.first + q, g[i]);
        }
      }
    }
    if (!with_jacobian) continue;
    for (int a = 0; a < nsides; ++a)
      for (int b = 0; b < nsides; ++b) {
        const Eigen::MatrixXd& blk = blocks[static_cast<std::size_t>(a * nsides + b)];
        const int ro = sides[static_cast<std::size_t>(a)].offset;
        const int co = sides[static_cast<std::size_t>(b)].offset;
        for (int i = 0; i < blk.rows(); ++i)
          for (int j = 0; j < blk.cols(); ++j) trip.emplace_back(ro + i, co + j, blk(i, j));
      }
  }

  NewtonSystem out;
  out.residual = std::move(res);
  if (!with_jacobian) return out;
  Eigen::SparseMatrix<double> J(n, n);
  J.setFromTriplets(trip.begin(), trip.end());
  if (film_coupled) {
    Eigen::SparseMatrix<double> G(n, s.num_quadrature_points());
    G.setFromTriplets(gtrip.begin(), gtrip.end());
    out.film_sensitivity = G * Eigen::VectorXd::Ones(s.num_quadrature_points());
    if (terms.film) {
      Eigen::MatrixXd dense = G * pb.kernel->matrix();
      out.jacobian = SystemMatrix(std::move(J), std::move(dense));
    } else {
      out.jacobian = SystemMatrix(std::move(J));
    }
  } else {
    out.jacobian = SystemMatrix(std::move(J));
  }
  return out;
}

/// Residual only.
inline Eigen::VectorXd residual(const Problem& pb, const DgField& state) {
  return assemble_newton(pb, state, {}, false).residual;
}

/// Gram matrix of the mesh-dependent norm |||.|||.
inline Eigen::SparseMatrix<double> norm_matrix(const DgSpace& s, const NormParams& np) {
  std::vector<Eigen::Triplet<double>> trip;
  for (int e = 0; e < s.mesh().num_elements(); ++e) {
    const VolumeQuadrature& vq = s.volume(e);
    const int nb = s.local_size(e);
    const int off = s.offset(e);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nb, nb);
    for (int q = 0; q < static_cast<int>(vq.points.size()); ++q) {
      const double w = vq.weights[static_cast<std::size_t>(q)];
      local.noalias() += w * (vq.dphi_dx.row(q).transpose() * vq.dphi_dx.row(q) + vq.dphi_dy.row(q).transpose() * vq.dphi_dy.row(q));
    }
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) trip.emplace_back(off + i, off + j, local(i, j));
  }
  for (int k = 0; k < s.mesh().num_faces(); ++k) {
    const Face& f = s.mesh().face(k);
    const FaceQuadrature& fq = s.face(k);
    const auto sides = detail::face_sides(s, k);
    const double sigma = stabilization_weight(s, f, np.a_k, np.beta);
    for (const auto& a : sides)
      for (const auto& b : sides) {
        Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(a.phi->cols(), b.phi->cols());
        for (int q = 0; q < static_cast<int>(fq.points.size()); ++q)
          blk.noalias() += (fq.weights[static_cast<std::size_t>(q)] * sigma * a.jump_sign * b.jump_sign) *
                           (a.phi->row(q).transpose() * b.phi->row(q));
        for (int i = 0; i < blk.rows(); ++i)
          for (int j = 0; j < blk.cols(); ++j) trip.emplace_back(a.offset + i, b.offset + j, blk(i, j));
      }
  }
  Eigen::SparseMatrix<double> N(s.size(), s.size());
  N.setFromTriplets(trip.begin(), trip.end());
  return N;
}

struct CoercivityReport {
  double probe_min = 0.0;  // min Rayleigh quotient over the probe set
  double exact_min = 0.0;  // smallest generalized eigenvalue of sym(A) w.r.t. the norm
  int probes = 0;
};

/// Coercivity of the pure-diffusion form (eps* = 1, no wedge, no penalty):
/// min <T v, v> / |||v|||^2 over random fields plus the exact minimizer.
inline CoercivityReport coercivity_probe(const SpacePtr& space, const FormParams& form, int random_probes = 200,
                                         unsigned seed = 12345) {
  Problem pb;
  pb.space = space;
  pb.form = form;
  pb.form.weighting = PenaltyWeighting::none;
  DgField zero(space);
  const Eigen::VectorXd film = Eigen::VectorXd::Ones(space->num_quadrature_points());
  const LinearSystem sys = assemble_picard(pb, zero, film);
  const Eigen::MatrixXd A = sys.matrix.to_dense();
  const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
  const Eigen::MatrixXd N = Eigen::MatrixXd(norm_matrix(*space, form.norm()));
  CoercivityReport rep;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(S, N);
  rep.exact_min = ges.eigenvalues().minCoeff();
  Eigen::Index imin = 0;
  ges.eigenvalues().minCoeff(&imin);
  const Eigen::VectorXd vmin = ges.eigenvectors().col(imin);
  rep.probe_min = vmin.dot(S * vmin) / vmin.dot(N * vmin);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < random_probes; ++k) {
    Eigen::VectorXd v(space->size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    rep.probe_min = std::min(rep.probe_min, v.dot(S * v) / v.dot(N * v));
  }
  rep.probes = random_probes + 1;
  return rep;
}

/// Rayleigh quotient <T v, v> / |||v|||^2 of the pure-diffusion form.
inline double coercivity_quotient(const DgField& v, const FormParams& form) {
  Problem pb;
  pb.space = v.space;
  pb.form = form;
  pb.form.weighting = PenaltyWeighting::none;
  DgField zero(v.space);
  const LinearSystem sys = assemble_picard(pb, zero, Eigen::VectorXd::Ones(v.space->num_quadrature_points()));
  const double num = v.coefficients.dot(sys.matrix.multiply(v.coefficients));
  const Eigen::SparseMatrix<double> N = norm_matrix(*v.space, form.norm());
  return num / v.coefficients.dot(N * v.coefficients);
}

}  // namespace ehl
