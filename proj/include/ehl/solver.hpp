#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehl/assembly.hpp"
#include "ehl/params.hpp"

namespace ehl {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InnerMethod {
  picard,  // damped frozen-coefficient sweeps
  newton,  // Newton with backtracking
  hybrid,  // Picard until the increment drops below newton_switch, then Newton
};

/// How the offset h00 is closed against the load.
enum class ForceUpdate {
  coupled,     // h00 joins the Newton unknowns, force balance is the extra row
  secant,      // scalar secant on h00 -> integral(u), relaxation fallback
  relaxation,  // h00 += gain * (integral(u) - target)
};

inline const char* to_string(InnerMethod m) {
  switch (m) {
    case InnerMethod::picard: return "picard";
    case InnerMethod::newton: return "newton";
    case InnerMethod::hybrid: return "hybrid";
  }
  return "?";
}

inline const char* to_string(ForceUpdate f) {
  switch (f) {
    case ForceUpdate::coupled: return "coupled";
    case ForceUpdate::secant: return "secant";
    case ForceUpdate::relaxation: return "relaxation";
  }
  return "?";
}

struct SolveConfig {
  InnerMethod method = InnerMethod::newton;
  int max_picard = 200;
  double damping = 1.0;  // omega
  int max_newton = 100;
  int max_backtracks = 40;
  /// Cap on the max-norm of a Newton update (0: uncapped).
  double max_step = 0.0;
  /// Initial pseudo time step; 0 selects the backtracking line search.
  double pseudo_dt = 0.0;
  /// Largest accepted residual growth factor of a pseudo-time step.
  double pseudo_growth = 10.0;
  /// Row-scaled residual tolerance (each residual entry divided by the
  /// largest entry of its matrix row).
  double tol_residual = 1e-9;
  /// Increment tolerance relative to 1 + max|coefficient|.
  double tol_increment = 1e-10;
  double newton_switch = 1e-3;
  int divergence_window = 8;

  ForceUpdate force_update = ForceUpdate::coupled;
  double force_tol = 1e-8;
  double force_gain = 0.1;
  int max_outer = 80;
  int monotonicity_retries = 3;

  std::function<void(const std::string&)> log;

  void validate() const {
    if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("solver damping must lie in (0, 1]");
    if (!(tol_residual > 0.0) || !(tol_increment > 0.0) || !(force_tol > 0.0))
      throw std::invalid_argument("solver tolerances must be positive");
    if (max_step < 0.0) throw std::invalid_argument("max_step must be non-negative");
    if (!(force_gain > 0.0)) throw std::invalid_argument("force_gain must be positive");
    if (max_picard < 1 || max_newton < 1 || max_outer < 1) throw std::invalid_argument("iteration limits must be >= 1");
  }
};

struct IterationRecord {
  int iter = 0;
  std::string stage;
  double residual = 0.0;
  double force = 0.0;
  double min_u = 0.0;
};

struct SolveReport {
  DgField pressure;
  Eigen::VectorXd film;
  double h00 = 0.0;
  bool converged = false;
  std::string message;
  int picard_iterations = 0;
  int newton_iterations = 0;
  int outer_iterations = 0;
  double residual = 0.0;       // row-scaled, max norm
  double residual_l2 = 0.0;    // unscaled Euclidean norm
  double increment = 0.0;
  double force_residual = 0.0;
  double min_u = 0.0;
  double min_film = 0.0;
  double negative_part = 0.0;     // integral of |min(u, 0)|
  double complementarity = 0.0;   // (1/eps_p) integral of min(u, 0)^2
  bool clamp_active = false;
  bool monotone_force = true;
  std::vector<double> penalty_levels;
  std::vector<IterationRecord> history;
};

struct InnerResult {
  bool converged = false;
  int picard_iterations = 0;
  int newton_iterations = 0;
  double residual = 0.0;
  double increment = 0.0;
  std::string message;
};

namespace detail {

inline std::string format_log(int iter, const std::string& stage, double res, double force, double min_u) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "iter=%d stage=%s res=%.6e force=%.6e minu=%.6e", iter, stage.c_str(), res, force, min_u);
  return buf;
}

/// Reciprocal of the largest absolute entry of every row of J (with an
/// optional extra column).
inline Eigen::VectorXd row_scales(const SystemMatrix& J, const Eigen::VectorXd* extra_col = nullptr) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(J.size());
  const auto& S = J.sparse();
  for (int k = 0; k < S.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(S, k); it; ++it) m[it.row()] = std::max(m[it.row()], std::abs(it.value()));
  if (J.has_dense()) m = m.cwiseMax(J.dense().cwiseAbs().rowwise().maxCoeff());
  if (extra_col && extra_col->size() == m.size()) m = m.cwiseMax(extra_col->cwiseAbs());
  for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = m[i] > 0.0 ? 1.0 / m[i] : 1.0;
  return m;
}

/// Linear functional c -> integral of the field.
inline Eigen::VectorXd integral_row(const DgSpace& s) {
  Eigen::VectorXd L = Eigen::VectorXd::Zero(s.size());
  for (int e = 0; e < s.mesh().num_elements(); ++e) L[s.offset(e)] = s.mesh().element_measure(e);
  return L;
}

inline double min_u(const DgField& u) { return min_value(u); }

}  // namespace detail

/// Diagonal of the DG mass matrix (orthogonal basis).
inline Eigen::VectorXd mass_diagonal(const DgSpace& s) {
  Eigen::VectorXd m(s.size());
  for (int e = 0; e < s.mesh().num_elements(); ++e)
    for (int k = 0; k < s.local_size(e); ++k) m[s.offset(e) + k] = s.basis_norm2(e, k);
  return m;
}

/// Newton iteration on R(u) = 0, or on [R(u, h00); integral(u) - target] = 0
/// when `coupled_target` is set (h00 is then updated in place).
///
/// Globalization: backtracking on the row-scaled residual, or, when
/// cfg.pseudo_dt > 0, pseudo-transient continuation: each step solves
/// (J + M/dt) du = -R with dt grown by the residual ratio, so the early steps
/// are damped by the mass matrix M and the late ones are plain Newton.
inline InnerResult newton_solve(Problem& pb, DgField& u, const SolveConfig& cfg, std::optional<double> coupled_target,
                                std::vector<IterationRecord>* history = nullptr) {
  InnerResult out;
  const DgSpace& s = *pb.space;
  const bool coupled = coupled_target.has_value() && pb.kernel != nullptr;
  const bool ptc = cfg.pseudo_dt > 0.0;
  const Eigen::Index n = u.coefficients.size();
  const Eigen::VectorXd L = coupled ? detail::integral_row(s) : Eigen::VectorXd();
  const double Lscale = coupled ? 1.0 / L.cwiseAbs().maxCoeff() : 1.0;
  const Eigen::VectorXd mass = ptc ? mass_diagonal(s) : Eigen::VectorXd();
  const std::string stage = coupled ? (ptc ? "ptc-force" : "newton-force") : (ptc ? "ptc" : "newton");
  double last_step = std::numeric_limits<double>::infinity();
  double dt = cfg.pseudo_dt;
  double prev_res = -1.0;

  // Row-scaled full residual at (state, h00).
  auto full_residual = [&](const DgField& state, double h00, const Eigen::VectorXd& scale) {
    const double saved = pb.h00;
    pb.h00 = h00;
    Eigen::VectorXd r;
    try {
      r = residual(pb, state);
    } catch (...) {
      pb.h00 = saved;
      throw;
    }
    pb.h00 = saved;
    Eigen::VectorXd full(n + (coupled ? 1 : 0));
    full.head(n) = r.cwiseProduct(scale.head(n));
    if (coupled) full[n] = (L.dot(state.coefficients) - *coupled_target) * Lscale;
    return full;
  };

  for (int it = 0; it <= cfg.max_newton; ++it) {
    NewtonSystem sys;
    try {
      sys = assemble_newton(pb, u, NewtonTerms{}, true);
    } catch (const std::exception& e) {
      out.message = std::string("newton: assembly failed: ") + e.what();
      return out;
    }
    Eigen::VectorXd scale = detail::row_scales(sys.jacobian, coupled ? &sys.film_sensitivity : nullptr);
    Eigen::VectorXd r = sys.residual.cwiseProduct(scale);
    double force = 0.0;
    if (coupled) {
      force = L.dot(u.coefficients) - *coupled_target;
      scale.conservativeResize(n + 1);
      scale[n] = Lscale;
      r.conservativeResize(n + 1);
      r[n] = force * Lscale;
    }
    const double res_inf = r.lpNorm<Eigen::Infinity>();
    out.residual = res_inf;
    const double mu = detail::min_u(u);
    if (history) history->push_back({it, stage, res_inf, force, mu});
    if (cfg.log) cfg.log(detail::format_log(it, stage, res_inf, force, mu));
    if (!std::isfinite(res_inf)) {
      out.message = "newton: non-finite residual";
      return out;
    }
    const double size = 1.0 + u.coefficients.lpNorm<Eigen::Infinity>();
    if (res_inf <= cfg.tol_residual || (res_inf <= 10.0 * cfg.tol_residual && last_step <= cfg.tol_increment * size)) {
      out.converged = true;
      out.newton_iterations = it;
      return out;
    }
    if (it == cfg.max_newton) break;
    if (ptc && prev_res > 0.0) dt = std::min(dt * std::clamp(prev_res / res_inf, 0.5, 10.0), 1e30);
    prev_res = res_inf;

    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Eigen::VectorXd delta;
      double dh = 0.0;
      try {
        const Eigen::VectorXd shift = ptc ? Eigen::VectorXd(mass / dt) : Eigen::VectorXd::Zero(n);
        if (coupled) {
          Eigen::MatrixXd A(n + 1, n + 1);
          A.topLeftCorner(n, n) = sys.jacobian.to_dense();
          A.topLeftCorner(n, n).diagonal() += shift;
          A.topRightCorner(n, 1) = sys.film_sensitivity;
          A.bottomLeftCorner(1, n) = L.transpose();
          A(n, n) = 0.0;
          A = scale.asDiagonal() * A;
          Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
          const Eigen::VectorXd step = lu.solve(-r);
          if (!step.allFinite()) throw LinearSolveError("bordered Newton system is singular");
          delta = step.head(n);
          dh = step[n];
        } else if (ptc) {
          Eigen::SparseMatrix<double> S = sys.jacobian.sparse();
          for (Eigen::Index i = 0; i < n; ++i) S.coeffRef(i, i) += shift[i];
          delta = SystemMatrix(std::move(S), sys.jacobian.dense()).solve(-sys.residual);
        } else {
          delta = sys.jacobian.solve(-sys.residual);
        }
      } catch (const std::exception& e) {
        out.message = std::string("newton: linear solve failed: ") + e.what();
        return out;
      }

      double alpha = 1.0;
      if (cfg.max_step > 0.0) {
        const double big = std::max(delta.lpNorm<Eigen::Infinity>(), std::abs(dh));
        if (big > cfg.max_step) alpha = cfg.max_step / big;
      }
      if (ptc) {
        // accept any admissible step that does not blow the residual up
        try {
          DgField trial(u.space, u.coefficients + alpha * delta);
          const Eigen::VectorXd rt = full_residual(trial, pb.h00 + alpha * dh, scale);
          if (rt.allFinite() && rt.lpNorm<Eigen::Infinity>() <= cfg.pseudo_growth * res_inf) {
            u = std::move(trial);
            pb.h00 += alpha * dh;
            last_step = alpha * std::max(delta.lpNorm<Eigen::Infinity>(), std::abs(dh));
            accepted = true;
            break;
          }
        } catch (const std::exception&) {
        }
        dt *= 0.25;
        if (dt < 1e-14 * cfg.pseudo_dt) break;
        continue;
      }
      const double merit = r.norm();
      for (int bt = 0; bt <= cfg.max_backtracks; ++bt, alpha *= 0.5) {
        DgField trial(u.space, u.coefficients + alpha * delta);
        const double h_trial = pb.h00 + alpha * dh;
        try {
          const Eigen::VectorXd rt = full_residual(trial, h_trial, scale);
          if (rt.allFinite() && rt.norm() <= (1.0 - 1e-4 * alpha) * merit) {
            u = std::move(trial);
            pb.h00 = h_trial;
            last_step = alpha * std::max(delta.lpNorm<Eigen::Infinity>(), std::abs(dh));
            accepted = true;
            break;
          }
        } catch (const std::exception&) {
          // film collapse or constitutive failure at the trial point: shorten
        }
      }
      break;
    }
    if (!accepted) {
      out.newton_iterations = it;
      if (res_inf <= 10.0 * cfg.tol_residual) {
        // no further descent at the roundoff floor
        out.converged = true;
        return out;
      }
      out.message = ptc ? "newton: pseudo-time step collapsed" : "newton: line search failed to reduce the residual";
      return out;
    }
    out.increment = last_step;
  }
  out.newton_iterations = cfg.max_newton;
  out.message = "newton: iteration limit exceeded";
  return out;
}

/// Damped frozen-coefficient iteration u <- (1 - omega) u + omega S(u).
inline InnerResult picard_solve(const Problem& pb, DgField& u, const SolveConfig& cfg, double stop_increment,
                                std::vector<IterationRecord>* history = nullptr) {
  InnerResult out;
  double prev = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int it = 1; it <= cfg.max_picard; ++it) {
    Eigen::VectorXd next;
    try {
      const Eigen::VectorXd film = film_values(pb, u.coefficients);
      const LinearSystem sys = assemble_picard(pb, u, film);
      next = sys.matrix.solve(sys.rhs);
    } catch (const std::exception& e) {
      out.message = std::string("picard: ") + e.what();
      out.picard_iterations = it;
      return out;
    }
    const double incr = (next - u.coefficients).lpNorm<Eigen::Infinity>();
    u.coefficients += cfg.damping * (next - u.coefficients);
    out.picard_iterations = it;
    out.increment = incr;
    const double size = 1.0 + u.coefficients.lpNorm<Eigen::Infinity>();
    if (history) history->push_back({it, "picard", incr / size, 0.0, detail::min_u(u)});
    if (cfg.log) cfg.log(detail::format_log(it, "picard", incr / size, 0.0, detail::min_u(u)));
    if (!std::isfinite(incr)) {
      out.message = "picard: non-finite iterate";
      return out;
    }
    if (incr <= stop_increment * size) {
      out.converged = true;
      return out;
    }
    growth = incr > prev ? growth + 1 : 0;
    if (growth >= cfg.divergence_window) {
      out.message = "picard: increment grew over " + std::to_string(growth) + " consecutive sweeps";
      return out;
    }
    prev = incr;
  }
  out.message = "picard: iteration limit exceeded";
  return out;
}

/// Row-scaled max-norm of the nonlinear residual at u.
inline double scaled_residual(const Problem& pb, const DgField& u) {
  const NewtonSystem sys = assemble_newton(pb, u, NewtonTerms{}, true);
  return sys.residual.cwiseProduct(detail::row_scales(sys.jacobian)).lpNorm<Eigen::Infinity>();
}

/// Inner nonlinear solve at fixed h00.
inline InnerResult solve_inner(Problem& pb, DgField& u, const SolveConfig& cfg, std::vector<IterationRecord>* history = nullptr) {
  cfg.validate();
  if (!u.finite()) throw SolverError("solve_inner: initial state is not finite");
  InnerResult res;
  if (cfg.method == InnerMethod::newton) return newton_solve(pb, u, cfg, std::nullopt, history);
  const double stop = cfg.method == InnerMethod::picard ? cfg.tol_increment : cfg.newton_switch;
  DgField start = u;
  res = picard_solve(pb, u, cfg, stop, history);
  if (cfg.method == InnerMethod::picard) {
    if (res.converged) {
      res.residual = scaled_residual(pb, u);
      if (res.residual > cfg.tol_residual) {
        // Picard's increment test passed; polish the residual with Newton.
        InnerResult polish = newton_solve(pb, u, cfg, std::nullopt, history);
        polish.picard_iterations = res.picard_iterations;
        return polish;
      }
    }
    return res;
  }
  if (!res.converged) u = start;
  InnerResult nr = newton_solve(pb, u, cfg, std::nullopt, history);
  nr.picard_iterations = res.picard_iterations;
  return nr;
}

namespace detail {

inline void finish_report(const Problem& pb, SolveReport& rep, double target) {
  const DgField& u = rep.pressure;
  rep.h00 = pb.h00;
  rep.film = film_values(pb, u.coefficients);
  rep.min_film = rep.film.size() ? rep.film.minCoeff() : 0.0;
  rep.force_residual = integral(u) - target;
  rep.min_u = min_value(u);
  try {
    const NewtonSystem sys = assemble_newton(pb, u, NewtonTerms{}, true);
    const Eigen::VectorXd* border = pb.kernel ? &sys.film_sensitivity : nullptr;
    rep.residual = sys.residual.cwiseProduct(row_scales(sys.jacobian, border)).lpNorm<Eigen::Infinity>();
    rep.residual_l2 = sys.residual.norm();
  } catch (const std::exception&) {
    rep.residual = std::numeric_limits<double>::infinity();
    rep.residual_l2 = std::numeric_limits<double>::infinity();
  }
  double neg = 0.0, comp = 0.0;
  const DgSpace& s = *pb.space;
  bool clamp = false;
  for (int e = 0; e < s.mesh().num_elements(); ++e) {
    const VolumeQuadrature& vq = s.volume(e);
    const auto c = u.block(e);
    for (int q = 0; q < static_cast<int>(vq.points.size()); ++q) {
      const double v = vq.phi.row(q).dot(c);
      const double w = vq.weights[static_cast<std::size_t>(q)];
      neg += w * std::abs(std::min(v, 0.0));
      comp += w * std::min(v, 0.0) * std::min(v, 0.0);
      if (pb.coefficient) {
        try {
          clamp = clamp || pb.coefficient(v, rep.film[vq.first + q], vq.points[static_cast<std::size_t>(q)]).clamped;
        } catch (const std::exception&) {
        }
      }
    }
  }
  rep.negative_part = neg;
  rep.complementarity = comp * pb.penalty.inverse();
  rep.clamp_active = clamp;
}

}  // namespace detail

/// Penalty continuation (outermost), force balance on h00 (middle) and the
/// inner nonlinear solve. `u` is the warm start; pb.h00 the initial offset.
inline SolveReport solve_with_force_balance(Problem pb, DgField u, double target, const SolveConfig& cfg) {
  cfg.validate();
  pb.penalty.validate();
  SolveReport rep;
  std::vector<double> levels = pb.penalty.enabled ? pb.penalty.schedule : std::vector<double>{};
  if (levels.empty() || !pb.penalty.enabled) levels = {pb.penalty.eps_p};
  if (pb.penalty.enabled && levels.back() != pb.penalty.eps_p) levels.push_back(pb.penalty.eps_p);
  rep.penalty_levels = levels;
  const bool balance = pb.kernel != nullptr;
  bool ok = true;

  for (double eps : levels) {
    pb.penalty.eps_p = eps;
    if (!balance) {
      const InnerResult r = solve_inner(pb, u, cfg, &rep.history);
      rep.picard_iterations += r.picard_iterations;
      rep.newton_iterations += r.newton_iterations;
      ok = r.converged;
      if (!ok) rep.message = r.message;
    } else if (cfg.force_update == ForceUpdate::coupled) {
      DgField start = u;
      const double h_start = pb.h00;
      InnerResult r;
      if (cfg.method != InnerMethod::newton) {
        // Picard cannot move h00; run the scalar loop instead.
        r.message = "coupled force balance requires the newton method";
      } else {
        r = newton_solve(pb, u, cfg, target, &rep.history);
      }
      rep.newton_iterations += r.newton_iterations;
      rep.outer_iterations += 1;
      ok = r.converged;
      if (!ok) {
        u = start;
        pb.h00 = h_start;
        SolveConfig alt = cfg;
        alt.force_update = ForceUpdate::secant;
        Problem sub = pb;
        sub.penalty.schedule.clear();
        sub.penalty.eps_p = eps;
        SolveReport fallback = solve_with_force_balance(sub, u, target, alt);
        rep.picard_iterations += fallback.picard_iterations;
        rep.newton_iterations += fallback.newton_iterations;
        rep.outer_iterations += fallback.outer_iterations;
        rep.history.insert(rep.history.end(), fallback.history.begin(), fallback.history.end());
        rep.monotone_force = rep.monotone_force && fallback.monotone_force;
        ok = fallback.converged;
        if (!ok) rep.message = r.message + "; fallback: " + fallback.message;
        u = fallback.pressure;
        pb.h00 = fallback.h00;
      }
    } else {
      // Scalar loop on h00 -> integral(u).
      double h_prev = 0.0, f_prev = 0.0;
      bool have_prev = false;
      int violations = 0;
      ok = false;
      for (int outer = 0; outer < cfg.max_outer; ++outer) {
        DgField attempt = u;
        const InnerResult r = solve_inner(pb, attempt, cfg, &rep.history);
        rep.picard_iterations += r.picard_iterations;
        rep.newton_iterations += r.newton_iterations;
        rep.outer_iterations += 1;
        if (!r.converged) {
          rep.message = "outer step " + std::to_string(outer) + ": " + r.message;
          if (have_prev) {
            // back off halfway towards the last converged offset
            pb.h00 = 0.5 * (pb.h00 + h_prev);
            continue;
          }
          break;
        }
        u = attempt;
        const double F = integral(u) - target;
        if (cfg.log) cfg.log(detail::format_log(outer, "force", r.residual, F, min_value(u)));
        rep.history.push_back({outer, "force", r.residual, F, min_value(u)});
        if (std::abs(F) <= cfg.force_tol) {
          ok = true;
          rep.message.clear();
          break;
        }
        double h_next = pb.h00 + cfg.force_gain * F;
        if (have_prev && pb.h00 != h_prev) {
          const double slope = (F - f_prev) / (pb.h00 - h_prev);
          if (slope >= 0.0) {
            rep.monotone_force = false;
            if (++violations > cfg.monotonicity_retries) {
              rep.message = "force residual is not decreasing in h00";
              break;
            }
          } else if (cfg.force_update == ForceUpdate::secant) {
            h_next = pb.h00 - F / slope;
          }
        }
        h_prev = pb.h00;
        f_prev = F;
        have_prev = true;
        pb.h00 = h_next;
      }
      if (!ok && rep.message.empty()) rep.message = "force balance: outer iteration limit exceeded";
    }
    if (!ok) break;
  }
  rep.pressure = u;
  rep.converged = ok;
  detail::finish_report(pb, rep, balance ? target : integral(u));
  if (!balance) rep.force_residual = 0.0;
  return rep;
}

/// A complete line or point contact run.
struct ContactSetup {
  ContactKind kind = ContactKind::line;
  DomainSpec domain;
  int degree = 1;
  PhysicalInputs inputs = paper_defaults();
  LogBase log_base = LogBase::natural;
  LubricantOptions lubricant;
  KernelOptions kernel;
  SpaceOptions space;
  FormParams form;
  PenaltyConfig penalty;
  SolveConfig solve;
  /// Continuation in the speed parameter: when positive and larger than the
  /// derived lambda, the problem is first solved at this lambda (with the
  /// penalty schedule) and lambda is then lowered geometrically, warm-started,
  /// with the step shrunk on failure.
  double continuation_start = 0.0;
  double continuation_factor = 10.0;
  double continuation_min_factor = 1.01;
  /// Load target; NaN selects pi/2 (line) or 3 pi/2 (point).
  double force_target = std::numeric_limits<double>::quiet_NaN();

  [[nodiscard]] double target() const { return std::isnan(force_target) ? ehl::force_target(kind) : force_target; }
};

/// Default domains: [-4, 2] (line) and [-4, 2] x [-3, 3] (point).
inline DomainSpec default_contact_domain(ContactKind kind, int cells) {
  DomainSpec d;
  d.dim = kind == ContactKind::line ? 1 : 2;
  d.lower = {-4.0, -3.0};
  d.upper = {2.0, 3.0};
  d.cells = {cells, cells};
  return d;
}

/// Settings that converge the paper-default contact: laws frozen at u = 0
/// for negative iterates, collapsed films mapped to eps_min, capped Newton
/// steps, the default penalty schedule and lambda continuation from 1e-2.
inline ContactSetup contact_defaults(ContactKind kind, int cells, int degree) {
  ContactSetup s;
  s.kind = kind;
  s.domain = default_contact_domain(kind, cells);
  s.degree = degree;
  s.lubricant.negative = NegativePressure::positive_part;
  s.lubricant.clamp_collapse = true;
  s.solve.max_step = 0.1;
  s.penalty.schedule = PenaltyConfig::default_schedule();
  s.continuation_start = 1e-2;
  return s;
}

/// Hertzian start: sqrt(1 - |x|^2)^+ projected and scaled to the load target.
inline DgField hertz_guess(const SpacePtr& space, double target) {
  DgField u = interpolate(space, [](const Point& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return r2 < 1.0 ? std::sqrt(1.0 - r2) : 0.0;
  });
  const double total = integral(u);
  if (total > 0.0) u.coefficients *= target / total;
  return u;
}

struct ContactRun {
  SpacePtr space;
  std::shared_ptr<const DeformationKernel> kernel;
  DerivedParams derived;
  Lubricant lubricant;
  SolveReport report;
};

/// Offset that makes the smallest film of the start state equal to h00_init.
inline double initial_offset(const DeformationKernel& kernel, const DgField& start, double min_film) {
  const Eigen::VectorXd h = kernel.film(start.coefficients, 0.0);
  return min_film - h.minCoeff();
}

inline ContactRun solve_contact(const ContactSetup& setup) {
  ContactRun run;
  run.derived = derive(setup.inputs, setup.kind, setup.log_base);
  run.lubricant = Lubricant::from(run.derived, setup.inputs, setup.lubricant);
  DomainSpec dom = setup.domain;
  dom.dim = setup.kind == ContactKind::line ? 1 : 2;
  run.space = make_space(Mesh::build(dom, setup.degree), setup.space);
  run.kernel = std::make_shared<const DeformationKernel>(build_kernel(run.space, setup.kind, setup.kernel));

  auto make_problem = [&](const Lubricant& lub) {
    Problem pb;
    pb.space = run.space;
    pb.coefficient = [lub](double u, double h, const Point& x) { return lub.epsilon_star(u, h, x); };
    pb.density = [lub](double u) { return lub.density_value(u); };
    pb.kernel = run.kernel.get();
    pb.form = setup.form;
    pb.penalty = setup.penalty;
    return pb;
  };

  const double target = setup.target();
  DgField state = hertz_guess(run.space, target);
  double h00 = initial_offset(*run.kernel, state, setup.inputs.h00_init);
  if (setup.solve.log) setup.solve.log("setup h00=" + std::to_string(h00));
  SolveReport lead;
  const double lam_end = run.lubricant.lambda;
  if (setup.continuation_start > lam_end) {
    double lam = setup.continuation_start;
    // film scale at which eps* is of order one
    h00 = initial_offset(*run.kernel, state, std::max(setup.inputs.h00_init, std::cbrt(lam)));
    double factor = setup.continuation_factor;
    bool first = true;
    while (true) {
      Lubricant lub = run.lubricant;
      lub.lambda = lam;
      Problem pb = make_problem(lub);
      pb.h00 = h00;
      if (!first) pb.penalty.schedule.clear();
      if (setup.solve.log) setup.solve.log("continuation lambda=" + std::to_string(lam));
      SolveReport r = solve_with_force_balance(pb, state, target, setup.solve);
      lead.picard_iterations += r.picard_iterations;
      lead.newton_iterations += r.newton_iterations;
      lead.outer_iterations += r.outer_iterations;
      if (r.converged) {
        state = r.pressure;
        h00 = r.h00;
        first = false;
        if (lam <= lam_end) break;
        factor = std::min(setup.continuation_factor, factor * factor);
      } else {
        if (first) {
          r.message = "continuation start failed at lambda=" + std::to_string(lam) + ": " + r.message;
          run.report = std::move(r);
          return run;
        }
        lam *= factor;  // back to the last converged value
        factor = std::sqrt(factor);
        if (factor < setup.continuation_min_factor) {
          r.message = "lambda continuation stalled at " + std::to_string(lam) + ": " + r.message;
          run.report = std::move(r);
          return run;
        }
      }
      lam = std::max(lam / factor, lam_end);
    }
    Problem pb = make_problem(run.lubricant);
    pb.h00 = h00;
    pb.penalty.schedule.clear();
    run.report = solve_with_force_balance(pb, state, target, setup.solve);
    run.report.picard_iterations += lead.picard_iterations;
    run.report.newton_iterations += lead.newton_iterations;
    run.report.outer_iterations += lead.outer_iterations;
    return run;
  }
  Problem pb = make_problem(run.lubricant);
  pb.h00 = h00;
  run.report = solve_with_force_balance(pb, state, target, setup.solve);
  run.report.picard_iterations += lead.picard_iterations;
  run.report.newton_iterations += lead.newton_iterations;
  run.report.outer_iterations += lead.outer_iterations;
  return run;
}

}  // namespace ehl
