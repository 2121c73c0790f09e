#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ehl {

/// Exterior penalty xi(u) = u^- = u - max(u, 0) = (u - |u|)/2.
inline double xi(double u) { return 0.5 * (u - std::abs(u)); }

/// Derivative of xi; 0.5 at the kink (midpoint of the subdifferential [0, 1]).
inline double xi_derivative(double u) {
  if (u > 0.0) return 0.0;
  if (u < 0.0) return 1.0;
  return 0.5;
}

/// How the penalty term enters the frozen-coefficient (Picard) system.
enum class PenaltyTreatment {
  /// (1/eps_p) xi'(Phi) u in the matrix, (1/eps_p)(xi(Phi) - xi'(Phi) Phi) on the right.
  semi_implicit,
  /// (1/eps_p) xi(Phi) entirely on the right-hand side.
  explicit_rhs,
};

struct PenaltyConfig {
  bool enabled = true;
  double eps_p = 1e-6;
  /// Optional continuation sequence; when non-empty it is solved in order
  /// and its last entry replaces eps_p.
  std::vector<double> schedule;
  PenaltyTreatment treatment = PenaltyTreatment::semi_implicit;

  void validate() const {
    if (!(eps_p > 0.0)) throw std::invalid_argument("penalty parameter eps_p must be positive");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (!(schedule[i] > 0.0)) throw std::invalid_argument("penalty schedule entries must be positive");
      if (i > 0 && !(schedule[i] < schedule[i - 1])) throw std::invalid_argument("penalty schedule must be strictly decreasing");
    }
  }

  [[nodiscard]] double inverse() const { return enabled ? 1.0 / eps_p : 0.0; }

  /// The default continuation 1e-2 -> 1e-6 by factors of ten.
  static std::vector<double> default_schedule() { return {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}; }
};

}  // namespace ehl
