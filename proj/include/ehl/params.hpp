#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace ehl {

enum class ContactKind { line, point };

inline const char* to_string(ContactKind kind) { return kind == ContactKind::line ? "line" : "point"; }

/// Base of the logarithm in the Roelands exponent formula.
enum class LogBase { natural, ten };

/// Raised when a derived quantity leaves its domain (non-finite or
/// non-positive where positivity is required).
class ParameterError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raw physical inputs of a contact case.
struct PhysicalInputs {
  double eta0 = 0.0;   // ambient viscosity [Pa s]
  double Rx = 0.0;     // reduced radius [m]
  double G0 = 0.0;     // dimensionless material parameter
  double U = 0.0;      // dimensionless speed parameter
  double W = 0.0;      // dimensionless load parameter
  double alpha = 0.0;  // pressure-viscosity coefficient [1/Pa]
  double p0 = 0.0;     // Roelands reference pressure [Pa]
  double h00_init = 0.0;
  std::optional<double> z_override;
};

struct DerivedParams {
  double E_prime = 0.0;  // effective modulus [Pa]
  double b = 0.0;        // Hertzian half-width [m]
  double pH = 0.0;       // maximum Hertzian pressure [Pa]
  double z = 0.0;        // Roelands exponent
  double lambda = 0.0;   // dimensionless speed parameter
  ContactKind contact_kind = ContactKind::line;
};

/// Line-contact constants used throughout the numerical experiments.
inline PhysicalInputs paper_defaults() {
  PhysicalInputs in;
  in.eta0 = 0.04;
  in.Rx = 0.02;
  in.G0 = 3500.0;
  in.U = 7.3e-11;
  in.W = 1.3e-4;
  in.h00_init = 0.0000015042;
  in.alpha = 1.59e-8;
  in.p0 = 1.98e-8;
  return in;
}

namespace detail {
inline double require_finite_positive(double v, const char* formula) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw ParameterError(std::string("parameter domain error in ") + formula + " (value " + std::to_string(v) + ")");
  }
  return v;
}
}  // namespace detail

inline void validate(const PhysicalInputs& in) {
  auto check = [](double v, const char* name, bool positive) {
    if (!std::isfinite(v) || (positive && v <= 0.0)) {
      throw ParameterError(std::string("invalid physical input ") + name + " = " + std::to_string(v));
    }
  };
  check(in.eta0, "eta0", true);
  check(in.Rx, "Rx", true);
  check(in.W, "W", true);
  check(in.alpha, "alpha", true);
  check(in.G0, "G0", false);
  check(in.U, "U", false);
  check(in.p0, "p0", false);
  check(in.h00_init, "h00_init", false);
  if (in.z_override) check(*in.z_override, "z_override", false);
}

/// Dimensionless groups of the model:
///   E = G0/alpha, b = 4 Rx / sqrt(W/(2 pi)), pH = E b / (4 Rx),
///   z = alpha / (5.1e-9 (log eta0 + 9.67)), lambda = 12 E Rx^3 U / (b^3 pH).
inline DerivedParams derive(const PhysicalInputs& in, ContactKind kind, LogBase log_base = LogBase::natural) {
  validate(in);
  using detail::require_finite_positive;
  DerivedParams d;
  d.contact_kind = kind;
  d.E_prime = require_finite_positive(in.G0 / in.alpha, "E = G0/alpha");
  d.b = require_finite_positive(4.0 * in.Rx / std::sqrt(in.W / (2.0 * std::numbers::pi)), "b = 4 Rx/sqrt(W/(2 pi))");
  d.pH = require_finite_positive(d.E_prime * d.b / (4.0 * in.Rx), "pH = E b/(4 Rx)");
  if (in.z_override) {
    d.z = *in.z_override;
  } else {
    const double log_eta = log_base == LogBase::natural ? std::log(in.eta0) : std::log10(in.eta0);
    d.z = require_finite_positive(in.alpha / (5.1e-9 * (log_eta + 9.67)), "z = alpha/(5.1e-9 (log eta0 + 9.67))");
  }
  d.lambda = require_finite_positive(12.0 * d.E_prime * in.Rx * in.Rx * in.Rx * in.U / (d.b * d.b * d.b * d.pH),
                                     "lambda = 12 E Rx^3 U/(b^3 pH)");
  return d;
}

}  // namespace ehl
