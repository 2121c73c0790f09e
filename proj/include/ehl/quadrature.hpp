#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ehl {

/// Legendre polynomial P_n and its derivative at x in [-1, 1], via the
/// three-term recurrence.
struct LegendreValue {
  double value;
  double derivative;
};

inline LegendreValue legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0;
  double p = x;
  double dp_prev = 0.0;
  double dp = 1.0;
  for (int k = 2; k <= n; ++k) {
    const double p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
    // P'_k = P'_{k-2} + (2k-1) P_{k-1}
    const double dp_next = dp_prev + (2.0 * k - 1.0) * p;
    p_prev = p;
    p = p_next;
    dp_prev = dp;
    dp = dp_next;
  }
  return {p, dp};
}

/// Fills value[k] = P_k(x), derivative[k] = P'_k(x) for k = 0..n.
inline void legendre_all(int n, double x, double* value, double* derivative) {
  value[0] = 1.0;
  derivative[0] = 0.0;
  if (n == 0) return;
  value[1] = x;
  derivative[1] = 1.0;
  for (int k = 2; k <= n; ++k) {
    value[k] = ((2.0 * k - 1.0) * x * value[k - 1] - (k - 1.0) * value[k - 2]) / k;
    derivative[k] = derivative[k - 2] + (2.0 * k - 1.0) * value[k - 1];
  }
}

/// Integral of P_k^2 over [-1, 1].
inline double legendre_norm2(int k) { return 2.0 / (2.0 * k + 1.0); }

/// One-dimensional quadrature rule on [-1, 1].
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  /// Highest polynomial degree integrated exactly.
  [[nodiscard]] int exactness() const { return 2 * static_cast<int>(points.size()) - 1; }
};

/// n-point Gauss-Legendre rule. Newton iteration on P_n from the
/// Chebyshev-like initial guesses; converges to machine precision.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    LegendreValue lv{};
    for (int it = 0; it < 100; ++it) {
      lv = legendre(n, x);
      const double dx = lv.value / lv.derivative;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    lv = legendre(n, x);
    const double w = 2.0 / ((1.0 - x * x) * lv.derivative * lv.derivative);
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

/// Integrates f over [a, b] with the given rule.
template <class F>
double integrate(const QuadratureRule& rule, double a, double b, F&& f) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) sum += rule.weights[q] * f(mid + half * rule.points[q]);
  return half * sum;
}

/// Integrates f over [a, b] with `panels` equal panels of the given rule.
template <class F>
double integrate_composite(const QuadratureRule& rule, double a, double b, int panels, F&& f) {
  const double width = (b - a) / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * width;
    const double hi = (k + 1 == panels) ? b : lo + width;
    sum += integrate(rule, lo, hi, f);
  }
  return sum;
}

/// Exact value of the integral of ln(s) * P_k(2s - 1) over [0, 1].
inline double log_moment_shifted_legendre(int k) {
  if (k == 0) return -1.0;
  const double sign = (k % 2 == 0) ? -1.0 : 1.0;
  return sign / (static_cast<double>(k) * (k + 1.0));
}

/// Integral over [0, length] of ln(t) g(t) for a polynomial g of degree
/// <= degree. g is projected onto shifted Legendre polynomials exactly with a
/// Gauss rule and the log moments are applied in closed form.
template <class G>
double integrate_log_polynomial(double length, int degree, G&& g) {
  if (length <= 0.0) return 0.0;
  const QuadratureRule rule = gauss_legendre(degree + 1);
  std::vector<double> value(degree + 1);
  std::vector<double> deriv(degree + 1);
  double plain = 0.0;     // integral of g(L s) over [0, 1]
  double weighted = 0.0;  // integral of ln(s) g(L s) over [0, 1]
  std::vector<double> coeff(degree + 1, 0.0);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double xi = rule.points[q];
    const double s = 0.5 * (xi + 1.0);
    const double gv = g(length * s);
    const double w = 0.5 * rule.weights[q];
    plain += w * gv;
    legendre_all(degree, xi, value.data(), deriv.data());
    for (int k = 0; k <= degree; ++k) coeff[k] += w * gv * value[k];
  }
  for (int k = 0; k <= degree; ++k) {
    // shifted-Legendre coefficient: c_k = (2k+1) * int_0^1 g P~_k ds
    weighted += (2.0 * k + 1.0) * coeff[k] * log_moment_shifted_legendre(k);
  }
  return length * (std::log(length) * plain + weighted);
}

}  // namespace ehl
