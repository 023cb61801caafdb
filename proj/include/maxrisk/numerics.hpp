#pragma once

// Special functions and adaptive quadrature shared by the analytic modules.

#include <atomic>
#include <functional>
#include <span>

namespace maxrisk {

/// Accuracy contract for adaptive quadrature.
///
/// Semi-infinite pieces [a, inf) are mapped onto [0, 1) by
/// x = a + infinite_scale * t / (1 - t); (-inf, b] is mirrored. The scale
/// should roughly match the width of the integrand's bulk.
struct QuadSpec {
  double rel_tol = 3e-7;
  /// Absolute error accepted when the integral itself is (nearly) zero.
  double abs_floor = 1e-12;
  int max_subdivisions = 4000;
  double infinite_scale = 1.0;
  /// Cooperative cancellation; checked once per subdivision.
  const std::atomic<bool>* cancel = nullptr;

  void validate() const;
  QuadSpec with_rel_tol(double tol) const {
    QuadSpec s = *this;
    s.rel_tol = tol;
    return s;
  }
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

using Integrand = std::function<double(double)>;

/// Integrates f from a to b (b < a flips the sign); either bound may be
/// infinite.
QuadResult integrate(const Integrand& f, double a, double b,
                     const QuadSpec& spec = {});

/// Integrates f over consecutive breakpoint pieces [p0,p1], [p1,p2], ...
/// sharing one global error budget. The outer breakpoints may be infinite.
QuadResult integrate(const Integrand& f, std::span<const double> breakpoints,
                     const QuadSpec& spec = {});

/// Gamma function. Throws DomainError at the poles 0, -1, -2, ...
double gamma(double x);

enum class NormalKind { cdf, pdf, quantile };

/// Standard normal cdf, pdf, or quantile (argument in (0,1)).
double std_normal(NormalKind kind, double x);

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double alpha);
/// log Phi(x), accurate far into the lower tail.
double normal_log_cdf(double x);

}  // namespace maxrisk
