#pragma once

// Covariance and correlation of powers of Brown-Resnick random fields.
//
// With Z a Brown-Resnick field and X = Z^beta, every second-order quantity
// is reduced to the mixed moments E[Zs(x1)^a1 Zs(x2)^a2] of the simple
// (unit Frechet) field, which depend on the sites only through
// h = sqrt(gamma_W(x2 - x1)). GEV margins expand binomially:
//
//   ((eta - tau/xi) + (tau/xi) Zs^xi)^beta = sum_k w_k Zs^{(beta-k) xi}.
//
// The mixed moment is a single integral over the ratio theta = z2/z1; we
// integrate in t = log(theta), where the kernel coefficients simplify to
// C1 = Phi(w) + e^{-t} Phi(v), C2 = e^{-2t} Phi(w) Phi(v), C3 = e^{-t} phi(w)/h
// with w = h/2 + t/h and v = h/2 - t/h.

#include <variant>
#include <vector>

#include "maxrisk/numerics.hpp"
#include "maxrisk/variogram.hpp"

namespace maxrisk {

/// GEV location, scale, shape of the wind-maxima field.
struct GevParams {
  double eta = 30.0;
  double tau = 3.0;
  double xi = -0.2;

  void validate() const;
  friend bool operator==(const GevParams&, const GevParams&) = default;
};

struct SimpleMargin {
  friend bool operator==(SimpleMargin, SimpleMargin) = default;
};
using MarginMode = std::variant<SimpleMargin, GevParams>;

/// Damage exponent together with the marginal law of the field.
struct PowerSpec {
  double beta = 1.0;
  MarginMode margin = SimpleMargin{};

  static PowerSpec simple(double beta);
  /// beta must be a non-negative integer (0 is accepted as a degenerate
  /// constant cost).
  static PowerSpec gev(int beta, GevParams params);

  bool is_simple() const {
    return std::holds_alternative<SimpleMargin>(margin);
  }
  const GevParams& gev_params() const;
  int integer_beta() const;

  /// Throws DomainError unless E[C^2] (order 2) or E[C] (order 1) is finite.
  void require_moments(int order) const;

  friend bool operator==(const PowerSpec&, const PowerSpec&) = default;
};

struct BivariateCoeffs {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

/// Kernel coefficients C1, C2, C3 at (theta, h), evaluated from their
/// defining expressions in Phi and phi.
BivariateCoeffs bivariate_coeffs(double theta, double h);

/// E[Zs(x1)^b1 Zs(x2)^b2] for a simple Brown-Resnick field with
/// sqrt(gamma_W(x2 - x1)) = h. Requires b1, b2 < 1/2.
double g_simple(double b1, double b2, double h, const QuadSpec& spec = {});

double cov_simple(double b1, double b2, const Variogram& v, Vec2 x1, Vec2 x2,
                  const QuadSpec& spec = {});

/// Binomial weight B_{k1,k2} of the GEV power expansion.
double b_coeff(int k1, int k2, const PowerSpec& p);

/// E[Z(x1)^beta Z(x2)^beta] for GEV margins, as the binomial sum of
/// g_simple terms.
double g_gev(const PowerSpec& p, double h, const QuadSpec& spec = {});

/// Cov(Z(x1)^b1, Z(x2)^b2); each site may carry its own exponent and
/// margin. A zero GEV shape is handled by extrapolation in xi.
double cov_gev(const PowerSpec& p1, const PowerSpec& p2, const Variogram& v,
               Vec2 x1, Vec2 x2, const QuadSpec& spec = {});

/// Same as cov_gev with the sites summarised by h = sqrt(gamma_W(x2 - x1)).
double cov_radial(const PowerSpec& p1, const PowerSpec& p2, double h,
                  const QuadSpec& spec = {});

/// Var(Z(0)^beta); both margin modes.
double var_gev(const PowerSpec& p);

/// E[Z(0)^beta]; both margin modes.
double mean_power(const PowerSpec& p);

/// Corr(Z(x1)^beta, Z(x2)^beta).
double dep_measure(const PowerSpec& p, const Variogram& v, Vec2 x1, Vec2 x2,
                   const QuadSpec& spec = {});

/// dep_measure keyed by the variogram value gamma_W(x2 - x1).
double dep_measure_gamma(const PowerSpec& p, double gamma_value,
                         const QuadSpec& spec = {});

struct Extrapolated {
  double value = 0.0;
  double error = 0.0;
};

/// Covariance under Gumbel margins (xi = 0), from evaluations at
/// xi = +-eps, +-2 eps combined by Richardson extrapolation.
Extrapolated cov_gev_xi_zero(int beta, double eta, double tau,
                             const Variogram& v, Vec2 x1, Vec2 x2,
                             const QuadSpec& spec = {}, double eps = 1e-4);

/// Bivariate extremal coefficient 2 Phi(sqrt(gamma)/2).
double extremal_coefficient(const Variogram& v, Vec2 x1, Vec2 x2);

/// Below this h the mixed moments are taken at their h = 0 limit.
inline constexpr double kSmallH = 1e-6;

}  // namespace maxrisk
