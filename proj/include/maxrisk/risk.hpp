#pragma once

// Spatial risk measures of the normalized aggregated loss
// L_N(lambda A, C) = (1/nu(lambda A)) int_{lambda A} Z(x)^beta dx.

#include "maxrisk/dependence.hpp"
#include "maxrisk/geometry.hpp"

namespace maxrisk {

struct RiskQuery {
  Region region = Region::disk(1.0);
  PowerSpec power = PowerSpec::gev(1, GevParams{});
  Variogram variogram = Variogram::power(1.0, 1.0);
  QuadSpec quad{};
  double alpha = 0.95;

  void validate() const;
};

/// Normal approximation of L_N for a large region.
struct CltApprox {
  double mean = 0.0;
  double variance = 0.0;
  double sd() const;
};

/// An asymptotic risk value K1 + K2 / lambda.
struct AsymptoticRisk {
  double value = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  /// Set for alpha = 1/2, where the correction degenerates to zero.
  bool degenerate_alpha = false;
};

/// E[C(0)], i.e. the expected normalized loss for any region.
double mean_cost(const PowerSpec& p);

/// Var(L_N(lambda A, C)) for the region of q dilated by a further lambda,
/// as one integral against the distance density of the region.
double r2(const RiskQuery& q, double lambda);

/// int_{R^2} Cov(Z(0)^beta, Z(x)^beta) dx, evaluated radially.
double asymptotic_cov_integral(const PowerSpec& p, const Variogram& v,
                               const QuadSpec& spec = {});

CltApprox clt_approx(const RiskQuery& q, double lambda);

/// VaR at level q.alpha from the normal approximation.
AsymptoticRisk var_asymptotic(const RiskQuery& q, double lambda);

/// Expected shortfall at level q.alpha from the normal approximation.
AsymptoticRisk es_asymptotic(const RiskQuery& q, double lambda);

// The same three with asymptotic_cov_integral supplied by the caller, for
// tables that reuse it across many rows.
CltApprox clt_approx(const RiskQuery& q, double lambda, double cov_integral);
AsymptoticRisk var_asymptotic(const RiskQuery& q, double lambda,
                              double cov_integral);
AsymptoticRisk es_asymptotic(const RiskQuery& q, double lambda,
                             double cov_integral);

}  // namespace maxrisk
