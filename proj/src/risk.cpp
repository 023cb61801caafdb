#include "maxrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "maxrisk/error.hpp"

namespace maxrisk {

namespace {

// Variogram levels at which the covariance changes character; used to place
// quadrature breakpoints in distance.
constexpr double kGammaLevels[] = {0.25, 1.0, 4.0, 16.0, 64.0, 256.0};

void require_isotropic(const Variogram& v) {
  if (!v.is_isotropic()) {
    throw UnsupportedError("risk: the radial reduction needs an isotropic "
                           "variogram");
  }
}

double cov_at_distance(const PowerSpec& p, const Variogram& v, double d,
                       const QuadSpec& spec) {
  return cov_radial(p, p, std::sqrt(v.eval_radial(d)), spec);
}

// Relative error budget for the covariance evaluations nested in an outer
// integral.
QuadSpec inner_spec(const QuadSpec& outer) {
  return outer.with_rel_tol(std::max(outer.rel_tol * 0.1, 1e-10));
}

// sqrt(int Cov / nu(A)) with A the query region as given
double correction(const RiskQuery& q, double cov_integral) {
  if (!(cov_integral >= 0.0)) {
    throw DomainError("risk: covariance integral must be >= 0");
  }
  return std::sqrt(cov_integral / area(q.region));
}

double cov_integral_of(const RiskQuery& q) {
  q.validate();
  return asymptotic_cov_integral(q.power, q.variogram, q.quad);
}

}  // namespace

void RiskQuery::validate() const {
  region.validate();
  quad.validate();
  require_isotropic(variogram);
}

double CltApprox::sd() const { return std::sqrt(variance); }

double mean_cost(const PowerSpec& p) { return mean_power(p); }

double r2(const RiskQuery& q, double lambda) {
  q.validate();
  q.power.require_moments(2);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("r2: lambda must be > 0");
  }
  const double scale = q.region.lambda * lambda;
  const double top = q.region.diameter() / q.region.lambda;
  const QuadSpec inner = inner_spec(q.quad);

  auto integrand = [&](double h) {
    const double f = distance_density(q.region, h);
    if (f == 0.0) return 0.0;
    return f * cov_at_distance(q.power, q.variogram, scale * h, inner);
  };

  std::vector<double> pts{0.0, top};
  if (q.region.shape == Shape::square) pts.push_back(q.region.R);
  for (double g : kGammaLevels) {
    const double h = q.variogram.radial_inverse(g) / scale;
    if (h > 0.0 && h < top) pts.push_back(h);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  QuadSpec outer = q.quad;
  outer.abs_floor = q.quad.abs_floor * std::max(1.0, var_gev(q.power));
  return integrate(integrand, pts, outer).value;
}

double asymptotic_cov_integral(const PowerSpec& p, const Variogram& v,
                               const QuadSpec& spec) {
  require_isotropic(v);
  p.require_moments(2);
  const double var = var_gev(p);
  if (var == 0.0) return 0.0;
  const QuadSpec inner = inner_spec(spec);
  auto cov = [&](double d) { return cov_at_distance(p, v, d, inner); };

  // Doubling search for the distance where the covariance is negligible.
  double top = v.radial_inverse(1.0);
  int doublings = 0;
  while (cov(top) >= 1e-12 * var) {
    top *= 2.0;
    if (++doublings > 200) {
      throw ConvergenceError(
          "asymptotic_cov_integral: covariance does not decay", 0.0, HUGE_VAL);
    }
  }

  std::vector<double> pts{0.0, top};
  for (double g : kGammaLevels) {
    const double h = v.radial_inverse(g);
    if (h < top) pts.push_back(h);
  }
  // Geometric panels between the last level and the cut-off.
  for (double h = v.radial_inverse(kGammaLevels[5]) * 2.0; h < top; h *= 2.0) {
    pts.push_back(h);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  QuadSpec outer = spec;
  outer.abs_floor = spec.abs_floor * var;
  auto radial = [&](double h) { return 2.0 * std::numbers::pi * h * cov(h); };
  const QuadResult body = integrate(radial, pts, outer);
  // The covariance is decreasing, so the piece beyond the cut-off is small
  // compared with the body; one more doubling measures it.
  const QuadResult tail = integrate(radial, top, 2.0 * top, outer);
  const double value = body.value + tail.value;
  if (!(value > 0.0)) {
    throw ConvergenceError("asymptotic_cov_integral: non-positive result",
                           value, body.error + tail.error);
  }
  return value;
}

CltApprox clt_approx(const RiskQuery& q, double lambda, double cov_integral) {
  q.validate();
  if (!(lambda > 0.0)) throw DomainError("clt_approx: lambda must be > 0");
  CltApprox c;
  c.mean = mean_cost(q.power);
  c.variance = cov_integral / area(q.region.scaled(lambda));
  return c;
}

AsymptoticRisk var_asymptotic(const RiskQuery& q, double lambda,
                              double cov_integral) {
  q.validate();
  if (!(q.alpha > 0.0 && q.alpha < 1.0)) {
    throw DomainError("var_asymptotic: alpha must lie in (0, 1)");
  }
  if (!(lambda > 0.0)) throw DomainError("var_asymptotic: lambda must be > 0");
  AsymptoticRisk r;
  r.k1 = mean_cost(q.power);
  r.degenerate_alpha = q.alpha == 0.5;
  r.k2 = r.degenerate_alpha
             ? 0.0
             : normal_quantile(q.alpha) * correction(q, cov_integral);
  r.value = r.k1 + r.k2 / lambda;
  return r;
}

AsymptoticRisk es_asymptotic(const RiskQuery& q, double lambda,
                             double cov_integral) {
  q.validate();
  if (!(q.alpha > 0.0 && q.alpha < 1.0)) {
    throw DomainError("es_asymptotic: alpha must lie in (0, 1)");
  }
  if (!(lambda > 0.0)) throw DomainError("es_asymptotic: lambda must be > 0");
  AsymptoticRisk r;
  r.k1 = mean_cost(q.power);
  r.k2 = normal_pdf(normal_quantile(q.alpha)) / (1.0 - q.alpha) *
         correction(q, cov_integral);
  r.value = r.k1 + r.k2 / lambda;
  return r;
}

CltApprox clt_approx(const RiskQuery& q, double lambda) {
  return clt_approx(q, lambda, cov_integral_of(q));
}

AsymptoticRisk var_asymptotic(const RiskQuery& q, double lambda) {
  return var_asymptotic(q, lambda, cov_integral_of(q));
}

AsymptoticRisk es_asymptotic(const RiskQuery& q, double lambda) {
  return es_asymptotic(q, lambda, cov_integral_of(q));
}

}  // namespace maxrisk
