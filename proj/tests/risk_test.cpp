#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "maxrisk/error.hpp"
#include "maxrisk/risk.hpp"

using namespace maxrisk;
using boost::math::quadrature::gauss;

namespace {

const GevParams kGev{30.0, 3.0, -0.2};

RiskQuery query(Region region, double psi, int beta = 1) {
  RiskQuery q;
  q.region = region;
  q.power = PowerSpec::gev(beta, kGev);
  q.variogram = Variogram::power(1.0, psi);
  return q;
}

// Variance of the mean of C over a square of side a, from the overlap
// kernel (a - |dx|)(a - |dy|) in polar coordinates with r = u^2.
double square_variance(const PowerSpec& p, double psi, double a) {
  const Variogram v = Variogram::power(1.0, psi);
  auto inner = [&](double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    const double rmax = a / std::max(c, s);
    auto f = [&](double u) {
      const double r = u * u;
      if (r == 0.0) return 0.0;
      return (a - r * c) * (a - r * s) * cov_radial(p, p, std::sqrt(v.eval({r, 0.0}))) * r * 2 * u;
    };
    return gauss<double, 40>::integrate(f, 0.0, std::sqrt(rmax));
  };
  // Symmetric about phi = pi/4; four quadrants.
  const double half = gauss<double, 30>::integrate(inner, 0.0, std::numbers::pi / 4);
  return 8.0 * half / (a * a * a * a);
}

}  // namespace

TEST_CASE("mean cost is the moment of the margin") {
  const PowerSpec p = PowerSpec::gev(2, kGev);
  CHECK(mean_cost(p) == mean_power(p));
}

TEST_CASE("r2 matches an overlap-kernel integral on the square") {
  for (double psi : {1.0, 2.0}) {
    for (double lam : {0.5, 3.0}) {
      RiskQuery q = query(Region::square(1.0), psi);
      const double ours = r2(q, lam);
      CHECK(ours == doctest::Approx(square_variance(q.power, psi, lam)).epsilon(2e-6));
    }
  }
}

TEST_CASE("r2 limits, scaling and monotonicity") {
  RiskQuery q = query(Region::disk(1.0), 1.0, 2);
  CHECK(r2(q, 1e-8) == doctest::Approx(var_gev(q.power)).epsilon(1e-3));
  double prev = HUGE_VAL;
  for (double lam : {0.1, 0.5, 1.0, 4.0, 20.0, 100.0}) {
    const double v = r2(q, lam);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
  // Dilating the region or raising lambda is the same thing.
  RiskQuery big = q;
  big.region = Region::disk(1.0, 2.5);
  CHECK(r2(big, 2.0) == doctest::Approx(r2(q, 5.0)).epsilon(1e-9));
  RiskQuery wide = q;
  wide.region = Region::disk(2.5);
  CHECK(r2(wide, 2.0) == doctest::Approx(r2(q, 5.0)).epsilon(1e-7));
  CHECK_THROWS_AS(r2(q, 0.0), DomainError);
}

TEST_CASE("asymptotic covariance integral") {
  for (double psi : {1.0, 2.0}) {
    const PowerSpec p = PowerSpec::gev(1, kGev);
    const Variogram v = Variogram::power(1.0, psi);
    // Trapezoid rule in log r, independent of the library's panels.
    const double du = 0.005;
    double sum = 0.0;
    for (double u = -25.0; u <= std::log(4000.0); u += du) {
      const double r = std::exp(u);
      sum += cov_radial(p, p, std::sqrt(v.eval({r, 0.0}))) * r * r;
    }
    const double oracle = 2.0 * std::numbers::pi * sum * du;
    CHECK(asymptotic_cov_integral(p, v) == doctest::Approx(oracle).epsilon(1e-5));
  }
  // Large-lambda limit of lambda^2 area r2.
  RiskQuery q = query(Region::square(1.0), 2.0);
  const double K = asymptotic_cov_integral(q.power, q.variogram);
  CHECK(400.0 * 400.0 * r2(q, 400.0) / K == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("normal approximation and risk measures") {
  RiskQuery q = query(Region::disk(1.0), 1.0);
  const double K = asymptotic_cov_integral(q.power, q.variogram);
  const CltApprox c = clt_approx(q, 10.0);
  CHECK(c.mean == mean_cost(q.power));
  CHECK(c.variance == doctest::Approx(K / (100.0 * std::numbers::pi)).epsilon(1e-12));
  CHECK(c.sd() == doctest::Approx(std::sqrt(c.variance)));
  CHECK(clt_approx(q, 20.0).sd() == doctest::Approx(c.sd() / 2.0).epsilon(1e-12));

  q.alpha = 0.5;
  const AsymptoticRisk median = var_asymptotic(q, 10.0);
  CHECK(median.degenerate_alpha);
  CHECK(median.value == doctest::Approx(mean_cost(q.power)));
  CHECK(median.k2 == 0.0);

  q.alpha = 0.95;
  const AsymptoticRisk v95 = var_asymptotic(q, 10.0);
  CHECK_FALSE(v95.degenerate_alpha);
  CHECK(v95.k1 == mean_cost(q.power));
  const double z95 = 1.6448536269514722;
  CHECK(v95.k2 == doctest::Approx(z95 * std::sqrt(K / std::numbers::pi)).epsilon(1e-9));
  CHECK(v95.value == doctest::Approx(v95.k1 + v95.k2 / 10.0));
  const AsymptoticRisk e95 = es_asymptotic(q, 10.0);
  const double dens = std::exp(-0.5 * z95 * z95) / std::sqrt(2 * std::numbers::pi);
  CHECK(e95.k2 == doctest::Approx(dens / 0.05 * std::sqrt(K / std::numbers::pi)).epsilon(1e-9));
  CHECK(e95.value > v95.value);
  CHECK_FALSE(es_asymptotic(RiskQuery{q.region, q.power, q.variogram, q.quad, 0.5}, 10.0).degenerate_alpha);

  q.alpha = 0.99;
  CHECK(var_asymptotic(q, 10.0).value > v95.value);
  CHECK(var_asymptotic(q, 100.0).value < var_asymptotic(q, 10.0).value);
  CHECK(var_asymptotic(q, 10.0, K).value == var_asymptotic(q, 10.0).value);
  q.alpha = 1.0;
  CHECK_THROWS_AS(var_asymptotic(q, 10.0), DomainError);
}

TEST_CASE("risk queries need an isotropic variogram") {
  RiskQuery q = query(Region::disk(1.0), 1.0);
  q.variogram = Variogram::anisotropic_power(1.0, Sym2{2.0, 0.0, 1.0}, 1.0);
  CHECK_THROWS_AS(r2(q, 1.0), UnsupportedError);
}
