#include "maxrisk/variogram.hpp"

#include <cmath>
#include <string>
#include <type_traits>

#include "maxrisk/error.hpp"

namespace maxrisk {

namespace {

constexpr double kSpdTol = 1e-10;

void check_psi(double psi) {
  if (!(psi > 0.0 && psi <= 2.0)) {
    throw DomainError("variogram: psi must lie in (0, 2], got " +
                      std::to_string(psi));
  }
}

void check_spd(const Sym2& s) {
  if (!std::isfinite(s.xx) || !std::isfinite(s.xy) || !std::isfinite(s.yy)) {
    throw DomainError("variogram: Sigma has non-finite entries");
  }
  const auto [lo, hi] = s.eigenvalues();
  if (!(lo > kSpdTol * std::max(1.0, hi))) {
    throw DomainError("variogram: Sigma is not positive definite");
  }
}

}  // namespace

std::pair<double, double> Sym2::eigenvalues() const {
  const double mean = 0.5 * (xx + yy);
  const double r = std::hypot(0.5 * (xx - yy), xy);
  return {mean - r, mean + r};
}

Sym2 Sym2::inverse() const {
  const double d = det();
  return Sym2{yy / d, -xy / d, xx / d};
}

Variogram::Variogram(Kind k) : kind_(std::move(k)) {
  if (const auto* q = std::get_if<QuadraticForm>(&kind_)) {
    sigma_inv_ = q->sigma.inverse();
  } else if (const auto* a = std::get_if<AnisotropicPower>(&kind_)) {
    sigma_inv_ = a->sigma.inverse();
  }
}

Variogram Variogram::power(double kappa, double psi) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw DomainError("variogram: kappa must be > 0");
  }
  check_psi(psi);
  return Variogram(Power{kappa, psi});
}

Variogram Variogram::power_m(double m, double psi) {
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw DomainError("variogram: m must be > 0");
  }
  check_psi(psi);
  return Variogram(PowerM{m, psi});
}

Variogram Variogram::quadratic_form(Sym2 sigma) {
  check_spd(sigma);
  return Variogram(QuadraticForm{sigma});
}

Variogram Variogram::anisotropic_power(double m, Sym2 sigma, double psi) {
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw DomainError("variogram: m must be > 0");
  }
  check_psi(psi);
  check_spd(sigma);
  return Variogram(AnisotropicPower{m, sigma, psi});
}

double Variogram::eval(Vec2 x) const {
  struct Visitor {
    Vec2 x;
    const Sym2& inv;
    double operator()(const Power& p) const {
      return std::pow(x.norm() / p.kappa, p.psi);
    }
    double operator()(const PowerM& p) const {
      return p.m * std::pow(x.norm(), p.psi);
    }
    double operator()(const QuadraticForm&) const {
      return std::max(0.0, inv.quad(x));
    }
    double operator()(const AnisotropicPower& p) const {
      return p.m * std::pow(std::max(0.0, inv.quad(x)), 0.5 * p.psi);
    }
  };
  return std::visit(Visitor{x, sigma_inv_}, kind_);
}

bool Variogram::is_isotropic() const {
  auto scalar = [](const Sym2& s) {
    return s.xy == 0.0 && std::abs(s.xx - s.yy) <= 1e-12 * std::abs(s.xx);
  };
  if (const auto* q = std::get_if<QuadraticForm>(&kind_)) {
    return scalar(q->sigma);
  }
  if (const auto* a = std::get_if<AnisotropicPower>(&kind_)) {
    return scalar(a->sigma);
  }
  return true;
}

double Variogram::eval_radial(double h) const {
  if (!is_isotropic()) {
    throw UnsupportedError(
        "variogram: radial evaluation requires an isotropic variogram");
  }
  if (h < 0.0) throw DomainError("variogram: radial distance must be >= 0");
  return eval(Vec2{h, 0.0});
}

double Variogram::exponent() const {
  return std::visit(
      [](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, QuadraticForm>) {
          return 2.0;
        } else {
          return k.psi;
        }
      },
      kind_);
}

double Variogram::radial_inverse(double g) const {
  if (g < 0.0) throw DomainError("variogram: value must be >= 0");
  return std::pow(g / eval_radial(1.0), 1.0 / exponent());
}

}  // namespace maxrisk
