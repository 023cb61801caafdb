#include "maxrisk/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "maxrisk/error.hpp"

namespace maxrisk {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
// exp() arguments beyond this are not factorised (see MomentKernel).
constexpr double kSafeExponent = 600.0;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -HUGE_VAL) return m;
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log(1 + e^{-t})
double softplus_neg(double t) {
  return t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

/// C = sum_k w_k Zs^{a_k}
struct Expansion {
  std::vector<double> w;
  std::vector<double> a;
};

Expansion expansion(const PowerSpec& p) {
  if (p.is_simple()) return {{1.0}, {p.beta}};
  const GevParams& g = p.gev_params();
  if (g.xi == 0.0) {
    throw DomainError("expansion: xi = 0 has no binomial power expansion");
  }
  const int beta = p.integer_beta();
  const double shift = g.eta - g.tau / g.xi;
  const double scale = g.tau / g.xi;
  Expansion e;
  for (int k = 0; k <= beta; ++k) {
    e.w.push_back(binomial(beta, k) * std::pow(shift, k) *
                  std::pow(scale, beta - k));
    e.a.push_back((beta - k) * g.xi);
  }
  return e;
}

Expansion drop_constant(const Expansion& e) {
  Expansion out;
  for (std::size_t i = 0; i < e.a.size(); ++i) {
    if (e.a[i] != 0.0) {
      out.w.push_back(e.w[i]);
      out.a.push_back(e.a[i]);
    }
  }
  return out;
}

/// Integrand in t = log(theta) of sum_{i,j} w1_i w2_j E[Zs1^a1_i Zs2^a2_j].
/// With subtract_limit the h -> infinity integrand, which integrates to
/// Gamma(1 - a1) Gamma(1 - a2), is removed pointwise so the result is the
/// covariance.
class MomentKernel {
 public:
  MomentKernel(const Expansion& e1, const Expansion& e2, double h,
               bool subtract_limit)
      : e1_(e1), e2_(e2), h_(h), log_h_(std::log(h)),
        subtract_limit_(subtract_limit) {
    const std::size_t n1 = e1.a.size(), n2 = e2.a.size();
    weight_.resize(n1 * n2);
    gamma2_.resize(n1 * n2);
    gamma1_.resize(n1 * n2);
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        const double s = e1.a[i] + e2.a[j];
        weight_[i * n2 + j] = e1.w[i] * e2.w[j];
        gamma2_[i * n2 + j] = std::tgamma(2.0 - s);
        gamma1_[i * n2 + j] = std::tgamma(1.0 - s);
      }
    }
    for (double a : e1.a) max_a1_ = std::max(max_a1_, std::abs(a));
    for (double a : e2.a) max_a2_ = std::max(max_a2_, std::abs(a));
    e1_buf_.resize(n1);
    e2_buf_.resize(n2);
  }

  double operator()(double t) const {
    const double w = 0.5 * h_ + t / h_;
    const double v = 0.5 * h_ - t / h_;
    const double lpw = normal_log_cdf(w);
    const double lpv = normal_log_cdf(v);
    const double lphiw = -0.5 * w * w - kLogSqrt2Pi;
    const double l1 = log_add_exp(lpw, -t + lpv);
    const double log_a = -t + lpw + lpv - 2.0 * l1;
    const double log_b = lphiw - log_h_ - l1;

    double sum = accumulate(t, l1, log_a, log_b, gamma1_);
    if (subtract_limit_) {
      const double linf = softplus_neg(t);
      sum -= accumulate(t, linf, -t - 2.0 * linf, -HUGE_VAL, gamma1_);
    }
    return sum;
  }

 private:
  // sum_{ij} W_ij exp(a1_i l + a2_j (t + l)) (e^{log_a} G2_ij + e^{log_b} G1_ij)
  double accumulate(double t, double l, double log_a, double log_b,
                    const std::vector<double>& g1) const {
    const std::size_t n1 = e1_.a.size(), n2 = e2_.a.size();
    const double ea = std::exp(log_a);
    const double eb = std::exp(log_b);
    double sum = 0.0;
    if (max_a1_ * std::abs(l) < kSafeExponent &&
        max_a2_ * std::abs(t + l) < kSafeExponent) {
      for (std::size_t i = 0; i < n1; ++i) e1_buf_[i] = std::exp(e1_.a[i] * l);
      for (std::size_t j = 0; j < n2; ++j) {
        e2_buf_[j] = std::exp(e2_.a[j] * (t + l));
      }
      for (std::size_t i = 0; i < n1; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n2; ++j) {
          const std::size_t k = i * n2 + j;
          row += weight_[k] * e2_buf_[j] * (ea * gamma2_[k] + eb * g1[k]);
        }
        sum += e1_buf_[i] * row;
      }
      return sum;
    }
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        const std::size_t k = i * n2 + j;
        const double base = e1_.a[i] * l + e2_.a[j] * (t + l);
        sum += weight_[k] * (std::exp(base + log_a) * gamma2_[k] +
                             std::exp(base + log_b) * g1[k]);
      }
    }
    return sum;
  }

  Expansion e1_, e2_;
  double h_, log_h_;
  bool subtract_limit_;
  double max_a1_ = 0.0, max_a2_ = 0.0;
  std::vector<double> weight_, gamma2_, gamma1_;
  mutable std::vector<double> e1_buf_, e2_buf_;
};

std::vector<double> theta_breakpoints(double h) {
  // The kernel mass sits within O(1) of the origin when h is large and
  // within O(h) when h is small; geometric panels from h up to h^2/2 + 3h keep
  // either case resolved.
  const double c = std::max(1.0, 0.5 * h * h + 3.0 * h);
  std::vector<double> pts{-HUGE_VAL, 0.0, HUGE_VAL};
  for (double x = 1.0; x < c; x *= 4.0) {
    pts.push_back(x);
    pts.push_back(-x);
  }
  pts.push_back(c);
  pts.push_back(-c);
  for (double x = h; x < 1.0; x *= 4.0) {
    pts.push_back(x);
    pts.push_back(-x);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Covariance at h = 0, i.e. both exponents applied to the same variable.
double coincident_covariance(const Expansion& e1, const Expansion& e2,
                             bool absolute) {
  double s = 0.0;
  for (std::size_t i = 0; i < e1.a.size(); ++i) {
    for (std::size_t j = 0; j < e2.a.size(); ++j) {
      const double term =
          e1.w[i] * e2.w[j] *
          (gamma(1.0 - e1.a[i] - e2.a[j]) -
           gamma(1.0 - e1.a[i]) * gamma(1.0 - e2.a[j]));
      s += absolute ? std::abs(term) : term;
    }
  }
  return s;
}

bool has_zero_shape(const PowerSpec& p) {
  return !p.is_simple() && p.gev_params().xi == 0.0;
}

PowerSpec with_shape(PowerSpec p, double xi) {
  if (has_zero_shape(p)) std::get<GevParams>(p.margin).xi = xi;
  return p;
}

template <class F>
Extrapolated xi_extrapolate(F&& at_shape, double eps, double abs_floor) {
  const double m1 = 0.5 * (at_shape(eps) + at_shape(-eps));
  const double m2 = 0.5 * (at_shape(2.0 * eps) + at_shape(-2.0 * eps));
  Extrapolated r{(4.0 * m1 - m2) / 3.0, std::abs(m1 - m2) / 3.0};
  if (!(r.error <= std::max(1e-4 * std::abs(r.value), abs_floor))) {
    throw ConvergenceError(
        "xi -> 0 extrapolation did not settle (loss of precision in the "
        "binomial expansion; try a larger eps or a smaller beta)",
        r.value, r.error);
  }
  return r;
}

constexpr double kDefaultXiEps = 1e-4;

}  // namespace

void GevParams::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw DomainError("GEV scale tau must be > 0");
  }
  if (!std::isfinite(eta) || !std::isfinite(xi)) {
    throw DomainError("GEV parameters must be finite");
  }
}

PowerSpec PowerSpec::simple(double beta) {
  if (!std::isfinite(beta)) throw DomainError("beta must be finite");
  return PowerSpec{beta, SimpleMargin{}};
}

PowerSpec PowerSpec::gev(int beta, GevParams params) {
  if (beta < 0) throw DomainError("beta must be a non-negative integer");
  params.validate();
  return PowerSpec{static_cast<double>(beta), params};
}

const GevParams& PowerSpec::gev_params() const {
  if (const auto* g = std::get_if<GevParams>(&margin)) return *g;
  throw DomainError("power spec has simple margins, not GEV");
}

int PowerSpec::integer_beta() const {
  if (beta < 0.0 || beta != std::floor(beta)) {
    throw DomainError("GEV mode requires a non-negative integer beta");
  }
  return static_cast<int>(beta);
}

void PowerSpec::require_moments(int order) const {
  const double limit = order >= 2 ? 0.5 : 1.0;
  const char* what = order >= 2 ? "second" : "first";
  if (is_simple()) {
    if (!(beta < limit)) {
      throw DomainError(std::string("simple margins: ") + what +
                        " moment of Z^beta requires beta < " +
                        (order >= 2 ? "1/2" : "1"));
    }
    return;
  }
  gev_params().validate();
  integer_beta();
  if (!(beta * gev_params().xi < limit)) {
    throw DomainError(std::string("GEV margins: ") + what +
                      " moment of Z^beta requires beta*xi < " +
                      (order >= 2 ? "1/2" : "1"));
  }
}

BivariateCoeffs bivariate_coeffs(double theta, double h) {
  if (!(theta > 0.0) || !(h > 0.0)) {
    throw DomainError("bivariate_coeffs: theta and h must be > 0");
  }
  const double lt = std::log(theta);
  const double w = h / 2.0 + lt / h;
  const double v = h / 2.0 - lt / h;
  const double pw = normal_cdf(w), pv = normal_cdf(v);
  const double fw = normal_pdf(w), fv = normal_pdf(v);
  BivariateCoeffs c;
  c.c1 = pw + pv / theta;
  c.c2 = (pw + fw / h - fv / (h * theta)) *
         (pv / (theta * theta) + fv / (h * theta * theta) - fw / (h * theta));
  c.c3 = v * fw / (h * h * theta) + w * fv / (h * h * theta * theta);
  return c;
}

double g_simple(double b1, double b2, double h, const QuadSpec& spec) {
  if (!(b1 < 0.5) || !(b2 < 0.5)) {
    throw DomainError("g_simple: exponents must be < 1/2");
  }
  if (!(h >= 0.0)) throw DomainError("g_simple: h must be >= 0");
  if (h < kSmallH) return gamma(1.0 - b1 - b2);
  const Expansion e1{{1.0}, {b1}}, e2{{1.0}, {b2}};
  const MomentKernel kernel(e1, e2, h, false);
  const auto pts = theta_breakpoints(h);
  return integrate(std::cref(kernel), pts, spec).value;
}

double cov_simple(double b1, double b2, const Variogram& v, Vec2 x1, Vec2 x2,
                  const QuadSpec& spec) {
  return cov_radial(PowerSpec::simple(b1), PowerSpec::simple(b2),
                    std::sqrt(v.eval(x2 - x1)), spec);
}

double b_coeff(int k1, int k2, const PowerSpec& p) {
  const int beta = p.integer_beta();
  const GevParams& g = p.gev_params();
  if (k1 < 0 || k2 < 0 || k1 > beta || k2 > beta) {
    throw DomainError("b_coeff: indices must lie in [0, beta]");
  }
  if (g.xi == 0.0) throw DomainError("b_coeff: undefined for xi = 0");
  return binomial(beta, k1) * binomial(beta, k2) *
         std::pow(g.eta - g.tau / g.xi, k1 + k2) *
         std::pow(g.tau / g.xi, 2 * beta - k1 - k2);
}

double g_gev(const PowerSpec& p, double h, const QuadSpec& spec) {
  p.require_moments(2);
  const int beta = p.integer_beta();
  const double xi = p.gev_params().xi;
  if (xi == 0.0) throw DomainError("g_gev: undefined for xi = 0");
  double sum = 0.0;
  for (int k1 = 0; k1 <= beta; ++k1) {
    for (int k2 = 0; k2 <= beta; ++k2) {
      sum += b_coeff(k1, k2, p) *
             g_simple((beta - k1) * xi, (beta - k2) * xi, h, spec);
    }
  }
  return sum;
}

double cov_radial(const PowerSpec& p1, const PowerSpec& p2, double h,
                  const QuadSpec& spec) {
  p1.require_moments(2);
  p2.require_moments(2);
  if (!(h >= 0.0)) throw DomainError("cov_radial: h must be >= 0");
  if (has_zero_shape(p1) || has_zero_shape(p2)) {
    return xi_extrapolate(
               [&](double xi) {
                 return cov_radial(with_shape(p1, xi), with_shape(p2, xi), h,
                                   spec);
               },
               kDefaultXiEps, spec.abs_floor)
        .value;
  }
  const Expansion e1 = drop_constant(expansion(p1));
  const Expansion e2 = drop_constant(expansion(p2));
  if (e1.a.empty() || e2.a.empty()) return 0.0;
  if (h < kSmallH) return coincident_covariance(e1, e2, false);

  const double scale = coincident_covariance(e1, e2, true);
  QuadSpec s = spec;
  s.abs_floor = spec.abs_floor * scale;
  const MomentKernel kernel(e1, e2, h, true);
  const auto pts = theta_breakpoints(h);
  return integrate(std::cref(kernel), pts, s).value;
}

double cov_gev(const PowerSpec& p1, const PowerSpec& p2, const Variogram& v,
               Vec2 x1, Vec2 x2, const QuadSpec& spec) {
  return cov_radial(p1, p2, std::sqrt(v.eval(x2 - x1)), spec);
}

double var_gev(const PowerSpec& p) {
  p.require_moments(2);
  if (has_zero_shape(p)) {
    return xi_extrapolate(
               [&](double xi) { return var_gev(with_shape(p, xi)); },
               kDefaultXiEps, 0.0)
        .value;
  }
  const Expansion e = drop_constant(expansion(p));
  if (e.a.empty()) return 0.0;
  return coincident_covariance(e, e, false);
}

double mean_power(const PowerSpec& p) {
  p.require_moments(1);
  if (has_zero_shape(p)) {
    return xi_extrapolate(
               [&](double xi) { return mean_power(with_shape(p, xi)); },
               kDefaultXiEps, 0.0)
        .value;
  }
  const Expansion e = expansion(p);
  double s = 0.0;
  for (std::size_t k = 0; k < e.a.size(); ++k) s += e.w[k] * gamma(1.0 - e.a[k]);
  return s;
}

double dep_measure_gamma(const PowerSpec& p, double gamma_value,
                         const QuadSpec& spec) {
  if (!(gamma_value >= 0.0)) {
    throw DomainError("dep_measure: variogram value must be >= 0");
  }
  const double var = var_gev(p);
  if (!(var > 0.0)) throw DomainError("dep_measure: zero variance");
  return cov_radial(p, p, std::sqrt(gamma_value), spec) / var;
}

double dep_measure(const PowerSpec& p, const Variogram& v, Vec2 x1, Vec2 x2,
                   const QuadSpec& spec) {
  return dep_measure_gamma(p, v.eval(x2 - x1), spec);
}

Extrapolated cov_gev_xi_zero(int beta, double eta, double tau,
                             const Variogram& v, Vec2 x1, Vec2 x2,
                             const QuadSpec& spec, double eps) {
  if (!(eps > 0.0)) throw DomainError("cov_gev_xi_zero: eps must be > 0");
  const PowerSpec base = PowerSpec::gev(beta, GevParams{eta, tau, 0.0});
  if (beta == 0) return {0.0, 0.0};
  const double h = std::sqrt(v.eval(x2 - x1));
  return xi_extrapolate(
      [&](double xi) {
        const PowerSpec p = with_shape(base, xi);
        return cov_radial(p, p, h, spec);
      },
      eps, spec.abs_floor);
}

double extremal_coefficient(const Variogram& v, Vec2 x1, Vec2 x2) {
  return 2.0 * normal_cdf(0.5 * std::sqrt(v.eval(x2 - x1)));
}

}  // namespace maxrisk
