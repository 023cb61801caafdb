// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "maxrisk/dependence.hpp"
#include "maxrisk/geometry.hpp"
#include "maxrisk/numerics.hpp"
#include "maxrisk/risk.hpp"
#include "maxrisk/simulate.hpp"

using namespace maxrisk;

namespace {

const GevParams kGev{30.0, 3.0, -0.2};
const std::vector<double> kPsi{0.5, 1.0, 1.5, 2.0};

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  std::string out(std::snprintf(nullptr, 0, f, args...), '\0');
  std::snprintf(out.data(), out.size() + 1, f, args...);
  return out;
}

double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Asymptotic Kolmogorov tail with Stephens' small-sample correction.
double ks_pvalue(double d, double n_eff) {
  const double s = std::sqrt(n_eff);
  const double x = (s + 0.12 + 0.11 / s) * d;
  if (x < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * x * x);
  }
  return std::clamp(p, 0.0, 1.0);
}

double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

RiskQuery disk_query(double psi, int beta = 1) {
  RiskQuery q;
  q.region = Region::disk(1.0);
  q.power = PowerSpec::gev(beta, kGev);
  q.variogram = Variogram::power(1.0, psi);
  return q;
}

// L_N over the disk of radius lambda with GEV margins, one value per
// replicate, simulated with the exact method.
std::vector<double> sampled_losses(double psi, double lambda, int n_rep,
                                   std::uint64_t seed) {
  const Region region = Region::disk(1.0, lambda);
  const Grid grid = Grid::covering(region, {}, 50);
  SimControl ctl;
  ctl.sites = region_sites(grid, region);
  auto s = simulate_brown_resnick(Variogram::power(1.0, psi), grid, n_rep, seed,
                                  ExtremalFunctions{}, ctl);
  for (auto& x : s) x = gev_transform(x, kGev);
  return mc_normalized_loss(s, Region::disk(1.0), lambda, 1.0);
}

// Smallest h with D(h) < 0.01, D decreasing in h.
double threshold_distance(int beta, double psi, double lo, double hi) {
  const PowerSpec p = PowerSpec::gev(beta, kGev);
  const Variogram v = Variogram::power(1.0, psi);
  auto D = [&](double h) { return dep_measure(p, v, {0, 0}, {h, 0}); };
  while (hi / lo > 1.0 + 1e-6) {
    const double mid = std::sqrt(lo * hi);
    (D(mid) < 0.01 ? hi : lo) = mid;
  }
  return hi;
}

Outcome threshold_criterion(double psi, double lo, double hi, double budget) {
  Stopwatch sw;
  double hmin = HUGE_VAL, hmax = 0.0;
  for (int beta = 1; beta <= 12; ++beta) {
    const double h = threshold_distance(beta, psi, lo / 10.0, hi * 10.0);
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
  }
  const double t = sw.seconds();
  return {hmin >= lo && hmax <= hi && t <= budget,
          fmt("threshold h over beta 1..12 in [%.4g, %.4g], target [%g, %g], %.1f s (limit %g s)",
              hmin, hmax, lo, hi, t, budget)};
}

Outcome c1() { return threshold_criterion(2.0, 5.0, 8.0, 120.0); }
Outcome c2() { return threshold_criterion(0.5, 700.0, 1300.0, 300.0); }

Outcome c3() {
  double worst = 0.0;
  std::string where;
  for (double psi : kPsi) {
    const Variogram v = Variogram::power(1.0, psi);
    for (double h : {0.5, 1.0, 2.0}) {
      double lo = HUGE_VAL, hi = -HUGE_VAL;
      for (int beta = 1; beta <= 12; ++beta) {
        const double d = dep_measure(PowerSpec::gev(beta, kGev), v, {0, 0}, {h, 0});
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      if (hi - lo > worst) {
        worst = hi - lo;
        where = fmt("psi %g, h %g", psi, h);
      }
    }
  }
  return {worst <= 0.15, fmt("largest range of D over beta %.4f (%s), limit 0.15", worst, where.c_str())};
}

Outcome c4() {
  double e0 = 0.0, einf = 0.0;
  for (double b : {-1.0, -0.5, 0.1, 0.25, 0.4}) {
    e0 = std::max(e0, std::abs(g_simple(b, b, 0.0) / std::tgamma(1.0 - 2.0 * b) - 1.0));
    einf = std::max(einf, std::abs(g_simple(b, b, 1000.0) / std::pow(std::tgamma(1.0 - b), 2) - 1.0));
  }
  return {e0 <= 1e-6 && einf <= 1e-3,
          fmt("rel error at h=0 %.2e (limit 1e-6), at gamma=1e6 %.2e (limit 1e-3)", e0, einf)};
}

Outcome c5() {
  Stopwatch sw;
  std::vector<double> hs, lambdas;
  for (int i = 0; i < 40; ++i) {
    hs.push_back(0.01 * std::pow(500.0, i / 39.0));
    lambdas.push_back(0.1 * std::pow(1000.0, i / 39.0));
  }
  int violations = 0;
  std::string first;
  auto check = [&](const char* what, double psi, const std::vector<double>& xs, auto f) {
    double prev = HUGE_VAL;
    for (double x : xs) {
      const double y = f(x);
      if (!(y < prev)) {
        if (violations++ == 0) first = fmt("%s, psi %g, at %g", what, psi, x);
      }
      prev = y;
    }
  };
  const PowerSpec p1 = PowerSpec::gev(1, kGev);
  for (double psi : kPsi) {
    const Variogram v = Variogram::power(1.0, psi);
    auto root_gamma = [&](double h) { return std::sqrt(v.eval({h, 0.0})); };
    check("g_simple", psi, hs, [&](double h) { return g_simple(0.25, 0.25, root_gamma(h)); });
    check("g_gev", psi, hs, [&](double h) { return g_gev(p1, root_gamma(h)); });
    check("dep_measure", psi, hs, [&](double h) { return dep_measure(p1, v, {0, 0}, {h, 0}); });
    const RiskQuery q = disk_query(psi);
    check("r2", psi, lambdas, [&](double l) { return r2(q, l); });
  }
  return {violations == 0,
          fmt("%d non-decreasing steps over 4 functions x 4 psi x 40 points%s%s, %.1f s",
              violations, violations ? ", first: " : "", first.c_str(), sw.seconds())};
}

Outcome c6() {
  Stopwatch sw;
  const int n = 100000;
  double worst = 0.0;
  std::string lines;
  std::uint64_t seed = 600;
  for (double psi : {1.0, 2.0}) {
    const Variogram v = Variogram::power(1.0, psi);
    for (double h : {0.5, 2.0}) {
      const auto s = simulate_brown_resnick(v, Grid{{0, 0}, 2, 1, h}, n, ++seed);
      for (int beta : {1, 3}) {
        const PowerSpec p = PowerSpec::gev(beta, kGev);
        std::vector<double> x(n), y(n);
        for (int r = 0; r < n; ++r) {
          x[r] = std::pow(gev_transform(s[r].values[0], kGev), beta);
          y[r] = std::pow(gev_transform(s[r].values[1], kGev), beta);
        }
        double mx = 0, my = 0;
        for (int r = 0; r < n; ++r) mx += x[r], my += y[r];
        mx /= n;
        my /= n;
        double c = 0, c2 = 0;
        for (int r = 0; r < n; ++r) {
          const double t = (x[r] - mx) * (y[r] - my);
          c += t;
          c2 += t * t;
        }
        c /= n;
        const double se = std::sqrt((c2 / n - c * c) / n);
        const double exact = cov_gev(p, p, v, {0, 0}, {h, 0});
        const double z = std::abs(c - exact) / se;
        worst = std::max(worst, z);
        lines += fmt(" [beta %d psi %g h %g: %.6g vs MC %.6g, %.2f SE]", beta, psi, h, exact, c, z);
      }
    }
  }
  const double t = sw.seconds();
  return {worst <= 3.0 && t <= 600.0,
          fmt("max deviation %.2f SE (limit 3), %.1f s (limit 600 s);%s", worst, t, lines.c_str())};
}

Outcome c7() {
  Stopwatch sw;
  const auto l = sampled_losses(2.0, 10.0, 2000, 700);
  const double n = static_cast<double>(l.size());
  double m = 0;
  for (double x : l) m += x;
  m /= n;
  double m2 = 0, m4 = 0;
  for (double x : l) {
    m2 += (x - m) * (x - m);
    m4 += std::pow(x - m, 4);
  }
  m2 /= n;
  m4 /= n;
  const double var = m2 * n / (n - 1);
  const double se = std::sqrt((m4 - m2 * m2) / n);
  const double exact = r2(disk_query(2.0), 10.0);
  const double z = std::abs(var - exact) / se;
  return {z <= 3.0, fmt("MC variance %.5g (SE %.3g) vs r2 %.5g, %.2f SE (limit 3), %.1f s", var, se,
                        exact, z, sw.seconds())};
}

Outcome c8() {
  std::string d;
  bool ok = true;
  for (double psi : {1.0, 2.0}) {
    const RiskQuery q = disk_query(psi);
    const double K = asymptotic_cov_integral(q.power, q.variogram);
    const double ratio = 100.0 * 100.0 * r2(q, 100.0) * area(q.region) / K;
    ok = ok && std::abs(ratio - 1.0) <= 0.05;
    d += fmt("psi %g: ratio %.4f; ", psi, ratio);
  }
  return {ok, d + "limit |ratio - 1| <= 0.05"};
}

// Shared by criteria 9 and 10: the first 500 replicates at lambda = 50 are
// the same draws whether 500 or 1000 are simulated.
std::map<double, std::vector<double>>& loss_cache() {
  static std::map<double, std::vector<double>> cache;
  return cache;
}

const std::vector<double>& psi1_losses(double lambda, int n) {
  auto& c = loss_cache();
  auto it = c.find(lambda);
  if (it == c.end() || static_cast<int>(it->second.size()) < n) {
    c[lambda] = sampled_losses(1.0, lambda, n, lambda == 50.0 ? 1050 : 1025);
  }
  return c[lambda];
}

bool want_c10 = false;

Outcome c9() {
  Stopwatch sw;
  const auto& all = psi1_losses(50.0, want_c10 ? 1000 : 500);
  std::vector<double> z(all.begin(), all.begin() + 500);
  const CltApprox c = clt_approx(disk_query(1.0), 50.0);
  for (double& x : z) x = (x - c.mean) / c.sd();
  const double d = ks_one_sample(z, Phi);
  const double p = ks_pvalue(d, 500.0);
  return {p >= 0.01, fmt("KS distance %.4f, p-value %.3g (needs >= 0.01), %.1f s", d, p, sw.seconds())};
}

Outcome c10() {
  Stopwatch sw;
  bool ok = true;
  std::string d;
  for (double lambda : {25.0, 50.0}) {
    const auto& l = psi1_losses(lambda, 1000);
    RiskQuery q = disk_query(1.0);
    q.alpha = 0.95;
    const double K = asymptotic_cov_integral(q.power, q.variogram);
    for (MeasureKind kind : {MeasureKind::value_at_risk, MeasureKind::expected_shortfall}) {
      const bool is_var = kind == MeasureKind::value_at_risk;
      const McEstimate mc = mc_risk(l, {kind, 0.95}, 200, 10);
      const AsymptoticRisk a = is_var ? var_asymptotic(q, lambda, K) : es_asymptotic(q, lambda, K);
      const double corr = a.k2 / lambda;
      const double share = std::abs(mc.estimate - a.value) / corr;
      ok = ok && share <= 0.15;
      d += fmt("lambda %g %s: MC %.4f (SE %.3f) vs %.4f, gap %.1f%% of K2/lambda=%.4f; ", lambda,
               is_var ? "VaR" : "ES", mc.estimate, mc.std_error, a.value, 100 * share, corr);
    }
  }
  return {ok, d + fmt("limit 15%%, %.1f s", sw.seconds())};
}

Outcome c11() {
  std::vector<double> x, y;
  for (int beta = 1; beta <= 6; ++beta) {
    x.push_back(beta);
    y.push_back(std::log(r2(disk_query(1.0, beta), 5.0)));
  }
  const double n = 6;
  double mx = 0, my = 0;
  for (int i = 0; i < 6; ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 6; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double rsq = sxy * sxy / (sxx * syy);
  return {rsq >= 0.98, fmt("R^2 %.5f (needs >= 0.98), slope %.4f per unit beta", rsq, sxy / sxx)};
}

Outcome c12() {
  Stopwatch sw;
  const QuadSpec tight{1e-12, 1e-15, 4000};
  const double nd = integrate([](double h) { return disk_distance_density(h, 1.0); }, 0.0, 2.0, tight).value;
  const std::vector<double> sq_bp{0.0, 1.0, std::numbers::sqrt2};
  const double ns = integrate([](double h) { return square_distance_density(h, 1.0); }, sq_bp, tight).value;
  const double norm_err = std::max(std::abs(nd - 1.0), std::abs(ns - 1.0));

  std::mt19937_64 eng(1212);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const long n = 10'000'000;
  const int bins = 20;
  double worst = 0.0;
  for (Shape shape : {Shape::disk, Shape::square}) {
    const double top = shape == Shape::disk ? 2.0 : std::numbers::sqrt2;
    std::vector<long> count(bins, 0);
    auto draw = [&](double& x, double& y) {
      if (shape == Shape::square) {
        x = u(eng);
        y = u(eng);
        return;
      }
      do {
        x = 2 * u(eng) - 1;
        y = 2 * u(eng) - 1;
      } while (x * x + y * y > 1);
    };
    for (long i = 0; i < n; ++i) {
      double ax, ay, bx, by;
      draw(ax, ay);
      draw(bx, by);
      const double d = std::hypot(ax - bx, ay - by);
      ++count[std::min(bins - 1, static_cast<int>(d / top * bins))];
    }
    for (int k = 0; k < bins; ++k) {
      const double p = integrate([&](double h) { return distance_density(Region{shape, 1.0, 1.0}, h); },
                                 top * k / bins, top * (k + 1) / bins, tight)
                           .value;
      worst = std::max(worst, std::abs(count[k] - n * p) / std::sqrt(n * p * (1 - p)));
    }
  }

  // One-sided limits at h = R by linear extrapolation from eps and 2 eps, so
  // the (continuous) slope does not count as a gap.
  const double eps = 1e-5;
  auto f = [](double h) { return square_distance_density(h, 1.0); };
  const double left = 2 * f(1 - eps) - f(1 - 2 * eps);
  const double right = 2 * f(1 + eps) - f(1 + 2 * eps);
  const double gap = std::abs(right - left);
  const double raw = std::abs(f(1 + eps) - f(1 - eps));
  return {norm_err <= 1e-8 && worst <= 3.0 && gap <= 1e-6,
          fmt("normalization error %.2e (limit 1e-8); histogram sup deviation %.2f bin SE over %d bins "
              "(limit 3); branch gap %.2e (limit 1e-6, raw difference %.2e); %.1f s",
              norm_err, worst, bins, gap, raw, sw.seconds())};
}

Outcome c13() {
  const Variogram v = Variogram::power(1.0, 1.0);
  auto cov = [&](double xi) {
    const PowerSpec p = PowerSpec::gev(1, GevParams{30.0, 3.0, xi});
    return cov_gev(p, p, v, {0, 0}, {1, 0});
  };
  const double z = cov_gev_xi_zero(1, 30.0, 3.0, v, {0, 0}, {1, 0}).value;
  const double jump = std::abs(cov(1e-4) - cov(-1e-4)) / std::abs(z);
  const double var0 = cov_gev_xi_zero(1, 30.0, 3.0, v, {0, 0}, {0, 0}).value;
  const double gum = 9.0 * std::numbers::pi * std::numbers::pi / 6.0;
  const double verr = std::abs(var0 / gum - 1.0);
  return {jump <= 1e-2 && verr <= 1e-6,
          fmt("|cov(1e-4) - cov(-1e-4)| / |cov(0)| = %.2e (limit 1e-2), cov(0) = %.6g; Gumbel variance "
              "rel error %.2e (limit 1e-6)",
              jump, z, verr)};
}

Outcome c14() {
  Stopwatch sw;
  const Region region = Region::disk(1.0);
  const int n = 2000;
  auto losses = [&](Vec2 center, std::uint64_t seed) {
    const Grid grid = Grid::covering(region, center, 50);
    SimControl ctl;
    ctl.sites = region_sites(grid, region, center);
    auto s = simulate_tube(1.0, grid, n, seed, ctl);
    for (auto& x : s) x = gev_transform(x, kGev);
    return mc_normalized_loss(s, region, 1.0, 1.0, center);
  };
  const auto a = losses({0.0, 0.0}, 1401);
  const auto b = losses({3.0, 3.0}, 1402);
  const double d = ks_two_sample(a, b);
  const double p = ks_pvalue(d, n * n / double(2 * n));
  return {p >= 0.01, fmt("two-sample KS distance %.4f, p-value %.3g (needs >= 0.01), %.1f s", d, p,
                         sw.seconds())};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome c15() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "maxrisk_acceptance_c15";
  fs::create_directories(dir);
  const fs::path cfg = dir / "run.json";
  std::ofstream(cfg) << R"({
  "depsurface": {"psi": [1, 2], "beta": [1, 4], "n_h": 9},
  "simulate": {"n_rep": 24, "region": {"shape": "square", "R": 1, "lambda": 3},
               "variogram": {"psi": 1}, "alphas": [0.9], "bootstrap": 50}
})";
  bool ok = true;
  std::string d;
  for (const char* cmd : {"depsurface", "simulate"}) {
    std::string ref_csv, ref_bin;
    for (int threads : {1, 2, 4}) {
      const fs::path out = dir / fmt("%s_%d.csv", cmd, threads);
      const std::string line = fmt("%s %s --config %s --seed 99 --threads %d --out %s", MAXRISK_CLI, cmd,
                                   cfg.c_str(), threads, out.c_str());
      if (std::system(line.c_str()) != 0) {
        ok = false;
        d += fmt("%s failed at %d threads; ", cmd, threads);
        continue;
      }
      const std::string csv = slurp(out);
      const std::string bin = fs::exists(out.string() + ".bin") ? slurp(out.string() + ".bin") : "";
      if (threads == 1) {
        ref_csv = csv;
        ref_bin = bin;
      } else if (csv != ref_csv || bin != ref_bin) {
        ok = false;
        d += fmt("%s differs at %d threads; ", cmd, threads);
      }
    }
    d += fmt("%s: %zu CSV bytes", cmd, ref_csv.size());
    if (!ref_bin.empty()) d += fmt(" + %zu dump bytes", ref_bin.size());
    d += "; ";
  }
  fs::remove_all(dir);
  return {ok, d + "compared at 1, 2 and 4 threads"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{c1, c2, c3,  c4,  c5,  c6,  c7, c8,
                                                       c9, c10, c11, c12, c13, c14, c15};
  std::set<int> chosen;
  for (int i = 1; i < argc; ++i) chosen.insert(std::atoi(argv[i]));
  if (chosen.empty()) {
    for (int i = 1; i <= 15; ++i) chosen.insert(i);
  }
  want_c10 = chosen.count(10) > 0;
  int failed = 0;
  for (int i : chosen) {
    if (i < 1 || i > 15) continue;
    Outcome o;
    try {
      o = criteria[i - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d: %s  %s\n", i, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(chosen.size()) - failed, chosen.size());
  return failed ? 1 : 0;
}
