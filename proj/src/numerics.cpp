#include "maxrisk/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "maxrisk/error.hpp"

namespace maxrisk {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525478126, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double lo, hi;
  double value, error, abs_value;
  int piece;
  bool operator<(const Segment& o) const { return error < o.error; }
};

// Maps a (possibly infinite) piece onto a finite parameter interval.
struct Piece {
  enum Kind { finite, upper_infinite, lower_infinite, both_infinite } kind;
  double anchor;
  double scale;

  // Returns f(x(t)) * dx/dt.
  double eval(const Integrand& f, double t) const {
    switch (kind) {
      case finite:
        return f(t);
      case upper_infinite: {
        const double u = 1.0 - t;
        return f(anchor + scale * t / u) * scale / (u * u);
      }
      case lower_infinite: {
        const double u = 1.0 - t;
        return f(anchor - scale * t / u) * scale / (u * u);
      }
      case both_infinite: {
        // t in (-1, 1)
        const double u = 1.0 - t * t;
        return f(anchor + scale * t / u) * scale * (1.0 + t * t) / (u * u);
      }
    }
    return 0.0;
  }
};

Segment kronrod21(const Integrand& f, const Piece& piece, double lo,
                  double hi, int index) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = piece.eval(f, center);
  double resk = fc * kWgk[10];
  double resg = 0.0;
  double resabs = std::abs(resk);
  std::array<double, 10> f1{}, f2{};
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    f1[j] = piece.eval(f, center - dx);
    f2[j] = piece.eval(f, center + dx);
    resk += kWgk[j] * (f1[j] + f2[j]);
    resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1[j] + f2[j]);
  }
  const double mean = resk * 0.5;
  double resasc = kWgk[10] * std::abs(fc - mean);
  for (int j = 0; j < 10; ++j) {
    resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  }
  double err = std::abs((resk - resg) * half);
  resasc *= std::abs(half);
  resabs *= std::abs(half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) {
    err = std::max(50.0 * kEps * resabs, err);
  }
  return Segment{lo, hi, resk * half, err, resabs, index};
}

}  // namespace

void QuadSpec::validate() const {
  if (!(rel_tol > 0.0)) throw DomainError("QuadSpec: rel_tol must be > 0");
  if (!(abs_floor >= 0.0)) {
    throw DomainError("QuadSpec: abs_floor must be >= 0");
  }
  if (max_subdivisions < 1) {
    throw DomainError("QuadSpec: max_subdivisions must be >= 1");
  }
  if (!(infinite_scale > 0.0)) {
    throw DomainError("QuadSpec: infinite_scale must be > 0");
  }
}

QuadResult integrate(const Integrand& f, double a, double b,
                     const QuadSpec& spec) {
  if (a > b) {
    QuadResult r = integrate(f, b, a, spec);
    r.value = -r.value;
    return r;
  }
  const std::array<double, 2> pts{a, b};
  return integrate(f, pts, spec);
}

QuadResult integrate(const Integrand& f, std::span<const double> breakpoints,
                     const QuadSpec& spec) {
  spec.validate();
  if (breakpoints.size() < 2) {
    throw DomainError("integrate: need at least two breakpoints");
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (std::isnan(breakpoints[i]) || !(breakpoints[i] > breakpoints[i - 1])) {
      if (breakpoints[i] == breakpoints[i - 1]) continue;
      throw DomainError("integrate: breakpoints must be increasing");
    }
  }

  std::vector<Piece> pieces;
  std::priority_queue<Segment> heap;
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    const double lo = breakpoints[i - 1];
    const double hi = breakpoints[i];
    if (lo == hi) continue;
    const bool lo_inf = std::isinf(lo);
    const bool hi_inf = std::isinf(hi);
    Piece p{Piece::finite, 0.0, spec.infinite_scale};
    double t0 = lo, t1 = hi;
    if (lo_inf && hi_inf) {
      p.kind = Piece::both_infinite;
      t0 = -1.0;
      t1 = 1.0;
    } else if (hi_inf) {
      p.kind = Piece::upper_infinite;
      p.anchor = lo;
      t0 = 0.0;
      t1 = 1.0;
    } else if (lo_inf) {
      p.kind = Piece::lower_infinite;
      p.anchor = hi;
      t0 = 0.0;
      t1 = 1.0;
    }
    pieces.push_back(p);
    heap.push(kronrod21(f, pieces.back(), t0, t1,
                        static_cast<int>(pieces.size() - 1)));
  }

  double total = 0.0, total_err = 0.0, total_abs = 0.0;
  auto recompute = [&] {
    // Summing from scratch keeps the running totals free of drift.
    total = total_err = total_abs = 0.0;
    auto copy = heap;
    while (!copy.empty()) {
      total += copy.top().value;
      total_err += copy.top().error;
      total_abs += copy.top().abs_value;
      copy.pop();
    }
  };
  recompute();

  int subdivisions = 0;
  std::vector<Segment> frozen;  // too narrow to split further
  auto tolerance = [&] {
    return std::max({spec.rel_tol * std::abs(total), spec.abs_floor,
                     1e3 * kEps * total_abs});
  };

  while (total_err > tolerance()) {
    if (spec.cancel && spec.cancel->load(std::memory_order_relaxed)) {
      throw ConvergenceError("integrate: cancelled", total, total_err);
    }
    if (heap.empty()) break;
    if (subdivisions >= spec.max_subdivisions) {
      throw ConvergenceError(
          "integrate: subdivision limit (" +
              std::to_string(spec.max_subdivisions) + ") reached",
          total, total_err);
    }
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi) ||
        (worst.hi - worst.lo) <
            1e2 * kEps * std::max(std::abs(worst.lo), std::abs(worst.hi))) {
      frozen.push_back(worst);
      continue;
    }
    const Piece& piece = pieces[static_cast<std::size_t>(worst.piece)];
    const Segment left = kronrod21(f, piece, worst.lo, mid, worst.piece);
    const Segment right = kronrod21(f, piece, mid, worst.hi, worst.piece);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    total_abs += left.abs_value + right.abs_value - worst.abs_value;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
    if (subdivisions % 64 == 0) {
      recompute();
      for (const auto& s : frozen) {
        total += s.value;
        total_err += s.error;
        total_abs += s.abs_value;
      }
    }
  }

  if (!std::isfinite(total)) {
    throw ConvergenceError("integrate: non-finite integrand values", total,
                           total_err);
  }
  if (total_err > tolerance()) {
    throw ConvergenceError("integrate: roundoff prevents reaching tolerance",
                           total, total_err);
  }
  return QuadResult{total, total_err, subdivisions};
}

double gamma(double x) {
  if (std::isnan(x)) throw DomainError("gamma: NaN argument");
  if (x <= 0.0 && x == std::floor(x)) {
    throw DomainError("gamma: pole at non-positive integer " +
                      std::to_string(x));
  }
  return std::tgamma(x);
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("normal_quantile: argument must lie in (0, 1)");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * alpha);
}

double normal_log_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  if (x > -35.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // Asymptotic expansion of the Mills ratio.
  const double z = 1.0 / (x * x);
  const double series =
      1.0 - z * (1.0 - z * (3.0 - z * (15.0 - z * (105.0 - z * 945.0))));
  return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log(series);
}

double std_normal(NormalKind kind, double x) {
  switch (kind) {
    case NormalKind::cdf:
      return normal_cdf(x);
    case NormalKind::pdf:
      return normal_pdf(x);
    case NormalKind::quantile:
      return normal_quantile(x);
  }
  throw DomainError("std_normal: unknown kind");
}

}  // namespace maxrisk
