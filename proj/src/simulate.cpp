#include "maxrisk/simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "maxrisk/error.hpp"

namespace maxrisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

std::vector<std::size_t> active_sites(const Grid& grid, const SimControl& ctl) {
  if (ctl.sites.empty()) {
    std::vector<std::size_t> all(grid.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  for (std::size_t s : ctl.sites) {
    if (s >= grid.size()) throw DomainError("simulate: site index off grid");
  }
  return ctl.sites;
}

std::vector<Vec2> site_points(const Grid& grid,
                              const std::vector<std::size_t>& sites) {
  std::vector<Vec2> pts(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) pts[i] = grid.point(sites[i]);
  return pts;
}

void check_run(const Grid& grid, int n_rep, const SimControl& ctl) {
  grid.validate();
  if (n_rep < 0) throw DomainError("simulate: n_rep must be >= 0");
  if (ctl.threads < 1) throw DomainError("simulate: threads must be >= 1");
}

FieldSample blank_sample(const Grid& grid, std::uint64_t seed,
                         std::uint64_t rep) {
  FieldSample s;
  s.grid = grid;
  s.values.assign(grid.size(), kNaN);
  s.seed = seed;
  s.replicate = rep;
  return s;
}

/// Square root of a covariance matrix, possibly of reduced rank. Tries
/// Cholesky first and falls back to a clipped eigen-decomposition, which
/// also covers the exactly degenerate quadratic variogram.
Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& cov) {
  if (cov.rows() == 0) return Eigen::MatrixXd(0, 0);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd l = llt.matrixL();
    if (l.allFinite()) return l;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw ConvergenceError("covariance factorization failed", 0.0, HUGE_VAL);
  }
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  if (ev.minCoeff() < -1e-8 * top) {
    throw ConvergenceError("covariance matrix is not positive semi-definite",
                           ev.minCoeff(), top);
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > 1e-12 * top) keep.push_back(i);
  }
  Eigen::MatrixXd root(cov.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    root.col(c) = eig.eigenvectors().col(keep[c]) * std::sqrt(ev[keep[c]]);
  }
  return root;
}

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Root of Cov(W(x_i), W(x_j)) with W(x_0) = 0; row 0 is zero. When the
/// Cholesky factor is used, row j has non-zeros in its first j entries only.
struct IncrementRoot {
  RowMatrix m;
  bool triangular = false;
};

IncrementRoot increment_root(const Variogram& v, const std::vector<Vec2>& pts) {
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  IncrementRoot out;
  if (n <= 1) {
    out.m = RowMatrix::Zero(n, 0);
    out.triangular = true;
    return out;
  }
  Eigen::MatrixXd cov(n - 1, n - 1);
  std::vector<double> g0(pts.size());
  for (std::size_t i = 1; i < pts.size(); ++i) g0[i] = v.eval(pts[i] - pts[0]);
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 1; j <= i; ++j) {
      const double c = 0.5 * (g0[i] + g0[j] - v.eval(pts[i] - pts[j]));
      cov(i - 1, j - 1) = c;
      cov(j - 1, i - 1) = c;
    }
  }
  const Eigen::MatrixXd r = covariance_root(cov);
  out.triangular = r.cols() == n - 1 && r.isLowerTriangular();
  out.m = RowMatrix::Zero(n, r.cols());
  out.m.bottomRows(n - 1) = r;
  return out;
}

/// Hands out Gaussian vectors root * N(0, I) one at a time, produced in
/// blocks so the products run as matrix-matrix multiplications.
class GaussianStream {
 public:
  GaussianStream(const RowMatrix& root, std::mt19937_64& eng)
      : root_(root), eng_(eng),
        block_(std::clamp<Eigen::Index>(root.rows() / 8, 1, 64)) {}

  const double* next() {
    if (used_ >= filled_) refill();
    return fields_.col(used_++).data();
  }

 private:
  void refill() {
    Eigen::MatrixXd e(root_.cols(), block_);
    for (Eigen::Index c = 0; c < block_; ++c) {
      for (Eigen::Index r = 0; r < root_.cols(); ++r) e(r, c) = normal_(eng_);
    }
    fields_.noalias() = root_ * e;
    filled_ = block_;
    used_ = 0;
  }

  const RowMatrix& root_;
  std::mt19937_64& eng_;
  std::normal_distribution<double> normal_;
  Eigen::Index block_;
  Eigen::MatrixXd fields_;
  Eigen::Index filled_ = 0, used_ = 0;
};

struct Counters {
  std::atomic<long long> functions{0};
  std::atomic<long long> flagged{0};
  std::atomic<long long> values{0};

  void fill(SimReport* report, int n_rep) const {
    if (report == nullptr) return;
    report->mean_functions =
        n_rep > 0 ? double(functions.load()) / n_rep : 0.0;
    report->truncation_indicator =
        values.load() > 0 ? double(flagged.load()) / double(values.load())
                          : 0.0;
  }
};

// Brown-Resnick, exact: Dombry, Engelke and Oesting's extremal functions.
// With a triangular root W is built lazily: a candidate for site k needs
// W(x_k) and then W(x_j) for earlier sites only until one of them rejects
// it, checked from the most recent site backwards (usually the nearest).
// Only accepted candidates pay for the whole field.
void extremal_functions_replicate(const IncrementRoot& root,
                                  const Eigen::MatrixXd& half_gamma,
                                  std::mt19937_64& eng, std::vector<double>& z,
                                  long long& functions) {
  const std::size_t n = z.size();
  const Eigen::Index dim = root.m.cols();
  std::exponential_distribution<double> exp1;
  std::normal_distribution<double> normal;
  Eigen::VectorXd e(dim), w(static_cast<Eigen::Index>(n));
  auto lazy_w = [&](std::size_t j) {
    const auto jj = static_cast<Eigen::Index>(j);
    return j == 0 ? 0.0 : root.m.row(jj).head(jj).dot(e.head(jj));
  };
  std::fill(z.begin(), z.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double* hg = half_gamma.col(static_cast<Eigen::Index>(k)).data();
    double arrivals = exp1(eng);
    double zeta = 1.0 / arrivals;
    while (zeta > z[k]) {
      ++functions;
      bool accepted = true;
      if (root.triangular) {
        const auto kk = static_cast<Eigen::Index>(k);
        for (Eigen::Index i = 0; i < kk; ++i) e[i] = normal(eng);
        const double wk = lazy_w(k);
        for (std::size_t j = k; j-- > 0;) {
          w[j] = lazy_w(j);
          if (zeta * std::exp(w[j] - wk - hg[j]) > z[j]) {
            accepted = false;
            break;
          }
        }
        if (accepted) {
          for (Eigen::Index i = kk; i < dim; ++i) e[i] = normal(eng);
          w[k] = wk;
          for (std::size_t j = k + 1; j < n; ++j) w[j] = lazy_w(j);
        }
      } else {
        for (Eigen::Index i = 0; i < dim; ++i) e[i] = normal(eng);
        w.noalias() = root.m * e;
        for (std::size_t j = k; j-- > 0;) {
          if (zeta * std::exp(w[j] - w[k] - hg[j]) > z[j]) {
            accepted = false;
            break;
          }
        }
      }
      if (accepted) {
        const double wk = w[k];
        for (std::size_t j = k; j < n; ++j) {
          z[j] = std::max(z[j], zeta * std::exp(w[j] - wk - hg[j]));
        }
      }
      arrivals += exp1(eng);
      zeta = 1.0 / arrivals;
    }
  }
}

void truncated_spectral_replicate(const RowMatrix& root,
                                  const std::vector<double>& half_var,
                                  const std::vector<double>& upper,
                                  int n_points, std::mt19937_64& eng,
                                  std::vector<double>& z, long long& flagged) {
  const std::size_t n = z.size();
  std::exponential_distribution<double> exp1;
  GaussianStream stream(root, eng);
  std::fill(z.begin(), z.end(), 0.0);
  double arrivals = 0.0;
  for (int i = 0; i < n_points; ++i) {
    arrivals += exp1(eng);
    const double zeta = 1.0 / arrivals;
    const double* w = stream.next();
    for (std::size_t j = 0; j < n; ++j) {
      z[j] = std::max(z[j], zeta * std::exp(w[j] - half_var[j]));
    }
  }
  const double next_zeta = 1.0 / (arrivals + exp1(eng));
  for (std::size_t j = 0; j < n; ++j) {
    if (next_zeta * upper[j] > z[j]) ++flagged;
  }
}

/// Shared driver for the mixed-moving-maxima generators. shape(d) is the
/// storm profile at offset d, peak its maximum, reach the radius that
/// dilates the sampling box.
template <class Shape>
std::vector<FieldSample> simulate_m3(const Shape& shape, double peak,
                                     double reach, const Grid& grid,
                                     int n_rep, std::uint64_t seed,
                                     const SimControl& ctl, SimReport* report) {
  check_run(grid, n_rep, ctl);
  const auto sites = active_sites(grid, ctl);
  const auto pts = site_points(grid, sites);
  double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
  for (const Vec2& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  x0 -= reach;
  x1 += reach;
  y0 -= reach;
  y1 += reach;
  const double box = (x1 - x0) * (y1 - y0);

  std::vector<FieldSample> out(static_cast<std::size_t>(n_rep));
  Counters counters;
  parallel_for(out.size(), ctl.threads, [&](std::size_t r) {
    auto eng = replicate_engine(seed, r);
    std::exponential_distribution<double> exp1;
    std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
    std::vector<double> z(pts.size(), 0.0);
    double zmin = 0.0;
    double arrivals = 0.0;
    long long storms = 0;
    while (true) {
      arrivals += exp1(eng);
      const double u = box / arrivals;
      if (u * peak <= zmin) break;
      const Vec2 c{ux(eng), uy(eng)};
      ++storms;
      bool touched = false;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        const double val = u * shape(pts[j] - c);
        if (val > z[j]) {
          z[j] = val;
          touched = true;
        }
      }
      if (touched) zmin = *std::min_element(z.begin(), z.end());
    }
    FieldSample s = blank_sample(grid, seed, r);
    for (std::size_t j = 0; j < sites.size(); ++j) s.values[sites[j]] = z[j];
    out[r] = std::move(s);
    counters.functions += storms;
  });
  counters.fill(report, n_rep);
  return out;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t get_uint(std::istream& is, int bytes) {
  unsigned char b[8] = {};
  is.read(reinterpret_cast<char*>(b), bytes);
  if (!is) throw DomainError("field dump: unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_uint(is, 8));
}

}  // namespace

void Grid::validate() const {
  if (nx < 1 || ny < 1) throw DomainError("grid: nx and ny must be >= 1");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw DomainError("grid: spacing must be > 0");
  }
}

Vec2 Grid::point(std::size_t index) const {
  const auto i = static_cast<double>(index % static_cast<std::size_t>(nx));
  const auto j = static_cast<double>(index / static_cast<std::size_t>(nx));
  return Vec2{origin.x + spacing * i, origin.y + spacing * j};
}

Grid Grid::covering(const Region& region, Vec2 center, int cells_per_diameter) {
  region.validate();
  if (cells_per_diameter < 1) throw DomainError("grid: need >= 1 cell");
  const double side = region.shape == Shape::disk
                          ? 2.0 * region.R * region.lambda
                          : region.R * region.lambda;
  const double max_step = region.diameter() / cells_per_diameter;
  const int cells = static_cast<int>(std::ceil(side / max_step - 1e-9));
  const double step = side / cells;
  Grid g;
  g.nx = g.ny = cells;
  g.spacing = step;
  g.origin = Vec2{center.x - 0.5 * side + 0.5 * step,
                  center.y - 0.5 * side + 0.5 * step};
  return g;
}

std::mt19937_64 replicate_engine(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads < 1) throw DomainError("parallel_for: threads must be >= 1");
  const std::size_t workers = std::min<std::size_t>(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> gaussian_increment_field(const Variogram& v,
                                             const Grid& grid,
                                             std::uint64_t seed) {
  grid.validate();
  std::vector<Vec2> pts(grid.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = grid.point(i);
  const IncrementRoot root = increment_root(v, pts);
  auto eng = replicate_engine(seed, 0);
  std::normal_distribution<double> normal;
  Eigen::VectorXd e(root.m.cols());
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = normal(eng);
  const Eigen::VectorXd w = root.m * e;
  return std::vector<double>(w.data(), w.data() + w.size());
}

std::vector<FieldSample> simulate_brown_resnick(
    const Variogram& v, const Grid& grid, int n_rep, std::uint64_t seed,
    BrownResnickMethod method, const SimControl& ctl, SimReport* report) {
  check_run(grid, n_rep, ctl);
  const auto sites = active_sites(grid, ctl);
  const auto pts = site_points(grid, sites);
  const std::size_t n = pts.size();
  const IncrementRoot root = increment_root(v, pts);

  const auto* truncated = std::get_if<TruncatedSpectral>(&method);
  if (truncated != nullptr && truncated->n_points < 1) {
    throw DomainError("truncated spectral: n_points must be >= 1");
  }
  Eigen::MatrixXd half_gamma;
  std::vector<double> half_var(n), upper(n);
  if (truncated == nullptr) {
    half_gamma.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        half_gamma(j, k) = 0.5 * v.eval(pts[j] - pts[k]);
      }
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      const double g = v.eval(pts[j] - pts[0]);
      half_var[j] = 0.5 * g;
      // 99.9% quantile of the spectral function at this site
      upper[j] = std::exp(-0.5 * g + 3.090232306 * std::sqrt(g));
    }
  }

  std::vector<FieldSample> out(static_cast<std::size_t>(n_rep));
  Counters counters;
  parallel_for(out.size(), ctl.threads, [&](std::size_t r) {
    auto eng = replicate_engine(seed, r);
    std::vector<double> z(n);
    long long functions = 0, flagged = 0;
    if (truncated == nullptr) {
      extremal_functions_replicate(root, half_gamma, eng, z, functions);
    } else {
      truncated_spectral_replicate(root.m, half_var, upper, truncated->n_points,
                                   eng, z, flagged);
      functions = truncated->n_points;
    }
    FieldSample s = blank_sample(grid, seed, r);
    for (std::size_t j = 0; j < n; ++j) s.values[sites[j]] = z[j];
    out[r] = std::move(s);
    counters.functions += functions;
    counters.flagged += flagged;
    counters.values += static_cast<long long>(n);
  });
  counters.fill(report, n_rep);
  if (report != nullptr && truncated == nullptr) report->truncation_indicator = 0.0;
  return out;
}

std::vector<FieldSample> simulate_smith(const Sym2& sigma, const Grid& grid,
                                        int n_rep, std::uint64_t seed,
                                        const SimControl& ctl,
                                        SimReport* report) {
  // Validates sigma as a storm covariance.
  (void)Variogram::quadratic_form(sigma);
  const Sym2 inv = sigma.inverse();
  const double peak = 1.0 / (2.0 * std::numbers::pi * std::sqrt(sigma.det()));
  const double reach = 3.0 * std::sqrt(std::max(sigma.eigenvalues().first, sigma.eigenvalues().second));
  auto shape = [&](Vec2 d) { return peak * std::exp(-0.5 * inv.quad(d)); };
  return simulate_m3(shape, peak, reach, grid, n_rep, seed, ctl, report);
}

std::vector<FieldSample> simulate_tube(double r_b, const Grid& grid, int n_rep,
                                       std::uint64_t seed,
                                       const SimControl& ctl,
                                       SimReport* report) {
  if (!(r_b > 0.0) || !std::isfinite(r_b)) {
    throw DomainError("tube model: storm radius must be > 0");
  }
  const double height = 1.0 / (std::numbers::pi * r_b * r_b);
  const double r2 = r_b * r_b;
  auto shape = [&](Vec2 d) {
    return d.x * d.x + d.y * d.y < r2 ? height : 0.0;
  };
  return simulate_m3(shape, height, r_b, grid, n_rep, seed, ctl, report);
}

std::vector<FieldSample> simulate_schlather(
    const std::function<double(double)>& correlation, const Grid& grid,
    int n_rep, std::uint64_t seed, const SimControl& ctl, SimReport* report,
    double cap) {
  check_run(grid, n_rep, ctl);
  if (!(cap > 0.0)) throw DomainError("schlather: cap must be > 0");
  const auto sites = active_sites(grid, ctl);
  const auto pts = site_points(grid, sites);
  const std::size_t n = pts.size();
  Eigen::MatrixXd corr(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double c = i == j ? 1.0 : correlation((pts[i] - pts[j]).norm());
      if (!(std::abs(c) <= 1.0)) {
        throw DomainError("schlather: correlation must lie in [-1, 1]");
      }
      corr(i, j) = corr(j, i) = c;
    }
  }
  const RowMatrix root = covariance_root(corr);

  std::vector<FieldSample> out(static_cast<std::size_t>(n_rep));
  Counters counters;
  parallel_for(out.size(), ctl.threads, [&](std::size_t r) {
    auto eng = replicate_engine(seed, r);
    std::exponential_distribution<double> exp1;
    GaussianStream stream(root, eng);
    std::vector<double> z(n, 0.0);
    double zmin = 0.0, arrivals = 0.0;
    long long functions = 0, flagged = 0;
    while (true) {
      arrivals += exp1(eng);
      const double zeta = 1.0 / arrivals;
      if (zeta * kSqrt2Pi * cap <= zmin) break;
      const double* eps = stream.next();
      ++functions;
      bool touched = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (eps[j] > cap) ++flagged;
        const double val = zeta * kSqrt2Pi * std::max(eps[j], 0.0);
        if (val > z[j]) {
          z[j] = val;
          touched = true;
        }
      }
      if (touched) zmin = *std::min_element(z.begin(), z.end());
    }
    FieldSample s = blank_sample(grid, seed, r);
    for (std::size_t j = 0; j < n; ++j) s.values[sites[j]] = z[j];
    out[r] = std::move(s);
    counters.functions += functions;
    counters.flagged += flagged;
    counters.values += functions * static_cast<long long>(n);
  });
  counters.fill(report, n_rep);
  return out;
}

double gev_transform(double z, const GevParams& p) {
  if (p.xi == 0.0) return p.eta + p.tau * std::log(z);
  return (p.eta - p.tau / p.xi) + p.tau / p.xi * std::pow(z, p.xi);
}

FieldSample gev_transform(const FieldSample& s, const GevParams& p) {
  if (!std::holds_alternative<SimpleMargin>(s.margin)) {
    throw DomainError("gev_transform: sample does not have simple margins");
  }
  p.validate();
  FieldSample out = s;
  out.margin = p;
  for (double& v : out.values) {
    if (!std::isnan(v)) v = gev_transform(v, p);
  }
  return out;
}

std::vector<std::size_t> region_sites(const Grid& grid, const Region& region,
                                      Vec2 center) {
  grid.validate();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (region.contains(grid.point(i), center)) out.push_back(i);
  }
  return out;
}

std::vector<double> mc_normalized_loss(std::span<const FieldSample> samples,
                                       const Region& region, double lambda,
                                       double beta, Vec2 center) {
  if (!(lambda > 0.0)) throw DomainError("mc_normalized_loss: lambda > 0");
  const Region scaled = region.scaled(lambda);
  std::vector<double> out;
  out.reserve(samples.size());
  const Grid* checked = nullptr;
  std::vector<std::size_t> sites;
  for (const FieldSample& s : samples) {
    if (checked == nullptr || !(s.grid == *checked)) {
      const Grid& g = s.grid;
      g.validate();
      if (g.spacing > scaled.diameter() / 50.0 * (1.0 + 1e-9)) {
        throw DomainError("mc_normalized_loss: grid spacing exceeds region "
                          "diameter / 50");
      }
      const double half = scaled.shape == Shape::disk
                              ? scaled.R * scaled.lambda
                              : 0.5 * scaled.R * scaled.lambda;
      const double slack = 0.5 * g.spacing * (1.0 + 1e-9);
      const Vec2 lo = g.origin;
      const Vec2 hi = g.point(g.size() - 1);
      if (center.x - half < lo.x - slack || center.x + half > hi.x + slack ||
          center.y - half < lo.y - slack || center.y + half > hi.y + slack) {
        throw DomainError("mc_normalized_loss: grid does not cover region");
      }
      sites = region_sites(g, scaled, center);
      if (sites.empty()) throw DomainError("mc_normalized_loss: empty region");
      checked = &s.grid;
    }
    double sum = 0.0;
    for (std::size_t i : sites) {
      const double z = s.values[i];
      if (std::isnan(z)) {
        throw DomainError("mc_normalized_loss: region site was not simulated");
      }
      sum += std::pow(z, beta);
    }
    out.push_back(sum / static_cast<double>(sites.size()));
  }
  return out;
}

McEstimate mc_risk(std::span<const double> losses, RiskMeasure measure,
                   int resamples, std::uint64_t seed) {
  if (losses.empty()) throw DomainError("mc_risk: no losses");
  const bool tail = measure.kind == MeasureKind::value_at_risk ||
                    measure.kind == MeasureKind::expected_shortfall;
  if (tail && !(measure.alpha > 0.0 && measure.alpha < 1.0)) {
    throw DomainError("mc_risk: alpha must lie in (0, 1)");
  }
  if (resamples < 2) throw DomainError("mc_risk: need >= 2 resamples");

  std::vector<double> work;
  auto estimate = [&](std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    switch (measure.kind) {
      case MeasureKind::mean: {
        double s = 0.0;
        for (double v : x) s += v;
        return s / n;
      }
      case MeasureKind::variance: {
        if (x.size() < 2) return 0.0;
        double m = 0.0;
        for (double v : x) m += v;
        m /= n;
        double s = 0.0;
        for (double v : x) s += (v - m) * (v - m);
        return s / (n - 1.0);
      }
      default: {
        std::sort(x.begin(), x.end());
        const auto k = static_cast<std::size_t>(
            std::clamp(std::ceil(n * measure.alpha) - 1.0, 0.0, n - 1.0));
        const double q = x[k];
        if (measure.kind == MeasureKind::value_at_risk) return q;
        double s = 0.0;
        std::size_t c = 0;
        for (std::size_t i = k + 1; i < x.size(); ++i) {
          if (x[i] > q) {
            s += x[i];
            ++c;
          }
        }
        return c == 0 ? q : s / static_cast<double>(c);
      }
    }
  };

  McEstimate r;
  work.assign(losses.begin(), losses.end());
  r.estimate = estimate(work);
  r.precision_warning =
      tail && static_cast<double>(losses.size()) * (1.0 - measure.alpha) < 20.0;

  auto eng = replicate_engine(seed, 0xB0075u);
  std::uniform_int_distribution<std::size_t> pick(0, losses.size() - 1);
  double sum = 0.0, sum2 = 0.0;
  for (int b = 0; b < resamples; ++b) {
    for (double& v : work) v = losses[pick(eng)];
    const double e = estimate(work);
    sum += e;
    sum2 += e * e;
  }
  const double m = sum / resamples;
  r.std_error = std::sqrt(std::max(0.0, (sum2 - resamples * m * m) /
                                            (resamples - 1)));
  return r;
}

void write_field_samples(const std::string& path,
                         std::span<const FieldSample> samples) {
  for (const FieldSample& s : samples) {
    if (!(s.grid == samples.front().grid) || !(s.margin == samples.front().margin)) {
      throw DomainError("field dump: samples must share grid and margin");
    }
    if (s.values.size() != s.grid.size()) {
      throw DomainError("field dump: value count does not match grid");
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("field dump: cannot open " + path);
  const Grid g = samples.empty() ? Grid{} : samples.front().grid;
  const MarginMode m = samples.empty() ? MarginMode{} : samples.front().margin;
  os.write("MXFS", 4);
  put_u32(os, 1);
  put_u32(os, static_cast<std::uint32_t>(samples.size()));
  put_u32(os, static_cast<std::uint32_t>(g.nx));
  put_u32(os, static_cast<std::uint32_t>(g.ny));
  put_f64(os, g.origin.x);
  put_f64(os, g.origin.y);
  put_f64(os, g.spacing);
  const auto* gev = std::get_if<GevParams>(&m);
  put_u32(os, gev != nullptr ? 1u : 0u);
  put_f64(os, gev != nullptr ? gev->eta : 0.0);
  put_f64(os, gev != nullptr ? gev->tau : 0.0);
  put_f64(os, gev != nullptr ? gev->xi : 0.0);
  for (const FieldSample& s : samples) {
    put_u64(os, s.seed);
    put_u64(os, s.replicate);
    for (double v : s.values) put_f64(os, v);
  }
  if (!os) throw DomainError("field dump: write failed for " + path);
}

std::vector<FieldSample> read_field_samples(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("field dump: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MXFS", 4) != 0) {
    throw DomainError("field dump: bad magic in " + path);
  }
  if (get_uint(is, 4) != 1) throw DomainError("field dump: unknown version");
  const auto count = get_uint(is, 4);
  Grid g;
  g.nx = static_cast<int>(get_uint(is, 4));
  g.ny = static_cast<int>(get_uint(is, 4));
  g.origin.x = get_f64(is);
  g.origin.y = get_f64(is);
  g.spacing = get_f64(is);
  const auto kind = get_uint(is, 4);
  GevParams p;
  p.eta = get_f64(is);
  p.tau = get_f64(is);
  p.xi = get_f64(is);
  MarginMode margin = SimpleMargin{};
  if (kind == 1) margin = p;
  std::vector<FieldSample> out(count);
  for (FieldSample& s : out) {
    s.grid = g;
    s.margin = margin;
    s.seed = get_uint(is, 8);
    s.replicate = get_uint(is, 8);
    s.values.resize(g.size());
    for (double& v : s.values) v = get_f64(is);
  }
  return out;
}

}  // namespace maxrisk
