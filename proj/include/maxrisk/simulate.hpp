#pragma once

// Monte-Carlo generators for max-stable fields on regular grids and the
// empirical counterparts of the analytic risk quantities.
//
// Every replicate draws from its own engine, seeded from (seed, replicate
// index), so results do not depend on the number of threads.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "maxrisk/dependence.hpp"
#include "maxrisk/geometry.hpp"
#include "maxrisk/variogram.hpp"

namespace maxrisk {

/// Nodes origin + spacing * (i, j), stored row-major with index j * nx + i.
struct Grid {
  Vec2 origin{};
  int nx = 1;
  int ny = 1;
  double spacing = 1.0;

  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  Vec2 point(std::size_t index) const;

  /// Cell-midpoint grid over the bounding box of the region centred at
  /// center, with spacing at most diameter / cells_per_diameter.
  static Grid covering(const Region& region, Vec2 center = {},
                       int cells_per_diameter = 50);

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// One replicate. Sites that were not simulated hold NaN.
struct FieldSample {
  Grid grid;
  std::vector<double> values;
  MarginMode margin = SimpleMargin{};
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  double at(int i, int j) const { return values[std::size_t(j) * grid.nx + i]; }
};

struct SimControl {
  int threads = 1;
  /// Grid indices to simulate; empty means every node.
  std::vector<std::size_t> sites;
};

/// Exact simulation (one spectral function per record-setting site).
struct ExtremalFunctions {};
/// Maximum over the first n_points Poisson points only.
struct TruncatedSpectral {
  int n_points = 1000;
};
using BrownResnickMethod = std::variant<ExtremalFunctions, TruncatedSpectral>;

struct SimReport {
  /// Average number of spectral functions (or storms) per replicate.
  double mean_functions = 0.0;
  /// Share of simulated values that a further point could plausibly have
  /// raised; 0 for the exact generators.
  double truncation_indicator = 0.0;
};

/// Engine of replicate `index` under master seed `seed`.
std::mt19937_64 replicate_engine(std::uint64_t seed, std::uint64_t index);

/// Runs body(0) ... body(n - 1) on up to `threads` threads. The first
/// exception (by index) is rethrown.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body);

/// One draw of the Gaussian field with stationary increments, W = 0 at the
/// first grid node.
std::vector<double> gaussian_increment_field(const Variogram& v,
                                             const Grid& grid,
                                             std::uint64_t seed);

std::vector<FieldSample> simulate_brown_resnick(
    const Variogram& v, const Grid& grid, int n_rep, std::uint64_t seed,
    BrownResnickMethod method = ExtremalFunctions{}, const SimControl& ctl = {},
    SimReport* report = nullptr);

/// Mixed moving maxima with Gaussian storms of covariance sigma; centres are
/// drawn on the grid box dilated by three storm standard deviations.
std::vector<FieldSample> simulate_smith(const Sym2& sigma, const Grid& grid,
                                        int n_rep, std::uint64_t seed,
                                        const SimControl& ctl = {},
                                        SimReport* report = nullptr);

/// Mixed moving maxima with flat disk storms of radius r_b.
std::vector<FieldSample> simulate_tube(double r_b, const Grid& grid, int n_rep,
                                       std::uint64_t seed,
                                       const SimControl& ctl = {},
                                       SimReport* report = nullptr);

/// Extremal Gaussian field, Y = sqrt(2 pi) max(eps, 0). Points stop once
/// sqrt(2 pi) * cap * zeta falls below the running minimum, so values of eps
/// above `cap` are the only source of bias (counted in the report).
std::vector<FieldSample> simulate_schlather(
    const std::function<double(double)>& correlation, const Grid& grid,
    int n_rep, std::uint64_t seed, const SimControl& ctl = {},
    SimReport* report = nullptr, double cap = 4.5);

/// (eta - tau/xi) + (tau/xi) z^xi, or eta + tau log z for xi = 0.
double gev_transform(double z, const GevParams& p);
FieldSample gev_transform(const FieldSample& s, const GevParams& p);

/// Grid indices inside the region centred at center.
std::vector<std::size_t> region_sites(const Grid& grid, const Region& region,
                                      Vec2 center = {});

/// Midpoint-rule L_N over the region dilated by lambda, one value per
/// sample. The grid must cover the region with spacing <= diameter / 50.
std::vector<double> mc_normalized_loss(std::span<const FieldSample> samples,
                                       const Region& region, double lambda,
                                       double beta, Vec2 center = {});

enum class MeasureKind { value_at_risk, expected_shortfall, variance, mean };

struct RiskMeasure {
  MeasureKind kind = MeasureKind::mean;
  double alpha = 0.95;
};

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  /// Fewer than 20 observations in the tail.
  bool precision_warning = false;
};

/// Empirical VaR (order statistic), ES (mean beyond VaR), variance or mean,
/// with a bootstrap standard error.
McEstimate mc_risk(std::span<const double> losses, RiskMeasure measure,
                   int resamples = 200, std::uint64_t seed = 0);

/// Little-endian dump: "MXFS", u32 version, u32 count, u32 nx, u32 ny,
/// f64 origin x, f64 origin y, f64 spacing, u32 margin (0 simple, 1 GEV),
/// f64 eta, tau, xi; then per sample u64 seed, u64 replicate and nx*ny f64
/// values row-major. All samples must share grid and margin.
void write_field_samples(const std::string& path,
                         std::span<const FieldSample> samples);
std::vector<FieldSample> read_field_samples(const std::string& path);

}  // namespace maxrisk
