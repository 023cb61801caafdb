#pragma once

// Configuration and commands behind the maxrisk executable. Each command
// writes a CSV table (comma separated, header row, 12 significant digits).

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "maxrisk/dependence.hpp"
#include "maxrisk/geometry.hpp"
#include "maxrisk/numerics.hpp"
#include "maxrisk/variogram.hpp"

namespace maxrisk {

/// Invalid configuration; the message names the offending key or line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadConfig {
  double rel_tol = 3e-7;
  double abs_floor = 1e-12;
  int max_subdivisions = 4000;

  QuadSpec spec() const;
  friend bool operator==(const QuadConfig&, const QuadConfig&) = default;
};

struct DepSurfaceConfig {
  GevParams gev{};
  double kappa = 1.0;
  std::vector<double> psi{0.5, 1.0, 1.5, 2.0};
  std::vector<int> beta{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  int n_h = 101;
  /// Largest h is kappa * gamma_max^(1/psi), unless h_max is set.
  double gamma_max = 50.0;
  std::optional<double> h_max;
  QuadConfig quad{};
  friend bool operator==(const DepSurfaceConfig&,
                         const DepSurfaceConfig&) = default;
};

struct R2CurvesConfig {
  GevParams gev{};
  double kappa = 1.0;
  std::vector<double> psi{0.5, 1.0, 1.5, 2.0};
  int beta = 1;
  std::vector<std::string> shapes{"disk", "square"};
  double R = 1.0;
  double lambda_min = 0.01;
  double lambda_max = 100.0;
  int n_lambda = 41;
  QuadConfig quad{};
  friend bool operator==(const R2CurvesConfig&, const R2CurvesConfig&) = default;
};

struct RegionConfig {
  std::string shape = "disk";
  double R = 1.0;
  double lambda = 1.0;

  Region region() const;
  friend bool operator==(const RegionConfig&, const RegionConfig&) = default;
};

struct VariogramConfig {
  std::string type = "power";  // power, power_m, quadratic_form, anisotropic_power
  double kappa = 1.0;
  double m = 1.0;
  double psi = 1.0;
  std::array<double, 3> sigma{1.0, 0.0, 1.0};  // xx, xy, yy

  Variogram variogram() const;
  friend bool operator==(const VariogramConfig&,
                         const VariogramConfig&) = default;
};

struct RiskReportConfig {
  GevParams gev{};
  VariogramConfig variogram{};
  int beta = 1;
  std::vector<RegionConfig> regions{RegionConfig{}};
  std::vector<double> lambdas{1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  std::vector<double> alphas{0.5, 0.95, 0.99};
  QuadConfig quad{};
  friend bool operator==(const RiskReportConfig&,
                         const RiskReportConfig&) = default;
};

struct SimulateConfig {
  std::string model = "brown_resnick";  // brown_resnick, smith, tube, schlather
  std::string method = "extremal_functions";  // or truncated_spectral
  int n_points = 1000;
  VariogramConfig variogram{};
  std::array<double, 3> smith_sigma{1.0, 0.0, 1.0};
  double tube_radius = 1.0;
  /// Schlather correlation exp(-h / schlather_range).
  double schlather_range = 1.0;
  std::string margin = "gev";  // gev or simple
  GevParams gev{};
  double beta = 1.0;
  RegionConfig region{};
  std::array<double, 2> center{0.0, 0.0};
  int cells_per_diameter = 50;
  int n_rep = 100;
  std::uint64_t seed = 1;
  std::vector<double> alphas{0.95};
  int bootstrap = 200;
  std::string dump;
  QuadConfig quad{};
  friend bool operator==(const SimulateConfig&, const SimulateConfig&) = default;
};

struct RunConfig {
  DepSurfaceConfig depsurface{};
  R2CurvesConfig r2curves{};
  RiskReportConfig riskreport{};
  SimulateConfig simulate{};
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses a JSON document; missing keys keep their defaults, unknown keys
/// are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& c);

/// 12 significant digits, '.' as decimal separator.
std::string format_number(double x);

void cmd_depsurface(const DepSurfaceConfig& c, std::ostream& out,
                    int threads = 1);
void cmd_r2curves(const R2CurvesConfig& c, std::ostream& out, int threads = 1);
void cmd_riskreport(const RiskReportConfig& c, std::ostream& out,
                    int threads = 1);
/// Summary CSV to out; the field samples go to dump_path when non-empty.
void cmd_simulate(const SimulateConfig& c, std::ostream& out,
                  const std::string& dump_path, int threads = 1);

}  // namespace maxrisk
