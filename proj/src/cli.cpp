#include "maxrisk/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "maxrisk/error.hpp"
#include "maxrisk/risk.hpp"
#include "maxrisk/simulate.hpp"

namespace maxrisk {

namespace {

using nlohmann::json;

/// Reads keys of one JSON object, remembering which were consumed so that
/// leftovers (typos) can be reported.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  /// Nested object handled by a reader function.
  template <class F>
  void child(const char* key, F&& read) {
    seen_.insert(key);
    if (j_.contains(key)) read(Block(j_.at(key), path_ + "." + key));
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  bool has(const char* key) const { return j_.contains(key); }
  const std::string& path() const { return path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_gev(Block b, GevParams& g) {
  b.get("eta", g.eta);
  b.get("tau", g.tau);
  b.get("xi", g.xi);
  b.finish();
}

void read_quad(Block b, QuadConfig& q) {
  b.get("rel_tol", q.rel_tol);
  b.get("abs_floor", q.abs_floor);
  b.get("max_subdivisions", q.max_subdivisions);
  b.finish();
}

void read_region(Block b, RegionConfig& r) {
  b.get("shape", r.shape);
  b.get("R", r.R);
  b.get("lambda", r.lambda);
  b.finish();
}

void read_variogram(Block b, VariogramConfig& v) {
  b.get("type", v.type);
  b.get("kappa", v.kappa);
  b.get("m", v.m);
  b.get("psi", v.psi);
  b.get("sigma", v.sigma);
  b.finish();
}

json gev_json(const GevParams& g) {
  return {{"eta", g.eta}, {"tau", g.tau}, {"xi", g.xi}};
}

json quad_json(const QuadConfig& q) {
  return {{"rel_tol", q.rel_tol},
          {"abs_floor", q.abs_floor},
          {"max_subdivisions", q.max_subdivisions}};
}

json region_json(const RegionConfig& r) {
  return {{"shape", r.shape}, {"R", r.R}, {"lambda", r.lambda}};
}

json variogram_json(const VariogramConfig& v) {
  return {{"type", v.type}, {"kappa", v.kappa}, {"m", v.m},
          {"psi", v.psi},   {"sigma", v.sigma}};
}

// Re-raises library domain errors as configuration errors under a key.
template <class F>
auto as_config(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const UnsupportedError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void validate_psi_list(const std::vector<double>& psi, const std::string& at) {
  require(!psi.empty(), at + ": list must not be empty");
  for (double p : psi) {
    require(p > 0.0 && p <= 2.0, at + ": psi must lie in (0, 2]");
  }
}

void validate(const DepSurfaceConfig& c) {
  as_config("depsurface.gev", [&] { c.gev.validate(); });
  require(c.kappa > 0.0, "depsurface.kappa: must be > 0");
  validate_psi_list(c.psi, "depsurface.psi");
  require(!c.beta.empty(), "depsurface.beta: list must not be empty");
  for (int b : c.beta) {
    as_config("depsurface.beta", [&] {
      PowerSpec::gev(b, c.gev).require_moments(2);
    });
  }
  require(c.n_h >= 2, "depsurface.n_h: must be >= 2");
  require(c.gamma_max > 0.0, "depsurface.gamma_max: must be > 0");
  require(!c.h_max || *c.h_max > 0.0, "depsurface.h_max: must be > 0");
  as_config("depsurface.quad", [&] { c.quad.spec().validate(); });
}

void validate(const R2CurvesConfig& c) {
  as_config("r2curves.gev", [&] { c.gev.validate(); });
  require(c.kappa > 0.0, "r2curves.kappa: must be > 0");
  validate_psi_list(c.psi, "r2curves.psi");
  as_config("r2curves.beta", [&] {
    PowerSpec::gev(c.beta, c.gev).require_moments(2);
  });
  require(!c.shapes.empty(), "r2curves.shapes: list must not be empty");
  for (const auto& s : c.shapes) {
    require(s == "disk" || s == "square",
            "r2curves.shapes: expected 'disk' or 'square', got '" + s + "'");
  }
  require(c.R > 0.0, "r2curves.R: must be > 0");
  require(c.lambda_min > 0.0 && c.lambda_max > c.lambda_min,
          "r2curves: need 0 < lambda_min < lambda_max");
  require(c.n_lambda >= 2, "r2curves.n_lambda: must be >= 2");
  as_config("r2curves.quad", [&] { c.quad.spec().validate(); });
}

void validate(const RiskReportConfig& c) {
  as_config("riskreport.gev", [&] { c.gev.validate(); });
  const Variogram v = as_config("riskreport.variogram",
                                [&] { return c.variogram.variogram(); });
  require(v.is_isotropic(), "riskreport.variogram: must be isotropic");
  as_config("riskreport.beta", [&] {
    PowerSpec::gev(c.beta, c.gev).require_moments(2);
  });
  require(!c.regions.empty(), "riskreport.regions: list must not be empty");
  for (const auto& r : c.regions) {
    as_config("riskreport.regions", [&] { return r.region(); });
  }
  require(!c.lambdas.empty(), "riskreport.lambdas: list must not be empty");
  for (double l : c.lambdas) require(l > 0.0, "riskreport.lambdas: must be > 0");
  require(!c.alphas.empty(), "riskreport.alphas: list must not be empty");
  for (double a : c.alphas) {
    require(a > 0.0 && a < 1.0, "riskreport.alphas: must lie in (0, 1)");
  }
  as_config("riskreport.quad", [&] { c.quad.spec().validate(); });
}

void validate(const SimulateConfig& c) {
  require(c.model == "brown_resnick" || c.model == "smith" ||
              c.model == "tube" || c.model == "schlather",
          "simulate.model: expected brown_resnick, smith, tube or schlather");
  require(c.method == "extremal_functions" || c.method == "truncated_spectral",
          "simulate.method: expected extremal_functions or "
          "truncated_spectral");
  require(c.n_points >= 1, "simulate.n_points: must be >= 1");
  if (c.model == "brown_resnick") {
    as_config("simulate.variogram", [&] { return c.variogram.variogram(); });
  }
  if (c.model == "smith") {
    as_config("simulate.smith_sigma", [&] {
      return Variogram::quadratic_form(
          Sym2{c.smith_sigma[0], c.smith_sigma[1], c.smith_sigma[2]});
    });
  }
  require(c.tube_radius > 0.0, "simulate.tube_radius: must be > 0");
  require(c.schlather_range > 0.0, "simulate.schlather_range: must be > 0");
  require(c.margin == "gev" || c.margin == "simple",
          "simulate.margin: expected gev or simple");
  as_config("simulate.gev", [&] { c.gev.validate(); });
  if (c.margin == "gev") {
    require(c.beta >= 0.0 && c.beta == std::floor(c.beta),
            "simulate.beta: GEV margins need a non-negative integer beta");
  }
  as_config("simulate.region", [&] { return c.region.region(); });
  require(c.cells_per_diameter >= 50,
          "simulate.cells_per_diameter: must be >= 50");
  require(c.n_rep >= 1, "simulate.n_rep: must be >= 1");
  for (double a : c.alphas) {
    require(a > 0.0 && a < 1.0, "simulate.alphas: must lie in (0, 1)");
  }
  require(c.bootstrap >= 2, "simulate.bootstrap: must be >= 2");
  as_config("simulate.quad", [&] { c.quad.spec().validate(); });
}

std::string line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void header(std::initializer_list<const char*> cols) {
    bool first = true;
    for (const char* c : cols) {
      if (!first) os_ << ',';
      os_ << c;
      first = false;
    }
    os_ << '\n';
  }
  CsvWriter& cell(const std::string& s) {
    sep();
    os_ << s;
    return *this;
  }
  CsvWriter& cell(double x) {
    sep();
    if (!std::isnan(x)) os_ << format_number(x);
    return *this;
  }
  void end() {
    os_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) os_ << ',';
    first_ = false;
  }
  std::ostream& os_;
  bool first_ = true;
};

PowerSpec sim_power(const SimulateConfig& c) {
  if (c.margin == "gev") return PowerSpec::gev(static_cast<int>(c.beta), c.gev);
  return PowerSpec::simple(c.beta);
}

}  // namespace

QuadSpec QuadConfig::spec() const {
  QuadSpec s;
  s.rel_tol = rel_tol;
  s.abs_floor = abs_floor;
  s.max_subdivisions = max_subdivisions;
  return s;
}

Region RegionConfig::region() const {
  if (shape == "disk") return Region::disk(R, lambda);
  if (shape == "square") return Region::square(R, lambda);
  throw DomainError("region shape must be 'disk' or 'square', got '" + shape +
                    "'");
}

Variogram VariogramConfig::variogram() const {
  const Sym2 s{sigma[0], sigma[1], sigma[2]};
  if (type == "power") return Variogram::power(kappa, psi);
  if (type == "power_m") return Variogram::power_m(m, psi);
  if (type == "quadratic_form") return Variogram::quadratic_form(s);
  if (type == "anisotropic_power") return Variogram::anisotropic_power(m, s, psi);
  throw DomainError("unknown variogram type '" + type + "'");
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: JSON syntax error at " + line_of(text, e.byte) +
                      ": " + e.what());
  }
  RunConfig c;
  Block root(j, "config");
  root.child("depsurface", [&](Block b) {
    auto& d = c.depsurface;
    b.child("gev", [&](Block g) { read_gev(std::move(g), d.gev); });
    b.get("kappa", d.kappa);
    b.get("psi", d.psi);
    b.get("beta", d.beta);
    b.get("n_h", d.n_h);
    b.get("gamma_max", d.gamma_max);
    b.get_optional("h_max", d.h_max);
    b.child("quad", [&](Block q) { read_quad(std::move(q), d.quad); });
    b.finish();
  });
  root.child("r2curves", [&](Block b) {
    auto& d = c.r2curves;
    b.child("gev", [&](Block g) { read_gev(std::move(g), d.gev); });
    b.get("kappa", d.kappa);
    b.get("psi", d.psi);
    b.get("beta", d.beta);
    b.get("shapes", d.shapes);
    b.get("R", d.R);
    b.get("lambda_min", d.lambda_min);
    b.get("lambda_max", d.lambda_max);
    b.get("n_lambda", d.n_lambda);
    b.child("quad", [&](Block q) { read_quad(std::move(q), d.quad); });
    b.finish();
  });
  root.child("riskreport", [&](Block b) {
    auto& d = c.riskreport;
    b.child("gev", [&](Block g) { read_gev(std::move(g), d.gev); });
    b.child("variogram",
            [&](Block v) { read_variogram(std::move(v), d.variogram); });
    b.get("beta", d.beta);
    if (b.has("regions")) {
      const json& arr = b.raw("regions");
      if (!arr.is_array()) throw ConfigError(b.path() + ".regions: expected a list");
      d.regions.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        RegionConfig r;
        read_region(Block(arr[i], b.path() + ".regions[" + std::to_string(i) + "]"),
                    r);
        d.regions.push_back(r);
      }
    }
    b.get("lambdas", d.lambdas);
    b.get("alphas", d.alphas);
    b.child("quad", [&](Block q) { read_quad(std::move(q), d.quad); });
    b.finish();
  });
  root.child("simulate", [&](Block b) {
    auto& d = c.simulate;
    b.get("model", d.model);
    b.get("method", d.method);
    b.get("n_points", d.n_points);
    b.child("variogram",
            [&](Block v) { read_variogram(std::move(v), d.variogram); });
    b.get("smith_sigma", d.smith_sigma);
    b.get("tube_radius", d.tube_radius);
    b.get("schlather_range", d.schlather_range);
    b.get("margin", d.margin);
    b.child("gev", [&](Block g) { read_gev(std::move(g), d.gev); });
    b.get("beta", d.beta);
    b.child("region", [&](Block r) { read_region(std::move(r), d.region); });
    b.get("center", d.center);
    b.get("cells_per_diameter", d.cells_per_diameter);
    b.get("n_rep", d.n_rep);
    b.get("seed", d.seed);
    b.get("alphas", d.alphas);
    b.get("bootstrap", d.bootstrap);
    b.get("dump", d.dump);
    b.child("quad", [&](Block q) { read_quad(std::move(q), d.quad); });
    b.finish();
  });
  root.finish();
  validate(c.depsurface);
  validate(c.r2curves);
  validate(c.riskreport);
  validate(c.simulate);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  json j;
  const auto& d = c.depsurface;
  j["depsurface"] = {{"gev", gev_json(d.gev)},
                     {"kappa", d.kappa},
                     {"psi", d.psi},
                     {"beta", d.beta},
                     {"n_h", d.n_h},
                     {"gamma_max", d.gamma_max},
                     {"h_max", d.h_max ? json(*d.h_max) : json(nullptr)},
                     {"quad", quad_json(d.quad)}};
  const auto& r = c.r2curves;
  j["r2curves"] = {{"gev", gev_json(r.gev)},
                   {"kappa", r.kappa},
                   {"psi", r.psi},
                   {"beta", r.beta},
                   {"shapes", r.shapes},
                   {"R", r.R},
                   {"lambda_min", r.lambda_min},
                   {"lambda_max", r.lambda_max},
                   {"n_lambda", r.n_lambda},
                   {"quad", quad_json(r.quad)}};
  const auto& k = c.riskreport;
  json regions = json::array();
  for (const auto& reg : k.regions) regions.push_back(region_json(reg));
  j["riskreport"] = {{"gev", gev_json(k.gev)},
                     {"variogram", variogram_json(k.variogram)},
                     {"beta", k.beta},
                     {"regions", regions},
                     {"lambdas", k.lambdas},
                     {"alphas", k.alphas},
                     {"quad", quad_json(k.quad)}};
  const auto& s = c.simulate;
  j["simulate"] = {{"model", s.model},
                   {"method", s.method},
                   {"n_points", s.n_points},
                   {"variogram", variogram_json(s.variogram)},
                   {"smith_sigma", s.smith_sigma},
                   {"tube_radius", s.tube_radius},
                   {"schlather_range", s.schlather_range},
                   {"margin", s.margin},
                   {"gev", gev_json(s.gev)},
                   {"beta", s.beta},
                   {"region", region_json(s.region)},
                   {"center", s.center},
                   {"cells_per_diameter", s.cells_per_diameter},
                   {"n_rep", s.n_rep},
                   {"seed", s.seed},
                   {"alphas", s.alphas},
                   {"bootstrap", s.bootstrap},
                   {"dump", s.dump},
                   {"quad", quad_json(s.quad)}};
  return j.dump(2) + "\n";
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void cmd_depsurface(const DepSurfaceConfig& c, std::ostream& out, int threads) {
  validate(c);
  struct Cell {
    double psi, h;
    int beta;
    double d = 0.0;
  };
  std::vector<Cell> cells;
  for (double psi : c.psi) {
    const double top = c.h_max ? *c.h_max : c.kappa * std::pow(c.gamma_max, 1.0 / psi);
    for (int i = 0; i < c.n_h; ++i) {
      const double h = top * i / (c.n_h - 1);
      for (int b : c.beta) cells.push_back({psi, h, b});
    }
  }
  const QuadSpec spec = c.quad.spec();
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    Cell& cell = cells[i];
    const Variogram v = Variogram::power(c.kappa, cell.psi);
    cell.d = dep_measure(PowerSpec::gev(cell.beta, c.gev), v, Vec2{0.0, 0.0},
                         Vec2{cell.h, 0.0}, spec);
  });
  CsvWriter csv(out);
  csv.header({"psi", "h", "beta", "D"});
  for (const Cell& cell : cells) {
    csv.cell(cell.psi).cell(cell.h).cell(double(cell.beta)).cell(cell.d).end();
  }
}

void cmd_r2curves(const R2CurvesConfig& c, std::ostream& out, int threads) {
  validate(c);
  struct Cell {
    std::string shape;
    double psi, lambda;
    double r2 = 0.0;
  };
  std::vector<Cell> cells;
  const double l0 = std::log(c.lambda_min), l1 = std::log(c.lambda_max);
  for (const auto& shape : c.shapes) {
    for (double psi : c.psi) {
      for (int i = 0; i < c.n_lambda; ++i) {
        const double lambda =
            i == c.n_lambda - 1 ? c.lambda_max
                                : std::exp(l0 + (l1 - l0) * i / (c.n_lambda - 1));
        cells.push_back({shape, psi, lambda});
      }
    }
  }
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    Cell& cell = cells[i];
    RiskQuery q;
    q.region = RegionConfig{cell.shape, c.R, 1.0}.region();
    q.power = PowerSpec::gev(c.beta, c.gev);
    q.variogram = Variogram::power(c.kappa, cell.psi);
    q.quad = c.quad.spec();
    cell.r2 = r2(q, cell.lambda);
  });
  CsvWriter csv(out);
  csv.header({"shape", "psi", "lambda", "R2"});
  for (const Cell& cell : cells) {
    csv.cell(cell.shape).cell(cell.psi).cell(cell.lambda).cell(cell.r2).end();
  }
}

void cmd_riskreport(const RiskReportConfig& c, std::ostream& out,
                    int threads) {
  validate(c);
  const PowerSpec power = PowerSpec::gev(c.beta, c.gev);
  const Variogram v = c.variogram.variogram();
  const double k = asymptotic_cov_integral(power, v, c.quad.spec());
  struct Row {
    RegionConfig region;
    double lambda, alpha;
    CltApprox clt;
    AsymptoticRisk var, es;
  };
  std::vector<Row> rows;
  for (const auto& r : c.regions) {
    for (double lambda : c.lambdas) {
      for (double alpha : c.alphas) rows.push_back({r, lambda, alpha, {}, {}, {}});
    }
  }
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    Row& row = rows[i];
    RiskQuery q;
    q.region = row.region.region();
    q.power = power;
    q.variogram = v;
    q.quad = c.quad.spec();
    q.alpha = row.alpha;
    row.clt = clt_approx(q, row.lambda, k);
    row.var = var_asymptotic(q, row.lambda, k);
    row.es = es_asymptotic(q, row.lambda, k);
  });
  CsvWriter csv(out);
  csv.header({"shape", "R", "region_lambda", "lambda", "mean", "clt_sd",
              "alpha", "var_asym", "es_asym", "degenerate_alpha"});
  for (const Row& row : rows) {
    csv.cell(row.region.shape)
        .cell(row.region.R)
        .cell(row.region.lambda)
        .cell(row.lambda)
        .cell(row.clt.mean)
        .cell(row.clt.sd())
        .cell(row.alpha)
        .cell(row.var.value)
        .cell(row.es.value)
        .cell(std::string(row.var.degenerate_alpha ? "1" : "0"))
        .end();
  }
}

void cmd_simulate(const SimulateConfig& c, std::ostream& out,
                  const std::string& dump_path, int threads) {
  validate(c);
  const Region region = c.region.region();
  const Vec2 center{c.center[0], c.center[1]};
  const Grid grid = Grid::covering(region, center, c.cells_per_diameter);
  SimControl ctl;
  ctl.threads = threads;
  ctl.sites = region_sites(grid, region, center);

  SimReport report;
  std::vector<FieldSample> samples;
  std::optional<Variogram> reference_variogram;
  if (c.model == "brown_resnick") {
    const Variogram v = c.variogram.variogram();
    BrownResnickMethod method = ExtremalFunctions{};
    if (c.method == "truncated_spectral") method = TruncatedSpectral{c.n_points};
    samples = simulate_brown_resnick(v, grid, c.n_rep, c.seed, method, ctl,
                                     &report);
    reference_variogram = v;
  } else if (c.model == "smith") {
    const Sym2 sigma{c.smith_sigma[0], c.smith_sigma[1], c.smith_sigma[2]};
    samples = simulate_smith(sigma, grid, c.n_rep, c.seed, ctl, &report);
    reference_variogram = Variogram::quadratic_form(sigma);
  } else if (c.model == "tube") {
    samples = simulate_tube(c.tube_radius, grid, c.n_rep, c.seed, ctl, &report);
  } else {
    const double range = c.schlather_range;
    samples = simulate_schlather([range](double h) { return std::exp(-h / range); },
                                 grid, c.n_rep, c.seed, ctl, &report);
  }
  if (c.margin == "gev") {
    for (auto& s : samples) s = gev_transform(s, c.gev);
  }
  if (!dump_path.empty()) write_field_samples(dump_path, samples);

  const Region base{region.shape, region.R, 1.0};
  const std::vector<double> losses =
      mc_normalized_loss(samples, base, region.lambda, c.beta, center);

  // Analytic references where a closed route exists.
  const PowerSpec power = sim_power(c);
  auto attempt = [](auto&& f) {
    try {
      return f();
    } catch (const std::exception&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  const double ref_mean = attempt([&] { return mean_cost(power); });
  RiskQuery q;
  q.region = base;
  q.power = power;
  q.quad = c.quad.spec();
  const bool radial = reference_variogram && reference_variogram->is_isotropic();
  if (radial) q.variogram = *reference_variogram;
  const double ref_var =
      radial ? attempt([&] { return r2(q, region.lambda); }) : std::nan("");
  const double k = radial ? attempt([&] {
    return asymptotic_cov_integral(power, q.variogram, q.quad);
  })
                          : std::nan("");

  CsvWriter csv(out);
  csv.header({"quantity", "alpha", "estimate", "std_error", "reference"});
  const auto mean = mc_risk(losses, {MeasureKind::mean, 0.5}, c.bootstrap, c.seed);
  csv.cell("mean").cell(std::nan("")).cell(mean.estimate).cell(mean.std_error)
      .cell(ref_mean).end();
  const auto var = mc_risk(losses, {MeasureKind::variance, 0.5}, c.bootstrap, c.seed);
  csv.cell("variance").cell(std::nan("")).cell(var.estimate).cell(var.std_error)
      .cell(ref_var).end();
  for (double alpha : c.alphas) {
    q.alpha = alpha;
    const auto mv = mc_risk(losses, {MeasureKind::value_at_risk, alpha},
                            c.bootstrap, c.seed);
    const double rv = std::isnan(k) ? k : attempt([&] {
      return var_asymptotic(q, region.lambda, k).value;
    });
    csv.cell("value_at_risk").cell(alpha).cell(mv.estimate).cell(mv.std_error)
        .cell(rv).end();
    const auto me = mc_risk(losses, {MeasureKind::expected_shortfall, alpha},
                            c.bootstrap, c.seed);
    const double re = std::isnan(k) ? k : attempt([&] {
      return es_asymptotic(q, region.lambda, k).value;
    });
    csv.cell("expected_shortfall").cell(alpha).cell(me.estimate)
        .cell(me.std_error).cell(re).end();
  }
  csv.cell("mean_functions").cell(std::nan("")).cell(report.mean_functions)
      .cell(std::nan("")).cell(std::nan("")).end();
  csv.cell("truncation_indicator").cell(std::nan(""))
      .cell(report.truncation_indicator).cell(std::nan("")).cell(std::nan(""))
      .end();
}

}  // namespace maxrisk
