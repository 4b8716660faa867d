#include "kraichnan/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "kraichnan/errors.hpp"
#include "kraichnan/flux.hpp"
#include "kraichnan/io.hpp"
#include "kraichnan/mc_spde.hpp"
#include "kraichnan/mellin.hpp"
#include "kraichnan/schema_embed.hpp"
#include "kraichnan/spectral.hpp"

namespace kraichnan::cli {

namespace fs = std::filesystem;

const json& schema() {
  static const json s = json::parse(kSchemaText);
  return s;
}

namespace {

std::string type_name(const json& v) {
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return v.type_name();
}

bool has_type(const json& v, const std::string& t) {
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "array") return v.is_array();
  if (t == "object") return v.is_object();
  if (t == "null") return v.is_null();
  return false;
}

std::string at(const std::string& where) { return where.empty() ? "config" : where; }

}  // namespace

std::vector<std::string> schema_errors(const json& v, const json& s, const std::string& where) {
  std::vector<std::string> errs;
  if (s.contains("type")) {
    const auto& t = s["type"];
    bool ok = false;
    if (t.is_array()) {
      for (const auto& x : t) ok = ok || has_type(v, x.get<std::string>());
    } else {
      ok = has_type(v, t.get<std::string>());
    }
    if (!ok) {
      errs.push_back(at(where) + ": expected " + t.dump() + ", got " + type_name(v));
      return errs;
    }
  }
  if (s.contains("enum")) {
    bool ok = false;
    for (const auto& e : s["enum"]) ok = ok || e == v;
    if (!ok) errs.push_back(at(where) + ": " + v.dump() + " is not one of " + s["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    auto bound = [&](const char* key, auto cmp, const char* rel) {
      if (s.contains(key) && !cmp(x, s[key].get<double>()))
        errs.push_back(at(where) + ": " + v.dump() + " must be " + rel + " " + s[key].dump());
    };
    bound("minimum", std::greater_equal<double>(), ">=");
    bound("maximum", std::less_equal<double>(), "<=");
    bound("exclusiveMinimum", std::greater<double>(), ">");
    bound("exclusiveMaximum", std::less<double>(), "<");
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
      errs.push_back(at(where) + ": needs at least " + s["minItems"].dump() + " items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) {
        auto sub = schema_errors(v[i], s["items"], where + "/" + std::to_string(i));
        errs.insert(errs.end(), sub.begin(), sub.end());
      }
  }
  if (v.is_object()) {
    if (s.contains("required"))
      for (const auto& r : s["required"])
        if (!v.contains(r.get<std::string>()))
          errs.push_back(at(where) + ": missing required field \"" + r.get<std::string>() + "\"");
    const json empty = json::object();
    const json& props = s.contains("properties") ? s["properties"] : empty;
    const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (props.contains(it.key())) {
        auto sub = schema_errors(it.value(), props[it.key()], where + "/" + it.key());
        errs.insert(errs.end(), sub.begin(), sub.end());
      } else if (closed) {
        errs.push_back(at(where) + ": unknown field \"" + it.key() + "\"");
      }
    }
  }
  return errs;
}

json load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

namespace {

// parameter ranges are checked ahead of the schema so the message names the interval
void check_ranges(const json& c) {
  if (!c.is_object()) return;
  ModelParams p;
  if (c.contains("d") && c["d"].is_number_integer()) p.d = c["d"].get<int>();
  if (c.contains("alpha") && c["alpha"].is_number()) p.alpha = c["alpha"].get<double>();
  if (c.contains("s") && c["s"].is_number()) p.s = c["s"].get<double>();
  else p.s = 0.25 * p.d;
  if (c.contains("m") && c["m"].is_number()) p.m = c["m"].get<double>();
  if (c.contains("nu") && c["nu"].is_number()) p.nu = c["nu"].get<double>();
  try {
    p.validate();
  } catch (const DomainError& e) {
    std::ostringstream msg;
    msg << e.what() << " (got d = " << p.d << ", alpha = " << p.alpha << ", s = " << p.s << ")";
    throw ConfigError(msg.str());
  }
}

void fill(json& block, const char* key, const json& value) {
  if (!block.contains(key)) block[key] = value;
}

}  // namespace

json resolve(const json& config) {
  check_ranges(config);
  const auto errs = schema_errors(config, schema());
  if (!errs.empty()) {
    std::string msg = "config violates the schema:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  json r = config;
  const std::string exp = r["experiment"];
  const double alpha = r["alpha"], s = r["s"];
  const int d = r["d"];
  fill(r, "m", 0.0);
  fill(r, "nu", 0.0);
  fill(r, "seed", 0);
  fill(r, "sweep", false);
  fill(r, "output_dir", "runs/" + exp);

  auto spectral_blocks = [&](double t_final, double dt, const char* integrator, bool selfsimilar) {
    fill(r, "selfsimilar", selfsimilar);
    fill(r, "boundary", "absorbing");
    fill(r, "cache_dir", "kernel_cache");
    json g = r.value("grid", json::object());
    fill(g, "rho_min", 1e-2);
    fill(g, "rho_max", 1e3);
    fill(g, "nodes", 512);
    if (!(g["rho_min"].get<double>() < g["rho_max"].get<double>()))
      throw ConfigError("grid: rho_min must be below rho_max");
    r["grid"] = g;
    json t = r.value("time", json::object());
    fill(t, "t_final", t_final);
    fill(t, "dt", dt);
    fill(t, "integrator", integrator);
    fill(t, "record_every", 0);
    r["time"] = t;
    json in = r.value("initial", json::object());
    fill(in, "kind", "gaussian");
    const bool bump = in["kind"] == "bump";
    fill(in, "center", bump ? 2.0 : 0.0);
    fill(in, "width", bump ? 4.0 : 1.0);
    fill(in, "amplitude", 1.0);
    if (bump && !(in["width"].get<double>() > 1.0))
      throw ConfigError("initial: a bump's width is a ratio and must exceed 1");
    r["initial"] = in;
  };

  if (exp == "flux-table") {
    fill(r, "xi", json::array({1, 2, 5, 10, 20, 50, 100}));
  } else if (exp == "spectral-evolve") {
    spectral_blocks(1.0, 0.0, "rk4", false);
    fill(r, "trackers", json::array({s, s + alpha - 1.0}));
  } else if (exp == "selfsimilar-balance") {
    spectral_blocks(2.0, 0.2, "expm", true);
    if (!r["selfsimilar"].get<bool>()) throw ConfigError("selfsimilar-balance needs selfsimilar = true");
    if (r["time"]["dt"].get<double>() <= 0.0) throw ConfigError("selfsimilar-balance needs time.dt > 0");
  } else if (exp == "dissipation-integral") {
    spectral_blocks(1.0, 0.0, "expm", true);
    if (!r["selfsimilar"].get<bool>()) throw ConfigError("dissipation-integral needs selfsimilar = true");
    if (r["boundary"] != "absorbing") throw ConfigError("dissipation-integral needs an absorbing boundary");
    fill(r["time"], "t_max", 1e4);
    fill(r["time"], "samples", 400);
  } else if (exp == "mc-ensemble") {
    if (d != 2) throw ConfigError("mc-ensemble supports d = 2 only");
    json t = r.value("time", json::object());
    fill(t, "t_final", 0.05);
    r["time"] = t;
    json l = r.value("lattice", json::object());
    fill(l, "n_max", 16);
    fill(l, "n_samples", 2000);
    fill(l, "dt", 0.0);
    fill(l, "width", 3.0);
    fill(l, "records", 3);
    fill(l, "halve_dt", true);
    r["lattice"] = l;
  }
  return r;
}

namespace {

// collects checks and reported values for summary.json
struct Summary {
  json checks = json::array();
  json values = json::object();

  void check(const std::string& id, const std::string& source, bool passed, double value, double threshold,
             bool asserted = true) {
    checks.push_back({{"id", id},
                      {"passed", passed},
                      {"asserted", asserted},
                      {"value", value},
                      {"threshold", threshold},
                      {"source", source}});
  }
  void value(const std::string& id, const std::string& source, double v) {
    values[id] = {{"value", v}, {"source", source}};
  }
  bool all_passed() const {
    for (const auto& c : checks)
      if (c["asserted"].get<bool>() && !c["passed"].get<bool>()) return false;
    return true;
  }
};

struct Context {
  json cfg;
  fs::path out;
  Summary summary;
  std::vector<std::string> files;
  json timings = json::object();

  void write(const std::string& name, const std::string& content) {
    io::write_atomic(out / name, content);
    files.push_back(name);
  }
};

double rel_dev(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

std::string tag(const ModelParams& p) {
  return "[d=" + std::to_string(p.d) + ",alpha=" + io::format_double(p.alpha) + ",s=" + io::format_double(p.s) +
         "]";
}

ModelParams params_of(const json& c) {
  ModelParams p;
  p.d = c["d"];
  p.alpha = c["alpha"];
  p.s = c["s"];
  p.m = c["m"];
  p.nu = c["nu"];
  return p;
}

// the cross-validation grid: d in {2,3}, alpha in {1/4,1/2,3/4}, s = {0.2,0.5,0.8} d/2
std::vector<ModelParams> sweep_grid() {
  std::vector<ModelParams> out;
  for (int d : {2, 3})
    for (double a : {0.25, 0.5, 0.75})
      for (int f : {2, 5, 8}) out.push_back({d, a, f * d / 20.0, 0.0, 0.0});
  return out;
}

std::vector<ModelParams> points_of(const json& c) {
  if (c["sweep"].get<bool>()) return sweep_grid();
  return {params_of(c)};
}

template <class T, class F>
std::vector<T> parallel_map(const std::vector<ModelParams>& pts, F&& f) {
  std::vector<std::future<T>> jobs;
  for (const auto& p : pts) jobs.push_back(std::async(std::launch::async, f, p));
  std::vector<T> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = lo * std::pow(hi / lo, n == 1 ? 0.0 : double(i) / (n - 1));
  return x;
}

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------- k-constants

void run_k_constants(Context& ctx) {
  const auto pts = points_of(ctx.cfg);
  const auto reports = parallel_map<mellin::KReport>(pts, [](const ModelParams& p) { return mellin::k_report(p); });
  io::CsvWriter w({"d", "alpha", "s", "K_gamma", "K_integral", "K_riesz", "dev_gamma_integral",
                   "dev_gamma_riesz", "dev_integral_riesz"});
  for (const auto& r : reports) {
    const auto& p = r.params;
    const std::string t = tag(p);
    ctx.summary.check("k.gamma_vs_integral" + t, "mellin::k_constant_gamma, mellin::k_constant_integral",
                      r.dev_gamma_integral <= 1e-6, r.dev_gamma_integral, 1e-6);
    std::string app, dga, dia;
    if (r.k_riesz) {
      const double dev_ia = rel_dev(r.k_integral, *r.k_riesz);
      ctx.summary.check("k.gamma_vs_riesz" + t, "mellin::k_constant_gamma, mellin::k_constant_riesz",
                        *r.dev_gamma_riesz <= 1e-4, *r.dev_gamma_riesz, 1e-4);
      app = io::format_double(*r.k_riesz);
      dga = io::format_double(*r.dev_gamma_riesz);
      dia = io::format_double(dev_ia);
      if (pts.size() == 1) {
        ctx.summary.value("K_riesz", "mellin::k_constant_riesz", *r.k_riesz);
        ctx.summary.value("dev_gamma_riesz", "mellin::k_report", *r.dev_gamma_riesz);
        ctx.summary.value("dev_integral_riesz", "mellin::k_report", dev_ia);
      }
    }
    if (pts.size() == 1) {
      ctx.summary.value("K_gamma", "mellin::k_constant_gamma", r.k_gamma);
      ctx.summary.value("K_integral", "mellin::k_constant_integral", r.k_integral);
      ctx.summary.value("dev_gamma_integral", "mellin::k_report", r.dev_gamma_integral);
    }
    w.row_cells({std::to_string(p.d), io::format_double(p.alpha), io::format_double(p.s),
                 io::format_double(r.k_gamma), io::format_double(r.k_integral), app,
                 io::format_double(r.dev_gamma_integral), dga, dia});
  }
  ctx.write("k_constants.csv", w.str());
}

// ---------------------------------------------------------------- flux-table

flux::FluxTable flux_table(const ModelParams& p, const std::vector<double>& xi) {
  flux::FluxTable t;
  t.params = p;
  t.xi_values = xi;
  t.K_used = mellin::k_constant_gamma(p);
  const double e = 2.0 - 2.0 * p.alpha - 2.0 * p.s;
  for (double x : xi) {
    const double F = p.m > 0.0 ? flux::flux_F_m(x, p) : flux::flux_F(x, p);
    t.F_values.push_back(F);
    t.residuals.push_back(std::abs(F + t.K_used * std::pow(x, e)) * std::pow(x, 2.0 * p.s));
  }
  return t;
}

void run_flux_table(Context& ctx) {
  const ModelParams p = params_of(ctx.cfg);
  const auto xi = ctx.cfg["xi"].get<std::vector<double>>();
  const auto t = flux_table(p, xi);
  ctx.write("flux.csv", io::flux_csv(t));
  ctx.summary.value("K", "mellin::k_constant_gamma", t.K_used);
  // F is negative once the leading power dominates
  bool neg = true;
  double worst = -1e300;
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (xi[i] >= 10.0) {
      neg = neg && t.F_values[i] < 0.0;
      worst = std::max(worst, t.F_values[i]);
    }
  if (worst > -1e300)
    ctx.summary.check("flux.negative_beyond_10", p.m > 0 ? "flux::flux_F_m" : "flux::flux_F", neg, worst, 0.0);
  if (!xi.empty()) {
    ctx.summary.value("max_residual", "flux table residual column",
                      *std::max_element(t.residuals.begin(), t.residuals.end()));
  }
}

// ---------------------------------------------------------------- asymptotics

struct AsymptoticsPoint {
  flux::FluxTable table;
  double slope = 0.0, overlap = 0.0, C = 0.0;
};

AsymptoticsPoint asymptotics_point(const ModelParams& p) {
  AsymptoticsPoint a;
  const auto xi = log_grid(1.0, 1e3, 40);
  a.table = flux::asymptotic_residual_table(p, xi);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (xi[i] >= 10.0) x.push_back(xi[i]), y.push_back(a.table.residuals[i]);
  a.slope = loglog_slope(x, y);
  for (double v : log_grid(20.0, 50.0, 7)) {
    const double q = flux::flux_F(v, p, flux::Method::Quadrature);
    const double e = flux::flux_F_expansion(v, p);
    a.overlap = std::max(a.overlap, rel_dev(q, e));
  }
  a.C = *std::max_element(a.table.residuals.begin(), a.table.residuals.end());
  return a;
}

void run_asymptotics(Context& ctx) {
  const auto pts = points_of(ctx.cfg);
  const auto res = parallel_map<AsymptoticsPoint>(pts, asymptotics_point);
  flux::FluxTable all;
  std::string csv;
  for (std::size_t k = 0; k < res.size(); ++k) {
    const auto& a = res[k];
    const std::string t = tag(a.table.params);
    ctx.summary.check("asymptotics.slope_beyond_10" + t, "flux::asymptotic_residual_table", a.slope <= 0.1,
                      a.slope, 0.1);
    ctx.summary.check("asymptotics.paths_20_50" + t, "flux::flux_F quadrature vs flux::flux_F_expansion",
                      a.overlap <= 1e-5, a.overlap, 1e-5);
    ctx.summary.check("asymptotics.bound_constant" + t, "flux::asymptotic_residual_table", std::isfinite(a.C),
                      a.C, 0.0, false);
    std::string part = io::flux_csv(a.table);
    if (k) part = part.substr(part.find('\n') + 1);
    csv += part;
  }
  ctx.write("asymptotics.csv", csv);
}

// ---------------------------------------------------------------- spectral helpers

spectral::KernelOptions kernel_options(const Context& ctx) {
  spectral::KernelOptions o;
  o.mode = ctx.cfg["selfsimilar"].get<bool>() ? spectral::KernelMode::SelfSimilar : spectral::KernelMode::Bracket;
  o.boundary = ctx.cfg["boundary"] == "closed" ? spectral::Boundary::Closed : spectral::Boundary::Absorbing;
  fs::path dir = ctx.cfg["cache_dir"].get<std::string>();
  if (!dir.empty() && dir.is_relative()) dir = ctx.out / dir;
  o.cache_dir = dir.string();
  return o;
}

spectral::RadialGrid grid_of(const json& c, int nodes_override = 0) {
  const auto& g = c["grid"];
  return spectral::RadialGrid::log_spaced(c["d"], g["rho_min"], g["rho_max"],
                                          nodes_override ? nodes_override : g["nodes"].get<int>());
}

spectral::SpectrumState initial_state(const json& c, const spectral::RadialGrid& g) {
  spectral::SpectrumState st{g, {}, 0.0, params_of(c)};
  const auto& in = c["initial"];
  const double amp = in["amplitude"], width = in["width"], center = in["center"];
  for (double r : g.nodes) {
    if (in["kind"] == "bump") {
      const double x = std::log(r / center) / std::log(width);
      st.values.push_back(std::abs(x) < 1.0 ? amp * std::exp(-1.0 / (1.0 - x * x)) : 0.0);
    } else {
      const double u = (r - center) / width;
      st.values.push_back(amp * std::exp(-u * u));
    }
  }
  return st;
}

spectral::KernelMatrix timed_kernel(Context& ctx, const spectral::RadialGrid& g, const std::string& label) {
  const auto t0 = std::chrono::steady_clock::now();
  auto k = spectral::build_kernel(g, params_of(ctx.cfg), kernel_options(ctx));
  ctx.timings[label] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ctx.timings[label + "_from_cache"] = k.from_cache;
  return k;
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& y, std::size_t upto) {
  double acc = 0.0;
  for (std::size_t i = 1; i <= upto && i < t.size(); ++i) acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

int auto_record_every(const json& time, double t_final, double dt) {
  const int every = time["record_every"];
  if (every > 0) return every;
  return int(std::max(1.0, std::ceil(t_final / dt) / 1000.0));
}

// ---------------------------------------------------------------- spectral-evolve

void run_spectral_evolve(Context& ctx) {
  const ModelParams p = params_of(ctx.cfg);
  const auto g = grid_of(ctx.cfg);
  const auto k = timed_kernel(ctx, g, "kernel_build_s");
  const auto init = initial_state(ctx.cfg, g);
  const auto& time = ctx.cfg["time"];
  const double t_final = time["t_final"];
  double dt = time["dt"];
  if (dt <= 0.0) dt = 0.25 / k.max_rate();
  spectral::EvolveOptions eo;
  eo.integrator = time["integrator"] == "expm" ? spectral::Integrator::Expm : spectral::Integrator::RK4;
  eo.balance_s = {p.s};
  eo.record_every = auto_record_every(time, t_final, dt);
  const auto trackers = ctx.cfg["trackers"].get<std::vector<double>>();

  const auto t0 = std::chrono::steady_clock::now();
  const auto tr = spectral::evolve(init, k, t_final, dt, trackers, eo);
  ctx.timings["evolve_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ctx.write("trajectory.csv", io::trajectory_csv(tr));

  ctx.summary.value("steps", "spectral::evolve", double(tr.steps));
  ctx.summary.value("dt", "spectral::evolve", dt);
  ctx.summary.check("spectral.balance_identity", "spectral::balance_check at every step",
                    tr.max_balance_gap <= 1e-12, tr.max_balance_gap, 1e-12);

  // mass can only leave through the outer edge
  if (k.boundary == spectral::Boundary::Absorbing) {
    double rise = 0.0;
    for (std::size_t i = 1; i < tr.mass.size(); ++i)
      rise = std::max(rise, (tr.mass[i] - tr.mass[i - 1]) / tr.mass[0]);
    ctx.summary.check("spectral.mass_nonincreasing", "spectral::evolve mass column", rise <= 1e-12, rise, 1e-12);
  }
  ctx.summary.check("spectral.truncation", "spectral::boundary_fraction", !tr.truncated_at.has_value(),
                    tr.truncation_fraction, eo.boundary_limit, false);

  if (k.mode == spectral::KernelMode::Bracket) {
    // continuum comparison on a smooth bump well inside the grid
    json bump_cfg = ctx.cfg;
    bump_cfg["initial"] = {{"kind", "bump"}, {"center", 2.0}, {"width", 4.0}, {"amplitude", 1.0}};
    const auto bump = initial_state(bump_cfg, g);
    const auto b = spectral::balance_check(bump, k, p.s, true);
    const double dev = std::abs(*b.rhs_continuum / b.rhs - 1.0);
    const bool reference = g.size() >= 512;
    ctx.summary.check("spectral.continuum_balance", "spectral::balance_check rhs vs rhs_continuum", dev <= 0.02,
                      dev, 0.02, reference);

    // Gronwall: sup norm + K int norm_{s+alpha-1} <= 2 exp(C T) norm(0)
    auto find = [&](double v) -> int {
      for (std::size_t i = 0; i < trackers.size(); ++i)
        if (std::abs(trackers[i] - v) < 1e-12) return int(i);
      return -1;
    };
    const int i_s = find(p.s), i_low = find(p.s + p.alpha - 1.0);
    if (i_s >= 0 && i_low >= 0) {
      const double K = mellin::k_constant_gamma(p);
      const double C = flux::bound_constant(p);
      const auto& ns = tr.norms[i_s];
      const auto& nl = tr.norms[i_low];
      double worst = 0.0;
      for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const double lhs = ns[i] + K * trapezoid(tr.times, nl, i);
        const double rhs = 2.0 * std::exp(C * tr.times[i]) * ns[0];
        worst = std::max(worst, lhs / rhs);
      }
      ctx.summary.value("K", "mellin::k_constant_gamma", K);
      ctx.summary.value("C", "flux::bound_constant", C);
      ctx.summary.check("spectral.gronwall", "spectral::evolve norms with K and C", worst <= 1.0, worst, 1.0);
    }
  }
}

// ---------------------------------------------------------------- selfsimilar-balance

struct RatioSeries {
  std::vector<double> times, ratio;
  double gap = 0.0;
  spectral::Trajectory tr;
};

RatioSeries ratio_series(Context& ctx, int nodes, const std::string& label) {
  const ModelParams p = params_of(ctx.cfg);
  const auto g = grid_of(ctx.cfg, nodes);
  const auto k = timed_kernel(ctx, g, label);
  const auto init = initial_state(ctx.cfg, g);
  const auto& time = ctx.cfg["time"];
  spectral::EvolveOptions eo;
  eo.integrator = time["integrator"] == "rk4" ? spectral::Integrator::RK4 : spectral::Integrator::Expm;
  eo.balance_s = {p.s};
  eo.record_every = std::max(1, time["record_every"].get<int>());
  RatioSeries r;
  r.tr = spectral::evolve(init, k, time["t_final"], time["dt"], {p.s, p.s + p.alpha - 1.0}, eo);
  const double K = mellin::k_constant_gamma(p);
  for (std::size_t i = 0; i < r.tr.times.size(); ++i)
    if (r.tr.times[i] > 0.0) {
      r.times.push_back(r.tr.times[i]);
      r.ratio.push_back(-r.tr.norm_rates[0][i] / r.tr.norms[1][i] / K);
    }
  r.gap = r.tr.max_balance_gap;
  return r;
}

void run_selfsimilar_balance(Context& ctx) {
  const ModelParams p = params_of(ctx.cfg);
  const int n = ctx.cfg["grid"]["nodes"];
  const auto coarse = ratio_series(ctx, n, "kernel_build_s");
  const auto fine = ratio_series(ctx, 2 * n, "kernel_build_refined_s");
  ctx.write("trajectory.csv", io::trajectory_csv(coarse.tr));
  const double K = mellin::k_constant_gamma(p);
  io::CsvWriter w({"t", "ratio", "ratio_refined", "K"});
  double worst = 0.0, change = 0.0;
  for (std::size_t i = 0; i < coarse.times.size(); ++i) {
    w.row({coarse.times[i], coarse.ratio[i], fine.ratio[i], K});
    worst = std::max(worst, std::abs(coarse.ratio[i] - 1.0));
    change = std::max(change, std::abs(fine.ratio[i] / coarse.ratio[i] - 1.0));
  }
  ctx.write("selfsimilar_ratio.csv", w.str());
  ctx.summary.value("K", "mellin::k_constant_gamma", K);
  ctx.summary.value("records", "spectral::evolve", double(coarse.times.size()));
  ctx.summary.check("selfsimilar.ratio_vs_K", "spectral::evolve norm rates over K", worst <= 0.02, worst, 0.02);
  ctx.summary.check("selfsimilar.refinement_change", "ratio on 2N nodes vs N nodes", change < 0.01, change, 0.01);
  ctx.summary.check("selfsimilar.balance_identity", "spectral::balance_check at every step",
                    std::max(coarse.gap, fine.gap) <= 1e-12, std::max(coarse.gap, fine.gap), 1e-12);
  const bool truncated = coarse.tr.truncated_at.has_value() || fine.tr.truncated_at.has_value();
  ctx.summary.check("selfsimilar.truncation", "spectral::boundary_fraction", !truncated,
                    std::max(coarse.tr.truncation_fraction, fine.tr.truncation_fraction), 0.01, false);
}

// ---------------------------------------------------------------- dissipation-integral

void run_dissipation(Context& ctx) {
  const auto g = grid_of(ctx.cfg);
  const auto k = timed_kernel(ctx, g, "kernel_build_s");
  const auto init = initial_state(ctx.cfg, g);
  const auto& time = ctx.cfg["time"];
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = spectral::anomalous_dissipation_integral(init, k, time["t_max"], time["samples"]);
  ctx.timings["dissipation_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  io::CsvWriter w({"t", "mass"});
  for (std::size_t i = 0; i < r.times.size(); ++i) w.row({r.times[i], r.mass[i]});
  ctx.write("dissipation_mass.csv", w.str());
  const double ratio = r.integral / r.reference;
  ctx.summary.value("integral", "spectral::anomalous_dissipation_integral", r.integral);
  ctx.summary.value("tail", "spectral::anomalous_dissipation_integral", r.tail);
  ctx.summary.value("reference", "norm_{alpha-1}^2 / K", r.reference);
  ctx.summary.value("K_used", "mellin::k_constant_gamma at s = 1 - alpha", r.k_used);
  ctx.summary.value("resolvent_ratio", "spectral::Propagator::integrated_mass", r.resolvent / r.reference);
  ctx.summary.check("dissipation.ratio", "spectral::anomalous_dissipation_integral", ratio >= 0.9 && ratio <= 1.1,
                    ratio, 0.1);
  ctx.summary.check("dissipation.truncation", "spectral::boundary_fraction", !r.truncated_at.has_value(),
                    r.truncated_at.value_or(0.0), 0.0, false);
}

// ---------------------------------------------------------------- mc-ensemble

void run_mc(Context& ctx) {
  const ModelParams p = params_of(ctx.cfg);
  const auto& l = ctx.cfg["lattice"];
  mc::LatticeConfig lc;
  lc.n_max = l["n_max"];
  lc.alpha = p.alpha;
  lc.dt = l["dt"];
  lc.n_samples = l["n_samples"];
  lc.seed = ctx.cfg["seed"];
  lc.nu = p.nu;
  lc.validate();
  const mc::Lattice lat(lc);
  const auto init = mc::gaussian_blob(lat, l["width"]);
  const double t_final = ctx.cfg["time"]["t_final"];
  const int records = l["records"];
  std::vector<double> rec;
  for (int i = 0; i < records; ++i) rec.push_back(t_final * i / (records - 1));

  // a few steps of one sample keep the field real
  {
    mc::FieldSample f = init;
    mc::Stepper st(lat, lc.dt > 0 ? lc.dt : lat.default_dt(), lc.nu);
    for (std::uint64_t n = 0; n < 10; ++n) st.step(f, {lc.seed, 0, n});
    double amp = 0.0;
    for (const auto& a : f.amplitudes) amp = std::max(amp, std::abs(a));
    const double defect = mc::reality_defect(lat, f) / amp;
    ctx.summary.check("mc.reality", "mc::reality_defect after 10 steps", defect <= 1e-12, defect, 1e-12);
  }

  auto t0 = std::chrono::steady_clock::now();
  const auto res = mc::run_ensemble(lc, init, t_final, rec);
  ctx.timings["ensemble_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ctx.write("ensemble.csv", io::ensemble_csv(lat, res.stats));
  ctx.summary.value("dt", "mc::run_ensemble", res.dt);
  ctx.summary.value("invalid_samples", "mc::run_ensemble", double(res.invalid_samples));

  for (std::size_t w = 0; w < res.rate_checks.size(); ++w) {
    const auto& rc = res.rate_checks[w];
    ctx.summary.check("mc.master_equation[window=" + std::to_string(w) + "]",
                      "mc::run_ensemble rate check vs mc::Lattice::master_rate", rc.pass_fraction >= 0.95,
                      rc.pass_fraction, 0.95);
    ctx.summary.check("mc.master_equation_uncorrected[window=" + std::to_string(w) + "]",
                      "mc::run_ensemble rate check without the one-step EM term", rc.pass_fraction_raw >= 0.95,
                      rc.pass_fraction_raw, 0.95, false);
  }
  double bias = 0.0;
  for (std::size_t w = 0; w < res.l2_checks.size(); ++w) {
    const auto& c = res.l2_checks[w];
    const double z = std::abs(c.change - c.predicted) / std::hypot(c.change_se, c.predicted_se);
    ctx.summary.check("mc.l2_balance[window=" + std::to_string(w) + "]", "mc::run_ensemble L2 check",
                      c.within_3se, z, 3.0);
    bias += c.bias;
  }
  ctx.summary.value("l2_bias", "mc::run_ensemble L2 check", bias);

  if (l["halve_dt"].get<bool>()) {
    mc::LatticeConfig half = lc;
    half.dt = 0.5 * res.dt;
    t0 = std::chrono::steady_clock::now();
    const auto rh = mc::run_ensemble(half, init, t_final, rec);
    ctx.timings["ensemble_half_dt_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double bias_h = 0.0;
    bool within = true;
    for (const auto& c : rh.l2_checks) bias_h += c.bias, within = within && c.within_3se;
    const double ratio = bias_h / bias;
    ctx.summary.check("mc.l2_bias_halving", "mc::run_ensemble at dt and dt/2", ratio >= 0.4 && ratio <= 0.6,
                      ratio, 0.5);
    ctx.summary.check("mc.l2_balance_half_dt", "mc::run_ensemble L2 check at dt/2", within, bias_h, 3.0);
  }

  const auto first = mc::sobolev_estimate(lat, res.stats.front(), p.s);
  const auto last = mc::sobolev_estimate(lat, res.stats.back(), p.s);
  ctx.summary.value("hs_norm_initial", "mc::sobolev_estimate", first.value);
  ctx.summary.value("hs_norm_final", "mc::sobolev_estimate", last.value);
  ctx.summary.value("hs_norm_final_se", "mc::sobolev_estimate", last.std_err);
  ctx.summary.check("mc.hs_norm_decrease", "mc::sobolev_estimate first vs last record", last.value < first.value,
                    last.value - first.value, 0.0, false);

  // lattice flux against the continuum one over the middle of the band
  const auto lf = mc::lattice_flux(lat, p.s);
  ModelParams q = p;
  q.m = 0.0;
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const double kn = std::hypot(lat.kx_of(i), lat.ky_of(i));
    if (kn >= 2.0 && kn <= lat.n_max() / 4.0) {
      sum += lf[i] / (M_PI * flux::flux_F(kn, q));
      ++count;
    }
  }
  if (count) ctx.summary.value("midband_flux_ratio", "mc::lattice_flux / (pi flux::flux_F)", sum / count);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json manifest_of(const Context& ctx, const std::string& status, double total, const std::string& started) {
  json m;
  m["tool"] = "kraichnan";
  m["version"] = KRAICHNAN_VERSION;
  m["experiment"] = ctx.cfg["experiment"];
  m["config"] = ctx.cfg;
  m["status"] = status;
  m["outputs"] = ctx.files;
  m["started_utc"] = started;
  json t = ctx.timings;
  t["total_s"] = total;
  m["timings"] = t;
  return m;
}

}  // namespace

RunResult run_experiment(const json& resolved, const fs::path& out_dir) {
  Context ctx;
  ctx.cfg = resolved;
  ctx.out = out_dir;
  fs::create_directories(out_dir);
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string exp = resolved["experiment"];
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  try {
    if (exp == "k-constants") run_k_constants(ctx);
    else if (exp == "flux-table") run_flux_table(ctx);
    else if (exp == "asymptotics") run_asymptotics(ctx);
    else if (exp == "spectral-evolve") run_spectral_evolve(ctx);
    else if (exp == "selfsimilar-balance") run_selfsimilar_balance(ctx);
    else if (exp == "dissipation-integral") run_dissipation(ctx);
    else if (exp == "mc-ensemble") run_mc(ctx);
    else throw ConfigError("unknown experiment " + exp);
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    json m = manifest_of(ctx, "compute_error", elapsed(), started);
    io::write_atomic(out_dir / "manifest.json", m.dump(2) + "\n");
    throw;
  }

  RunResult r;
  const bool ok = ctx.summary.all_passed();
  r.exit_code = ok ? kOk : kInvariantFailure;
  r.summary = {{"experiment", exp}, {"passed", ok}, {"checks", ctx.summary.checks}, {"values", ctx.summary.values}};
  ctx.write("summary.json", r.summary.dump(2) + "\n");
  ctx.files.push_back("manifest.json");
  io::write_atomic(out_dir / "manifest.json",
                   manifest_of(ctx, ok ? "ok" : "invariant_failure", elapsed(), started).dump(2) + "\n");
  r.files = ctx.files;
  return r;
}

int run_command(const fs::path& config_path, const std::optional<std::string>& output_dir, std::ostream& out,
                std::ostream& err) {
  json cfg;
  try {
    cfg = resolve(load_config(config_path));
    if (output_dir) cfg["output_dir"] = *output_dir;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  try {
    const auto r = run_experiment(cfg, cfg["output_dir"].get<std::string>());
    for (const auto& c : r.summary["checks"]) {
      out << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["id"].get<std::string>()
          << (c["asserted"].get<bool>() ? "" : " (reported)") << "  value=" << c["value"].dump() << "\n";
    }
    out << "wrote " << r.files.size() << " files to " << cfg["output_dir"].get<std::string>() << "\n";
    if (r.exit_code == kInvariantFailure) err << "invariant failure: at least one asserted check failed\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "compute error: " << e.what() << "\n";
    return kComputeError;
  }
}

int validate_command(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const json cfg = resolve(load_config(config_path));
    out << "ok\n" << cfg.dump(2) << "\n";
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace kraichnan::cli
