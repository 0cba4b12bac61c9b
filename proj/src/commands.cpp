#include "nisio/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>

#include "json.hpp"

#include "nisio/cone_iteration.hpp"
#include "nisio/eigensolver.hpp"
#include "nisio/matrix_cw.hpp"
#include "nisio/mc_sim.hpp"
#include "nisio/semigroup.hpp"
#include "nisio/variational.hpp"

namespace nisio {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(const std::vector<double>& values) { rows_.push_back(values); }
  void write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
    out << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << fmt(r[i]);
      out << '\n';
    }
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

std::string extra(const Config& cfg, const std::string& section, const std::string& key,
                  const std::string& fallback) {
  auto s = cfg.extra.find(section);
  if (s == cfg.extra.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double extra_number(const Config& cfg, const std::string& section, const std::string& key,
                    double fallback) {
  const std::string s = extra(cfg, section, key, "");
  if (s.empty()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(section + "." + key + ": expected a number, got '" + s + "'");
  }
}

std::size_t extra_count(const Config& cfg, const std::string& section, const std::string& key,
                        std::size_t fallback) {
  const double v = extra_number(cfg, section, key, static_cast<double>(fallback));
  if (!(v >= 0.0) || v != std::floor(v)) {
    throw ValidationError(section + "." + key + ": expected a nonnegative integer");
  }
  return static_cast<std::size_t>(v);
}

EigenOptions eigen_options(const Config& cfg) {
  EigenOptions eo;
  eo.tol = cfg.solver.tol;
  eo.dt_factor = cfg.solver.dt_factor;
  eo.max_iters = cfg.solver.max_iters;
  return eo;
}

json grid_json(const Grid& g) {
  return json{{"topology", to_string(g.topology)}, {"d", g.dim}, {"n", g.n},
              {"extent", g.extent}, {"h", g.h}};
}

json policy_histogram(const std::vector<int>& policy, std::size_t controls) {
  std::vector<std::size_t> counts(controls, 0);
  for (int u : policy) ++counts[static_cast<std::size_t>(u)];
  json h = json::object();
  for (std::size_t v = 0; v < controls; ++v) h[std::to_string(v)] = counts[v];
  return h;
}

std::vector<std::string> coord_header(const Grid& g) {
  std::vector<std::string> h{"node", "x1"};
  if (g.dim == 2) h.emplace_back("x2");
  return h;
}

std::vector<double> coord_row(const Grid& g, std::size_t i) {
  const auto c = g.coord(i);
  std::vector<double> r{static_cast<double>(i), c[0]};
  if (g.dim == 2) r.push_back(c[1]);
  return r;
}

struct Context {
  const Config& cfg;
  const RunFlags& flags;
  std::filesystem::path dir;
  json report;
  std::map<std::string, Csv> csv;

  bool csv_on() const { return cfg.wants("csv"); }
  void add_csv(const std::string& name, Csv table) {
    if (csv_on()) {
      report["files"].push_back(name);
      csv.emplace(name, std::move(table));
    }
  }
};

// ---------------------------------------------------------------------------

void cmd_solve(Context& ctx) {
  const ProblemSpec spec = ctx.cfg.spec();
  const DiscreteGenerator gen = DiscreteGenerator::build(spec);
  const EigenOptions eo = eigen_options(ctx.cfg);
  const EigenPair ev = solve_evolution(gen, eo);
  const EigenPair pi = solve_policy_iteration(gen, eo);
  const EigenPair mx = solve_max(gen, eo);
  json& r = ctx.report;
  r["grid"] = grid_json(gen.grid());
  r["rho"] = ev.rho;
  r["rho_policy_iteration"] = pi.rho;
  r["relative_agreement"] = std::abs(ev.rho - pi.rho) / std::max(1.0, std::abs(ev.rho));
  r["beta"] = mx.rho;
  r["residual"] = ev.residual;
  r["cw_lower"] = ev.lower;
  r["cw_upper"] = ev.upper;
  r["iterations"] = ev.iterations;
  r["policy_iterations"] = pi.iterations;
  r["dt"] = ev.dt;
  r["dt_max"] = gen.dt_max();
  r["policy_histogram"] = policy_histogram(ev.policy, gen.control_count());

  auto header = coord_header(gen.grid());
  for (const char* h : {"phi", "policy", "psi_max"}) header.emplace_back(h);
  Csv table(header);
  for (std::size_t i = 0; i < gen.node_count(); ++i) {
    auto row = coord_row(gen.grid(), i);
    row.push_back(ev.phi[i]);
    row.push_back(ev.policy[i]);
    row.push_back(mx.phi[i]);
    table.row(row);
  }
  ctx.add_csv("phi.csv", std::move(table));
}

void cmd_bounds(Context& ctx) {
  const ProblemSpec spec = ctx.cfg.spec();
  const DiscreteGenerator gen = DiscreteGenerator::build(spec);
  const EigenPair ev = solve_evolution(gen, eigen_options(ctx.cfg));
  const std::string which = ctx.flags.f.value_or(extra(ctx.cfg, "bounds", "f", "ones"));
  GridFunction f;
  if (which == "ones") {
    f = GridFunction(gen.node_count(), 1.0);
  } else if (which == "phi") {
    f = ev.phi;
  } else {
    f = sample(gen.grid(), which);
  }
  const SandwichReport rep = cw_bounds(gen, f, ev.rho, which);
  json& r = ctx.report;
  r["grid"] = grid_json(gen.grid());
  r["f"] = which;
  r["lower"] = rep.lower;
  r["upper"] = rep.upper;
  r["rho"] = ev.rho;
  r["gap"] = rep.gap();
  r["contains_rho"] = rep.lower <= ev.rho + 1e-8 && ev.rho <= rep.upper + 1e-8;

  SearchOptions so;
  so.iters = extra_count(ctx.cfg, "bounds", "iters", 50);
  so.time_per_iter = extra_number(ctx.cfg, "bounds", "time_per_iter", 0.05);
  so.start = f.values();
  so.rho = ev.rho;
  so.dt_factor = ctx.cfg.solver.dt_factor;
  const auto seq = cw_search(gen, so);
  r["search"] = json{{"iters", so.iters},
                     {"lower", seq.back().lower},
                     {"upper", seq.back().upper}};
  Csv table({"iteration", "lower", "upper", "rho"});
  for (std::size_t k = 0; k < seq.size(); ++k) {
    table.row({static_cast<double>(k), seq[k].lower, seq[k].upper, ev.rho});
  }
  ctx.add_csv("sweep.csv", std::move(table));
}

void cmd_dv(Context& ctx) {
  const ProblemSpec spec = ctx.cfg.spec();
  const DiscreteGenerator gen = DiscreteGenerator::build(spec);
  DvOptions dvo;
  dvo.starts = extra_count(ctx.cfg, "dv", "starts", dvo.starts);
  const std::uint64_t seed = ctx.flags.seed.value_or(
      static_cast<std::uint64_t>(extra_number(ctx.cfg, "dv", "seed", 7.0)));
  dvo.seed = seed;
  const DvCheck check = dv_check(gen, dvo);
  json& r = ctx.report;
  r["grid"] = grid_json(gen.grid());
  r["rho"] = check.rho;
  r["integral_r"] = check.integral_r;
  r["rate"] = check.rate;
  r["rhs"] = check.rhs;
  r["gap"] = check.gap;
  r["converged"] = check.converged;

  const std::size_t samples = extra_count(ctx.cfg, "dv", "samples", 20);
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  Csv table({"sample", "certificate", "rho"});
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<double> nu(gen.node_count());
    double total = 0.0;
    for (double& v : nu) total += (v = expo(rng));
    for (double& v : nu) v /= total;
    const double cert = dv_certificate(gen, nu, dvo);
    worst = std::max(worst, cert);
    table.row({static_cast<double>(s), cert, check.rho});
  }
  r["samples"] = samples;
  if (samples > 0) {
    r["max_certificate"] = worst;
    r["certificates_below_rho"] = worst <= check.rho + 1e-6;
  }
  ctx.add_csv("sweep.csv", std::move(table));
}

void cmd_hji(Context& ctx) {
  const ProblemSpec spec = ctx.cfg.spec();
  const DiscreteGenerator gen = DiscreteGenerator::build(spec);
  const EigenPair ev = solve_evolution(gen, eigen_options(ctx.cfg));
  const HjiReport hji = hji_residual(gen, ev);
  json& r = ctx.report;
  r["grid"] = grid_json(gen.grid());
  r["rho"] = ev.rho;
  r["residual"] = hji.residual;
  r["h"] = hji.h;
  r["eigen_residual"] = ev.residual;
  auto header = coord_header(gen.grid());
  header.emplace_back("phi");
  header.emplace_back("hji_residual");
  Csv table(header);
  for (std::size_t i = 0; i < gen.node_count(); ++i) {
    auto row = coord_row(gen.grid(), i);
    row.push_back(ev.phi[i]);
    row.push_back(hji.pointwise[i]);
    table.row(row);
  }
  ctx.add_csv("phi.csv", std::move(table));
}

json estimate_json(const McEstimate& e) {
  return json{{"value", e.value}, {"stderr", e.std_error}, {"N", e.N}, {"T", e.T},
              {"dt", e.dt},       {"n_effective", e.n_effective}};
}

void cmd_simulate(Context& ctx) {
  const ProblemSpec spec = ctx.cfg.spec();
  const Grid& grid = spec.grid;
  McConfig mc;
  mc.T = ctx.cfg.mc.T;
  mc.dt_sim = ctx.cfg.mc.dt_sim;
  mc.N = ctx.cfg.mc.N;
  mc.seed = ctx.flags.seed.value_or(ctx.cfg.mc.seed);
  mc.x0 = ctx.cfg.mc.x0;
  if (mc.x0.empty()) mc.x0.assign(static_cast<std::size_t>(grid.dim), 0.5 * grid.extent);
  mc.keep_paths = ctx.cfg.output.path_histogram;

  json& r = ctx.report;
  r["grid"] = grid_json(grid);
  std::vector<int> optimal;
  const bool need_solve = ctx.cfg.mc.policy == "optimal" || ctx.cfg.mc.sweep;
  if (need_solve) {
    const DiscreteGenerator gen = DiscreteGenerator::build(spec);
    const EigenPair ev = solve_evolution(gen, eigen_options(ctx.cfg));
    optimal = ev.policy;
    r["rho"] = ev.rho;
  }
  if (ctx.cfg.mc.policy == "optimal") {
    mc.policy = optimal;
  } else {
    int v = -1;
    try {
      v = std::stoi(ctx.cfg.mc.policy);
    } catch (const std::exception&) {
      throw ValidationError("mc.policy: expected 'optimal' or a control index");
    }
    if (v < 0 || static_cast<std::size_t>(v) >= spec.controls.size()) {
      throw ValidationError("mc.policy: control index out of range");
    }
    mc.policy = constant_policy(grid, v);
  }
  r["policy"] = ctx.cfg.mc.policy;
  r["seed"] = mc.seed;
  const McEstimate est = simulate_cost(spec, mc);
  const json fields = estimate_json(est);
  for (const auto& [k, v] : fields.items()) r[k] = v;

  if (ctx.cfg.mc.sweep) {
    std::vector<std::vector<int>> policies{optimal};
    for (std::size_t v = 0; v < spec.controls.size(); ++v) {
      policies.push_back(constant_policy(grid, static_cast<int>(v)));
    }
    McConfig sweep_cfg = mc;
    sweep_cfg.keep_paths = false;
    const auto results = policy_sweep(spec, sweep_cfg, policies);
    Csv table({"policy", "value", "stderr", "n_effective"});
    json sweep = json::array();
    for (std::size_t k = 0; k < results.size(); ++k) {
      const double label = k == 0 ? -1.0 : static_cast<double>(k - 1);
      table.row({label, results[k].value, results[k].std_error, results[k].n_effective});
      json e = estimate_json(results[k]);
      e["policy"] = k == 0 ? std::string("optimal") : std::to_string(k - 1);
      sweep.push_back(e);
    }
    r["sweep"] = sweep;
    ctx.add_csv("sweep.csv", std::move(table));
  }

  if (ctx.cfg.output.path_histogram && !est.path_integrals.empty()) {
    const auto [lo_it, hi_it] = std::minmax_element(est.path_integrals.begin(), est.path_integrals.end());
    const double lo = *lo_it, hi = *hi_it;
    constexpr std::size_t kBins = 50;
    std::vector<double> counts(kBins, 0.0);
    const double width = hi > lo ? (hi - lo) / kBins : 1.0;
    for (double a : est.path_integrals) {
      const auto b = std::min(kBins - 1, static_cast<std::size_t>((a - lo) / width));
      counts[b] += 1.0;
    }
    Csv table({"bin_lower", "bin_upper", "count"});
    for (std::size_t b = 0; b < kBins; ++b) {
      table.row({lo + b * width, lo + (b + 1) * width, counts[b]});
    }
    ctx.add_csv("histogram.csv", std::move(table));
  }
}

void cmd_orbit(Context& ctx) {
  const ProblemSpec spec = ctx.cfg.spec();
  const DiscreteGenerator gen = DiscreteGenerator::build(spec);
  EigenOptions eo = eigen_options(ctx.cfg);
  eo.record_stats = true;
  eo.record_every = std::max<std::size_t>(1, extra_count(ctx.cfg, "orbit", "record_every", 10));
  const EigenPair ev = solve_evolution(gen, eo);
  FitOptions fo;
  fo.floor_ratio = extra_number(ctx.cfg, "orbit", "floor_ratio", 1e-9);
  json& r = ctx.report;
  r["grid"] = grid_json(gen.grid());
  r["rho"] = ev.rho;
  r["iterations"] = ev.iterations;
  r["records"] = ev.stats.records.size();
  r["zeta1"] = ev.stats.zeta1;
  r["p2_holds"] = ev.stats.p2_holds;
  double under_drop = 0.0, over_rise = 0.0;
  const auto& rec = ev.stats.records;
  for (std::size_t k = 1; k < rec.size(); ++k) {
    under_drop = std::max(under_drop, rec[k - 1].under_alpha - rec[k].under_alpha);
    over_rise = std::max(over_rise, rec[k].over_alpha - rec[k - 1].over_alpha);
  }
  r["under_alpha_max_decrease"] = under_drop;
  r["over_alpha_max_increase"] = over_rise;
  try {
    const RateFit fit = fit_exponential_rate(ev.stats, fo);
    r["fit"] = json{{"theta", fit.theta},
                    {"theta_per_time", fit.theta / ev.dt},
                    {"r2", fit.r2},
                    {"points", fit.points},
                    {"contracting", fit.contracting}};
  } catch (const NonPositiveEta&) {
    r["fit"] = nullptr;
  }
  Csv table({"iteration", "under_alpha", "over_alpha", "eta", "growth", "sup_norm"});
  for (const auto& x : rec) {
    table.row({static_cast<double>(x.iteration), x.under_alpha, x.over_alpha, x.eta, x.growth,
               x.sup_norm});
  }
  ctx.add_csv("orbit.csv", std::move(table));
}

void cmd_evolve(Context& ctx) {
  const ProblemSpec spec = ctx.cfg.spec();
  const DiscreteGenerator gen = DiscreteGenerator::build(spec);
  const double t_final = extra_number(ctx.cfg, "evolve", "t_final", 1.0);
  const std::string f0_text = extra(ctx.cfg, "evolve", "f0", "1");
  const GridFunction f0 = sample(gen.grid(), f0_text);
  const double dt = ctx.cfg.solver.dt_factor * gen.dt_max();
  const StepPlan plan = plan_steps(t_final, dt);
  std::size_t every = extra_count(ctx.cfg, "evolve", "record_every", 0);
  if (every == 0) every = std::max<std::size_t>(1, plan.steps / 200);

  Csv series({"step", "time", "min", "max", "sup_norm"});
  const GridFunction ft = evolve(gen, f0, {plan.dt, t_final, every},
                                 [&](std::size_t k, double t, std::span<const double> f) {
                                   const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
                                   series.row({static_cast<double>(k), t, *lo, *hi,
                                               std::max(std::abs(*lo), std::abs(*hi))});
                                 });
  json& r = ctx.report;
  r["grid"] = grid_json(gen.grid());
  r["f0"] = f0_text;
  r["t_final"] = t_final;
  r["steps"] = plan.steps;
  r["dt"] = plan.dt;
  r["min"] = ft.min();
  r["max"] = ft.max();
  r["sup_norm"] = ft.sup_norm();
  ctx.add_csv("orbit.csv", std::move(series));

  const std::string t_list_text = extra(ctx.cfg, "evolve", "t_list", "");
  if (!t_list_text.empty()) {
    std::vector<double> ts;
    for (const auto& row : parse_rows(t_list_text)) {
      if (row.size() != 1) throw ValidationError("evolve.t_list: one time per item");
      ts.push_back(row.front());
    }
    const auto res = generator_limit_check(gen, f0, ts, dt);
    Csv table({"t", "residual"});
    json arr = json::array();
    for (std::size_t k = 0; k < ts.size(); ++k) {
      table.row({ts[k], res[k]});
      arr.push_back(json{{"t", ts[k]}, {"residual", res[k]}});
    }
    r["limit_check"] = arr;
    ctx.add_csv("sweep.csv", std::move(table));
  }

  auto header = coord_header(gen.grid());
  header.emplace_back("f0");
  header.emplace_back("f_t");
  Csv table(header);
  for (std::size_t i = 0; i < gen.node_count(); ++i) {
    auto row = coord_row(gen.grid(), i);
    row.push_back(f0[i]);
    row.push_back(ft[i]);
    table.row(row);
  }
  ctx.add_csv("phi.csv", std::move(table));
}

void cmd_matrix(Context& ctx) {
  const std::string rows = extra(ctx.cfg, "matrix", "rows", "");
  if (rows.empty()) throw ValidationError("matrix.rows: required for matrix-cw");
  const cw::NonnegMatrix m = cw::NonnegMatrix::from_rows(parse_rows(rows));
  const double shift = extra_number(ctx.cfg, "matrix", "shift", 0.0);
  const double tol = extra_number(ctx.cfg, "matrix", "tol", 1e-12);
  const cw::NonnegMatrix q = shift != 0.0 ? m.shifted(shift) : m;
  json& r = ctx.report;
  r["size"] = m.size();
  r["irreducible"] = cw::is_irreducible(m);
  const cw::PerronResult pr = cw::perron(q, tol, ctx.cfg.solver.max_iters);
  r["lambda"] = pr.lambda - shift;
  r["lower"] = pr.lower - shift;
  r["shift"] = shift;
  r["iterations"] = pr.iterations;
  r["vector"] = pr.x;
  const std::string xs = extra(ctx.cfg, "matrix", "x", "");
  if (!xs.empty()) {
    std::vector<double> x;
    for (const auto& row : parse_rows(xs)) {
      if (row.size() != 1) throw ValidationError("matrix.x: one entry per item");
      x.push_back(row.front());
    }
    if (x.size() != m.size()) throw ValidationError("matrix.x: length differs from matrix size");
    r["cw_at_x"] = json{{"lower", cw::cw_lower(m, x)}, {"upper", cw::cw_upper(m, x)}};
  }
  Csv table({"index", "x"});
  for (std::size_t i = 0; i < pr.x.size(); ++i) table.row({static_cast<double>(i), pr.x[i]});
  ctx.add_csv("phi.csv", std::move(table));
}

int exit_code_for(const std::exception& e) {
  if (const auto* ne = dynamic_cast<const Error*>(&e)) return ne->numerical() ? 2 : 1;
  return 1;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve",  "bounds", "dv",     "hji-check",
                                              "simulate", "orbit", "evolve", "matrix-cw"};
  return names;
}

std::string error_json(const std::exception& e, int exit_code) {
  json j;
  const auto* ne = dynamic_cast<const Error*>(&e);
  j["error"] = ne ? ne->kind() : "Error";
  j["message"] = e.what();
  j["exit_code"] = exit_code;
  if (const auto* pe = dynamic_cast<const ParseError*>(&e)) j["line"] = pe->line();
  return j.dump();
}

int run(const std::string& command, Config cfg, const RunFlags& flags, std::ostream& out,
        std::ostream& err) {
  try {
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end()) {
      throw ValidationError("unknown command '" + command + "'");
    }
    if (flags.n) {
      if (!cfg.problem) throw ValidationError("--n needs a problem section");
      cfg.problem->n = *flags.n;
      validate_config(cfg);
    }
    Context ctx{cfg, flags, flags.out.value_or(cfg.output.directory), json::object(), {}};
    ctx.report["command"] = command;
    ctx.report["status"] = "ok";
    ctx.report["files"] = json::array();
    if (command == "solve") cmd_solve(ctx);
    else if (command == "bounds") cmd_bounds(ctx);
    else if (command == "dv") cmd_dv(ctx);
    else if (command == "hji-check") cmd_hji(ctx);
    else if (command == "simulate") cmd_simulate(ctx);
    else if (command == "orbit") cmd_orbit(ctx);
    else if (command == "evolve") cmd_evolve(ctx);
    else cmd_matrix(ctx);

    std::filesystem::create_directories(ctx.dir);
    if (cfg.wants("json")) ctx.report["files"].push_back("report.json");
    for (const auto& [name, table] : ctx.csv) table.write(ctx.dir / name);
    const std::string text = ctx.report.dump(2);
    if (cfg.wants("json")) {
      std::ofstream f(ctx.dir / "report.json");
      if (!f) throw ValidationError("cannot write report.json");
      f << text << '\n';
    }
    if (flags.echo) out << text << '\n';
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << error_json(e, code) << '\n';
    return code;
  }
}

int run_file(const std::string& command, const std::string& config_path, const RunFlags& flags,
             std::ostream& out, std::ostream& err) {
  Config cfg;
  try {
    cfg = load_config(config_path);
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << error_json(e, code) << '\n';
    return code;
  }
  return run(command, std::move(cfg), flags, out, err);
}

}  // namespace nisio
