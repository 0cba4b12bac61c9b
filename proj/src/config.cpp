#include "nisio/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace nisio {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

const std::map<std::string, std::set<std::string>, std::less<>>& known_keys() {
  static const std::map<std::string, std::set<std::string>, std::less<>> keys{
      {"problem", {"topology", "d", "n", "extent", "controls", "sigma", "drift", "cost", "sense"}},
      {"solver", {"dt_factor", "tol", "max_iters"}},
      {"mc", {"T", "dt_sim", "N", "seed", "x0", "policy", "sweep"}},
      {"output", {"directory", "formats", "path_histogram"}},
      {"bounds", {"f", "iters", "time_per_iter"}},
      {"orbit", {"record_every", "floor_ratio", "p1"}},
      {"evolve", {"t_final", "f0", "record_every", "t_list"}},
      {"dv", {"samples", "seed", "starts"}},
      {"matrix", {"rows", "x", "shift", "tol"}},
  };
  return keys;
}

struct Reader {
  std::map<std::string, std::pair<std::string, std::size_t>, std::less<>> entries;

  bool has(const std::string& key) const { return entries.count(key) > 0; }
  std::size_t line(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? 0 : it->second.second;
  }
  const std::string& raw(const std::string& key) const { return entries.at(key).first; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ParseError(key + ": " + what, line(key));
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = raw(key);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(key, "expected a number, got '" + s + "'");
    return v;
  }

  long long integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = raw(key);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(key, "expected an integer, got '" + s + "'");
    return v;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = raw(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(key, "expected true or false, got '" + s + "'");
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }

  // Expression list: every item must parse.
  std::vector<std::string> expressions(const std::string& key) const {
    std::vector<std::string> items = split_list(raw(key));
    for (const auto& item : items) {
      try {
        expr::parse(item);
      } catch (const Error& e) {
        fail(key, std::string("malformed expression '") + item + "': " + e.what());
      }
    }
    return items;
  }
};

Reader tokenize(const std::string& text) {
  Reader r;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'section.key = value'", lineno);
    const std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
      throw ParseError("key '" + key + "' must have the form section.key", lineno);
    }
    const std::string section = key.substr(0, dot);
    const std::string name = key.substr(dot + 1);
    const auto& keys = known_keys();
    auto sec = keys.find(section);
    if (sec == keys.end()) throw ParseError("unknown section '" + section + "'", lineno);
    if (!sec->second.count(name)) throw ParseError("unknown key '" + key + "'", lineno);
    if (!value.empty() && value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') throw ParseError("unterminated quote in " + key, lineno);
      value = value.substr(1, value.size() - 2);
    } else {
      const auto hash = value.find('#');
      if (hash != std::string::npos) value = trim(std::string_view(value).substr(0, hash));
    }
    if (r.has(key)) throw ParseError("duplicate key '" + key + "'", lineno);
    r.entries[key] = {value, lineno};
  }
  return r;
}

std::size_t anchor(const Config& cfg, const std::string& key) {
  auto it = cfg.lines.find(key);
  return it == cfg.lines.end() ? 0 : it->second;
}

[[noreturn]] void rethrow_anchored(const Config& cfg, const std::string& key, const Error& e) {
  const std::size_t line = anchor(cfg, key);
  const std::string where = line ? "line " + std::to_string(line) + ": " : std::string();
  throw ValidationError(where + key + ": " + e.what());
}

}  // namespace

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<std::vector<double>> parse_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : split_list(text, ';')) {
    std::vector<double> vals;
    for (const auto& cell : split_list(row, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw ValidationError("expected a number, got '" + cell + "'");
      }
      vals.push_back(v);
    }
    rows.push_back(std::move(vals));
  }
  return rows;
}

ProblemSpec Config::spec() const {
  if (!problem) throw ValidationError("config has no problem section");
  const ProblemConfig& p = *problem;
  const Grid grid = Grid::make(p.topology, p.d, p.n, p.extent);
  return make_problem(grid, p.controls, p.sigma, p.drift, p.cost, p.sense);
}

bool Config::wants(const std::string& format) const {
  return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

void validate_config(const Config& cfg) {
  if (cfg.problem) {
    const ProblemConfig& p = *cfg.problem;
    try {
      Grid::make(p.topology, p.d, p.n, p.extent);
    } catch (const Error& e) {
      rethrow_anchored(cfg, p.n < 8 ? "problem.n" : "problem.d", e);
    }
    const auto d = static_cast<std::size_t>(p.d);
    if (p.sigma.size() != d * d) {
      throw ValidationError("problem.sigma: needs d*d = " + std::to_string(d * d) + " entries");
    }
    if (p.drift.size() != d) {
      throw ValidationError("problem.drift: needs d = " + std::to_string(d) + " entries");
    }
    ProblemSpec spec;
    try {
      spec = cfg.spec();
    } catch (const Error& e) {
      rethrow_anchored(cfg, "problem.controls", e);
    }
    try {
      DiscreteGenerator::build(spec);
    } catch (const Error& e) {
      rethrow_anchored(cfg, "problem.sigma", e);
    }
    if (!cfg.mc.x0.empty() && cfg.mc.x0.size() != d) {
      throw ValidationError("mc.x0: needs one coordinate per axis");
    }
  }
  if (!(cfg.solver.dt_factor > 0.0 && cfg.solver.dt_factor <= 1.0)) {
    throw ValidationError("solver.dt_factor: must lie in (0, 1]");
  }
  if (!(cfg.solver.tol > 0.0)) throw ValidationError("solver.tol: must be positive");
  if (cfg.solver.max_iters == 0) throw ValidationError("solver.max_iters: must be positive");
  if (!(cfg.mc.dt_sim > 0.0)) throw ValidationError("mc.dt_sim: must be positive");
  if (cfg.mc.N < 100) throw ValidationError("mc.N: must be >= 100");
  if (!(cfg.mc.T >= 10.0 * cfg.mc.dt_sim)) throw ValidationError("mc.T: must be >= 10 dt_sim");
}

Config parse_config(const std::string& text, const std::string& source) {
  const Reader r = tokenize(text);
  Config cfg;
  cfg.source = source;
  for (const auto& [key, entry] : r.entries) cfg.lines[key] = entry.second;

  const bool has_problem = std::any_of(r.entries.begin(), r.entries.end(),
                                       [](const auto& e) { return e.first.rfind("problem.", 0) == 0; });
  if (has_problem) {
    ProblemConfig p;
    const std::string topo = r.text("problem.topology", "torus");
    if (topo == "torus") {
      p.topology = Topology::Torus;
    } else if (topo == "interval") {
      p.topology = Topology::Interval;
    } else {
      r.fail("problem.topology", "expected torus or interval, got '" + topo + "'");
    }
    p.d = static_cast<int>(r.integer("problem.d", 1));
    p.n = static_cast<int>(r.integer("problem.n", 64));
    p.extent = r.number("problem.extent", 1.0);
    if (r.has("problem.controls")) {
      try {
        p.controls = parse_rows(r.raw("problem.controls"));
      } catch (const ValidationError& e) {
        r.fail("problem.controls", e.what());
      }
    }
    for (const char* k : {"problem.sigma", "problem.drift", "problem.cost"}) {
      if (!r.has(k)) throw ParseError(std::string("missing required key ") + k, 0);
    }
    p.sigma = r.expressions("problem.sigma");
    p.drift = r.expressions("problem.drift");
    const auto cost = r.expressions("problem.cost");
    if (cost.size() != 1) r.fail("problem.cost", "expected a single expression");
    p.cost = cost.front();
    const std::string sense = r.text("problem.sense", "minimize");
    if (sense == "minimize" || sense == "min") {
      p.sense = Sense::Minimize;
    } else if (sense == "maximize" || sense == "max") {
      p.sense = Sense::Maximize;
    } else {
      r.fail("problem.sense", "expected minimize or maximize");
    }
    cfg.problem = std::move(p);
  }

  cfg.solver.dt_factor = r.number("solver.dt_factor", cfg.solver.dt_factor);
  cfg.solver.tol = r.number("solver.tol", cfg.solver.tol);
  const long long max_iters = r.integer("solver.max_iters", static_cast<long long>(cfg.solver.max_iters));
  if (max_iters <= 0) r.fail("solver.max_iters", "must be positive");
  cfg.solver.max_iters = static_cast<std::size_t>(max_iters);

  cfg.mc.T = r.number("mc.T", cfg.mc.T);
  cfg.mc.dt_sim = r.number("mc.dt_sim", cfg.mc.dt_sim);
  const long long paths = r.integer("mc.N", static_cast<long long>(cfg.mc.N));
  if (paths < 0) r.fail("mc.N", "must be >= 100");
  cfg.mc.N = static_cast<std::size_t>(paths);
  const long long seed = r.integer("mc.seed", 1);
  if (seed < 0) r.fail("mc.seed", "must be nonnegative");
  cfg.mc.seed = static_cast<std::uint64_t>(seed);
  if (r.has("mc.x0")) {
    try {
      for (const auto& row : parse_rows(r.raw("mc.x0"))) {
        if (row.size() != 1) r.fail("mc.x0", "expected one number per axis, separated by ';'");
        cfg.mc.x0.push_back(row.front());
      }
    } catch (const ValidationError& e) {
      r.fail("mc.x0", e.what());
    }
  }
  cfg.mc.policy = r.text("mc.policy", cfg.mc.policy);
  cfg.mc.sweep = r.boolean("mc.sweep", cfg.mc.sweep);

  cfg.output.directory = r.text("output.directory", cfg.output.directory);
  if (r.has("output.formats")) {
    cfg.output.formats.clear();
    for (const auto& f : split_list(r.raw("output.formats"), ',')) {
      if (f != "json" && f != "csv") r.fail("output.formats", "unknown format '" + f + "'");
      cfg.output.formats.push_back(f);
    }
  }
  cfg.output.path_histogram = r.boolean("output.path_histogram", cfg.output.path_histogram);

  for (const auto& [key, entry] : r.entries) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section == "bounds" || section == "orbit" || section == "evolve" || section == "dv" ||
        section == "matrix") {
      cfg.extra[section][key.substr(dot + 1)] = entry.first;
    }
  }

  validate_config(cfg);
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace nisio
