#include "nisio/mc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "nisio/kernels.hpp"

namespace nisio {

namespace {

struct Coefficients {
  std::vector<expr::Program> drift;
  std::vector<expr::Program> sigma;
  expr::Program cost;
};

Coefficients compile(const ProblemSpec& spec) {
  const std::vector<std::string> slots = spec.slot_names();
  Coefficients c;
  for (const auto& e : spec.drift) c.drift.emplace_back(e, slots);
  for (const auto& e : spec.sigma) c.sigma.emplace_back(e, slots);
  c.cost = expr::Program(spec.cost, slots);
  return c;
}

// Folds a coordinate back into [0, L].
double reflect(double x, double len) {
  if (x >= 0.0 && x <= len) return x;
  double y = std::fmod(x, 2.0 * len);
  if (y < 0.0) y += 2.0 * len;
  return y > len ? 2.0 * len - y : y;
}

double wrap(double x, double len) {
  double y = x - len * std::floor(x / len);
  return y >= len ? 0.0 : y;
}

// Pairwise summation in index order.
double pairwise_sum(const double* a, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(a, half) + pairwise_sum(a + half, n - half);
}

// Sum of r over the left endpoints of one path (A = dt * sum).
double simulate_path(const ProblemSpec& spec, const Coefficients& co, const McConfig& cfg,
                     std::size_t steps, double dt, std::uint64_t path) {
  const Grid& grid = spec.grid;
  const auto d = static_cast<std::size_t>(grid.dim);
  const std::size_t m = spec.control_dim();
  std::mt19937_64 rng(path_seed(cfg.seed, path));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sqdt = std::sqrt(dt);

  std::vector<double> slots(d + m, 0.0);
  std::array<double, 2> x{0.0, 0.0}, xi{0.0, 0.0}, b{0.0, 0.0};
  std::array<double, 4> sig{};
  for (std::size_t j = 0; j < d; ++j) x[j] = cfg.x0[j];
  double sum = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t node = grid.nearest(std::span<const double>(x.data(), d));
    const auto& u = spec.controls[static_cast<std::size_t>(cfg.policy[node])];
    for (std::size_t j = 0; j < d; ++j) slots[j] = x[j];
    for (std::size_t j = 0; j < m; ++j) slots[d + j] = u[j];
    sum += co.cost(slots);
    for (std::size_t j = 0; j < d; ++j) b[j] = co.drift[j](slots);
    for (std::size_t j = 0; j < d * d; ++j) sig[j] = co.sigma[j](slots);
    for (std::size_t j = 0; j < d; ++j) xi[j] = normal(rng);
    for (std::size_t j = 0; j < d; ++j) {
      double dx = b[j] * dt;
      for (std::size_t l = 0; l < d; ++l) dx += sig[j * d + l] * sqdt * xi[l];
      x[j] += dx;
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(x[j]) || !std::isfinite(sum)) {
        throw NonFiniteState("path " + std::to_string(path) + " blew up at step " +
                             std::to_string(k));
      }
      x[j] = grid.topology == Topology::Interval ? reflect(x[j], grid.extent)
                                                 : wrap(x[j], grid.extent);
      if (!(x[j] >= 0.0 && x[j] <= grid.extent)) {
        throw NonFiniteState("path " + std::to_string(path) + " left the domain at step " +
                             std::to_string(k));
      }
    }
  }
  return sum;
}

}  // namespace

std::uint64_t path_seed(std::uint64_t master, std::uint64_t path) {
  // splitmix64 of a counter offset from the master seed
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (path + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<int> constant_policy(const Grid& grid, int v) {
  return std::vector<int>(grid.node_count(), v);
}

void validate(const ProblemSpec& spec, const McConfig& cfg) {
  spec.validate();
  if (!(cfg.dt_sim > 0.0) || !std::isfinite(cfg.dt_sim)) throw ValidationError("dt_sim must be > 0");
  if (cfg.N < 100) throw ValidationError("N must be >= 100");
  if (!(cfg.T >= 10.0 * cfg.dt_sim) || !std::isfinite(cfg.T)) {
    throw ValidationError("T must be >= 10 dt_sim");
  }
  const Grid& grid = spec.grid;
  if (cfg.x0.size() != static_cast<std::size_t>(grid.dim)) {
    throw ValidationError("x0 must have one entry per axis");
  }
  for (double v : cfg.x0) {
    if (!(v >= 0.0 && v <= grid.extent)) throw ValidationError("x0 must lie in the domain");
  }
  if (cfg.policy.size() != grid.node_count()) {
    throw ValidationError("policy must give one control per grid node");
  }
  for (int u : cfg.policy) {
    if (u < 0 || static_cast<std::size_t>(u) >= spec.controls.size()) {
      throw IndexOutOfRange("policy control index out of range");
    }
  }
}

McEstimate simulate_cost(const ProblemSpec& spec, const McConfig& cfg) {
  validate(spec, cfg);
  const Coefficients co = compile(spec);
  const auto steps = static_cast<std::size_t>(std::llround(cfg.T / cfg.dt_sim));
  const double dt = cfg.T / static_cast<double>(steps);

  std::vector<double> sums(cfg.N);
  const auto paths = static_cast<std::ptrdiff_t>(cfg.N);
#if defined(NISIO_HAVE_OPENMP)
  std::string failure;
#pragma omp parallel for schedule(dynamic, 16) num_threads(kernels::worker_count())
  for (std::ptrdiff_t p = 0; p < paths; ++p) {
    try {
      sums[static_cast<std::size_t>(p)] =
          simulate_path(spec, co, cfg, steps, dt, static_cast<std::uint64_t>(p));
    } catch (const NonFiniteState& e) {
#pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw NonFiniteState(failure);
#else
  for (std::ptrdiff_t p = 0; p < paths; ++p) {
    sums[static_cast<std::size_t>(p)] =
        simulate_path(spec, co, cfg, steps, dt, static_cast<std::uint64_t>(p));
  }
#endif

  // log-mean-exp with max subtraction; value = max/steps + log(mean w)/T
  const double top = *std::max_element(sums.begin(), sums.end());
  std::vector<double> w(cfg.N), w2(cfg.N);
  for (std::size_t p = 0; p < cfg.N; ++p) {
    w[p] = std::exp(dt * (sums[p] - top));
    w2[p] = w[p] * w[p];
  }
  const double n = static_cast<double>(cfg.N);
  const double s1 = pairwise_sum(w.data(), w.size());
  const double s2 = pairwise_sum(w2.data(), w2.size());
  const double mean = s1 / n;
  const double var = std::max(0.0, (s2 / n - mean * mean) * n / (n - 1.0));
  const double t_eff = dt * static_cast<double>(steps);

  McEstimate est;
  est.value = top / static_cast<double>(steps) + std::log(mean) / t_eff;
  est.std_error = std::sqrt(var / n) / mean / t_eff;
  est.n_effective = s1 * s1 / s2;
  est.N = cfg.N;
  est.steps = steps;
  est.T = t_eff;
  est.dt = dt;
  if (cfg.keep_paths) {
    est.path_integrals.resize(cfg.N);
    for (std::size_t p = 0; p < cfg.N; ++p) est.path_integrals[p] = dt * sums[p];
  }
  return est;
}

std::vector<McEstimate> policy_sweep(const ProblemSpec& spec, const McConfig& cfg,
                                     const std::vector<std::vector<int>>& policies) {
  std::vector<McEstimate> out;
  out.reserve(policies.size());
  for (const auto& pol : policies) {
    McConfig c = cfg;
    c.policy = pol;
    out.push_back(simulate_cost(spec, c));
  }
  return out;
}

}  // namespace nisio
