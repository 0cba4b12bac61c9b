#include "nisio/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "nisio/kernels.hpp"
#include "nisio/matrix_cw.hpp"

namespace nisio {

namespace {

void finish(const DiscreteGenerator& gen, Sense sense, EigenPair& pair) {
  const GridFunction gphi = apply_G(gen, pair.phi.span(), sense);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < gphi.size(); ++i) {
    const double q = gphi[i] / pair.phi[i];
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  pair.lower = lo;
  pair.upper = hi;
  pair.rho = lo == hi ? lo : 0.5 * (lo + hi);
  double res = 0.0;
  for (std::size_t i = 0; i < gphi.size(); ++i) {
    res = std::max(res, std::abs(gphi[i] - pair.rho * pair.phi[i]));
  }
  pair.residual = res;
  if (pair.policy.empty()) pair.policy = argmin_policy(gen, pair.phi.span(), sense);
}

std::vector<double> start_vector(const DiscreteGenerator& gen, const EigenOptions& opts) {
  if (opts.start.empty()) return std::vector<double>(gen.node_count(), 1.0);
  if (opts.start.size() != gen.node_count()) throw ValidationError("start has wrong length");
  require_positive(opts.start, "eigensolver start");
  return opts.start;
}

bool better(Sense sense, double candidate, double incumbent) {
  return sense == Sense::Minimize ? candidate < incumbent : candidate > incumbent;
}

}  // namespace

EigenPair solve_evolution(const DiscreteGenerator& gen, const EigenOptions& opts) {
  return solve_evolution(gen, opts, gen.sense());
}

EigenPair solve_evolution(const DiscreteGenerator& gen, const EigenOptions& opts, Sense sense) {
  if (!(opts.tol > 0.0)) throw ValidationError("tol must be positive");
  if (!(opts.dt_factor > 0.0 && opts.dt_factor <= 1.0)) {
    throw ValidationError("dt_factor must lie in (0, 1]");
  }
  const double dt = opts.dt_factor * gen.dt_max();
  const ConeMap map = [&gen, dt, sense](std::span<const double> in, std::span<double> out) {
    kernels::euler_step(gen, in, dt, sense, out);
  };
  PowerOptions popts;
  popts.tol = opts.tol * dt;
  popts.max_iters = opts.max_iters;
  popts.record_stats = opts.record_stats;
  popts.record_every = opts.record_every;
  const std::vector<double> f0 = start_vector(gen, opts);
  PowerResult pr = power_iterate(map, f0, popts);

  EigenPair pair;
  pair.phi = std::move(pr.fixed_point);
  pair.iterations = pr.iterations;
  pair.dt = dt;
  pair.method = "evolution";
  pair.stats = std::move(pr.stats);
  finish(gen, sense, pair);
  return pair;
}

EigenPair solve_policy_iteration(const DiscreteGenerator& gen, const EigenOptions& opts) {
  return solve_policy_iteration(gen, opts, gen.sense());
}

EigenPair solve_policy_iteration(const DiscreteGenerator& gen, const EigenOptions& opts,
                                 Sense sense) {
  if (!(opts.tol > 0.0)) throw ValidationError("tol must be positive");
  const std::size_t n = gen.node_count();
  const double shift = gen.perron_shift();
  // Relative bracket width of the inner Perron solve; rounding limits it to
  // a few ulps of the shifted eigenvalue.
  const double inner_tol = std::max(opts.tol / (shift + 1.0), 4e-15);

  std::vector<double> phi = start_vector(gen, opts);
  std::vector<int> policy = argmin_policy(gen, phi, sense);
  std::set<std::vector<int>> seen{policy};
  double rho_prev = std::numeric_limits<double>::quiet_NaN();
  std::size_t total_inner = 0;

  for (std::size_t it = 0; it < opts.max_policy_iters; ++it) {
    const SparseNonneg q = gen.shifted_matrix(policy, shift);
    cw::PerronResult pr = cw::perron(q, inner_tol, opts.max_iters, phi);
    total_inner += pr.iterations;
    phi = std::move(pr.x);
    const double rho = 0.5 * (pr.lambda + pr.lower) - shift;

    // Policy improvement; keep the current control on near-ties.
    std::vector<int> next(policy);
    for (std::size_t i = 0; i < n; ++i) {
      const auto cur = static_cast<std::size_t>(policy[i]);
      const double cur_val = gen.apply_row(cur, i, phi);
      double best_val = cur_val;
      int best = policy[i];
      for (std::size_t v = 0; v < gen.control_count(); ++v) {
        const double val = gen.apply_row(v, i, phi);
        if (better(sense, val, best_val)) {
          best_val = val;
          best = static_cast<int>(v);
        }
      }
      const double tie = 1e-12 * std::max(1.0, gen.outflow(cur, i) * phi[i]);
      if (best != policy[i] && std::abs(best_val - cur_val) > tie) next[i] = best;
    }

    const bool stable = next == policy;
    const bool settled = std::isfinite(rho_prev) ? std::abs(rho - rho_prev) < opts.tol : stable;
    if (stable && settled) {
      EigenPair pair;
      pair.phi = GridFunction(std::move(phi));
      pair.policy = std::move(policy);
      pair.iterations = it + 1;
      pair.method = "policy_iteration";
      finish(gen, sense, pair);
      return pair;
    }
    if (!stable && !seen.insert(next).second) {
      std::size_t changed = 0;
      for (std::size_t i = 0; i < n; ++i) changed += next[i] != policy[i];
      throw CycleDetected("policy iteration revisited an earlier policy (" +
                          std::to_string(changed) + " nodes switch between the two policies)");
    }
    policy = std::move(next);
    rho_prev = rho;
  }
  throw NoConvergence("policy iteration did not stabilize within " +
                      std::to_string(opts.max_policy_iters) + " improvements");
}

EigenPair solve_max(const DiscreteGenerator& gen, const EigenOptions& opts) {
  return solve_evolution(gen, opts, Sense::Maximize);
}

}  // namespace nisio
