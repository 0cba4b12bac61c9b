#pragma once

// Monte Carlo estimate of the risk-sensitive growth rate
//   (1/T) log E[ exp( int_0^T r(X_t, u(X_t)) dt ) ]
// under a Markov policy given per grid node, by Euler-Maruyama on the
// reflected (interval) or periodic (torus) diffusion.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nisio/generator.hpp"

namespace nisio {

struct McConfig {
  double T = 20.0;
  double dt_sim = 1e-3;
  std::size_t N = 10000;
  std::uint64_t seed = 1;
  std::vector<double> x0;   ///< start point, one entry per axis
  std::vector<int> policy;  ///< control index per grid node (nearest-node lookup)
  bool keep_paths = false;  ///< return the per-path integrals
};

struct McEstimate {
  double value = 0.0;       ///< 1/time
  double std_error = 0.0;   ///< delta method on the log-mean-exp
  double n_effective = 0.0; ///< (sum w)^2 / sum w^2 of the exponential weights
  std::size_t N = 0;
  std::size_t steps = 0;
  double T = 0.0;           ///< steps * dt
  double dt = 0.0;
  std::vector<double> path_integrals;  ///< A per path when keep_paths is set
};

/// Validates the config against the spec's grid (N >= 100, T >= 10 dt_sim,
/// x0 inside the domain, policy length and indices).
void validate(const ProblemSpec& spec, const McConfig& cfg);

/// Throws NonFiniteState on blow-up, naming the path and step.
McEstimate simulate_cost(const ProblemSpec& spec, const McConfig& cfg);

/// Same seeds for every policy (common random numbers).
std::vector<McEstimate> policy_sweep(const ProblemSpec& spec, const McConfig& cfg,
                                     const std::vector<std::vector<int>>& policies);

/// The policy that uses control `v` at every node.
std::vector<int> constant_policy(const Grid& grid, int v);

/// Per-path generator seed derived from the master seed by counter.
std::uint64_t path_seed(std::uint64_t master, std::uint64_t path);

}  // namespace nisio
