#pragma once

// Principal eigenpair (rho, phi) of the discrete HJB operator,
//   G phi = rho phi,  phi > 0,  ||phi||_inf = 1,
// by two independent routes: normalized evolution of the semigroup, and
// Howard policy iteration whose inner step is a Perron eigensolve of the
// frozen-policy matrix. solve_max gives the pair (beta, psi) of the
// maximizing operator.

#include <cstddef>
#include <string>
#include <vector>

#include "nisio/cone_iteration.hpp"
#include "nisio/generator.hpp"

namespace nisio {

struct EigenOptions {
  double tol = 1e-10;              ///< target accuracy of rho (1/time)
  std::size_t max_iters = 20000000;
  double dt_factor = 0.5;          ///< evolution step as a fraction of dt_max
  std::size_t max_policy_iters = 200;
  bool record_stats = false;       ///< keep the orbit stats of the evolution route
  std::size_t record_every = 1;
  std::vector<double> start;       ///< optional positive start; defaults to ones
};

struct EigenPair {
  double rho = 0.0;
  GridFunction phi;          ///< strictly positive, sup norm 1
  std::vector<int> policy;   ///< minimizing (maximizing) control per node
  double residual = 0.0;     ///< ||G phi - rho phi||_inf
  double lower = 0.0;        ///< min_x (G phi / phi)
  double upper = 0.0;        ///< max_x (G phi / phi)
  std::size_t iterations = 0;
  double dt = 0.0;           ///< evolution step (evolution route only)
  std::string method;
  OrbitStats stats;
};

/// Power iteration of one Euler step of S; rho = (growth - 1)/dt refined to
/// the midpoint of the Collatz-Wielandt bracket of G phi / phi.
EigenPair solve_evolution(const DiscreteGenerator& gen, const EigenOptions& opts = {});
EigenPair solve_evolution(const DiscreteGenerator& gen, const EigenOptions& opts, Sense sense);

/// Howard policy iteration. Throws CycleDetected if a policy repeats.
EigenPair solve_policy_iteration(const DiscreteGenerator& gen, const EigenOptions& opts = {});
EigenPair solve_policy_iteration(const DiscreteGenerator& gen, const EigenOptions& opts,
                                 Sense sense);

/// The maximizing pair (beta, psi); beta >= rho.
EigenPair solve_max(const DiscreteGenerator& gen, const EigenOptions& opts = {});

}  // namespace nisio
