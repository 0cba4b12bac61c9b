#pragma once

// Explicit-Euler time stepping of the nonlinear semigroup S_t generated by
// G (and of the frozen-control linear semigroups T_t^u). Under the CFL bound
// each step f -> f + dt G f is a monotone, positively 1-homogeneous,
// superadditive map, so those structural properties carry over exactly to
// the discrete semigroup.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nisio/generator.hpp"

namespace nisio {

struct EvolveOptions {
  double dt = 0.0;        ///< requested step, 0 < dt <= gen.dt_max()
  double t_final = 0.0;   ///< >= 0
  std::size_t record_every = 0;  ///< observer cadence in steps; 0 = never
};

/// Observer called with (step index, time, current values).
using EvolveObserver = std::function<void(std::size_t, double, std::span<const double>)>;

/// Number of steps and effective step used to reach t_final: dt is kept when
/// t_final is already an integer multiple of it, otherwise snapped down.
struct StepPlan {
  std::size_t steps = 0;
  double dt = 0.0;
};
StepPlan plan_steps(double t_final, double dt);

/// f + dt G f. Throws CflViolation if dt > gen.dt_max() or dt <= 0.
GridFunction step(const DiscreteGenerator& gen, std::span<const double> f, double dt);
GridFunction step(const DiscreteGenerator& gen, std::span<const double> f, double dt, Sense sense);

/// S_t f by repeated steps.
GridFunction evolve(const DiscreteGenerator& gen, std::span<const double> f,
                    const EvolveOptions& opts, const EvolveObserver& observer = {});
GridFunction evolve(const DiscreteGenerator& gen, std::span<const double> f,
                    const EvolveOptions& opts, Sense sense, const EvolveObserver& observer = {});

/// T_t^v f for a frozen control v.
GridFunction evolve_linear(const DiscreteGenerator& gen, std::size_t v,
                           std::span<const double> f, const EvolveOptions& opts);

/// residual(t) = max_x |(S_t f - f)(x)/t - (G f)(x)| for each t in t_list,
/// using steps of at most dt.
std::vector<double> generator_limit_check(const DiscreteGenerator& gen,
                                          std::span<const double> f,
                                          std::span<const double> t_list, double dt);

/// Outcome of checking the structural semigroup properties on a pair of
/// grid functions. Booleans are exact comparisons; slacks are
/// (bound - observed), so a nonnegative slack means the property held.
struct PropertyReport {
  bool monotone = false;           ///< lo <= hi  =>  S lo <= S hi pointwise
  bool homogeneous = false;        ///< S(c f) == c S f for a power-of-two c
  bool envelope = false;           ///< T^u f >= S f for every control u
  bool composition = false;        ///< S_{t+s} == S_t S_s bit for bit
  double superadditive_slack = 0;  ///< min_x [S(f+g) - S f - S g], relative to scale
  double boundedness_slack = 0;    ///< e^{r_max t}||f|| - ||S_t f||
  double lipschitz_slack = 0;      ///< e^{r_max t}||f-g|| - ||S_t f - S_t g||
  double unit_lower_slack = 0;     ///< min_x [e^{r_max t} S_t 1 - 1]
};

/// Checks the properties at time t with step dt (t a multiple of dt; the
/// composition check splits t into two halves of whole steps).
PropertyReport check_properties(const DiscreteGenerator& gen, std::span<const double> f,
                                std::span<const double> g, double t, double dt);

}  // namespace nisio
