#include "nisio/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nisio/kernels.hpp"

namespace nisio {

namespace {

void check_dt(const DiscreteGenerator& gen, double dt) {
  if (!(dt > 0.0) || dt > gen.dt_max()) {
    throw CflViolation("time step " + std::to_string(dt) + " outside (0, dt_max = " +
                       std::to_string(gen.dt_max()) + "]");
  }
}

void check_length(const DiscreteGenerator& gen, std::span<const double> f) {
  if (f.size() != gen.node_count()) throw IndexOutOfRange("grid function has wrong length");
}

template <class StepFn>
GridFunction run_steps(std::span<const double> f, const StepPlan& plan, StepFn&& advance,
                       std::size_t record_every, const EvolveObserver& observer) {
  GridFunction cur(std::vector<double>(f.begin(), f.end()));
  GridFunction next(cur.size(), 0.0);
  if (observer && record_every > 0) observer(0, 0.0, cur.span());
  for (std::size_t k = 0; k < plan.steps; ++k) {
    advance(cur.span(), next.span());
    std::swap(cur, next);
    if (observer && record_every > 0 && ((k + 1) % record_every == 0 || k + 1 == plan.steps)) {
      observer(k + 1, static_cast<double>(k + 1) * plan.dt, cur.span());
    }
  }
  return cur;
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double sup(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

StepPlan plan_steps(double t_final, double dt) {
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ValidationError("t_final must be >= 0");
  if (!(dt > 0.0)) throw CflViolation("time step must be positive");
  if (t_final == 0.0) return {0, dt};
  const double ratio = t_final / dt;
  const double rounded = std::round(ratio);
  if (rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * rounded) {
    return {static_cast<std::size_t>(rounded), dt};
  }
  const auto steps = static_cast<std::size_t>(std::ceil(ratio));
  return {steps, t_final / static_cast<double>(steps)};
}

GridFunction step(const DiscreteGenerator& gen, std::span<const double> f, double dt) {
  return step(gen, f, dt, gen.sense());
}

GridFunction step(const DiscreteGenerator& gen, std::span<const double> f, double dt,
                  Sense sense) {
  check_dt(gen, dt);
  check_length(gen, f);
  GridFunction out(gen.node_count(), 0.0);
  kernels::euler_step(gen, f, dt, sense, out.span());
  return out;
}

GridFunction evolve(const DiscreteGenerator& gen, std::span<const double> f,
                    const EvolveOptions& opts, const EvolveObserver& observer) {
  return evolve(gen, f, opts, gen.sense(), observer);
}

GridFunction evolve(const DiscreteGenerator& gen, std::span<const double> f,
                    const EvolveOptions& opts, Sense sense, const EvolveObserver& observer) {
  check_dt(gen, opts.dt);
  check_length(gen, f);
  const StepPlan plan = plan_steps(opts.t_final, opts.dt);
  return run_steps(
      f, plan,
      [&](std::span<const double> in, std::span<double> out) {
        kernels::euler_step(gen, in, plan.dt, sense, out);
      },
      opts.record_every, observer);
}

GridFunction evolve_linear(const DiscreteGenerator& gen, std::size_t v,
                           std::span<const double> f, const EvolveOptions& opts) {
  check_dt(gen, opts.dt);
  check_length(gen, f);
  if (v >= gen.control_count()) throw IndexOutOfRange("control index " + std::to_string(v));
  const StepPlan plan = plan_steps(opts.t_final, opts.dt);
  return run_steps(
      f, plan,
      [&](std::span<const double> in, std::span<double> out) {
        kernels::linear_step(gen, v, in, plan.dt, out);
      },
      0, {});
}

std::vector<double> generator_limit_check(const DiscreteGenerator& gen,
                                          std::span<const double> f,
                                          std::span<const double> t_list, double dt) {
  check_dt(gen, dt);
  check_length(gen, f);
  const GridFunction gf = apply_G(gen, f);
  std::vector<double> residuals;
  residuals.reserve(t_list.size());
  for (double t : t_list) {
    if (!(t > 0.0)) throw ValidationError("generator_limit_check needs t > 0");
    const GridFunction st = evolve(gen, f, {dt, t, 0});
    double r = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      r = std::max(r, std::abs((st[i] - f[i]) / t - gf[i]));
    }
    residuals.push_back(r);
  }
  return residuals;
}

PropertyReport check_properties(const DiscreteGenerator& gen, std::span<const double> f,
                                std::span<const double> g, double t, double dt) {
  check_length(gen, f);
  check_length(gen, g);
  const std::size_t n = gen.node_count();
  const StepPlan plan = plan_steps(t, dt);
  const EvolveOptions opts{plan.dt, t, 0};
  PropertyReport rep;

  const GridFunction sf = evolve(gen, f, opts);
  const GridFunction sg = evolve(gen, g, opts);

  // monotonicity on the ordered pair (min(f,g), max(f,g))
  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = std::min(f[i], g[i]);
    hi[i] = std::max(f[i], g[i]);
  }
  const GridFunction slo = evolve(gen, lo, opts);
  const GridFunction shi = evolve(gen, hi, opts);
  rep.monotone = true;
  for (std::size_t i = 0; i < n; ++i) rep.monotone = rep.monotone && slo[i] <= shi[i];

  std::vector<double> scaled(f.begin(), f.end());
  for (double& v : scaled) v *= 4.0;
  const GridFunction sscaled = evolve(gen, scaled, opts);
  rep.homogeneous = true;
  for (std::size_t i = 0; i < n; ++i) rep.homogeneous = rep.homogeneous && sscaled[i] == 4.0 * sf[i];

  std::vector<double> sum(n);
  for (std::size_t i = 0; i < n; ++i) sum[i] = f[i] + g[i];
  const GridFunction ssum = evolve(gen, sum, opts);
  const double scale = std::max(sup(sf.span()) + sup(sg.span()), 1e-300);
  rep.superadditive_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    rep.superadditive_slack = std::min(rep.superadditive_slack, (ssum[i] - sf[i] - sg[i]) / scale);
  }

  rep.envelope = true;
  for (std::size_t u = 0; u < gen.control_count(); ++u) {
    const GridFunction tf = evolve_linear(gen, u, f, opts);
    for (std::size_t i = 0; i < n; ++i) rep.envelope = rep.envelope && tf[i] >= sf[i];
  }

  const double growth = std::exp(gen.r_max() * t);
  rep.boundedness_slack = growth * sup(f) - sup(sf.span());
  rep.lipschitz_slack = growth * sup_diff(f, g) - sup_diff(sf.span(), sg.span());

  const GridFunction one(n, 1.0);
  const GridFunction s1 = evolve(gen, one.span(), opts);
  rep.unit_lower_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    rep.unit_lower_slack = std::min(rep.unit_lower_slack, growth * s1[i] - 1.0);
  }

  // S_t = S_{t - s} o S_s with s a whole number of steps
  const std::size_t first = plan.steps / 2;
  const double s = static_cast<double>(first) * plan.dt;
  const double rest = static_cast<double>(plan.steps - first) * plan.dt;
  GridFunction half(std::vector<double>(f.begin(), f.end()));
  if (first > 0) half = evolve(gen, f, {plan.dt, s, 0});
  if (plan.steps - first > 0) half = evolve(gen, half.span(), {plan.dt, rest, 0});
  rep.composition = half == sf;
  return rep;
}

}  // namespace nisio
