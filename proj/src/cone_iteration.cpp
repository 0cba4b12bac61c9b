#include "nisio/cone_iteration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nisio {

AlphaBounds alpha_bounds(std::span<const double> f, std::span<const double> reference) {
  if (f.size() != reference.size() || f.empty()) {
    throw ValidationError("alpha_bounds: length mismatch");
  }
  require_positive(reference, "alpha_bounds reference");
  AlphaBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double q = f[i] / reference[i];
    b.under = std::min(b.under, q);
    b.over = std::max(b.over, q);
  }
  return b;
}

namespace {

double sup(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// One normalized application. Returns the normalization factor and the
// log-ratio spread of map(g) against g.
struct Applied {
  double norm;
  double spread;
};

Applied apply_normalized(const ConeMap& map, std::vector<double>& g, std::vector<double>& y,
                         std::size_t iteration) {
  map(g, y);
  // log is monotone, so the spread needs only the extreme ratios
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double norm = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
      throw NonPositiveIterate("iterate " + std::to_string(iteration) +
                               " is not strictly positive at index " + std::to_string(i));
    }
    const double q = y[i] / g[i];
    lo = std::min(lo, q);
    hi = std::max(hi, q);
    norm = std::max(norm, y[i]);
  }
  const double spread = std::log(hi) - std::log(lo);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = y[i] / norm;
  return {norm, spread};
}

}  // namespace

PowerResult power_iterate(const ConeMap& map, std::span<const double> f0,
                          const PowerOptions& opts) {
  if (f0.empty()) throw ValidationError("power_iterate: empty start");
  require_positive<NonPositiveIterate>(f0, "power_iterate start");
  const std::size_t n = f0.size();
  const double start_norm = sup(f0);
  std::vector<double> g0(n);
  for (std::size_t i = 0; i < n; ++i) g0[i] = f0[i] / start_norm;

  std::vector<double> g = g0, y(n);
  std::vector<double> factors;
  double spread = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (std::size_t k = 0; k < opts.max_iters; ++k) {
    const Applied a = apply_normalized(map, g, y, k);
    factors.push_back(a.norm);
    spread = a.spread;
    if (spread < opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NoConvergence("power_iterate: log-ratio spread " + std::to_string(spread) +
                        " above tol after " + std::to_string(opts.max_iters) + " iterations");
  }

  PowerResult out;
  out.iterations = factors.size();
  out.spread = spread;
  const std::size_t tail = std::max<std::size_t>(1, factors.size() / 4);
  double log_sum = 0.0;
  for (std::size_t k = factors.size() - tail; k < factors.size(); ++k) log_sum += std::log(factors[k]);
  out.growth = std::exp(log_sum / static_cast<double>(tail));
  out.fixed_point = GridFunction(g);

  if (!opts.record_stats) return out;

  // Replay the orbit against the converged iterate. x_k = g_k * exp(scale_k)
  // with scale_k = sum_{j<k} log factor_j - k log growth.
  const std::vector<double>& ref = out.fixed_point.values();
  OrbitStats& stats = out.stats;
  stats.zeta1 = *std::max_element(ref.begin(), ref.end()) / *std::min_element(ref.begin(), ref.end());
  stats.p1_min = std::numeric_limits<double>::infinity();
  const double log_growth = std::log(out.growth);
  const std::size_t every = std::max<std::size_t>(1, opts.record_every);
  std::vector<double> z(n), diff(n), mz(n), mdiff(n);
  g = g0;
  double scale = 0.0;
  for (std::size_t k = 0; k <= factors.size(); ++k) {
    if (k % every == 0 || k == factors.size()) {
      const double amp = std::exp(scale);
      const AlphaBounds ab = alpha_bounds(g, ref);
      OrbitRecord rec;
      rec.iteration = k;
      rec.under_alpha = ab.under * amp;
      rec.over_alpha = ab.over * amp;
      rec.eta = rec.over_alpha - rec.under_alpha;
      rec.growth = k < factors.size() ? factors[k] : out.growth;
      rec.sup_norm = amp;  // g_k has sup norm 1
      if (rec.sup_norm > rec.over_alpha * stats.zeta1 * (1.0 + 1e-12)) stats.p2_holds = false;
      if (opts.p1_diagnostic) {
        for (std::size_t i = 0; i < n; ++i) {
          z[i] = g[i] / ab.over;
          diff[i] = ref[i] - z[i];
        }
        map(z, mz);
        map(diff, mdiff);
        stats.p1_min = std::min(stats.p1_min, sup(mz) + sup(mdiff));
      }
      stats.records.push_back(rec);
    }
    if (k == factors.size()) break;
    map(g, y);
    const double norm = factors[k];
    for (std::size_t i = 0; i < n; ++i) g[i] = y[i] / norm;
    scale += std::log(norm) - log_growth;
  }
  if (!opts.p1_diagnostic) stats.p1_min = 0.0;
  return out;
}

RateFit fit_exponential_rate(const OrbitStats& stats, const FitOptions& opts) {
  double eta_max = 0.0;
  for (const auto& r : stats.records) eta_max = std::max(eta_max, r.eta);
  if (stats.records.empty()) throw InsufficientData("no orbit records");
  if (!(eta_max > 0.0)) throw NonPositiveEta("eta is zero on every record (already converged)");
  const double floor = opts.floor_ratio * eta_max;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t m = 0;
  for (const auto& r : stats.records) {
    if (!(r.eta > 0.0) || r.eta < floor) continue;
    const double x = static_cast<double>(r.iteration);
    const double y = std::log(r.eta);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++m;
  }
  if (m < 10) throw InsufficientData("need at least 10 records with eta > 0, have " + std::to_string(m));
  const double md = static_cast<double>(m);
  const double cxx = sxx - sx * sx / md;
  const double cxy = sxy - sx * sy / md;
  const double cyy = syy - sy * sy / md;
  RateFit fit;
  fit.points = m;
  const double slope = cxx > 0 ? cxy / cxx : 0.0;
  fit.theta = -slope;
  if (cyy <= 1e-12 * (std::abs(syy) + 1.0)) {
    fit.r2 = 1.0;  // constant log eta: the zero-slope fit is exact
    fit.theta = 0.0;
  } else {
    fit.r2 = (cxy * cxy) / (cxx * cyy);
  }
  fit.contracting = fit.theta > 0.0;
  return fit;
}

}  // namespace nisio
