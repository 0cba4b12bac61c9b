#pragma once

// Normalized power iteration for monotone, positively 1-homogeneous maps on
// the cone of nonnegative grid functions, with the orbit bracket
//   under(x) = max{a : x - a ref >= 0},  over(x) = min{a : a ref - x >= 0}
// tracked along the growth-normalized orbit x_k = map^k(f0) / growth^k.
// For such maps `under` is nondecreasing and `over` nonincreasing in k, and
// eta = over - under contracts geometrically when the map is strongly
// positive.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nisio/generator.hpp"

namespace nisio {

/// A 1-homogeneous monotone map; writes map(in) into out (no aliasing).
using ConeMap = std::function<void(std::span<const double>, std::span<double>)>;

struct AlphaBounds {
  double under = 0.0;
  double over = 0.0;
};

/// min and max of f / reference. Throws NonPositiveVector unless reference > 0.
AlphaBounds alpha_bounds(std::span<const double> f, std::span<const double> reference);

struct OrbitRecord {
  std::size_t iteration = 0;
  double under_alpha = 0.0;
  double over_alpha = 0.0;
  double eta = 0.0;
  double growth = 0.0;    ///< normalization factor ||map(g_k)||_inf of this step
  double sup_norm = 0.0;  ///< ||x_k||_inf of the growth-normalized iterate
};

struct OrbitStats {
  std::vector<OrbitRecord> records;
  double zeta1 = 0.0;    ///< max ref / min ref
  bool p2_holds = true;  ///< ||x_k|| <= over_k * zeta1 on every record
  double p1_min = 0.0;   ///< min over records of ||map(ref - z)|| + ||map(z)||, z = x_k / over_k
};

struct PowerOptions {
  double tol = 1e-12;             ///< stop when max - min of log(map(g)/g) < tol
  std::size_t max_iters = 1000000;
  bool record_stats = true;
  std::size_t record_every = 1;
  bool p1_diagnostic = false;
};

struct PowerResult {
  double growth = 0.0;       ///< geometric mean of the last quarter of normalization factors
  GridFunction fixed_point;  ///< sup norm 1, strictly positive
  std::size_t iterations = 0;
  double spread = 0.0;       ///< final max - min of log(map(g)/g)
  OrbitStats stats;
};

/// Iterates g <- map(g) / ||map(g)||_inf from a strictly positive start.
/// Throws NonPositiveIterate if an iterate loses strict positivity and
/// NoConvergence after max_iters.
PowerResult power_iterate(const ConeMap& map, std::span<const double> f0,
                          const PowerOptions& opts = {});

struct RateFit {
  double theta = 0.0;  ///< -slope of log eta per iteration
  double r2 = 0.0;
  std::size_t points = 0;
  bool contracting = false;  ///< theta > 0
};

struct FitOptions {
  /// Records with eta below floor_ratio * max eta are left out; they sit at
  /// the resolution limit of the reference function.
  double floor_ratio = 0.0;
};

/// Least-squares fit of log eta_k against k. Needs at least 10 records with
/// eta > 0 (InsufficientData); NonPositiveEta when every eta is zero.
RateFit fit_exponential_rate(const OrbitStats& stats, const FitOptions& opts = {});

}  // namespace nisio
