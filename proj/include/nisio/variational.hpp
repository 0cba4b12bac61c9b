#pragma once

// Variational checks of a solved eigenpair:
//  * Collatz-Wielandt sandwich  min_x (Gf/f) <= rho <= max_x (Gf/f), f > 0;
//  * the Donsker-Varadhan rate I(nu) = -inf_{f>0} sum_x nu_x (L f / f)(x)
//    of a single-control generator and the dual identity
//    rho = sup_nu (<r, nu> - I(nu));
//  * the residual of the log-transformed (Isaacs) form of the eigen equation.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nisio/eigensolver.hpp"
#include "nisio/generator.hpp"

namespace nisio {

struct SandwichReport {
  double lower = 0.0;  ///< min_x (G f / f)(x)
  double upper = 0.0;  ///< max_x (G f / f)(x)
  double rho = std::numeric_limits<double>::quiet_NaN();  ///< reference value, NaN if unknown
  std::string description;
  double gap() const { return upper - lower; }
};

/// Throws NonPositiveFunction unless f > 0.
SandwichReport cw_bounds(const DiscreteGenerator& gen, std::span<const double> f,
                         double rho = std::numeric_limits<double>::quiet_NaN(),
                         std::string description = {});

enum class Direction { TightenLower, TightenUpper, Both };

struct SearchOptions {
  Direction direction = Direction::Both;
  std::size_t iters = 50;
  double time_per_iter = 0.05;  ///< semigroup time between candidates
  double dt_factor = 0.5;
  std::vector<double> start;    ///< defaults to ones
  double rho = std::numeric_limits<double>::quiet_NaN();
};

/// Candidates are the normalized semigroup iterates f_k = S_{k tau} f_0; the
/// returned sequence (length iters + 1) holds the best bound found so far
/// on each active side, so it is monotone by construction.
std::vector<SandwichReport> cw_search(const DiscreteGenerator& gen, const SearchOptions& opts);

struct DvOptions {
  std::size_t starts = 4;       ///< multi-start count (first start is psi = log(nu)/2, then 0, then random)
  std::uint64_t seed = 7;
  std::size_t max_iters = 20000;
  double grad_tol = 1e-11;      ///< relative to the largest generator weight
  bool strict = false;          ///< throw NoConvergence instead of flagging
};

struct DvResult {
  double rate = 0.0;           ///< I(nu) >= 0
  double objective_at_zero = 0.0;  ///< sum_x nu_x (L 1)(x), identically 0
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> psi;     ///< best minimizer found (log of the test function)
};

/// Objective sum_x nu_x (L e^psi)(x) e^{-psi_x} and its gradient.
double dv_objective(const DiscreteGenerator& gen, std::span<const double> nu,
                    std::span<const double> psi, std::span<double> grad = {});

/// Rate function of the (single) control's generator L, without r.
DvResult dv_rate(const DiscreteGenerator& gen, std::span<const double> nu,
                 const DvOptions& opts = {});

/// <r, nu> - I(nu): a lower-bound certificate for rho.
double dv_certificate(const DiscreteGenerator& gen, std::span<const double> nu,
                      const DvOptions& opts = {});

struct DvCheck {
  double rho = 0.0;          ///< Perron eigenvalue of L + diag(r)
  double integral_r = 0.0;   ///< <r, nu*>
  double rate = 0.0;         ///< I(nu*)
  double rhs = 0.0;          ///< <r, nu*> - I(nu*)
  double gap = 0.0;          ///< |rho - rhs|
  bool converged = false;
  std::vector<double> nu;    ///< nu* = phi * phi_hat, normalized
};

/// Twisted stationary measure nu* from the right and left Perron vectors
/// and the DV identity evaluated there. Single control only.
DvCheck dv_check(const DiscreteGenerator& gen, const DvOptions& opts = {});

/// Left null vector of L (stationary distribution), single control.
std::vector<double> stationary_distribution(const DiscreteGenerator& gen);

struct HjiReport {
  double residual = 0.0;
  double h = 0.0;
  std::vector<double> pointwise;  ///< signed residual per node
};

/// max_x |opt_v [r + L_v psi] + 1/2 |sigma^T grad psi|^2 - rho| with
/// psi = log phi and centered gradients. Throws NonPositivePhi.
HjiReport hji_residual(const DiscreteGenerator& gen, const EigenPair& pair);
HjiReport hji_residual(const DiscreteGenerator& gen, const EigenPair& pair, Sense sense);

}  // namespace nisio
