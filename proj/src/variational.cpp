#include "nisio/variational.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "nisio/kernels.hpp"
#include "nisio/matrix_cw.hpp"

namespace nisio {

namespace {

void require_single_control(const DiscreteGenerator& gen, const char* what) {
  if (gen.control_count() != 1) {
    throw ValidationError(std::string(what) + " needs a single-control generator");
  }
}

double max_weight(const DiscreteGenerator& gen) {
  double w = 0.0;
  for (std::size_t v = 0; v < gen.control_count(); ++v) {
    for (std::size_t i = 0; i < gen.node_count(); ++i) {
      for (std::size_t k = 0; k < gen.stencil_width(); ++k) w = std::max(w, gen.weight(v, i, k));
    }
  }
  return w;
}

// c I + L_0 (cost left out when with_cost is false), nonnegative CSR.
SparseNonneg shifted_linear(const DiscreteGenerator& gen, double c, bool with_cost) {
  const std::size_t n = gen.node_count();
  const std::size_t w = gen.stencil_width();
  std::vector<std::size_t> ptr(n + 1, 0), cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    cols.push_back(i);
    vals.push_back(c - gen.outflow(0, i) + (with_cost ? gen.cost(0, i) : 0.0));
    for (std::size_t k = 0; k < w; ++k) {
      cols.push_back(gen.column(i, k));
      vals.push_back(gen.weight(0, i, k));
    }
    ptr[i + 1] = cols.size();
  }
  return SparseNonneg(n, std::move(ptr), std::move(cols), std::move(vals));
}

std::vector<double> normalized_sum(std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  for (double& x : v) x /= s;
  return v;
}

struct Minimum {
  std::vector<double> x;
  double f = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

template <class Fn>
Minimum lbfgs(Fn&& fn, std::vector<double> x, std::size_t max_iters, double gtol) {
  constexpr std::size_t kHistory = 8;
  const std::size_t n = x.size();
  std::vector<double> g(n), d(n), xn(n), gn(n);
  std::deque<std::vector<double>> ss, ys;
  std::deque<double> rhos;
  double f = fn(x, g);
  Minimum out;
  auto inf_norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double a : v) m = std::max(m, std::abs(a));
    return m;
  };
  constexpr std::size_t kWindow = 20;
  std::deque<double> recent{f};
  std::size_t it = 0;
  for (; it < max_iters; ++it) {
    const double gnorm = inf_norm(g);
    if (gnorm <= gtol) {
      out.converged = true;
      break;
    }
    // stalled at the rounding floor of the objective
    if (recent.size() > kWindow && recent.front() - f <= 1e-14 * (std::abs(f) + 1.0)) {
      out.converged = true;
      break;
    }
    // two-loop recursion
    d = g;
    std::vector<double> alpha(ss.size());
    for (std::size_t j = ss.size(); j-- > 0;) {
      double a = 0.0;
      for (std::size_t i = 0; i < n; ++i) a += ss[j][i] * d[i];
      a *= rhos[j];
      alpha[j] = a;
      for (std::size_t i = 0; i < n; ++i) d[i] -= a * ys[j][i];
    }
    if (!ss.empty()) {
      double sy = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sy += ss.back()[i] * ys.back()[i];
        yy += ys.back()[i] * ys.back()[i];
      }
      const double gamma = sy / yy;
      for (double& a : d) a *= gamma;
    } else {
      for (double& a : d) a /= gnorm;
    }
    for (std::size_t j = 0; j < ss.size(); ++j) {
      double b = 0.0;
      for (std::size_t i = 0; i < n; ++i) b += ys[j][i] * d[i];
      b *= rhos[j];
      for (std::size_t i = 0; i < n; ++i) d[i] += ss[j][i] * (alpha[j] - b);
    }
    for (double& a : d) a = -a;
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += g[i] * d[i];
    if (!(slope < 0.0)) {
      ss.clear();
      ys.clear();
      rhos.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i] / gnorm;
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) slope += g[i] * d[i];
    }
    // backtracking (Armijo)
    double t = 1.0;
    double fn_val = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + t * d[i];
      fn_val = fn(xn, gn);
      if (std::isfinite(fn_val) && fn_val <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      out.converged = gnorm <= 1e3 * gtol;
      break;
    }
    std::vector<double> s(n), y(n);
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
      sy += s[i] * y[i];
    }
    if (sy > 0.0) {
      ss.push_back(std::move(s));
      ys.push_back(std::move(y));
      rhos.push_back(1.0 / sy);
      if (ss.size() > kHistory) {
        ss.pop_front();
        ys.pop_front();
        rhos.pop_front();
      }
    }
    x.swap(xn);
    g.swap(gn);
    f = fn_val;
    recent.push_back(f);
    if (recent.size() > kWindow + 1) recent.pop_front();
  }
  out.x = std::move(x);
  out.f = f;
  out.iterations = it;
  return out;
}

}  // namespace

SandwichReport cw_bounds(const DiscreteGenerator& gen, std::span<const double> f, double rho,
                         std::string description) {
  if (f.size() != gen.node_count()) throw IndexOutOfRange("cw_bounds: wrong length");
  require_positive<NonPositiveFunction>(f, "cw_bounds test function");
  const GridFunction gf = apply_G(gen, f);
  SandwichReport rep;
  rep.lower = std::numeric_limits<double>::infinity();
  rep.upper = -rep.lower;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double q = gf[i] / f[i];
    rep.lower = std::min(rep.lower, q);
    rep.upper = std::max(rep.upper, q);
  }
  rep.rho = rho;
  rep.description = std::move(description);
  return rep;
}

std::vector<SandwichReport> cw_search(const DiscreteGenerator& gen, const SearchOptions& opts) {
  if (opts.iters < 1) throw ValidationError("cw_search needs iters >= 1");
  if (!(opts.time_per_iter > 0.0)) throw ValidationError("cw_search needs time_per_iter > 0");
  std::vector<double> f = opts.start.empty() ? std::vector<double>(gen.node_count(), 1.0)
                                             : opts.start;
  const double dt_req = opts.dt_factor * gen.dt_max();
  const auto steps = static_cast<std::size_t>(std::ceil(opts.time_per_iter / dt_req));
  const double dt = opts.time_per_iter / static_cast<double>(steps);
  const bool track_lower = opts.direction != Direction::TightenUpper;
  const bool track_upper = opts.direction != Direction::TightenLower;

  std::vector<SandwichReport> seq;
  seq.reserve(opts.iters + 1);
  SandwichReport best = cw_bounds(gen, f, opts.rho, "f_0");
  seq.push_back(best);
  std::vector<double> next(f.size());
  for (std::size_t k = 1; k <= opts.iters; ++k) {
    for (std::size_t s = 0; s < steps; ++s) {
      kernels::euler_step(gen, f, dt, gen.sense(), next);
      f.swap(next);
    }
    const double norm = *std::max_element(f.begin(), f.end());
    for (double& v : f) v /= norm;
    const SandwichReport cur = cw_bounds(gen, f, opts.rho, "f_" + std::to_string(k));
    best.lower = track_lower ? std::max(best.lower, cur.lower) : cur.lower;
    best.upper = track_upper ? std::min(best.upper, cur.upper) : cur.upper;
    best.description = cur.description;
    seq.push_back(best);
  }
  return seq;
}

double dv_objective(const DiscreteGenerator& gen, std::span<const double> nu,
                    std::span<const double> psi, std::span<double> grad) {
  const std::size_t n = gen.node_count();
  const std::size_t w = gen.stencil_width();
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    if (nu[x] == 0.0) continue;
    double row = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
      const std::size_t c = gen.column(x, k);
      const double e = std::exp(psi[c] - psi[x]);
      const double t = gen.weight(0, x, k) * e;
      row += gen.weight(0, x, k) * (e - 1.0);
      if (!grad.empty()) {
        grad[c] += nu[x] * t;
        grad[x] -= nu[x] * t;
      }
    }
    total += nu[x] * row;
  }
  return total;
}

DvResult dv_rate(const DiscreteGenerator& gen, std::span<const double> nu, const DvOptions& opts) {
  require_single_control(gen, "dv_rate");
  const std::size_t n = gen.node_count();
  if (nu.size() != n) throw IndexOutOfRange("dv_rate: nu has wrong length");
  double mass = 0.0, nu_max = 0.0;
  for (double v : nu) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("dv_rate: nu must be nonnegative");
    mass += v;
    nu_max = std::max(nu_max, v);
  }
  if (std::abs(mass - 1.0) > 1e-9) throw ValidationError("dv_rate: nu must sum to 1");

  const std::size_t starts = std::max<std::size_t>(1, opts.starts);
  std::vector<std::vector<double>> x0(starts, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) x0[0][i] = 0.5 * std::log(std::max(nu[i], 1e-12 * nu_max));
  for (std::size_t s = 2; s < starts; ++s) {
    std::mt19937_64 rng(opts.seed + s);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : x0[s]) v = normal(rng);
  }
  const double gtol = opts.grad_tol * std::max(1.0, max_weight(gen));

  std::vector<Minimum> found(starts);
#if defined(NISIO_HAVE_OPENMP)
#pragma omp parallel for schedule(static) num_threads(kernels::worker_count())
#endif
  for (std::size_t s = 0; s < starts; ++s) {
    auto fn = [&](const std::vector<double>& psi, std::vector<double>& g) {
      return dv_objective(gen, nu, psi, g);
    };
    found[s] = lbfgs(fn, x0[s], opts.max_iters, gtol);
  }

  std::size_t best = 0;
  for (std::size_t s = 1; s < starts; ++s) {
    if (found[s].f < found[best].f) best = s;
  }
  DvResult out;
  const std::vector<double> zeros(n, 0.0);
  out.objective_at_zero = dv_objective(gen, nu, zeros);
  out.rate = std::max(0.0, -std::min(found[best].f, out.objective_at_zero));
  out.converged = found[best].converged;
  for (const auto& m : found) out.iterations += m.iterations;
  out.psi = std::move(found[best].x);
  if (opts.strict && !out.converged) {
    throw NoConvergence("dv_rate: minimization stalled; best rate " + std::to_string(out.rate));
  }
  return out;
}

double dv_certificate(const DiscreteGenerator& gen, std::span<const double> nu,
                      const DvOptions& opts) {
  const DvResult dv = dv_rate(gen, nu, opts);
  double r_int = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) r_int += nu[i] * gen.cost(0, i);
  return r_int - dv.rate;
}

DvCheck dv_check(const DiscreteGenerator& gen, const DvOptions& opts) {
  require_single_control(gen, "dv_check");
  const double c = gen.perron_shift();
  const SparseNonneg q = shifted_linear(gen, c, true);
  const cw::PerronResult right = cw::perron(q, 1e-13, 50000000);
  const cw::PerronResult left = cw::perron(q.transpose(), 1e-13, 50000000);
  DvCheck out;
  out.rho = 0.5 * (right.lambda + right.lower) - c;
  std::vector<double> nu(gen.node_count());
  for (std::size_t i = 0; i < nu.size(); ++i) nu[i] = right.x[i] * left.x[i];
  out.nu = normalized_sum(std::move(nu));
  const DvResult dv = dv_rate(gen, out.nu, opts);
  for (std::size_t i = 0; i < out.nu.size(); ++i) out.integral_r += out.nu[i] * gen.cost(0, i);
  out.rate = dv.rate;
  out.rhs = out.integral_r - out.rate;
  out.gap = std::abs(out.rho - out.rhs);
  out.converged = dv.converged;
  return out;
}

std::vector<double> stationary_distribution(const DiscreteGenerator& gen) {
  require_single_control(gen, "stationary_distribution");
  const double c = gen.perron_shift();
  const cw::PerronResult left = cw::perron(shifted_linear(gen, c, false).transpose(), 1e-14,
                                           50000000);
  return normalized_sum(left.x);
}

HjiReport hji_residual(const DiscreteGenerator& gen, const EigenPair& pair) {
  return hji_residual(gen, pair, gen.sense());
}

HjiReport hji_residual(const DiscreteGenerator& gen, const EigenPair& pair, Sense sense) {
  const std::size_t n = gen.node_count();
  if (pair.phi.size() != n) throw IndexOutOfRange("hji_residual: phi has wrong length");
  require_positive<NonPositivePhi>(pair.phi.span(), "hji_residual phi");
  const Grid& grid = gen.grid();
  std::vector<double> psi(n);
  for (std::size_t i = 0; i < n; ++i) psi[i] = std::log(pair.phi[i]);

  const auto axis_n = static_cast<std::size_t>(grid.n);
  const std::size_t d = static_cast<std::size_t>(grid.dim);
  auto neighbor = [&](std::size_t node, std::size_t axis, bool up) {
    const std::size_t stride = axis == 0 ? 1 : axis_n;
    const std::size_t idx = (node / stride) % axis_n;
    std::size_t j;
    if (grid.topology == Topology::Torus) {
      j = up ? (idx + 1) % axis_n : (idx + axis_n - 1) % axis_n;
    } else {  // mirrored ghost node
      j = up ? (idx + 1 < axis_n ? idx + 1 : idx - 1) : (idx > 0 ? idx - 1 : idx + 1);
    }
    return node + (j - idx) * stride;
  };

  HjiReport rep;
  rep.h = grid.h;
  rep.pointwise.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double opt = sense == Sense::Minimize ? std::numeric_limits<double>::infinity()
                                          : -std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < gen.control_count(); ++v) {
      double lpsi = 0.0;
      for (std::size_t k = 0; k < gen.stencil_width(); ++k) {
        lpsi += gen.weight(v, i, k) * (psi[gen.column(i, k)] - psi[i]);
      }
      const double val = gen.cost(v, i) + lpsi;
      opt = sense == Sense::Minimize ? std::min(opt, val) : std::max(opt, val);
    }
    std::array<double, 2> grad{0.0, 0.0};
    for (std::size_t a = 0; a < d; ++a) {
      grad[a] = (psi[neighbor(i, a, true)] - psi[neighbor(i, a, false)]) / (2.0 * grid.h);
    }
    const std::span<const double> sig = gen.sigma(i);
    double quad = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      double w = 0.0;
      for (std::size_t j = 0; j < d; ++j) w += sig[j * d + k] * grad[j];
      quad += w * w;
    }
    rep.pointwise[i] = opt + 0.5 * quad - pair.rho;
    rep.residual = std::max(rep.residual, std::abs(rep.pointwise[i]));
  }
  return rep;
}

}  // namespace nisio
