#include "nisio/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nisio/kernels.hpp"

namespace nisio {

const char* to_string(Topology t) { return t == Topology::Interval ? "interval" : "torus"; }
const char* to_string(Sense s) { return s == Sense::Minimize ? "minimize" : "maximize"; }

// ---------------------------------------------------------------------------
// Grid

Grid Grid::make(Topology topology, int dim, int n, double extent) {
  if (n < 8) throw ValidationError("grid needs n >= 8 points per axis");
  if (!(extent > 0.0) || !std::isfinite(extent)) throw ValidationError("extent must be positive");
  if (topology == Topology::Interval && dim != 1) {
    throw ValidationError("interval topology requires d = 1");
  }
  if (dim < 1 || dim > 2) throw ValidationError("torus dimension must be 1 or 2");
  Grid g;
  g.topology = topology;
  g.dim = dim;
  g.n = n;
  g.extent = extent;
  g.h = topology == Topology::Torus ? extent / n : extent / (n - 1);
  return g;
}

std::size_t Grid::node_count() const {
  std::size_t count = 1;
  for (int k = 0; k < dim; ++k) count *= static_cast<std::size_t>(n);
  return count;
}

std::array<double, 2> Grid::coord(std::size_t node) const {
  const auto nn = static_cast<std::size_t>(n);
  std::array<double, 2> x{0.0, 0.0};
  x[0] = static_cast<double>(node % nn) * h;
  if (dim == 2) x[1] = static_cast<double>(node / nn) * h;
  return x;
}

std::size_t Grid::nearest(std::span<const double> x) const {
  std::size_t node = 0;
  std::size_t stride = 1;
  for (int k = 0; k < dim; ++k) {
    double xi = x[static_cast<std::size_t>(k)];
    long idx = 0;
    if (topology == Topology::Torus) {
      xi = std::fmod(xi, extent);
      if (xi < 0) xi += extent;
      idx = std::lround(xi / h) % n;
    } else {
      idx = std::clamp(std::lround(xi / h), 0L, static_cast<long>(n - 1));
    }
    node += static_cast<std::size_t>(idx) * stride;
    stride *= static_cast<std::size_t>(n);
  }
  return node;
}

// ---------------------------------------------------------------------------
// GridFunction

double GridFunction::min() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double GridFunction::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double GridFunction::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool GridFunction::strictly_positive() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v > 0.0; });
}

// ---------------------------------------------------------------------------
// ProblemSpec

std::vector<std::string> ProblemSpec::slot_names() const {
  std::vector<std::string> names;
  for (int k = 1; k <= grid.dim; ++k) names.push_back("x" + std::to_string(k));
  for (std::size_t k = 1; k <= control_dim(); ++k) names.push_back("v" + std::to_string(k));
  return names;
}

void ProblemSpec::validate() const {
  Grid::make(grid.topology, grid.dim, grid.n, grid.extent);
  if (controls.empty()) throw ValidationError("control set must be nonempty");
  if (controls.size() > 64) throw ValidationError("control set must have at most 64 values");
  const std::size_t m = control_dim();
  for (const auto& c : controls) {
    if (c.size() != m) throw ValidationError("all controls must have the same dimension");
    for (double v : c) {
      if (!std::isfinite(v)) throw ValidationError("control values must be finite");
    }
  }
  const auto d = static_cast<std::size_t>(grid.dim);
  if (sigma.size() != d * d) throw ValidationError("sigma needs d*d expressions");
  if (drift.size() != d) throw ValidationError("drift needs d expressions");
  if (cost.empty()) throw ValidationError("cost expression missing");
  if (!(min_diffusion > 0.0)) throw ValidationError("min_diffusion must be positive");
  const auto slots = slot_names();
  auto check = [&](const expr::Expr& e, const char* what) {
    if (e.empty()) throw ValidationError(std::string(what) + " expression missing");
    for (const auto& name : expr::variables(e)) {
      if (std::find(slots.begin(), slots.end(), name) == slots.end()) {
        throw UnboundVariable(std::string(what) + " uses '" + name +
                              "', which is not a state or control variable here");
      }
    }
  };
  for (const auto& e : sigma) check(e, "sigma");
  for (const auto& e : drift) check(e, "drift");
  check(cost, "cost");
}

ProblemSpec make_problem(const Grid& grid, std::vector<std::vector<double>> controls,
                         const std::vector<std::string>& sigma,
                         const std::vector<std::string>& drift, const std::string& cost,
                         Sense sense) {
  ProblemSpec spec;
  spec.grid = grid;
  spec.controls = std::move(controls);
  for (const auto& s : sigma) spec.sigma.push_back(expr::parse(s));
  for (const auto& s : drift) spec.drift.push_back(expr::parse(s));
  spec.cost = expr::parse(cost);
  spec.sense = sense;
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// SparseNonneg

SparseNonneg::SparseNonneg(std::size_t n, std::vector<std::size_t> row_ptr,
                           std::vector<std::size_t> cols, std::vector<double> vals)
    : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(std::move(vals)) {
  if (row_ptr_.size() != n_ + 1 || cols_.size() != vals_.size() || row_ptr_.back() != cols_.size()) {
    throw ValidationError("malformed CSR matrix");
  }
  for (std::size_t k = 0; k < vals_.size(); ++k) {
    if (!(vals_[k] >= 0.0) || !std::isfinite(vals_[k]) || cols_[k] >= n_) {
      throw ValidationError("CSR matrix entries must be finite, nonnegative and in range");
    }
  }
}

void SparseNonneg::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += vals_[k] * x[cols_[k]];
    y[i] = acc;
  }
}

void SparseNonneg::for_each_successor(std::size_t i,
                                      const std::function<void(std::size_t)>& visit) const {
  for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
    if (vals_[k] > 0.0) visit(cols_[k]);
  }
}

SparseNonneg SparseNonneg::transpose() const {
  std::vector<std::size_t> ptr(n_ + 1, 0);
  for (std::size_t c : cols_) ++ptr[c + 1];
  for (std::size_t i = 0; i < n_; ++i) ptr[i + 1] += ptr[i];
  std::vector<std::size_t> cols(cols_.size());
  std::vector<double> vals(vals_.size());
  std::vector<std::size_t> fill(ptr.begin(), ptr.end() - 1);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t dst = fill[cols_[k]]++;
      cols[dst] = i;
      vals[dst] = vals_[k];
    }
  }
  return SparseNonneg(n_, std::move(ptr), std::move(cols), std::move(vals));
}

// ---------------------------------------------------------------------------
// DiscreteGenerator

namespace {

double smallest_eigenvalue(const double* a, int d) {
  if (d == 1) return a[0];
  const double tr = a[0] + a[3];
  const double diff = a[0] - a[3];
  return 0.5 * (tr - std::sqrt(diff * diff + 4.0 * a[1] * a[1]));
}

double sample_program(const expr::Program& p, std::span<const double> slots, const char* what,
                      std::size_t node) {
  try {
    const double value = p(slots);
    if (!std::isfinite(value)) throw EvalError("non-finite value");
    return value;
  } catch (const EvalError& e) {
    throw NonFiniteCoefficient(std::string(what) + " is not finite at node " +
                               std::to_string(node) + ": " + e.what());
  }
}

}  // namespace

DiscreteGenerator DiscreteGenerator::build(const ProblemSpec& spec) {
  spec.validate();
  DiscreteGenerator g;
  g.grid_ = Grid::make(spec.grid.topology, spec.grid.dim, spec.grid.n, spec.grid.extent);
  g.sense_ = spec.sense;
  g.nodes_ = g.grid_.node_count();
  g.controls_ = spec.controls.size();
  g.control_values_ = spec.controls;

  const Grid& grid = g.grid_;
  const int d = grid.dim;
  const auto du = static_cast<std::size_t>(d);
  const std::size_t nodes = g.nodes_;
  const double h = grid.h;
  const double h2 = h * h;

  const auto slots = spec.slot_names();
  std::vector<expr::Program> sigma_p, drift_p;
  for (const auto& e : spec.sigma) sigma_p.emplace_back(e, slots);
  for (const auto& e : spec.drift) drift_p.emplace_back(e, slots);
  const expr::Program cost_p(spec.cost, slots);

  // sigma and a = sigma sigma^T are control-free; the control slots are
  // filled with the first control while sampling them.
  std::vector<double> slot_values(slots.size(), 0.0);
  auto bind = [&](std::size_t node, std::size_t v) {
    const auto x = grid.coord(node);
    for (std::size_t k = 0; k < du; ++k) slot_values[k] = x[k];
    for (std::size_t k = 0; k < spec.control_dim(); ++k) slot_values[du + k] = spec.controls[v][k];
  };

  g.sigma_.assign(nodes * du * du, 0.0);
  std::vector<double> a(nodes * du * du, 0.0);
  double a_max = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    bind(i, 0);
    double* s = g.sigma_.data() + i * du * du;
    for (std::size_t k = 0; k < du * du; ++k) s[k] = sample_program(sigma_p[k], slot_values, "sigma", i);
    double* ai = a.data() + i * du * du;
    for (std::size_t r = 0; r < du; ++r) {
      for (std::size_t c = 0; c < du; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < du; ++k) acc += s[r * du + k] * s[c * du + k];
        ai[r * du + c] = acc;
      }
    }
    const double lam = smallest_eigenvalue(ai, d);
    if (!(lam >= spec.min_diffusion)) {
      throw DegenerateDiffusion("diffusion matrix a = sigma sigma^T has smallest eigenvalue " +
                                std::to_string(lam) + " < " + std::to_string(spec.min_diffusion) +
                                " at node " + std::to_string(i));
    }
    for (std::size_t k = 0; k < du; ++k) a_max = std::max(a_max, ai[k * du + k]);
  }

  bool mixed = false;
  if (d == 2) {
    for (std::size_t i = 0; i < nodes && !mixed; ++i) mixed = a[i * 4 + 1] != 0.0;
  }
  g.width_ = d == 1 ? 2 : (mixed ? 8 : 4);
  const std::size_t W = g.width_;

  // Neighbor layout: [x-, x+] in 1D; [x-, x+, y-, y+, (--), (++), (+-), (-+)] in 2D.
  const long n = grid.n;
  auto wrap = [n](long i) { return ((i % n) + n) % n; };
  g.cols_.assign(nodes * W, 0);
  for (std::size_t node = 0; node < nodes; ++node) {
    const long ix = static_cast<long>(node % static_cast<std::size_t>(n));
    const long iy = static_cast<long>(node / static_cast<std::size_t>(n));
    std::size_t* col = g.cols_.data() + node * W;
    if (d == 1) {
      if (grid.topology == Topology::Torus) {
        col[0] = static_cast<std::size_t>(wrap(ix - 1));
        col[1] = static_cast<std::size_t>(wrap(ix + 1));
      } else {
        // zero-Neumann: the ghost node mirrors its interior neighbor
        col[0] = static_cast<std::size_t>(ix == 0 ? 1 : ix - 1);
        col[1] = static_cast<std::size_t>(ix == n - 1 ? n - 2 : ix + 1);
      }
    } else {
      auto at = [&](long x, long y) { return static_cast<std::size_t>(wrap(x) + n * wrap(y)); };
      col[0] = at(ix - 1, iy);
      col[1] = at(ix + 1, iy);
      col[2] = at(ix, iy - 1);
      col[3] = at(ix, iy + 1);
      if (mixed) {
        col[4] = at(ix - 1, iy - 1);
        col[5] = at(ix + 1, iy + 1);
        col[6] = at(ix + 1, iy - 1);
        col[7] = at(ix - 1, iy + 1);
      }
    }
  }

  g.weights_.assign(g.controls_ * nodes * W, 0.0);
  g.cost_.assign(g.controls_ * nodes, 0.0);
  double b_max = 0.0;
  std::vector<double> b(du);
  for (std::size_t v = 0; v < g.controls_; ++v) {
    for (std::size_t i = 0; i < nodes; ++i) {
      bind(i, v);
      double bnorm = 0.0;
      for (std::size_t k = 0; k < du; ++k) {
        b[k] = sample_program(drift_p[k], slot_values, "drift", i);
        bnorm += std::abs(b[k]);
      }
      b_max = std::max(b_max, bnorm);
      const double r = sample_program(cost_p, slot_values, "cost", i);
      g.cost_[v * nodes + i] = r;
      g.r_max_ = std::max(g.r_max_, std::abs(r));

      const double* ai = a.data() + i * du * du;
      double* w = g.weights_.data() + (v * nodes + i) * W;
      if (d == 1) {
        w[0] = 0.5 * ai[0] / h2 + std::max(-b[0], 0.0) / h;
        w[1] = 0.5 * ai[0] / h2 + std::max(b[0], 0.0) / h;
      } else {
        const double a12 = ai[1];
        const double half = 0.5 * std::abs(a12) / h2;
        w[0] = 0.5 * ai[0] / h2 - half + std::max(-b[0], 0.0) / h;
        w[1] = 0.5 * ai[0] / h2 - half + std::max(b[0], 0.0) / h;
        w[2] = 0.5 * ai[3] / h2 - half + std::max(-b[1], 0.0) / h;
        w[3] = 0.5 * ai[3] / h2 - half + std::max(b[1], 0.0) / h;
        if (mixed) {
          if (a12 > 0.0) {
            w[4] = w[5] = half;
          } else {
            w[6] = w[7] = half;
          }
        }
      }
      for (std::size_t k = 0; k < W; ++k) {
        if (w[k] < 0.0) {
          throw NonMonotoneStencil("off-diagonal weight " + std::to_string(w[k]) + " at node " +
                                   std::to_string(i) +
                                   "; the mixed stencil needs |a12| <= min(a11, a22)");
        }
      }
    }
  }

  g.dt_max_ = 1.0 / (d * a_max / h2 + b_max / h + g.r_max_);
  return g;
}

double DiscreteGenerator::outflow(std::size_t v, std::size_t i) const {
  double s = 0.0;
  const double* w = weights_.data() + (v * nodes_ + i) * width_;
  for (std::size_t k = 0; k < width_; ++k) s += w[k];
  return s;
}

std::span<const double> DiscreteGenerator::sigma(std::size_t i) const {
  const auto d = static_cast<std::size_t>(grid_.dim);
  return {sigma_.data() + i * d * d, d * d};
}

double DiscreteGenerator::perron_shift() const {
  double s_max = 0.0;
  for (std::size_t v = 0; v < controls_; ++v) {
    for (std::size_t i = 0; i < nodes_; ++i) s_max = std::max(s_max, outflow(v, i));
  }
  return 1.5 * s_max + 2.0 * r_max_;
}

SparseNonneg DiscreteGenerator::shifted_matrix(std::span<const int> policy, double c) const {
  if (policy.size() != nodes_) throw IndexOutOfRange("policy length differs from node count");
  std::vector<std::size_t> ptr(nodes_ + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(nodes_ * (width_ + 1));
  vals.reserve(nodes_ * (width_ + 1));
  for (std::size_t i = 0; i < nodes_; ++i) {
    const auto v = static_cast<std::size_t>(policy[i]);
    if (policy[i] < 0 || v >= controls_) throw IndexOutOfRange("policy control index out of range");
    const double diag = c + cost(v, i) - outflow(v, i);
    if (diag < 0.0) throw ValidationError("shift too small for a nonnegative matrix");
    cols.push_back(i);
    vals.push_back(diag);
    for (std::size_t k = 0; k < width_; ++k) {
      cols.push_back(column(i, k));
      vals.push_back(weight(v, i, k));
    }
    ptr[i + 1] = cols.size();
  }
  return SparseNonneg(nodes_, std::move(ptr), std::move(cols), std::move(vals));
}

// ---------------------------------------------------------------------------

GridFunction apply_linear(const DiscreteGenerator& gen, std::size_t v, std::span<const double> f) {
  if (v >= gen.control_count()) throw IndexOutOfRange("control index " + std::to_string(v));
  if (f.size() != gen.node_count()) throw IndexOutOfRange("grid function has wrong length");
  GridFunction out(gen.node_count(), 0.0);
  for (std::size_t i = 0; i < gen.node_count(); ++i) out[i] = gen.apply_row(v, i, f);
  return out;
}

GridFunction apply_G(const DiscreteGenerator& gen, std::span<const double> f) {
  return apply_G(gen, f, gen.sense());
}

GridFunction apply_G(const DiscreteGenerator& gen, std::span<const double> f, Sense sense) {
  if (f.size() != gen.node_count()) throw IndexOutOfRange("grid function has wrong length");
  GridFunction out(gen.node_count(), 0.0);
  kernels::envelope(gen, f, sense, out.span());
  return out;
}

std::vector<int> argmin_policy(const DiscreteGenerator& gen, std::span<const double> f) {
  return argmin_policy(gen, f, gen.sense());
}

std::vector<int> argmin_policy(const DiscreteGenerator& gen, std::span<const double> f,
                               Sense sense) {
  if (f.size() != gen.node_count()) throw IndexOutOfRange("grid function has wrong length");
  std::vector<double> out(gen.node_count());
  std::vector<int> policy(gen.node_count(), 0);
  kernels::envelope(gen, f, sense, out, policy);
  return policy;
}

GridFunction apply_policy(const DiscreteGenerator& gen, std::span<const int> policy,
                          std::span<const double> f) {
  if (f.size() != gen.node_count() || policy.size() != gen.node_count()) {
    throw IndexOutOfRange("grid function or policy has wrong length");
  }
  GridFunction out(gen.node_count(), 0.0);
  for (std::size_t i = 0; i < gen.node_count(); ++i) {
    const auto v = static_cast<std::size_t>(policy[i]);
    if (policy[i] < 0 || v >= gen.control_count()) throw IndexOutOfRange("policy control index");
    out[i] = gen.apply_row(v, i, f);
  }
  return out;
}

GridFunction sample(const Grid& grid, const std::string& expression) {
  const expr::Expr e = expr::parse(expression);
  std::vector<std::string> slots;
  for (int k = 1; k <= grid.dim; ++k) slots.push_back("x" + std::to_string(k));
  const expr::Program p(e, slots);
  GridFunction out(grid.node_count(), 0.0);
  std::vector<double> x(slots.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto c = grid.coord(i);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = c[k];
    out[i] = p(x);
  }
  return out;
}

}  // namespace nisio
