#pragma once

// Monotone finite-difference discretization of the controlled generators
//   L_v f = 1/2 tr(a D^2 f) + <b(., v), D f>,   a = sigma sigma^T,
// on a reflecting interval (zero-Neumann via mirrored ghost node) or a
// periodic d-torus (d <= 2), and of the nonlinear envelope
//   G f = min_v (L_v f + r(., v) f)     (max when the sense is Maximize).
//
// Second derivatives use central differences, drift uses first-order upwind
// differences chosen per sign of b_i(x, v). Every off-diagonal weight is
// nonnegative, so each L_v is a Metzler matrix with zero row sums.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nisio/error.hpp"
#include "nisio/expr.hpp"

namespace nisio {

enum class Topology { Interval, Torus };
enum class Sense { Minimize, Maximize };

const char* to_string(Topology t);
const char* to_string(Sense s);

struct Grid {
  Topology topology = Topology::Torus;
  int dim = 1;
  int n = 64;            ///< points per axis
  double extent = 1.0;   ///< domain length per axis
  double h = 1.0 / 64;   ///< extent/n (torus) or extent/(n-1) (interval)

  static Grid make(Topology topology, int dim, int n, double extent = 1.0);

  std::size_t node_count() const;
  /// Coordinates of a node; unused trailing components are zero.
  std::array<double, 2> coord(std::size_t node) const;
  /// Nearest grid node to a point of the closed domain (torus coordinates
  /// are wrapped first).
  std::size_t nearest(std::span<const double> x) const;
};

/// Values over the nodes of a grid.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(std::vector<double> values) : values_(std::move(values)) {}
  GridFunction(std::size_t n, double value) : values_(n, value) {}

  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  std::span<const double> span() const { return values_; }
  std::span<double> span() { return values_; }
  operator std::span<const double>() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  double min() const;
  double max() const;
  double sup_norm() const;
  bool strictly_positive() const;

  friend bool operator==(const GridFunction&, const GridFunction&) = default;

 private:
  std::vector<double> values_;
};

/// Throws `Err` unless every value is > 0.
template <class Err = NonPositiveVector>
void require_positive(std::span<const double> f, const char* what) {
  for (double v : f) {
    if (!(v > 0.0)) throw Err(std::string(what) + " must be strictly positive");
  }
}

/// Controlled diffusion problem. Coefficients are expressions in
/// x1..xd (state) and v1..vm (control components).
struct ProblemSpec {
  Grid grid;
  std::vector<std::vector<double>> controls;  ///< finite control set, each an m-vector
  std::vector<expr::Expr> sigma;              ///< d*d, row-major
  std::vector<expr::Expr> drift;              ///< d components
  expr::Expr cost;                            ///< r(x, v)
  Sense sense = Sense::Minimize;
  double min_diffusion = 1e-8;                ///< lower bound on the smallest eigenvalue of a

  std::size_t control_dim() const { return controls.empty() ? 0 : controls.front().size(); }
  /// Slot layout used by compiled coefficient programs: x1..xd, v1..vm.
  std::vector<std::string> slot_names() const;
  /// Structural checks (sizes, control set, variable names). Coefficient
  /// values are checked when the generator is built.
  void validate() const;
};

/// Convenience constructor from expression strings; `sigma` is row-major.
ProblemSpec make_problem(const Grid& grid, std::vector<std::vector<double>> controls,
                         const std::vector<std::string>& sigma,
                         const std::vector<std::string>& drift, const std::string& cost,
                         Sense sense = Sense::Minimize);

/// Sparse nonnegative matrix in CSR form (duplicate columns allowed).
class SparseNonneg {
 public:
  SparseNonneg() = default;
  SparseNonneg(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
               std::vector<double> vals);

  std::size_t size() const { return n_; }
  void multiply(std::span<const double> x, std::span<double> y) const;
  void for_each_successor(std::size_t i, const std::function<void(std::size_t)>& visit) const;
  SparseNonneg transpose() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
};

/// Per-control stencil tables of L_v + diag(r_v) on a grid. Immutable after
/// build; all apply functions are pure.
class DiscreteGenerator {
 public:
  static DiscreteGenerator build(const ProblemSpec& spec);

  const Grid& grid() const { return grid_; }
  Sense sense() const { return sense_; }
  std::size_t node_count() const { return nodes_; }
  std::size_t control_count() const { return controls_; }
  std::size_t stencil_width() const { return width_; }
  double dt_max() const { return dt_max_; }
  double r_max() const { return r_max_; }  ///< max |r(x, v)| over nodes and controls

  /// Stencil access: for control v and node i, neighbor k has column
  /// `column(i, k)` and weight `weight(v, i, k)` >= 0.
  std::size_t column(std::size_t i, std::size_t k) const { return cols_[i * width_ + k]; }
  double weight(std::size_t v, std::size_t i, std::size_t k) const {
    return weights_[(v * nodes_ + i) * width_ + k];
  }
  double cost(std::size_t v, std::size_t i) const { return cost_[v * nodes_ + i]; }
  /// Sum of off-diagonal weights of row i (= -diag of L_v).
  double outflow(std::size_t v, std::size_t i) const;
  /// sigma(x_i), row-major d*d.
  std::span<const double> sigma(std::size_t i) const;
  std::span<const double> control_value(std::size_t v) const { return control_values_[v]; }

  /// Raw tables for the hot kernels: columns are node-major (width per
  /// node), weights are [control][node][width], costs [control][node].
  const std::size_t* column_data() const { return cols_.data(); }
  const double* weight_data() const { return weights_.data(); }
  const double* cost_data() const { return cost_.data(); }

  /// (L_v f)_i + r(x_i, v) f_i, with L_v evaluated in difference form
  /// sum_k w_k (f_{col k} - f_i) so that constants are annihilated exactly.
  double apply_row(std::size_t v, std::size_t i, std::span<const double> f) const {
    const std::size_t base = (v * nodes_ + i) * width_;
    const std::size_t* col = cols_.data() + i * width_;
    const double fi = f[i];
    double acc = 0.0;
    for (std::size_t k = 0; k < width_; ++k) acc += weights_[base + k] * (f[col[k]] - fi);
    return acc + cost_[v * nodes_ + i] * fi;
  }

  /// c I + L_u + diag(r_u) for a per-node control choice (policy), in
  /// nonnegative CSR form; c must make the diagonal nonnegative.
  SparseNonneg shifted_matrix(std::span<const int> policy, double c) const;
  /// A shift that makes every shifted_matrix nonnegative and primitive.
  double perron_shift() const;

 private:
  Grid grid_;
  Sense sense_ = Sense::Minimize;
  std::size_t nodes_ = 0;
  std::size_t controls_ = 0;
  std::size_t width_ = 0;
  std::vector<std::size_t> cols_;
  std::vector<double> weights_;
  std::vector<double> cost_;
  std::vector<double> sigma_;
  std::vector<std::vector<double>> control_values_;
  double dt_max_ = 0.0;
  double r_max_ = 0.0;
};

GridFunction apply_linear(const DiscreteGenerator& gen, std::size_t v, std::span<const double> f);
GridFunction apply_G(const DiscreteGenerator& gen, std::span<const double> f);
GridFunction apply_G(const DiscreteGenerator& gen, std::span<const double> f, Sense sense);
/// Per-node index attaining the min (max) in G f; ties go to the lowest index.
std::vector<int> argmin_policy(const DiscreteGenerator& gen, std::span<const double> f);
std::vector<int> argmin_policy(const DiscreteGenerator& gen, std::span<const double> f,
                               Sense sense);
/// (L_u + diag r_u) f row by row under a per-node control choice.
GridFunction apply_policy(const DiscreteGenerator& gen, std::span<const int> policy,
                          std::span<const double> f);

/// Samples a grid function from an expression in x1..xd.
GridFunction sample(const Grid& grid, const std::string& expression);

}  // namespace nisio
