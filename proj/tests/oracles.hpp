#pragma once

// Dense-linear-algebra oracles built directly from the stencil tables,
// independent of the library's iterative solvers.

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

#include "nisio/generator.hpp"

namespace nisio::testing {

/// L_v + diag(r_v) as a dense matrix.
inline Eigen::MatrixXd dense_operator(const DiscreteGenerator& gen, std::size_t v,
                                      bool with_cost = true) {
  const auto n = static_cast<Eigen::Index>(gen.node_count());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (std::size_t k = 0; k < gen.stencil_width(); ++k) {
      const auto c = static_cast<Eigen::Index>(gen.column(ui, k));
      a(i, c) += gen.weight(v, ui, k);
      a(i, i) -= gen.weight(v, ui, k);
    }
    if (with_cost) a(i, i) += gen.cost(v, ui);
  }
  return a;
}

/// Largest real part among the eigenvalues (the Perron root of a Metzler matrix).
inline double dense_principal_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  double best = -1e300;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    best = std::max(best, es.eigenvalues()[i].real());
  }
  return best;
}

/// Spectral radius of a square matrix.
inline double dense_spectral_radius(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  double best = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    best = std::max(best, std::abs(es.eigenvalues()[i]));
  }
  return best;
}

/// Stationary distribution pi L = 0, sum pi = 1, by a dense linear solve
/// with one equation replaced by the normalization.
inline std::vector<double> dense_stationary(const DiscreteGenerator& gen) {
  Eigen::MatrixXd lt = dense_operator(gen, 0, false).transpose();
  const Eigen::Index n = lt.rows();
  lt.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::VectorXd pi = lt.fullPivLu().solve(rhs);
  return {pi.data(), pi.data() + n};
}

}  // namespace nisio::testing
