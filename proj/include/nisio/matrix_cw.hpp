#pragma once

// Perron-Frobenius machinery for irreducible nonnegative matrices: power
// iteration and the Collatz-Wielandt lower/upper functionals.
//
// The algorithms are templates over a small operator concept so that the
// eigensolver can run them on shifted sparse generator matrices as well as
// on the dense matrices used here.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nisio/error.hpp"

namespace nisio::cw {

template <class M>
concept NonnegOperator = requires(const M& m, std::span<const double> x, std::span<double> y,
                                  std::size_t i, const std::function<void(std::size_t)>& visit) {
  { m.size() } -> std::convertible_to<std::size_t>;
  m.multiply(x, y);
  m.for_each_successor(i, visit);
};

/// Dense square matrix with nonnegative finite entries, row-major.
class NonnegMatrix {
 public:
  NonnegMatrix() = default;
  NonnegMatrix(std::size_t n, std::vector<double> row_major);
  static NonnegMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const double> data() const { return data_; }

  void multiply(std::span<const double> x, std::span<double> y) const;
  void for_each_successor(std::size_t i, const std::function<void(std::size_t)>& visit) const;

  /// Copy with c added to every diagonal entry (c >= 0).
  NonnegMatrix shifted(double c) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Strong connectivity of the support graph via forward and backward
/// breadth-first reachability from node 0.
template <NonnegOperator M>
bool is_irreducible(const M& m) {
  const std::size_t n = m.size();
  if (n == 0) return false;
  std::vector<std::vector<std::size_t>> succ(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.for_each_successor(i, [&](std::size_t j) {
      succ[i].push_back(j);
      pred[j].push_back(i);
    });
  }
  auto reaches_all = [n](const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> queue{0};
    seen[0] = 1;
    std::size_t count = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (std::size_t j : adj[queue[head]]) {
        if (!seen[j]) {
          seen[j] = 1;
          ++count;
          queue.push_back(j);
        }
      }
    }
    return count == n;
  };
  return reaches_all(succ) && reaches_all(pred);
}

/// min over {i : x_i > 0} of (Qx)_i / x_i.
template <NonnegOperator M>
double cw_lower(const M& m, std::span<const double> x) {
  bool any = false;
  for (double v : x) {
    if (v < 0.0) throw NonPositiveVector("cw_lower needs a nonnegative vector");
    any = any || v > 0.0;
  }
  if (!any) throw ZeroVector("cw_lower of the zero vector");
  std::vector<double> y(x.size());
  m.multiply(x, y);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) lo = std::min(lo, y[i] / x[i]);
  }
  return lo;
}

/// max_i (Qx)_i / x_i for strictly positive x.
template <NonnegOperator M>
double cw_upper(const M& m, std::span<const double> x) {
  for (double v : x) {
    if (!(v > 0.0)) throw NonPositiveVector("cw_upper needs a strictly positive vector");
  }
  std::vector<double> y(x.size());
  m.multiply(x, y);
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) hi = std::max(hi, y[i] / x[i]);
  return hi;
}

struct PerronResult {
  double lambda = 0.0;       ///< max_i (Qx)_i / x_i at the returned x
  double lower = 0.0;        ///< min_i (Qx)_i / x_i at the returned x
  std::vector<double> x;     ///< strictly positive, sup norm 1
  std::size_t iterations = 0;
};

/// Power iteration with sup-norm normalization. Stops once the
/// Collatz-Wielandt bracket satisfies upper - lower <= tol * upper, which
/// implies ||Qx - lambda x||_inf <= tol * lambda.
///
/// Throws NotIrreducible, or NoConvergence when max_iters is exhausted; the
/// usual cause is a periodic matrix, which a shift Q + cI cures.
template <NonnegOperator M>
PerronResult perron(const M& m, double tol, std::size_t max_iters,
                    std::span<const double> start = {}) {
  if (!(tol > 0.0)) throw ValidationError("perron: tol must be positive");
  if (!is_irreducible(m)) throw NotIrreducible("perron: matrix is not irreducible");
  const std::size_t n = m.size();
  std::vector<double> x(n, 1.0), y(n);
  if (!start.empty()) {
    if (start.size() != n) throw ValidationError("perron: start vector has wrong length");
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(start[i] > 0.0)) throw NonPositiveVector("perron: start vector must be positive");
      mx = std::max(mx, start[i]);
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = start[i] / mx;
  }
  PerronResult out;
  for (std::size_t it = 0; it < max_iters; ++it) {
    m.multiply(x, y);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(y[i] > 0.0)) {
        throw NoConvergence("perron: iterate lost positivity at index " + std::to_string(i));
      }
      const double ratio = y[i] / x[i];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      norm = std::max(norm, y[i]);
    }
    if (hi - lo <= tol * hi) {
      out.lambda = hi;
      out.lower = lo;
      out.x = std::move(x);
      out.iterations = it + 1;
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
  }
  throw NoConvergence("perron: no convergence after " + std::to_string(max_iters) +
                      " iterations (periodic matrix? shift by +cI)");
}

}  // namespace nisio::cw
