#include "nisio/matrix_cw.hpp"

namespace nisio::cw {

NonnegMatrix::NonnegMatrix(std::size_t n, std::vector<double> row_major)
    : n_(n), data_(std::move(row_major)) {
  if (n == 0) throw ValidationError("matrix must be non-empty");
  if (data_.size() != n * n) throw ValidationError("matrix data is not n*n");
  for (double v : data_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("matrix entries must be finite and nonnegative");
    }
  }
}

NonnegMatrix NonnegMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<double> data;
  data.reserve(n * n);
  for (const auto& row : rows) {
    if (row.size() != n) throw ValidationError("matrix is not square");
    data.insert(data.end(), row.begin(), row.end());
  }
  return NonnegMatrix(n, std::move(data));
}

void NonnegMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    const double* row = data_.data() + i * n_;
    for (std::size_t j = 0; j < n_; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void NonnegMatrix::for_each_successor(std::size_t i,
                                      const std::function<void(std::size_t)>& visit) const {
  const double* row = data_.data() + i * n_;
  for (std::size_t j = 0; j < n_; ++j) {
    if (row[j] > 0.0) visit(j);
  }
}

NonnegMatrix NonnegMatrix::shifted(double c) const {
  if (!(c >= 0.0)) throw ValidationError("shift must be nonnegative");
  std::vector<double> data = data_;
  for (std::size_t i = 0; i < n_; ++i) data[i * n_ + i] += c;
  return NonnegMatrix(n_, std::move(data));
}

}  // namespace nisio::cw
