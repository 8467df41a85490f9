#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "causalembed/errors.hpp"

namespace causalembed::linalg {

// Fixed-length dense vector of 64-bit floats.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double value = 0.0) : entries_(n, value) {}
  Vector(std::initializer_list<double> values) : entries_(values) {}
  explicit Vector(std::vector<double> values) : entries_(std::move(values)) {}
  explicit Vector(std::span<const double> values)
      : entries_(values.begin(), values.end()) {}

  std::size_t size() const { return entries_.size(); }
  double& operator[](std::size_t i) { return entries_[i]; }
  double operator[](std::size_t i) const { return entries_[i]; }
  double* data() { return entries_.data(); }
  const double* data() const { return entries_.data(); }
  std::span<double> view() { return entries_; }
  std::span<const double> view() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool finite() const;
  void fill(double value);

 private:
  std::vector<double> entries_;
};

// Dense row-major matrix of 64-bit floats.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), entries_(rows * cols, value) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) {
    return entries_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_[i * cols_ + j];
  }
  double* row(std::size_t i) { return entries_.data() + i * cols_; }
  const double* row(std::size_t i) const {
    return entries_.data() + i * cols_;
  }
  std::span<double> row_view(std::size_t i) {
    return {entries_.data() + i * cols_, cols_};
  }
  std::span<const double> row_view(std::size_t i) const {
    return {entries_.data() + i * cols_, cols_};
  }
  double* data() { return entries_.data(); }
  const double* data() const { return entries_.data(); }

  bool finite() const;
  void fill(double value);

  static Matrix identity(std::size_t n);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

double dot(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> a);

// y = M x
Vector matvec(const Matrix& m, std::span<const double> x);

// out[i*d2 + j] = a[i] * b[j]; the flattening of the outer product a b^T.
// This index convention is fixed project-wide.
Vector tensor_product(const Vector& a, const Vector& b);
void tensor_product_into(std::span<const double> a, std::span<const double> b,
                         std::span<double> out);

// a (x) (b (x) c); out[(i*d2 + j)*d3 + k] = a[i] * (b[j] * c[k]).
Vector tensor_product3(const Vector& a, const Vector& b, const Vector& c);

// w^T (a (x) b) evaluated in the flat index order of tensor_product, with
// the same rounding as dot(w, tensor_product(a, b)).
double contract2(std::span<const double> w, std::span<const double> a,
                 std::span<const double> b);
// w^T (a (x) b (x) c), matching dot(w, tensor_product3(a, b, c)) exactly.
double contract3(std::span<const double> w, std::span<const double> a,
                 std::span<const double> b, std::span<const double> c);

// Solves A x = b for symmetric positive-definite A by Cholesky.
// Throws NotSymmetric if max|A - A^T| exceeds 1e-10 relative to max|A|,
// NotPositiveDefinite if a pivot is <= 0 (lambda too small or degenerate
// features when reached through ridge_weight).
Vector spd_solve(const Matrix& a, const Vector& b);

// Minimizer of (1/n)||y - Phi w||^2 + lambda ||w||^2, computed in closed
// form by solving ((1/n) Phi^T Phi + lambda I) w = (1/n) Phi^T y.
Vector ridge_weight(const Matrix& phi, const Vector& y, double lambda);

// Column means computed per coordinate over sorted values, so the result is
// invariant to row order bit for bit.
Vector sorted_column_mean(const Matrix& rows);

}  // namespace causalembed::linalg
