#include "causalembed/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace causalembed::linalg {

namespace {

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

bool Vector::finite() const { return all_finite(entries_); }

void Vector::fill(double value) {
  std::fill(entries_.begin(), entries_.end(), value);
}

bool Matrix::finite() const { return all_finite(entries_); }

void Matrix::fill(double value) {
  std::fill(entries_.begin(), entries_.end(), value);
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dot: sizes " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

Vector matvec(const Matrix& m, std::span<const double> x) {
  if (m.cols() != x.size()) {
    throw DimensionMismatch("matvec: " + std::to_string(m.cols()) +
                            " cols vs input " + std::to_string(x.size()));
  }
  Vector y(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    y[i] = dot(m.row_view(i), x);
  }
  return y;
}

void tensor_product_into(std::span<const double> a, std::span<const double> b,
                         std::span<double> out) {
  if (out.size() != a.size() * b.size()) {
    throw DimensionMismatch("tensor_product: output size " +
                            std::to_string(out.size()) + " vs " +
                            std::to_string(a.size() * b.size()));
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    for (std::size_t j = 0; j < b.size(); ++j) {
      out[k++] = ai * b[j];
    }
  }
}

Vector tensor_product(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  tensor_product_into(a.view(), b.view(), out.view());
  return out;
}

Vector tensor_product3(const Vector& a, const Vector& b, const Vector& c) {
  return tensor_product(a, tensor_product(b, c));
}

double contract2(std::span<const double> w, std::span<const double> a,
                 std::span<const double> b) {
  if (w.size() != a.size() * b.size()) {
    throw DimensionMismatch("contract2: weight size " +
                            std::to_string(w.size()) + " vs " +
                            std::to_string(a.size() * b.size()));
  }
  double acc = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    for (std::size_t j = 0; j < b.size(); ++j) {
      acc += w[k++] * (ai * b[j]);
    }
  }
  return acc;
}

double contract3(std::span<const double> w, std::span<const double> a,
                 std::span<const double> b, std::span<const double> c) {
  if (w.size() != a.size() * b.size() * c.size()) {
    throw DimensionMismatch("contract3: weight size " +
                            std::to_string(w.size()) + " vs " +
                            std::to_string(a.size() * b.size() * c.size()));
  }
  double acc = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double bj = b[j];
      for (std::size_t l = 0; l < c.size(); ++l) {
        acc += w[k++] * (ai * (bj * c[l]));
      }
    }
  }
  return acc;
}

Vector spd_solve(const Matrix& a, const Vector& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) {
    throw DimensionMismatch("spd_solve: matrix " + std::to_string(a.rows()) +
                            "x" + std::to_string(a.cols()) + ", rhs " +
                            std::to_string(b.size()));
  }
  double asym = 0.0;
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      asym = std::max(asym, std::fabs(a(i, j) - a(j, i)));
      scale = std::max(scale, std::fabs(a(i, j)));
    }
    scale = std::max(scale, std::fabs(a(i, i)));
  }
  if (asym > 1e-10 * scale) {
    throw NotSymmetric("spd_solve: asymmetry " + std::to_string(asym));
  }

  // Lower-triangular Cholesky factor, in-place on a copy.
  Matrix l = a;
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = l(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 0.0)) {
      throw NotPositiveDefinite("spd_solve: pivot " + std::to_string(pivot) +
                                " at column " + std::to_string(j));
    }
    const double diag = std::sqrt(pivot);
    l(j, j) = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = l(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / diag;
    }
  }

  // Forward then backward substitution.
  Vector x = b;
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * x[k];
    x[i] = v / l(i, i);
  }
  for (std::size_t ii = n; ii > 0; --ii) {
    const std::size_t i = ii - 1;
    double v = x[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= l(k, i) * x[k];
    x[i] = v / l(i, i);
  }
  return x;
}

Vector ridge_weight(const Matrix& phi, const Vector& y, double lambda) {
  const std::size_t n = phi.rows();
  const std::size_t d = phi.cols();
  if (n == 0) {
    throw EmptyInput("ridge_weight: no samples");
  }
  if (y.size() != n) {
    throw DimensionMismatch("ridge_weight: " + std::to_string(n) +
                            " rows vs " + std::to_string(y.size()) +
                            " targets");
  }
  if (!(lambda > 0.0)) {
    throw InvalidArgument("ridge_weight: lambda must be positive, got " +
                          std::to_string(lambda));
  }

  Matrix gram(d, d, 0.0);
  Vector rhs(d, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double* row = phi.row(s);
    const double ys = y[s];
    for (std::size_t i = 0; i < d; ++i) {
      const double ri = row[i];
      double* gi = gram.row(i);
      for (std::size_t j = i; j < d; ++j) {
        gi[j] += ri * row[j];
      }
      rhs[i] += ys * ri;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const double v = gram(i, j) * inv_n;
      gram(i, j) = v;
      gram(j, i) = v;
    }
    gram(i, i) += lambda;
    rhs[i] *= inv_n;
  }
  return spd_solve(gram, rhs);
}

Vector sorted_column_mean(const Matrix& rows) {
  if (rows.rows() == 0) {
    throw EmptyInput("sorted_column_mean: no rows");
  }
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  Vector mean(d);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = rows(i, j);
    std::sort(column.begin(), column.end());
    double acc = 0.0;
    for (double v : column) acc += v;
    mean[j] = acc / static_cast<double>(n);
  }
  return mean;
}

}  // namespace causalembed::linalg
