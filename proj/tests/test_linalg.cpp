#include <doctest.h>

#include <cmath>

#include "causalembed/linalg.hpp"
#include "causalembed/rng.hpp"

using namespace causalembed;
using linalg::Matrix;
using linalg::Vector;

namespace {

// Independent double-loop oracle for a (x) b.
std::vector<double> tensor_oracle(const Vector& a, const Vector& b) {
  std::vector<double> out(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      out[i * b.size() + j] = a[i] * b[j];
    }
  }
  return out;
}

std::vector<double> tensor3_oracle(const Vector& a, const Vector& b,
                                   const Vector& c) {
  std::vector<double> out(a.size() * b.size() * c.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      for (std::size_t l = 0; l < c.size(); ++l) {
        out[k++] = a[i] * b[j] * c[l];
      }
    }
  }
  return out;
}

// Gaussian elimination with partial pivoting; independent of spd_solve.
Vector elimination_oracle(Matrix a, Vector b) {
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  Vector x(n);
  for (std::size_t ri = n; ri > 0; --ri) {
    const std::size_t r = ri - 1;
    double v = b[r];
    for (std::size_t c = r + 1; c < n; ++c) v -= a(r, c) * x[c];
    x[r] = v / a(r, r);
  }
  return x;
}

// Full-batch gradient descent on (1/n)||y - Phi w||^2 + lambda ||w||^2,
// run to stationarity.
Vector ridge_gd_oracle(const Matrix& phi, const Vector& y, double lambda,
                       std::size_t steps = 100000, double step = 1e-3) {
  const std::size_t n = phi.rows();
  const std::size_t d = phi.cols();
  Vector w(d, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    Vector grad(d, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      double r = y[s];
      for (std::size_t j = 0; j < d; ++j) r -= phi(s, j) * w[j];
      for (std::size_t j = 0; j < d; ++j) {
        grad[j] += -2.0 * r * phi(s, j) / static_cast<double>(n);
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] += 2.0 * lambda * w[j];
      w[j] -= step * grad[j];
    }
  }
  return w;
}

Vector random_vector(PhiloxRng& rng, std::size_t n, double lo = -1.0,
                     double hi = 1.0) {
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

Matrix random_spd(PhiloxRng& rng, std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  Matrix spd(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += m(k, i) * m(k, j);
      spd(i, j) = acc + (i == j ? 1.0 : 0.0);
    }
  }
  return spd;
}

}  // namespace

TEST_CASE("tensor product basis and ones cases") {
  const Vector e1{1.0, 0.0};
  const Vector e2{0.0, 1.0};
  const Vector t = linalg::tensor_product(e1, e2);
  REQUIRE(t.size() == 4);
  CHECK(t[0] == 0.0);
  CHECK(t[1] == 1.0);
  CHECK(t[2] == 0.0);
  CHECK(t[3] == 0.0);

  const Vector ones{1.0, 1.0};
  const Vector t2 = linalg::tensor_product(ones, ones);
  for (std::size_t i = 0; i < 4; ++i) CHECK(t2[i] == 1.0);
}

TEST_CASE("tensor product matches the double-loop oracle") {
  const Vector a{2.0, 3.0};
  const Vector b{-1.0, 4.0, 0.0};
  const Vector t = linalg::tensor_product(a, b);
  const auto expected = tensor_oracle(a, b);
  REQUIRE(t.size() == expected.size());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == expected[i]);

  PhiloxRng rng(11, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector x = random_vector(rng, 5);
    const Vector y = random_vector(rng, 7);
    const Vector tp = linalg::tensor_product(x, y);
    const auto oracle = tensor_oracle(x, y);
    for (std::size_t i = 0; i < tp.size(); ++i) CHECK(tp[i] == oracle[i]);
  }
}

TEST_CASE("three-factor tensor product") {
  const Vector s1{2.0};
  const Vector s2{3.0};
  const Vector s3{4.0};
  const Vector t = linalg::tensor_product3(s1, s2, s3);
  REQUIRE(t.size() == 1);
  CHECK(t[0] == 24.0);

  const Vector e{1.0, 0.0};
  const Vector unit = linalg::tensor_product3(e, e, e);
  REQUIRE(unit.size() == 8);
  CHECK(unit[0] == 1.0);
  for (std::size_t i = 1; i < 8; ++i) CHECK(unit[i] == 0.0);

  PhiloxRng rng(12, 0);
  const Vector a = random_vector(rng, 2);
  const Vector b = random_vector(rng, 2);
  const Vector c = random_vector(rng, 2);
  const Vector t3 = linalg::tensor_product3(a, b, c);
  const auto oracle = tensor3_oracle(a, b, c);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(t3[i] == doctest::Approx(oracle[i]).epsilon(1e-15));
  }
}

TEST_CASE("bilinearity of the tensor product") {
  PhiloxRng rng(13, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const double alpha = rng.uniform(-3.0, 3.0);
    const Vector a = random_vector(rng, 4);
    const Vector b = random_vector(rng, 6);
    Vector scaled(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) scaled[i] = alpha * a[i];
    const Vector left = linalg::tensor_product(scaled, b);
    const Vector right = linalg::tensor_product(a, b);
    for (std::size_t i = 0; i < left.size(); ++i) {
      CHECK(left[i] == doctest::Approx(alpha * right[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("sup-norm submultiplicativity of the tensor product") {
  PhiloxRng rng(14, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const Vector a = random_vector(rng, 5, -2.0, 2.0);
    const Vector b = random_vector(rng, 3, -2.0, 2.0);
    const Vector t = linalg::tensor_product(a, b);
    CHECK(linalg::max_abs(t.view()) <=
          linalg::max_abs(a.view()) * linalg::max_abs(b.view()));
  }
}

TEST_CASE("contract2/contract3 equal the materialized dot product exactly") {
  PhiloxRng rng(15, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector a = random_vector(rng, 4);
    const Vector b = random_vector(rng, 5);
    const Vector c = random_vector(rng, 3);
    const Vector w2 = random_vector(rng, 20);
    const Vector w3 = random_vector(rng, 60);
    const double direct2 =
        linalg::dot(w2.view(), linalg::tensor_product(a, b).view());
    CHECK(linalg::contract2(w2.view(), a.view(), b.view()) == direct2);
    const double direct3 =
        linalg::dot(w3.view(), linalg::tensor_product3(a, b, c).view());
    CHECK(linalg::contract3(w3.view(), a.view(), b.view(), c.view()) ==
          direct3);
  }
}

TEST_CASE("spd_solve identity and diagonal systems") {
  const Matrix eye = Matrix::identity(3);
  const Vector b{1.0, 2.0, 3.0};
  const Vector x = linalg::spd_solve(eye, b);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == 2.0);
  CHECK(x[2] == 3.0);

  Matrix diag(2, 2, 0.0);
  diag(0, 0) = 2.0;
  diag(1, 1) = 4.0;
  const Vector x2 = linalg::spd_solve(diag, Vector{2.0, 4.0});
  CHECK(x2[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x2[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("spd_solve agrees with the elimination oracle") {
  PhiloxRng rng(16, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix a = random_spd(rng, 5);
    const Vector b = random_vector(rng, 5);
    const Vector x = linalg::spd_solve(a, b);
    const Vector expected = elimination_oracle(a, b);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(x[i] == doctest::Approx(expected[i]).epsilon(1e-8));
    }
    // Residual bound from the contract.
    const Vector ax = linalg::matvec(a, x.view());
    double residual = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      residual = std::max(residual, std::fabs(ax[i] - b[i]));
    }
    CHECK(residual <= 1e-8 * std::max(1.0, linalg::max_abs(b.view())));
  }
}

TEST_CASE("spd_solve recovers x from A x") {
  PhiloxRng rng(17, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix a = random_spd(rng, 6);
    const Vector x = random_vector(rng, 6);
    const Vector b = linalg::matvec(a, x.view());
    const Vector solved = linalg::spd_solve(a, b);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(solved[i] ==
            doctest::Approx(x[i]).epsilon(1e-8).scale(
                std::max(1.0, std::fabs(x[i]))));
    }
  }
}

TEST_CASE("spd_solve rejects non-SPD and asymmetric inputs") {
  Matrix zero(2, 2, 0.0);
  CHECK_THROWS_AS(linalg::spd_solve(zero, Vector{1.0, 1.0}),
                  NotPositiveDefinite);

  Matrix indefinite(2, 2, 0.0);
  indefinite(0, 0) = 1.0;
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(linalg::spd_solve(indefinite, Vector{1.0, 1.0}),
                  NotPositiveDefinite);

  Matrix skew = Matrix::identity(2);
  skew(0, 1) = 0.5;
  CHECK_THROWS_AS(linalg::spd_solve(skew, Vector{1.0, 1.0}), NotSymmetric);
}

TEST_CASE("ridge identity-feature closed form") {
  const Matrix phi = Matrix::identity(2);
  const Vector w = linalg::ridge_weight(phi, Vector{1.0, 1.0}, 1.0);
  CHECK(w[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("ridge with zero target returns zero weights") {
  PhiloxRng rng(18, 0);
  Matrix phi(10, 3);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 3; ++j) phi(i, j) = rng.uniform(-1.0, 1.0);
  }
  const Vector w = linalg::ridge_weight(phi, Vector(10, 0.0), 0.5);
  for (std::size_t j = 0; j < 3; ++j) CHECK(w[j] == 0.0);
}

TEST_CASE("ridge closed form matches the gradient-descent oracle") {
  PhiloxRng rng(19, 0);
  Matrix phi(50, 4);
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t j = 0; j < 4; ++j) phi(i, j) = rng.normal();
  }
  const Vector y = random_vector(rng, 50, -2.0, 2.0);
  const double lambda = 0.1;
  const Vector w = linalg::ridge_weight(phi, y, lambda);
  const Vector gd = ridge_gd_oracle(phi, y, lambda);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(w[j] == doctest::Approx(gd[j]).epsilon(1e-6));
  }

  // Stationarity: objective gradient at the returned weight is ~0.
  Vector grad(4, 0.0);
  for (std::size_t s = 0; s < 50; ++s) {
    double r = y[s];
    for (std::size_t j = 0; j < 4; ++j) r -= phi(s, j) * w[j];
    for (std::size_t j = 0; j < 4; ++j) grad[j] += -2.0 * r * phi(s, j) / 50.0;
  }
  double rhs_scale = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    grad[j] += 2.0 * lambda * w[j];
    double phity = 0.0;
    for (std::size_t s = 0; s < 50; ++s) phity += phi(s, j) * y[s];
    rhs_scale = std::max(rhs_scale, std::fabs(phity / 50.0));
  }
  CHECK(linalg::max_abs(grad.view()) <= 1e-6 * std::max(1.0, rhs_scale));
}

TEST_CASE("ridge weight is linear in the target") {
  PhiloxRng rng(20, 0);
  Matrix phi(30, 5);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 5; ++j) phi(i, j) = rng.uniform(-1.0, 1.0);
  }
  const Vector y1 = random_vector(rng, 30);
  const Vector y2 = random_vector(rng, 30);
  Vector sum(30);
  for (std::size_t i = 0; i < 30; ++i) sum[i] = y1[i] + y2[i];
  const Vector w1 = linalg::ridge_weight(phi, y1, 0.3);
  const Vector w2 = linalg::ridge_weight(phi, y2, 0.3);
  const Vector ws = linalg::ridge_weight(phi, sum, 0.3);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(ws[j] == doctest::Approx(w1[j] + w2[j]).epsilon(1e-8));
  }
}

TEST_CASE("ridge rejects non-positive lambda") {
  const Matrix phi = Matrix::identity(2);
  CHECK_THROWS_AS(linalg::ridge_weight(phi, Vector{1.0, 1.0}, 0.0),
                  InvalidArgument);
  CHECK_THROWS_AS(linalg::ridge_weight(phi, Vector{1.0, 1.0}, -1.0),
                  InvalidArgument);
}

TEST_CASE("sorted column mean is order invariant") {
  PhiloxRng rng(21, 0);
  Matrix rows(40, 3);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 3; ++j) rows(i, j) = rng.normal();
  }
  const Vector mean = linalg::sorted_column_mean(rows);

  // Reverse the rows; the mean must be bit-identical.
  Matrix reversed(40, 3);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 3; ++j) reversed(i, j) = rows(39 - i, j);
  }
  const Vector mean2 = linalg::sorted_column_mean(reversed);
  for (std::size_t j = 0; j < 3; ++j) CHECK(mean[j] == mean2[j]);
}
