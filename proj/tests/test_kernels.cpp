#include <cmath>
#include <cstring>
#include <tuple>
#include <vector>

#include "csgrl/csr.hpp"
#include "csgrl/kernels.hpp"
#include "csgrl/mat.hpp"
#include "csgrl/rng.hpp"
#include "doctest.h"

using namespace csgrl;

namespace {

Mat random_mat(int r, int c, Rng& rng) {
  Mat m(r, c);
  for (double& x : m.v) x = rng.uniform(-1.0, 1.0);
  return m;
}

// Plain triple loop, accumulation order j-major like the kernels.
Mat naive_matmul(const Mat& a, const Mat& b) {
  Mat c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j)
      for (int k = 0; k < b.cols; ++k) c(i, k) += a(i, j) * b(j, k);
  return c;
}

Mat transpose_of(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("matmul_nn matches the naive triple loop") {
  Rng rng(11);
  for (auto [n, k, m] : {std::tuple{1, 1, 1}, {3, 4, 5}, {17, 9, 13}, {40, 40, 40}}) {
    Mat a = random_mat(n, k, rng);
    Mat b = random_mat(k, m, rng);
    Mat c(n, m);
    kernels::matmul_nn(a.data(), b.data(), c.data(), n, k, m);
    Mat want = naive_matmul(a, b);
    for (size_t i = 0; i < c.v.size(); ++i) CHECK(c.v[i] == doctest::Approx(want.v[i]).epsilon(1e-12));
  }
}

TEST_CASE("matmul_nt and matmul_tn agree with explicit transposes") {
  Rng rng(12);
  int n = 7, k = 5, m = 6;
  Mat a = random_mat(n, k, rng);
  Mat b = random_mat(m, k, rng);  // used as B^T
  Mat c(n, m);
  kernels::matmul_nt(a.data(), b.data(), c.data(), n, k, m);
  Mat want = naive_matmul(a, transpose_of(b));
  for (size_t i = 0; i < c.v.size(); ++i) CHECK(c.v[i] == doctest::Approx(want.v[i]).epsilon(1e-12));

  Mat at = random_mat(k, n, rng);  // used as A^T
  Mat bb = random_mat(k, m, rng);
  Mat c2(n, m);
  kernels::matmul_tn(at.data(), bb.data(), c2.data(), n, k, m);
  Mat want2 = naive_matmul(transpose_of(at), bb);
  for (size_t i = 0; i < c2.v.size(); ++i)
    CHECK(c2.v[i] == doctest::Approx(want2.v[i]).epsilon(1e-12));
}

TEST_CASE("accumulate adds onto the output") {
  Rng rng(13);
  Mat a = random_mat(4, 3, rng), b = random_mat(3, 2, rng);
  Mat c = random_mat(4, 2, rng);
  Mat base = c;
  kernels::matmul_nn(a.data(), b.data(), c.data(), 4, 3, 2, true);
  Mat prod = naive_matmul(a, b);
  for (size_t i = 0; i < c.v.size(); ++i)
    CHECK(c.v[i] == doctest::Approx(base.v[i] + prod.v[i]).epsilon(1e-12));
}

TEST_CASE("spmm matches densified multiply") {
  Rng rng(14);
  int n = 20, cols = 15, d = 8;
  std::vector<std::pair<int32_t, int32_t>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < cols; ++j)
      if (rng.uniform() < 0.2) edges.push_back({i, j});
  Csr s = Csr::from_edges(n, cols, edges);
  std::vector<double> w(s.nnz());
  for (double& x : w) x = rng.uniform(-1.0, 1.0);

  Mat dense(n, cols);
  for (int i = 0; i < n; ++i) {
    auto row = s.row(i);
    for (size_t t = 0; t < row.size(); ++t) dense(i, row[t]) = w[s.row_offsets[i] + t];
  }
  Mat x = random_mat(cols, d, rng);
  Mat out(n, d);
  kernels::spmm(n, s.row_offsets.data(), s.col_indices.data(), w.data(), x.data(), d,
                out.data());
  Mat want = naive_matmul(dense, x);
  for (size_t i = 0; i < out.v.size(); ++i)
    CHECK(out.v[i] == doctest::Approx(want.v[i]).epsilon(1e-12));
}

TEST_CASE("parallel and serial kernels are bit-identical") {
  Rng rng(15);
  // Big enough to clear the parallel cutoff.
  int n = 96, k = 64, m = 96;
  Mat a = random_mat(n, k, rng), b = random_mat(k, m, rng);
  Mat c1(n, m), c2(n, m);
  kernels::matmul_nn(a.data(), b.data(), c1.data(), n, k, m);
  kernels::serial::matmul_nn(a.data(), b.data(), c2.data(), n, k, m);
  CHECK(std::memcmp(c1.data(), c2.data(), c1.v.size() * sizeof(double)) == 0);

  size_t len = 1 << 16;
  std::vector<double> x(len), y1(len), y2(len);
  for (double& v : x) v = rng.uniform(-3.0, 3.0);
  kernels::tanh_forward(x.data(), y1.data(), len);
  kernels::serial::tanh_forward(x.data(), y2.data(), len);
  CHECK(std::memcmp(y1.data(), y2.data(), len * sizeof(double)) == 0);
  kernels::elu_forward(x.data(), y1.data(), len);
  kernels::serial::elu_forward(x.data(), y2.data(), len);
  CHECK(std::memcmp(y1.data(), y2.data(), len * sizeof(double)) == 0);
}

TEST_CASE("activation forward values and backward slopes") {
  std::vector<double> x = {-2.0, -0.5, 0.0, 0.5, 2.0};
  std::vector<double> y(5);
  kernels::elu_forward(x.data(), y.data(), 5);
  for (int i = 0; i < 5; ++i) {
    double want = x[i] > 0 ? x[i] : std::expm1(x[i]);
    CHECK(y[i] == doctest::Approx(want).epsilon(1e-15));
  }
  // elu'(x) = 1 for x > 0, exp(x) = y + 1 otherwise.
  std::vector<double> dy(5, 1.0), dx(5, 0.0);
  kernels::elu_backward(y.data(), dy.data(), dx.data(), 5);
  for (int i = 0; i < 5; ++i) {
    double want = x[i] > 0 ? 1.0 : std::exp(x[i]);
    CHECK(dx[i] == doctest::Approx(want).epsilon(1e-12));
  }

  kernels::tanh_forward(x.data(), y.data(), 5);
  for (int i = 0; i < 5; ++i) CHECK(y[i] == doctest::Approx(std::tanh(x[i])).epsilon(1e-15));
  std::fill(dx.begin(), dx.end(), 0.0);
  kernels::tanh_backward(y.data(), dy.data(), dx.data(), 5);
  for (int i = 0; i < 5; ++i) {
    double t = std::tanh(x[i]);
    CHECK(dx[i] == doctest::Approx(1.0 - t * t).epsilon(1e-12));
  }
}

TEST_CASE("adamw_update single step against the closed form") {
  double p = 1.0, g = 0.5, m = 0.0, v = 0.0;
  double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.01;
  kernels::adamw_update(&p, &g, &m, &v, 1, lr, b1, b2, eps, wd, 1.0 - b1, 1.0 - b2);
  double em = (1 - b1) * g;
  double ev = (1 - b2) * g * g;
  double want = 1.0 - lr * ((em / (1 - b1)) / (std::sqrt(ev / (1 - b2)) + eps) + wd * 1.0);
  CHECK(m == doctest::Approx(em).epsilon(1e-15));
  CHECK(v == doctest::Approx(ev).epsilon(1e-15));
  CHECK(p == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("adamw_update zero gradient zero decay is a no-op") {
  std::vector<double> p = {0.3, -0.7}, g = {0.0, 0.0}, m(2, 0.0), v(2, 0.0);
  kernels::adamw_update(p.data(), g.data(), m.data(), v.data(), 2, 0.1, 0.9, 0.999, 1e-8,
                        0.0, 0.1, 0.001);
  CHECK(p[0] == 0.3);
  CHECK(p[1] == -0.7);
}

TEST_CASE("adamw parallel matches serial bitwise") {
  Rng rng(16);
  size_t len = 1 << 16;
  std::vector<double> p1(len), g(len), m1(len), v1(len);
  for (size_t i = 0; i < len; ++i) {
    p1[i] = rng.uniform(-1, 1);
    g[i] = rng.uniform(-1, 1);
    m1[i] = rng.uniform(-0.1, 0.1);
    v1[i] = rng.uniform(0, 0.1);
  }
  auto p2 = p1;
  auto m2 = m1;
  auto v2 = v1;
  kernels::adamw_update(p1.data(), g.data(), m1.data(), v1.data(), len, 1e-2, 0.9, 0.999,
                        1e-8, 1e-5, 0.1, 0.001);
  kernels::serial::adamw_update(p2.data(), g.data(), m2.data(), v2.data(), len, 1e-2, 0.9,
                                0.999, 1e-8, 1e-5, 0.1, 0.001);
  CHECK(std::memcmp(p1.data(), p2.data(), len * sizeof(double)) == 0);
  CHECK(std::memcmp(m1.data(), m2.data(), len * sizeof(double)) == 0);
  CHECK(std::memcmp(v1.data(), v2.data(), len * sizeof(double)) == 0);
}

TEST_CASE("axpy") {
  std::vector<double> x = {1.0, 2.0, 3.0}, y = {10.0, 20.0, 30.0};
  kernels::axpy(0.5, x.data(), y.data(), 3);
  CHECK(y[0] == 10.5);
  CHECK(y[1] == 21.0);
  CHECK(y[2] == 31.5);
}

}  // TEST_SUITE
