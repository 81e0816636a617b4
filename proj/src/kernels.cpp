#include "csgrl/kernels.hpp"

#include <cmath>
#include <cstring>

namespace csgrl::kernels {

// Parallelizing tiny matrices costs more than it saves; below this many
// multiply-adds the parallel entry points fall through to a plain loop.
static constexpr int64_t kParallelCutoff = 1 << 15;

namespace serial {

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate) {
  for (int i = 0; i < n; ++i) {
    double* ci = c + static_cast<size_t>(i) * m;
    if (!accumulate) std::memset(ci, 0, sizeof(double) * m);
    const double* ai = a + static_cast<size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      double aip = ai[p];
      const double* bp = b + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate) {
  for (int i = 0; i < n; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate) {
  for (int i = 0; i < n; ++i) {
    double* ci = c + static_cast<size_t>(i) * m;
    if (!accumulate) std::memset(ci, 0, sizeof(double) * m);
    for (int p = 0; p < k; ++p) {
      double api = a[static_cast<size_t>(p) * n + i];
      const double* bp = b + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += api * bp[j];
    }
  }
}

void spmm(int n, const int64_t* row_offsets, const int32_t* col_indices,
          const double* weights, const double* dense, int d, double* out,
          bool accumulate) {
  for (int i = 0; i < n; ++i) {
    double* oi = out + static_cast<size_t>(i) * d;
    if (!accumulate) std::memset(oi, 0, sizeof(double) * d);
    for (int64_t e = row_offsets[i]; e < row_offsets[i + 1]; ++e) {
      double w = weights[e];
      const double* dj = dense + static_cast<size_t>(col_indices[e]) * d;
      for (int j = 0; j < d; ++j) oi[j] += w * dj[j];
    }
  }
}

void tanh_forward(const double* x, double* y, size_t len) {
  for (size_t i = 0; i < len; ++i) y[i] = std::tanh(x[i]);
}

void elu_forward(const double* x, double* y, size_t len) {
  for (size_t i = 0; i < len; ++i) y[i] = x[i] > 0.0 ? x[i] : std::expm1(x[i]);
}

void adamw_update(double* p, const double* g, double* m, double* v, size_t len,
                  double lr, double beta1, double beta2, double eps, double wd,
                  double bias_c1, double bias_c2) {
  for (size_t i = 0; i < len; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    double mhat = m[i] / bias_c1;
    double vhat = v[i] / bias_c2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
  }
}

}  // namespace serial

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate) {
  if (static_cast<int64_t>(n) * k * m < kParallelCutoff) {
    serial::matmul_nn(a, b, c, n, k, m, accumulate);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double* ci = c + static_cast<size_t>(i) * m;
    if (!accumulate) std::memset(ci, 0, sizeof(double) * m);
    const double* ai = a + static_cast<size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      double aip = ai[p];
      const double* bp = b + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate) {
  if (static_cast<int64_t>(n) * k * m < kParallelCutoff) {
    serial::matmul_nt(a, b, c, n, k, m, accumulate);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate) {
  if (static_cast<int64_t>(n) * k * m < kParallelCutoff) {
    serial::matmul_tn(a, b, c, n, k, m, accumulate);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double* ci = c + static_cast<size_t>(i) * m;
    if (!accumulate) std::memset(ci, 0, sizeof(double) * m);
    for (int p = 0; p < k; ++p) {
      double api = a[static_cast<size_t>(p) * n + i];
      const double* bp = b + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += api * bp[j];
    }
  }
}

void spmm(int n, const int64_t* row_offsets, const int32_t* col_indices,
          const double* weights, const double* dense, int d, double* out,
          bool accumulate) {
  int64_t work = row_offsets[n] * d;
  if (work < kParallelCutoff) {
    serial::spmm(n, row_offsets, col_indices, weights, dense, d, out, accumulate);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double* oi = out + static_cast<size_t>(i) * d;
    if (!accumulate) std::memset(oi, 0, sizeof(double) * d);
    for (int64_t e = row_offsets[i]; e < row_offsets[i + 1]; ++e) {
      double w = weights[e];
      const double* dj = dense + static_cast<size_t>(col_indices[e]) * d;
      for (int j = 0; j < d; ++j) oi[j] += w * dj[j];
    }
  }
}

void tanh_forward(const double* x, double* y, size_t len) {
  if (len < kParallelCutoff) {
    serial::tanh_forward(x, y, len);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(len); ++i) y[i] = std::tanh(x[i]);
}

void tanh_backward(const double* y, const double* dy, double* dx, size_t len) {
  for (size_t i = 0; i < len; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
}

void elu_forward(const double* x, double* y, size_t len) {
  if (len < kParallelCutoff) {
    serial::elu_forward(x, y, len);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(len); ++i)
    y[i] = x[i] > 0.0 ? x[i] : std::expm1(x[i]);
}

void elu_backward(const double* y, const double* dy, double* dx, size_t len) {
  // For y <= 0, dy/dx = exp(x) = y + 1.
  for (size_t i = 0; i < len; ++i) dx[i] += dy[i] * (y[i] > 0.0 ? 1.0 : y[i] + 1.0);
}

void axpy(double alpha, const double* x, double* y, size_t len) {
  for (size_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

void adamw_update(double* p, const double* g, double* m, double* v, size_t len,
                  double lr, double beta1, double beta2, double eps, double wd,
                  double bias_c1, double bias_c2) {
  if (len < kParallelCutoff) {
    serial::adamw_update(p, g, m, v, len, lr, beta1, beta2, eps, wd, bias_c1, bias_c2);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(len); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    double mhat = m[i] / bias_c1;
    double vhat = v[i] / bias_c2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
  }
}

}  // namespace csgrl::kernels
