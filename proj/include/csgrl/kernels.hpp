#pragma once

#include <cstdint>
#include <vector>

namespace csgrl::kernels {

// Dense and sparse inner loops shared by the whole library. The public entry
// points are OpenMP-parallel over output rows; kernels::serial holds the
// plain-loop reference implementations the tests and the benchmark compare
// against. Every output element is produced by exactly one thread with a
// fixed-order reduction, so parallel and serial results are bit-identical.

// C(n x m) = A(n x k) * B(k x m), accumulating into C when accumulate is set.
void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate = false);

// C(n x m) = A(n x k) * B^T with B stored (m x k).
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate = false);

// C(n x m) = A^T * B with A stored (k x n), B stored (k x m).
void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate = false);

// C(n x d) = S * D for CSR S(n x cols_s) with per-edge weights; D is (cols_s x d).
void spmm(int n, const int64_t* row_offsets, const int32_t* col_indices,
          const double* weights, const double* dense, int d, double* out,
          bool accumulate = false);

// y = tanh(x) elementwise.
void tanh_forward(const double* x, double* y, size_t len);
// dx += dy * (1 - y^2)
void tanh_backward(const double* y, const double* dy, double* dx, size_t len);

// ELU with alpha = 1.
void elu_forward(const double* x, double* y, size_t len);
void elu_backward(const double* y, const double* dy, double* dx, size_t len);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, size_t len);

// One decoupled-weight-decay Adam update over a flat block.
// m <- b1*m + (1-b1)*g ; v <- b2*v + (1-b2)*g^2 ;
// p <- p - lr * (mhat / (sqrt(vhat) + eps) + wd * p)
void adamw_update(double* p, const double* g, double* m, double* v, size_t len,
                  double lr, double beta1, double beta2, double eps, double wd,
                  double bias_c1, double bias_c2);

namespace serial {
void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate = false);
void spmm(int n, const int64_t* row_offsets, const int32_t* col_indices,
          const double* weights, const double* dense, int d, double* out,
          bool accumulate = false);
void tanh_forward(const double* x, double* y, size_t len);
void elu_forward(const double* x, double* y, size_t len);
void adamw_update(double* p, const double* g, double* m, double* v, size_t len,
                  double lr, double beta1, double beta2, double eps, double wd,
                  double bias_c1, double bias_c2);
}  // namespace serial

}  // namespace csgrl::kernels
