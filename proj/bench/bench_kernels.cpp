// Times the OpenMP kernel entry points against the serial reference
// implementations and verifies the outputs are bit-identical.
//
// Usage: bench_kernels [--quick]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "csgrl/csr.hpp"
#include "csgrl/kernels.hpp"
#include "csgrl/mat.hpp"
#include "csgrl/rng.hpp"

namespace {

using namespace csgrl;
using Clock = std::chrono::steady_clock;

double time_of(int reps, const std::function<void()>& fn) {
  fn();  // warm-up
  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  std::chrono::duration<double, std::milli> dt = Clock::now() - t0;
  return dt.count() / reps;
}

bool report(const char* name, double serial_ms, double parallel_ms, bool match) {
  std::printf("%-12s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   %s\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms,
              match ? "bit-identical" : "MISMATCH");
  return match;
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;

  const int n = quick ? 96 : 384;
  const int reps = quick ? 2 : 5;
  Rng rng(7);
  bool ok = true;

  {
    Mat a(n, n), b(n, n), c1(n, n), c2(n, n);
    for (double& x : a.v) x = rng.normal();
    for (double& x : b.v) x = rng.normal();
    double ts = time_of(reps, [&] {
      kernels::serial::matmul_nn(a.data(), b.data(), c1.data(), n, n, n);
    });
    double tp = time_of(reps, [&] {
      kernels::matmul_nn(a.data(), b.data(), c2.data(), n, n, n);
    });
    ok &= report("matmul_nn", ts, tp, c1.v == c2.v);
  }

  {
    const int rows = quick ? 2000 : 20000;
    const int cols = quick ? 1000 : 10000;
    const int d = 64;
    const int per_row = 10;
    std::vector<std::pair<int32_t, int32_t>> edges;
    edges.reserve(size_t(rows) * per_row);
    for (int i = 0; i < rows; ++i)
      for (int e = 0; e < per_row; ++e)
        edges.emplace_back(i, int32_t(rng.uniform_int(cols)));
    Csr s = Csr::from_edges(rows, cols, edges);
    std::vector<double> w(s.nnz());
    for (double& x : w) x = rng.uniform(0.1, 1.0);
    Mat dense(cols, d), o1(rows, d), o2(rows, d);
    for (double& x : dense.v) x = rng.normal();
    double ts = time_of(reps, [&] {
      kernels::serial::spmm(rows, s.row_offsets.data(), s.col_indices.data(),
                            w.data(), dense.data(), d, o1.data());
    });
    double tp = time_of(reps, [&] {
      kernels::spmm(rows, s.row_offsets.data(), s.col_indices.data(), w.data(),
                    dense.data(), d, o2.data());
    });
    ok &= report("spmm", ts, tp, o1.v == o2.v);
  }

  {
    const size_t len = quick ? size_t(1) << 18 : size_t(1) << 22;
    std::vector<double> x(len), y1(len), y2(len);
    for (double& v : x) v = rng.normal();
    double ts = time_of(reps, [&] {
      kernels::serial::tanh_forward(x.data(), y1.data(), len);
    });
    double tp = time_of(reps, [&] {
      kernels::tanh_forward(x.data(), y2.data(), len);
    });
    ok &= report("tanh", ts, tp, y1 == y2);
  }

  {
    const size_t len = quick ? size_t(1) << 18 : size_t(1) << 22;
    std::vector<double> g(len), m1(len, 0.0), v1(len, 0.0), m2(len, 0.0),
        v2(len, 0.0), p1(len), p2(len);
    for (size_t i = 0; i < len; ++i) {
      g[i] = rng.normal();
      p1[i] = p2[i] = rng.normal();
    }
    double ts = time_of(reps, [&] {
      kernels::serial::adamw_update(p1.data(), g.data(), m1.data(), v1.data(),
                                    len, 1e-2, 0.9, 0.999, 1e-8, 1e-5, 0.1, 0.001);
    });
    double tp = time_of(reps, [&] {
      kernels::adamw_update(p2.data(), g.data(), m2.data(), v2.data(), len,
                            1e-2, 0.9, 0.999, 1e-8, 1e-5, 0.1, 0.001);
    });
    ok &= report("adamw", ts, tp, p1 == p2 && m1 == m2 && v1 == v2);
  }

  if (!ok) {
    std::fprintf(stderr, "kernel outputs diverged\n");
    return 1;
  }
  return 0;
}
