// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include <cblas.h>

namespace mavae::detail {

// Single-threaded BLAS: keeps results reproducible and avoids oversubscribing
// small matrices.
inline void blas_init() {
  static const bool once = (openblas_set_num_threads(1), true);
  (void)once;
}

// Row-major kernels that accumulate into c.

// c[m,n] += a[m,k] * b[k,n]
inline void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                    double* c) {
  if (m == 0 || n == 0 || k == 0) return;
  blas_init();
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, int(m), int(n), int(k), 1.0, a, int(k),
              b, int(n), 1.0, c, int(n));
}

// c[m,n] += a[m,k] * b[n,k]^T
inline void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                    double* c) {
  if (m == 0 || n == 0 || k == 0) return;
  blas_init();
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, int(m), int(n), int(k), 1.0, a, int(k), b,
              int(k), 1.0, c, int(n));
}

// c[m,n] += a[k,m]^T * b[k,n]
inline void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                    double* c) {
  if (m == 0 || n == 0 || k == 0) return;
  blas_init();
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, int(m), int(n), int(k), 1.0, a, int(m), b,
              int(n), 1.0, c, int(n));
}

}  // namespace mavae::detail
