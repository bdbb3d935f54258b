#pragma once

#include <cstddef>

namespace lucgen::num {

// Dense matrix kernels in two flavors: a plain serial reference (namespace
// serial) and OpenMP row-parallel versions (namespace itself). Both flavors
// call the same per-row inner kernels, so the parallel results are bitwise
// identical to the serial reference at any thread count — each output row is
// produced by exactly one thread running the identical serial code.
//
// Shapes: a is n x k, b is k x m unless noted. All buffers row-major.

namespace serial {

// c[n x m] = a[n x k] * b[k x m]
void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m);

// c[k x m] += a[n x k]^T * b[n x m]
void matmul_acc_tn(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t k, std::size_t m);

// c[n x k] += a[n x m] * b[k x m]^T
void matmul_acc_nt(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t k, std::size_t m);

// c[m] += column sums of a[n x m]
void colsum_acc(const double* a, double* c, std::size_t n, std::size_t m);

} // namespace serial

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m);
void matmul_acc_tn(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t k, std::size_t m);
void matmul_acc_nt(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t k, std::size_t m);
void colsum_acc(const double* a, double* c, std::size_t n, std::size_t m);

// Number of worker threads the process will use (honors the LUCGEN_THREADS
// cap applied at startup); 1 when built without OpenMP.
int worker_threads();

// Applies the LUCGEN_THREADS environment cap, if set. Called once by mains.
void apply_thread_cap_from_env();

} // namespace lucgen::num
