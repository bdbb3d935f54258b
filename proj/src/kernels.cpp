#include "lucgen/kernels.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lucgen::num {

namespace {

// Work below this many multiply-adds is not worth a parallel region.
constexpr std::size_t kParallelCutoff = 1u << 15;

// Shared inner kernels. Both the serial and the OpenMP entry points call
// these, one output row per call, which pins the floating-point evaluation
// order and keeps the two flavors bitwise identical.

inline void matmul_row(const double* a_row, const double* b, double* c_row,
                       std::size_t k, std::size_t m) {
    for (std::size_t j = 0; j < m; ++j) c_row[j] = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
        const double a_il = a_row[l];
        const double* b_row = b + l * m;
        for (std::size_t j = 0; j < m; ++j) c_row[j] += a_il * b_row[j];
    }
}

// c_row[m] += sum_i a[i][l] * b[i][...] for one fixed l (a column of a).
inline void acc_tn_row(const double* a, const double* b, double* c_row,
                       std::size_t n, std::size_t k, std::size_t m, std::size_t l) {
    for (std::size_t i = 0; i < n; ++i) {
        const double a_il = a[i * k + l];
        if (a_il == 0.0) continue;
        const double* b_row = b + i * m;
        for (std::size_t j = 0; j < m; ++j) c_row[j] += a_il * b_row[j];
    }
}

// c_row[k] += a_row[m] dot rows of b[k x m]
inline void acc_nt_row(const double* a_row, const double* b, double* c_row,
                       std::size_t k, std::size_t m) {
    for (std::size_t l = 0; l < k; ++l) {
        const double* b_row = b + l * m;
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += a_row[j] * b_row[j];
        c_row[l] += acc;
    }
}

inline void colsum_col(const double* a, double* c, std::size_t n, std::size_t m,
                       std::size_t j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i * m + j];
    c[j] += acc;
}

} // namespace

namespace serial {

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) matmul_row(a + i * k, b, c + i * m, k, m);
}

void matmul_acc_tn(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t l = 0; l < k; ++l) acc_tn_row(a, b, c + l * m, n, k, m, l);
}

void matmul_acc_nt(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) acc_nt_row(a + i * m, b, c + i * k, k, m);
}

void colsum_acc(const double* a, double* c, std::size_t n, std::size_t m) {
    for (std::size_t j = 0; j < m; ++j) colsum_col(a, c, n, m, j);
}

} // namespace serial

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m) {
    if (n * k * m < kParallelCutoff || n < 2) {
        serial::matmul(a, b, c, n, k, m);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        matmul_row(a + i * k, b, c + i * m, k, m);
}

void matmul_acc_tn(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t k, std::size_t m) {
    if (n * k * m < kParallelCutoff || k < 2) {
        serial::matmul_acc_tn(a, b, c, n, k, m);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t l = 0; l < static_cast<std::ptrdiff_t>(k); ++l)
        acc_tn_row(a, b, c + l * m, n, k, m, l);
}

void matmul_acc_nt(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t k, std::size_t m) {
    if (n * k * m < kParallelCutoff || n < 2) {
        serial::matmul_acc_nt(a, b, c, n, k, m);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        acc_nt_row(a + i * m, b, c + i * k, k, m);
}

void colsum_acc(const double* a, double* c, std::size_t n, std::size_t m) {
    if (n * m < kParallelCutoff || m < 2) {
        serial::colsum_acc(a, c, n, m);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(m); ++j)
        colsum_col(a, c, n, m, j);
}

int worker_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void apply_thread_cap_from_env() {
#ifdef _OPENMP
    const char* cap = std::getenv("LUCGEN_THREADS");
    if (!cap || !*cap) return;
    char* end = nullptr;
    long n = std::strtol(cap, &end, 10);
    if (end && *end == '\0' && n >= 1) omp_set_num_threads(static_cast<int>(n));
#endif
}

} // namespace lucgen::num
