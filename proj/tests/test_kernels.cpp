#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "lucgen/kernels.hpp"
#include "lucgen/rng.hpp"

using namespace lucgen::num;

namespace {

std::vector<double> random_buffer(std::size_t n, SeededRng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

// Naive reference written independently of the kernel code paths.
std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b,
                                 std::size_t n, std::size_t k, std::size_t m) {
    std::vector<double> c(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += a[i * k + l] * b[l * m + j];
            c[i * m + j] = acc;
        }
    return c;
}

} // namespace

TEST_CASE("parallel matmul is bitwise identical to the serial reference") {
    SeededRng rng(21);
    for (auto [n, k, m] : {std::tuple<std::size_t, std::size_t, std::size_t>{3, 4, 5},
                           {9, 35, 32},
                           {64, 128, 96},
                           {200, 150, 170}}) {
        const auto a = random_buffer(n * k, rng);
        const auto b = random_buffer(k * m, rng);
        std::vector<double> c_serial(n * m, 0.0), c_par(n * m, 0.0);
        serial::matmul(a.data(), b.data(), c_serial.data(), n, k, m);
        matmul(a.data(), b.data(), c_par.data(), n, k, m);
        CHECK(c_serial == c_par);
    }
}

TEST_CASE("matmul agrees with an independent naive product") {
    SeededRng rng(22);
    const std::size_t n = 17, k = 23, m = 11;
    const auto a = random_buffer(n * k, rng);
    const auto b = random_buffer(k * m, rng);
    std::vector<double> c(n * m, 0.0);
    matmul(a.data(), b.data(), c.data(), n, k, m);
    const auto want = naive_matmul(a, b, n, k, m);
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("transposed-accumulate kernels match naive references and their serial flavors") {
    SeededRng rng(23);
    const std::size_t n = 40, k = 50, m = 30;
    const auto a = random_buffer(n * k, rng);
    const auto b_nm = random_buffer(n * m, rng);
    const auto b_km = random_buffer(k * m, rng);

    // c[k x m] += a^T b
    std::vector<double> c1(k * m, 1.0), c1s(k * m, 1.0), c1_naive(k * m, 1.0);
    matmul_acc_tn(a.data(), b_nm.data(), c1.data(), n, k, m);
    serial::matmul_acc_tn(a.data(), b_nm.data(), c1s.data(), n, k, m);
    for (std::size_t l = 0; l < k; ++l)
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += a[i * k + l] * b_nm[i * m + j];
            c1_naive[l * m + j] += acc;
        }
    CHECK(c1 == c1s);
    for (std::size_t i = 0; i < c1.size(); ++i)
        CHECK(c1[i] == doctest::Approx(c1_naive[i]).epsilon(1e-12));

    // c[n x k] += a' b^T with a'[n x m], b[k x m]
    const auto a2 = random_buffer(n * m, rng);
    std::vector<double> c2(n * k, -0.5), c2s(n * k, -0.5), c2_naive(n * k, -0.5);
    matmul_acc_nt(a2.data(), b_km.data(), c2.data(), n, k, m);
    serial::matmul_acc_nt(a2.data(), b_km.data(), c2s.data(), n, k, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < k; ++l) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += a2[i * m + j] * b_km[l * m + j];
            c2_naive[i * k + l] += acc;
        }
    CHECK(c2 == c2s);
    for (std::size_t i = 0; i < c2.size(); ++i)
        CHECK(c2[i] == doctest::Approx(c2_naive[i]).epsilon(1e-12));
}

TEST_CASE("column-sum accumulate matches a naive reference") {
    SeededRng rng(24);
    const std::size_t n = 64, m = 48;
    const auto a = random_buffer(n * m, rng);
    std::vector<double> c(m, 2.0), cs(m, 2.0), naive(m, 2.0);
    colsum_acc(a.data(), c.data(), n, m);
    serial::colsum_acc(a.data(), cs.data(), n, m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n; ++i) naive[j] += a[i * m + j];
    CHECK(c == cs);
    for (std::size_t j = 0; j < m; ++j)
        CHECK(c[j] == doctest::Approx(naive[j]).epsilon(1e-12));
}

TEST_CASE("worker thread count is at least one") {
    CHECK(worker_threads() >= 1);
}
