#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lucgen/kernels.hpp"
#include "lucgen/rng.hpp"

// Times the OpenMP matrix kernels against their serial reference and checks
// that both produce bitwise-identical outputs at the current thread count.

namespace {

using lucgen::num::SeededRng;
using clock_type = std::chrono::steady_clock;

std::vector<double> random_buffer(SeededRng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <typename Fn>
double best_ms(int repeats, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = clock_type::now();
        fn();
        const auto t1 = clock_type::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

struct Case {
    const char* kernel;
    std::size_t n, k, m;
};

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

int main(int argc, char** argv) {
    lucgen::num::apply_thread_cap_from_env();

    int repeats = 5;
    std::size_t scale = 256;
    CLI::App app{"kernel benchmark: serial reference vs OpenMP"};
    app.add_option("--repeats", repeats, "timing repetitions per case (best is kept)")
        ->check(CLI::Range(1, 1000));
    app.add_option("--size", scale, "square matrix size for the large cases")
        ->check(CLI::Range(std::size_t{8}, std::size_t{4096}));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Case> cases = {
        {"matmul", scale, scale, scale},
        {"matmul", 32, 2000, 128},  // typical training minibatch shape
        {"matmul_acc_tn", scale, scale, scale},
        {"matmul_acc_nt", scale, scale, scale},
        {"colsum_acc", scale * scale, 64, 0},
    };

    std::printf("threads: %d\n", lucgen::num::worker_threads());
    std::printf("%-14s %7s %7s %7s %12s %12s %9s %8s\n", "kernel", "n", "k", "m", "serial_ms",
                "parallel_ms", "speedup", "bitwise");

    SeededRng rng(7);
    bool all_match = true;
    for (const Case& c : cases) {
        using namespace lucgen::num;
        double serial_ms = 0.0, parallel_ms = 0.0;
        std::vector<double> out_s, out_p;
        if (std::strcmp(c.kernel, "matmul") == 0) {
            const auto a = random_buffer(rng, c.n * c.k);
            const auto b = random_buffer(rng, c.k * c.m);
            out_s.assign(c.n * c.m, 0.0);
            out_p.assign(c.n * c.m, 0.0);
            serial_ms = best_ms(repeats,
                                [&] { serial::matmul(a.data(), b.data(), out_s.data(), c.n, c.k, c.m); });
            parallel_ms =
                best_ms(repeats, [&] { matmul(a.data(), b.data(), out_p.data(), c.n, c.k, c.m); });
        } else if (std::strcmp(c.kernel, "matmul_acc_tn") == 0) {
            const auto a = random_buffer(rng, c.n * c.k);
            const auto b = random_buffer(rng, c.n * c.m);
            const auto init = random_buffer(rng, c.k * c.m);
            out_s = init;
            out_p = init;
            serial_ms = best_ms(repeats, [&] {
                out_s = init;
                serial::matmul_acc_tn(a.data(), b.data(), out_s.data(), c.n, c.k, c.m);
            });
            parallel_ms = best_ms(repeats, [&] {
                out_p = init;
                matmul_acc_tn(a.data(), b.data(), out_p.data(), c.n, c.k, c.m);
            });
        } else if (std::strcmp(c.kernel, "matmul_acc_nt") == 0) {
            const auto a = random_buffer(rng, c.n * c.m);
            const auto b = random_buffer(rng, c.k * c.m);
            const auto init = random_buffer(rng, c.n * c.k);
            out_s = init;
            out_p = init;
            serial_ms = best_ms(repeats, [&] {
                out_s = init;
                serial::matmul_acc_nt(a.data(), b.data(), out_s.data(), c.n, c.k, c.m);
            });
            parallel_ms = best_ms(repeats, [&] {
                out_p = init;
                matmul_acc_nt(a.data(), b.data(), out_p.data(), c.n, c.k, c.m);
            });
        } else {
            const auto a = random_buffer(rng, c.n * c.k);
            const auto init = random_buffer(rng, c.k);
            out_s = init;
            out_p = init;
            serial_ms = best_ms(repeats, [&] {
                out_s = init;
                serial::colsum_acc(a.data(), out_s.data(), c.n, c.k);
            });
            parallel_ms = best_ms(repeats, [&] {
                out_p = init;
                colsum_acc(a.data(), out_p.data(), c.n, c.k);
            });
        }
        const bool match = bitwise_equal(out_s, out_p);
        all_match = all_match && match;
        std::printf("%-14s %7zu %7zu %7zu %12.3f %12.3f %8.2fx %8s\n", c.kernel, c.n, c.k, c.m,
                    serial_ms, parallel_ms, parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0,
                    match ? "match" : "MISMATCH");
    }
    return all_match ? 0 : 1;
}
