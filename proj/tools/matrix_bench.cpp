// Times the conformance grid: serial reference vs the OpenMP cell-parallel
// path, checking they agree on every run.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "g5/conformance.hpp"
#include "g5/profiles.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double run_ms(g5::conformance::Execution exec,
              const std::vector<g5::profiles::NetworkProfile>& cols, uint64_t seed, int reps,
              g5::conformance::MatrixReport& last) {
    auto start = Clock::now();
    for (int i = 0; i < reps; ++i)
        last = g5::conformance::conformance_matrix(cols, g5::conformance::extended_attacks(),
                                                   seed + static_cast<uint64_t>(i), exec);
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
    int reps = argc > 1 ? std::stoi(argv[1]) : 5;
    uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 0xC0FFEE;

    std::vector<g5::profiles::NetworkProfile> cols;
    for (const auto& name : g5::profiles::preset_names()) cols.push_back(g5::profiles::preset(name));
    cols.push_back(g5::profiles::hardened());

#ifdef _OPENMP
    std::cout << "threads: " << omp_get_max_threads() << '\n';
#else
    std::cout << "threads: 1 (built without OpenMP)\n";
#endif
    std::cout << "grid: " << g5::conformance::extended_attacks().size() << " attacks x "
              << cols.size() << " profiles, " << reps << " reps\n";

    g5::conformance::MatrixReport serial, parallel;
    double t_serial = run_ms(g5::conformance::Execution::Serial, cols, seed, reps, serial);
    double t_parallel = run_ms(g5::conformance::Execution::Parallel, cols, seed, reps, parallel);

    bool equal = serial.cells == parallel.cells;
    std::cout << "serial:   " << t_serial << " ms/grid\n"
              << "parallel: " << t_parallel << " ms/grid\n"
              << "speedup:  " << (t_parallel > 0 ? t_serial / t_parallel : 0.0) << "x\n"
              << "results identical: " << (equal ? "yes" : "NO") << '\n';
    return equal ? 0 : 1;
}
