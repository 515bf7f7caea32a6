// Compares the serial ensemble driver against the OpenMP one on a small
// sweep and reports wall times and speedup.
#include <chrono>
#include <cstdlib>
#include <iostream>

#include "gaussdrift/experiment.hpp"

using namespace gaussdrift;

namespace {

double time_run(const RunConfig& config, double dx) {
    const auto t0 = std::chrono::steady_clock::now();
    DxResult r = run_one_dx(config, dx);
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "  threads = " << resolve_threads(config.threads)
              << "  wall = " << dt << " s"
              << "  gamma = " << r.fit.gamma << "  used = " << r.n_used << "\n";
    return dt;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig config;
    config.n_realizations = argc > 1 ? std::atoi(argv[1]) : 32;
    config.t_max = 4.0;
    config.n_samples = 17;
    config.ode.rel_tol = 1e-8;
    config.ode.abs_tol = 1e-10;

    const double dx = 8.0;
    std::cout << "ensemble benchmark: " << config.n_realizations
              << " realizations, dx = " << dx << "\n";

    std::cout << "serial reference:\n";
    config.threads = 1;
    const double t_serial = time_run(config, dx);

    std::cout << "parallel:\n";
    config.threads = 0;
    const double t_parallel = time_run(config, dx);

    std::cout << "speedup: " << t_serial / t_parallel << "x\n";
    return 0;
}
