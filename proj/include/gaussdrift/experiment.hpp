#pragma once

#include <string>
#include <vector>

#include "gaussdrift/config.hpp"
#include "gaussdrift/observables.hpp"

namespace gaussdrift {

struct DxResult {
    double delta_x = 0.0;
    CoherenceSeries series;
    DecayFit fit;
    bool fit_ok = false;
    std::string fit_error;
    int n_used = 0;    // realizations entering the average
    int n_failed = 0;  // recorded and excluded, never retried
    std::vector<std::string> failures;
};

struct ExperimentResult {
    std::vector<DxResult> per_dx;
    bool all_fits_ok() const {
        for (const auto& r : per_dx)
            if (!r.fit_ok) return false;
        return !per_dx.empty();
    }
};

/// Initial two-branch cat component for the configured separation direction.
GaussianOperator initial_cat_operator(const RunConfig& config, double delta_x);

/// Worker count actually used for a configured `threads` value (0 = auto).
int resolve_threads(int threads);

/// One separation value: n_realizations independent bath trajectories
/// (realization m always uses the RNG substream m of the master seed,
/// independent of delta_x), ensemble coherence at the sample times normalized
/// to t = 0, and the decay fit.
DxResult run_one_dx(const RunConfig& config, double delta_x);

/// Sweep over config.delta_x_list.
ExperimentResult run_experiment(const RunConfig& config);

}  // namespace gaussdrift
