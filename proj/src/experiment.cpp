#include "gaussdrift/experiment.hpp"

#include <cmath>
#include <numbers>

#include "gaussdrift/environment.hpp"
#include "gaussdrift/rng.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace gaussdrift {

namespace {

constexpr double kPeriod = 2.0 * std::numbers::pi;

std::vector<double> sample_times_natural(const RunConfig& config) {
    std::vector<double> times(config.n_samples);
    const double t_end = config.t_max * kPeriod;
    for (int k = 0; k < config.n_samples; ++k)
        times[k] = t_end * k / (config.n_samples - 1);
    return times;
}

TrajectorySettings make_settings(const RunConfig& config) {
    TrajectorySettings s;
    s.model = config.model;
    s.bath = config.bath;
    s.ode = config.ode;
    s.t_end = config.t_max * kPeriod;
    s.sample_times = sample_times_natural(config);
    return s;
}

}  // namespace

GaussianOperator initial_cat_operator(const RunConfig& config, double delta_x) {
    const Registry registry = {{0, 3}};
    PhaseVector xa = PhaseVector::Zero(6), xb = PhaseVector::Zero(6);
    switch (config.separation) {
        case Separation::kPosition:
            xa[0] = 0.5 * delta_x;
            xb[0] = -0.5 * delta_x;
            break;
        case Separation::kMomentum:
            xa[1] = 0.5 * delta_x;
            xb[1] = -0.5 * delta_x;
            break;
        case Separation::kMixed: {
            const double c = 0.5 * delta_x / std::numbers::sqrt2;
            xa[0] = c; xa[1] = c;
            xb[0] = -c; xb[1] = -c;
            break;
        }
    }
    return make_coherent_pair(xa, xb, registry);
}

int resolve_threads(int threads) {
    if (threads > 0) return threads;
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

DxResult run_one_dx(const RunConfig& config, double delta_x) {
    DxResult result;
    result.delta_x = delta_x;

    const TrajectorySettings settings = make_settings(config);
    const GaussianOperator initial = initial_cat_operator(config, delta_x);
    const int m = config.n_realizations;
    const int n_threads = resolve_threads(config.threads);

    std::vector<TrajectoryResult> runs(m);
    // Realizations are independent; each owns its RNG substream, keyed by the
    // realization index only, so results are identical for any worker count
    // and bath histories are shared across delta_x values.
    if (n_threads > 1) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
        for (int i = 0; i < m; ++i) {
            auto rng = make_engine(config.master_seed, i);
            runs[i] = run_trajectory(initial, settings, rng);
        }
#else
        for (int i = 0; i < m; ++i) {
            auto rng = make_engine(config.master_seed, i);
            runs[i] = run_trajectory(initial, settings, rng);
        }
#endif
    } else {
        // Serial reference path; kept distinct so the parallel driver can be
        // checked against it byte for byte.
        for (int i = 0; i < m; ++i) {
            auto rng = make_engine(config.master_seed, i);
            runs[i] = run_trajectory(initial, settings, rng);
        }
    }

    const std::size_t n_samples = settings.sample_times.size();
    std::vector<int> usable;
    for (int i = 0; i < m; ++i) {
        if (!runs[i].failed && runs[i].snapshots.size() == n_samples) {
            usable.push_back(i);
        } else {
            ++result.n_failed;
            result.failures.push_back("realization " + std::to_string(i) + ": " +
                                      (runs[i].error.empty() ? "incomplete run"
                                                             : runs[i].error));
        }
    }
    result.n_used = static_cast<int>(usable.size());
    if (usable.empty())
        throw numerics_error("all realizations failed for delta_x = " +
                             std::to_string(delta_x));

    result.series.n_realizations = result.n_used;
    result.series.times.resize(n_samples);
    result.series.values.resize(n_samples);
    result.series.stderrs.resize(n_samples);

    std::vector<GaussianOperator> at_time(usable.size());
    double v0 = 1.0;
    for (std::size_t k = 0; k < n_samples; ++k) {
        for (std::size_t u = 0; u < usable.size(); ++u)
            at_time[u] = runs[usable[u]].snapshots[k];
        const CoherencePoint p = ensemble_coherence(at_time, config.coherence_mode);
        if (k == 0) {
            v0 = p.value;
            if (!(v0 > 0.0))
                throw numerics_error("vanishing coherence at t = 0");
        }
        result.series.times[k] = settings.sample_times[k] / kPeriod;
        result.series.values[k] = p.value / v0;
        result.series.stderrs[k] = p.stderr_ / v0;
    }
    result.series.values[0] = 1.0;
    result.series.stderrs[0] = 0.0;

    try {
        result.fit = fit_decay(result.series);
        result.fit_ok = true;
    } catch (const Error& e) {
        result.fit_ok = false;
        result.fit_error = e.what();
    }
    return result;
}

ExperimentResult run_experiment(const RunConfig& config) {
    ExperimentResult result;
    for (double dx : config.delta_x_list)
        result.per_dx.push_back(run_one_dx(config, dx));
    return result;
}

}  // namespace gaussdrift
