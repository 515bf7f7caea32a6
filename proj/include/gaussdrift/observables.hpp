#pragma once

#include <string>
#include <vector>

#include "gaussdrift/config.hpp"
#include "gaussdrift/phase_space.hpp"

namespace gaussdrift {

/// Ensemble-averaged coherence magnitude versus time (times in oscillator
/// periods, values normalized to 1 at t = 0).
struct CoherenceSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> stderrs;
    int n_realizations = 0;
};

struct DecayFit {
    double gamma = 0.0;         // per oscillator period
    double gamma_stderr = 0.0;
    double window_t0 = 0.0;
    double window_t1 = 0.0;
    double r_squared = 0.0;
    int n_points = 0;
};

/// Coherence magnitude of an ensemble of system-only operators at one time.
/// averaged-operator mode: sqrt(Tr rho_bar rho_bar^dagger) of the weighted
/// mean operator; mean-of-norms mode: mean of the individual norms.
double coherence_norm(const std::vector<GaussianOperator>& reduced_ops,
                      CoherenceMode mode);

struct CoherencePoint {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// coherence_norm plus an uncertainty: jackknife over realizations in
/// averaged-operator mode, standard error of the mean otherwise.
CoherencePoint ensemble_coherence(const std::vector<GaussianOperator>& reduced_ops,
                                  CoherenceMode mode);

/// Weighted least squares of log(value) against time over the points above
/// the noise floor (stderr/value <= 0.5, value > 0, t > 0). Requires at
/// least five usable points.
DecayFit fit_decay(const CoherenceSeries& series);

}  // namespace gaussdrift
