#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gaussdrift/hamiltonian.hpp"
#include "gaussdrift/phase_space.hpp"
#include "gaussdrift/propagator.hpp"

namespace gaussdrift {

/// Thermal bath and vicinity parameters. Units: k_B = 1, lengths in
/// oscillator lengths, density in particles per oscillator length cubed.
struct BathParams {
    double temperature = 0.0;
    double density = 0.0;
    double mass = 1.0;
    double env_width = 0.7071067811865476;  // minimum-uncertainty spread 1/sqrt(2)
    double vicinity_radius = 40.0;
    int max_active = 1;
    enum class Mode { kFlux, kRoster } mode = Mode::kFlux;
    int roster_size = 1500;
};

/// Real ODE count for k active 3D bath particles plus the system particle:
/// with D = 6 (k + 1), count = D (D + 1) + 2 D + 2.
std::int64_t dof_count(std::int64_t k_active);

/// Mean speed of a Maxwell-Boltzmann gas, sqrt(8 T / (pi m)).
double mean_speed(const BathParams& params);

/// Kinetic-theory arrival rate through the vicinity sphere,
/// density * 4 pi R^2 * <v> / 4.
double injection_rate(const BathParams& params);

struct BathSample {
    PhaseVector x;      // 6 entries, interleaved
    Covariance sigma;   // 6 x 6 minimum-uncertainty block
};

/// Thermal particles: positions uniform in the centered cube of the given
/// half width, per-axis momenta Gaussian with variance mass * temperature.
std::vector<BathSample> sample_bath(const BathParams& params,
                                    std::mt19937_64& rng, double box_half_width);

/// Arrival state on the vicinity sphere around `center`: position uniform on
/// the sphere, momentum drawn from the inward flux-weighted thermal
/// distribution.
BathSample sample_flux_arrival(const BathParams& params, std::mt19937_64& rng,
                               const Eigen::Vector3d& center);

/// True iff the particle sits outside the vicinity radius of the system's
/// position and moves radially outward, in both branches.
bool should_drop(const GaussianOperator& g, int particle_id,
                 const BathParams& params);

/// Partial trace over one particle: records the centroid and eta corrections
/// in the ledger (evaluated with the pre-drop covariance), then deletes the
/// particle's rows/columns and registry entry. Dropping the system particle
/// (the first registry entry) is forbidden.
GaussianOperator drop_particle(const GaussianOperator& g, int particle_id);

/// Extends both branch vectors by identical new-particle entries and the
/// covariance by an uncorrelated block.
GaussianOperator inject_particle(const GaussianOperator& g, const BathSample& s,
                                 int particle_id);

/// Copy of g with every bath particle traced out (system block only).
GaussianOperator reduce_to_system(const GaussianOperator& g);

struct MaybeInjectResult {
    GaussianOperator op;
    double next_event_dt = 0.0;  // time from the end of the window
    int n_injected = 0;
};

/// Poisson arrivals over a window dt at the kinetic-theory rate; injections
/// beyond max_active are deferred past the window.
MaybeInjectResult maybe_inject(const GaussianOperator& g, double dt,
                               const BathParams& params, std::mt19937_64& rng);

struct TrajectorySettings {
    ExperimentHamiltonian::Params model;
    BathParams bath;
    IntegratorOptions ode;
    double t_end = 0.0;                 // natural time units
    std::vector<double> sample_times;   // natural time units, increasing
};

struct TrajectoryResult {
    std::vector<GaussianOperator> snapshots;  // system-only, one per sample time
    bool failed = false;
    std::string error;
    long n_injected = 0;
    long n_dropped = 0;
    long n_steps = 0;
};

/// Runs one bath realization: event-driven integration of the operator with
/// particle injection at the vicinity boundary and partial-trace removal of
/// departing particles. Snapshots are taken on a copy reduced to the system
/// block, so measurements never disturb the trajectory.
TrajectoryResult run_trajectory(const GaussianOperator& initial,
                                const TrajectorySettings& settings,
                                std::mt19937_64& rng);

}  // namespace gaussdrift
