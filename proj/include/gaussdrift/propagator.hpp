#pragma once

#include <Eigen/Dense>
#include <functional>

#include "gaussdrift/hamiltonian.hpp"
#include "gaussdrift/phase_space.hpp"

namespace gaussdrift {

// Flattened ODE state for one Gaussian operator with phase dimension D:
//   [ x_alpha (D) | x_beta (D) | Sigma upper triangle re,im (D(D+1)) |
//     phase | log-magnitude accumulator | post-trace offset re,im (2D)* ]
// The trailing block exists only once a partial trace has produced a
// nonzero centroid correction; the correction is itself dynamical
// (it rotates with the retained flow) and is integrated alongside.
// Without that block the layout length matches dof_count() for the 3D
// experiment registry.

inline int flat_sigma_offset(int d) { return 2 * d; }
inline int flat_phase_index(int d) { return 2 * d + d * (d + 1); }
inline int flat_scale_index(int d) { return flat_phase_index(d) + 1; }
inline int flat_length(int d) { return 2 * d + d * (d + 1) + 2; }
inline int flat_offset_start(int d) { return flat_length(d); }
inline int flat_total_length(int d, bool with_offset) {
    return flat_length(d) + (with_offset ? 2 * d : 0);
}

/// Index of the packed real part of Sigma(i, j), i <= j.
inline int sigma_entry_index(int d, int i, int j) {
    return flat_sigma_offset(d) + 2 * (i * d - i * (i - 1) / 2 + (j - i));
}

struct DynamicalState {
    Eigen::VectorXd y;
    double time = 0.0;
    int dim = 0;              // phase dimension D
    bool has_offset = false;  // trailing post-trace offset block present
    double det_arg = 0.0;     // unwrapped arg(det Sigma), updated per step
};

DynamicalState pack_state(const GaussianOperator& g, double time);

/// Writes the dynamical members (trajectories, covariance, phase, scale)
/// back into an operator whose registry matches the state's dimension.
void unpack_state(const DynamicalState& state, GaussianOperator& g);

void unpack_sigma(const Eigen::VectorXd& y, int d, Eigen::MatrixXd& re,
                  Eigen::MatrixXd& im);

/// Time derivative of the flattened state. Handles distinct branch
/// trajectories; the equal-branch case reduces to the closed-system
/// covariance flow with zero phase velocity.
Eigen::VectorXd rhs_offdiagonal(const HamiltonianModel& model,
                                const Eigen::VectorXd& y, int d);

/// Equal-branch specialization. Same code path as rhs_offdiagonal; requires
/// x_alpha == x_beta.
Eigen::VectorXd rhs_diagonal(const HamiltonianModel& model,
                             const Eigen::VectorXd& y, int d);

struct IntegratorOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
    double max_step = 0.5;
    double min_step = 1e-13;
    double initial_step = 1e-3;
};

enum class StepAction { kContinue, kStop };

/// Called after every accepted step; may request an early stop so the caller
/// can restructure the state (particle add/drop) at a step boundary.
using StepCallback = std::function<StepAction(const DynamicalState&)>;

struct IntegrateResult {
    bool reached_target = false;
    long n_accepted = 0;
    long n_rejected = 0;
};

/// Adaptive embedded Runge-Kutta 5(4) advance to t_target. The last step is
/// shortened to land on t_target exactly. Throws a numerics error with
/// diagnostics if the step size underflows.
IntegrateResult integrate(const HamiltonianModel& model, DynamicalState& state,
                          double t_target, const IntegratorOptions& opts = {},
                          const StepCallback& callback = nullptr);

}  // namespace gaussdrift
