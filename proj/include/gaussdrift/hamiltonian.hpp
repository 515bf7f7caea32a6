#pragma once

#include <Eigen/Dense>
#include <memory>

#include "gaussdrift/phase_space.hpp"

namespace gaussdrift {

/// Evaluation contract for a Hamiltonian over full phase-space vectors.
///
/// hessian() returns HALF the matrix of second derivatives,
/// H_ij = 1/2 d^2H / dx_i dx_j, which is the factor convention the covariance
/// equations of motion are written in. Implementations must keep it symmetric.
class HamiltonianModel {
public:
    virtual ~HamiltonianModel() = default;

    virtual int dim() const = 0;
    virtual double value(const PhaseVector& x) const = 0;
    virtual Eigen::VectorXd gradient(const PhaseVector& x) const = 0;
    virtual Eigen::MatrixXd hessian(const PhaseVector& x) const = 0;

    /// Phase-space Lagrangian p . dH/dp - H.
    virtual double lagrangian(const PhaseVector& x) const;
};

double lagrangian_from(const Eigen::VectorXd& gradient, double value,
                       const PhaseVector& x);

/// 3D harmonic system particle (mass 1, frequency 1) plus k free bath
/// particles of mass m_env, each coupled to the system by a short-range
/// Gaussian pair potential
///     V(r_sys, r_i) = epsilon * exp(-|r_sys - r_i|^2 / (2 w^2)).
/// Bath particles feel no trap and do not interact with each other; the
/// bath-bath Hessian blocks are exactly zero by construction.
class ExperimentHamiltonian : public HamiltonianModel {
public:
    struct Params {
        double epsilon = 0.0;  // interaction strength
        double width = 25.0;   // interaction range w, oscillator lengths
        double m_env = 1.0;    // bath particle mass
    };

    ExperimentHamiltonian(Params params, int n_bath);

    int dim() const override { return 6 * (1 + n_bath_); }
    int n_bath() const { return n_bath_; }
    const Params& params() const { return params_; }

    double value(const PhaseVector& x) const override;
    Eigen::VectorXd gradient(const PhaseVector& x) const override;
    Eigen::MatrixXd hessian(const PhaseVector& x) const override;
    double lagrangian(const PhaseVector& x) const override;

private:
    Params params_;
    int n_bath_;
};

}  // namespace gaussdrift
