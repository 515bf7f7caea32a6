#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "gaussdrift/errors.hpp"

namespace gaussdrift {

// Natural units throughout: hbar = 1, system mass = 1, trap frequency = 1.
// Lengths in oscillator lengths, momenta in hbar per oscillator length.
//
// Phase-space vectors are interleaved [r1, p1, r2, p2, ...]; each spatial
// coordinate contributes one (r, p) pair, so a 3D particle occupies a
// contiguous block of six entries.

using PhaseVector = Eigen::VectorXd;
using Covariance = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// One physical particle inside an operator's phase-space layout.
/// n_coords is the number of spatial coordinates (3 for a 3D particle).
struct Particle {
    int id = 0;
    int n_coords = 3;
};

/// Registry of particles; order defines the phase-space block layout.
using Registry = std::vector<Particle>;

/// Contiguous phase-space index range [offset, offset + len) of a particle.
struct Block {
    int offset = 0;
    int len = 0;
};

int phase_dim(const Registry& registry);
Block particle_block(const Registry& registry, int particle_id);
bool registry_contains(const Registry& registry, int particle_id);

/// Frozen record of the partial-trace correction terms accumulated as
/// particles are removed. Offsets are constants between drops; they are
/// evaluated with the pre-drop covariance at drop time.
struct TraceLedger {
    Eigen::VectorXcd centroid_offset;  // over currently retained coordinates
    Complex eta_offset{0.0, 0.0};
    double norm_log = 0.0;

    bool empty() const {
        return centroid_offset.size() == 0 && eta_offset == Complex(0.0, 0.0) &&
               norm_log == 0.0;
    }
};

/// Full dynamical state of one |alpha><beta| component: the two branch
/// trajectories, the complex symmetric covariance, the integrated phase and
/// log-magnitude accumulator, the trace ledger and the particle registry.
struct GaussianOperator {
    PhaseVector x_alpha;
    PhaseVector x_beta;
    Covariance sigma;
    double phase = 0.0;      // integrated phase (never wrapped)
    double log_scale = 0.0;  // integrated log-magnitude accumulator
    Complex weight{1.0, 0.0};
    TraceLedger ledger;
    Registry registry;
    double det_arg = 0.0;  // continuously unwrapped arg(det sigma)

    int dim() const { return static_cast<int>(x_alpha.size()); }
    int n_dof() const { return dim() / 2; }
    bool diagonal() const { return x_alpha == x_beta; }
};

/// Symplectic structure matrix: block diagonal [[0,1],[-1,0]] per coordinate.
Eigen::MatrixXd symplectic_form(int n_dof);

/// y = S x without materializing S.
template <typename Vec>
Vec apply_symplectic(const Vec& v) {
    Vec out(v.size());
    for (Eigen::Index i = 0; i + 1 < v.size(); i += 2) {
        out[i] = v[i + 1];
        out[i + 1] = -v[i];
    }
    return out;
}

/// S * M (row mixing).
template <typename Mat>
Mat symplectic_left(const Mat& m) {
    Mat out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i + 1 < m.rows(); i += 2) {
        out.row(i) = m.row(i + 1);
        out.row(i + 1) = -m.row(i);
    }
    return out;
}

/// M * S (column mixing).
template <typename Mat>
Mat symplectic_right(const Mat& m) {
    Mat out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j + 1 < m.cols(); j += 2) {
        out.col(j) = -m.col(j + 1);
        out.col(j + 1) = m.col(j);
    }
    return out;
}

/// Complex log-magnitude correction of the off-diagonal Weyl symbol:
///   eta = 1/2 dx^T S Sigma S dx - i/2 (p_a + p_b) . (r_a - r_b)
/// with dx = x_alpha - x_beta. Zero on diagonal components.
Complex eta_factor(const PhaseVector& x_alpha, const PhaseVector& x_beta,
                   const Covariance& sigma);

/// eta_factor plus the ledger's accumulated contribution.
Complex eta_total(const GaussianOperator& g);

/// Complex exponent multiplying the Gaussian envelope of the Weyl symbol:
/// eta_total + log_scale + i phase.
Complex log_prefactor(const GaussianOperator& g);

/// Complex phase-space centroid of the component:
///   x = 1/2 (x_alpha + x_beta) + i Sigma S (x_alpha - x_beta) + ledger offset.
Eigen::VectorXcd centroid(const GaussianOperator& g);

/// Weyl symbol of the operator at a real phase-space point. Normalized so the
/// diagonal case integrates to one over phase space.
Complex wigner_eval(const GaussianOperator& g, const PhaseVector& point);

/// Hilbert-Schmidt inner product Tr(A B^dagger), closed form for Gaussian
/// symbols. Equals 1 for a normalized pure coherent state paired with itself.
Complex hs_inner(const GaussianOperator& g1, const GaussianOperator& g2);

/// Minimum-uncertainty covariance block for one particle: per axis
/// sigma_rr = spread^2, sigma_pp = 1/(4 spread^2), sigma_rp = 0.
Covariance min_uncertainty_block(int n_coords, double position_spread);

/// Coherent-state pair |alpha><beta| with Sigma = 1/2 Identity. The initial
/// phase follows the symmetric coherent-state convention,
/// phi0 = (p_a.r_a - p_b.r_b)/2, so the symbol matches the Weyl transform.
GaussianOperator make_coherent_pair(const PhaseVector& x_alpha,
                                    const PhaseVector& x_beta,
                                    const Registry& registry);

/// Diagonal coherent state (x_alpha == x_beta).
GaussianOperator make_coherent(const PhaseVector& x, const Registry& registry);

}  // namespace gaussdrift
