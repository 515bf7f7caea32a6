#include "gaussdrift/phase_space.hpp"

#include <cmath>
#include <numbers>

namespace gaussdrift {

namespace {

void check_even(const PhaseVector& v, const char* what) {
    if (v.size() % 2 != 0)
        throw data_error(std::string(what) + ": phase vector length must be even");
}

// Principal 1/sqrt(z) with an explicitly unwrapped argument for det Sigma.
Complex inv_sqrt_from(double abs_det, double arg_det) {
    if (!(abs_det > 0.0)) throw numerics_error("singular covariance (det = 0)");
    return std::exp(Complex(-0.5 * std::log(abs_det), -0.5 * arg_det));
}

}  // namespace

int phase_dim(const Registry& registry) {
    int n = 0;
    for (const auto& p : registry) n += p.n_coords;
    return 2 * n;
}

Block particle_block(const Registry& registry, int particle_id) {
    int offset = 0;
    for (const auto& p : registry) {
        int len = 2 * p.n_coords;
        if (p.id == particle_id) return {offset, len};
        offset += len;
    }
    throw data_error("unknown particle id " + std::to_string(particle_id));
}

bool registry_contains(const Registry& registry, int particle_id) {
    for (const auto& p : registry)
        if (p.id == particle_id) return true;
    return false;
}

Eigen::MatrixXd symplectic_form(int n_dof) {
    if (n_dof < 1) throw data_error("symplectic_form: invalid dimension (n_dof = 0)");
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2 * n_dof, 2 * n_dof);
    for (int i = 0; i < n_dof; ++i) {
        s(2 * i, 2 * i + 1) = 1.0;
        s(2 * i + 1, 2 * i) = -1.0;
    }
    return s;
}

Complex eta_factor(const PhaseVector& x_alpha, const PhaseVector& x_beta,
                   const Covariance& sigma) {
    if (x_alpha.size() != x_beta.size() || sigma.rows() != x_alpha.size() ||
        sigma.cols() != x_alpha.size())
        throw data_error("eta_factor: dimension mismatch");
    check_even(x_alpha, "eta_factor");

    const Eigen::VectorXd delta = x_alpha - x_beta;
    // dx^T S Sigma S dx = -u^T Sigma u with u = S dx (S^T = -S).
    const Eigen::VectorXd u = apply_symplectic(delta);
    Complex quad = -(u.cast<Complex>().transpose() * sigma * u.cast<Complex>())(0);

    double cross = 0.0;  // (p_a + p_b) . (r_a - r_b)
    for (Eigen::Index k = 0; k + 1 < x_alpha.size(); k += 2)
        cross += (x_alpha[k + 1] + x_beta[k + 1]) * (x_alpha[k] - x_beta[k]);

    return 0.5 * quad - Complex(0.0, 0.5) * cross;
}

Complex eta_total(const GaussianOperator& g) {
    return eta_factor(g.x_alpha, g.x_beta, g.sigma) + g.ledger.eta_offset;
}

Complex log_prefactor(const GaussianOperator& g) {
    return eta_total(g) + Complex(g.log_scale, g.phase);
}

Eigen::VectorXcd centroid(const GaussianOperator& g) {
    const Eigen::VectorXd delta = g.x_alpha - g.x_beta;
    const Eigen::VectorXd u = apply_symplectic(delta);
    Eigen::VectorXcd z = (0.5 * (g.x_alpha + g.x_beta)).cast<Complex>() +
                         Complex(0.0, 1.0) * (g.sigma * u.cast<Complex>());
    if (g.ledger.centroid_offset.size() != 0) {
        if (g.ledger.centroid_offset.size() != z.size())
            throw data_error("centroid: ledger offset dimension mismatch");
        z += g.ledger.centroid_offset;
    }
    return z;
}

Complex wigner_eval(const GaussianOperator& g, const PhaseVector& point) {
    if (point.size() != g.dim()) throw data_error("wigner_eval: dimension mismatch");
    const int d = g.n_dof();

    Eigen::FullPivLU<Covariance> lu(g.sigma);
    if (!lu.isInvertible()) throw numerics_error("singular covariance in wigner_eval");

    const Eigen::VectorXcd v = point.cast<Complex>() - centroid(g);
    const Eigen::VectorXcd y = lu.solve(v);
    const Complex quad = (v.transpose() * y)(0);  // bilinear, not Hermitian

    const Complex det = lu.determinant();
    // Use the trajectory-tracked branch of arg(det Sigma) when available;
    // det_arg is kept within pi of the principal value by the propagator.
    double arg = g.det_arg;
    double principal = std::arg(det);
    double two_pi = 2.0 * std::numbers::pi;
    arg = principal + two_pi * std::round((arg - principal) / two_pi);

    const double norm_log = -static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
    const Complex inv_sqrt_det = inv_sqrt_from(std::abs(det), arg);

    return std::exp(Complex(norm_log, 0.0) - 0.5 * quad + log_prefactor(g)) *
           inv_sqrt_det;
}

Complex hs_inner(const GaussianOperator& g1, const GaussianOperator& g2) {
    if (g1.dim() != g2.dim()) throw data_error("hs_inner: dimension mismatch");

    const Covariance m = g1.sigma + g2.sigma.conjugate();
    Eigen::FullPivLU<Covariance> lu(m);
    if (!lu.isInvertible())
        throw numerics_error("singular combined covariance in hs_inner");

    const Eigen::VectorXcd dz = centroid(g1) - centroid(g2).conjugate();
    const Complex quad = (dz.transpose() * lu.solve(dz))(0);

    const Complex det = lu.determinant();
    const Complex inv_sqrt_det = inv_sqrt_from(std::abs(det), std::arg(det));

    const Complex exponent =
        log_prefactor(g1) + std::conj(log_prefactor(g2)) - 0.5 * quad;
    return std::exp(exponent) * inv_sqrt_det;
}

Covariance min_uncertainty_block(int n_coords, double position_spread) {
    if (!(position_spread > 0.0))
        throw config_error("position spread must be positive");
    Covariance block = Covariance::Zero(2 * n_coords, 2 * n_coords);
    const double srr = position_spread * position_spread;
    const double spp = 1.0 / (4.0 * srr);
    for (int a = 0; a < n_coords; ++a) {
        block(2 * a, 2 * a) = srr;
        block(2 * a + 1, 2 * a + 1) = spp;
    }
    return block;
}

GaussianOperator make_coherent_pair(const PhaseVector& x_alpha,
                                    const PhaseVector& x_beta,
                                    const Registry& registry) {
    const int dim = phase_dim(registry);
    if (x_alpha.size() != dim || x_beta.size() != dim)
        throw data_error("make_coherent_pair: dimension mismatch with registry");

    GaussianOperator g;
    g.x_alpha = x_alpha;
    g.x_beta = x_beta;
    g.sigma = 0.5 * Covariance::Identity(dim, dim);
    g.registry = registry;

    double phi0 = 0.0;  // (p_a . r_a - p_b . r_b) / 2
    for (int k = 0; k + 1 < dim; k += 2)
        phi0 += 0.5 * (x_alpha[k + 1] * x_alpha[k] - x_beta[k + 1] * x_beta[k]);
    g.phase = phi0;
    g.det_arg = 0.0;  // det of a real SPD matrix
    return g;
}

GaussianOperator make_coherent(const PhaseVector& x, const Registry& registry) {
    return make_coherent_pair(x, x, registry);
}

}  // namespace gaussdrift
