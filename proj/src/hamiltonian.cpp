#include "gaussdrift/hamiltonian.hpp"

#include <cmath>

namespace gaussdrift {

double lagrangian_from(const Eigen::VectorXd& gradient, double value,
                       const PhaseVector& x) {
    double pdotHp = 0.0;
    for (Eigen::Index k = 0; k + 1 < x.size(); k += 2)
        pdotHp += x[k + 1] * gradient[k + 1];
    return pdotHp - value;
}

double HamiltonianModel::lagrangian(const PhaseVector& x) const {
    return lagrangian_from(gradient(x), value(x), x);
}

namespace {

// Phase index of coordinate axis a of particle b (system is b = 0).
inline int ri(int b, int a) { return 6 * b + 2 * a; }
inline int pi_(int b, int a) { return 6 * b + 2 * a + 1; }

}  // namespace

ExperimentHamiltonian::ExperimentHamiltonian(Params params, int n_bath)
    : params_(params), n_bath_(n_bath) {
    if (!(params_.width > 0.0)) throw config_error("interaction width must be > 0");
    if (!(params_.m_env > 0.0)) throw config_error("bath mass must be > 0");
    if (n_bath_ < 0) throw config_error("negative bath particle count");
}

double ExperimentHamiltonian::value(const PhaseVector& x) const {
    if (x.size() != dim()) throw data_error("hamiltonian: dimension mismatch");
    const double w2 = params_.width * params_.width;

    double h = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double r = x[ri(0, a)], p = x[pi_(0, a)];
        h += 0.5 * (p * p + r * r);
    }
    for (int b = 1; b <= n_bath_; ++b) {
        double sep2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double p = x[pi_(b, a)];
            h += 0.5 * p * p / params_.m_env;
            const double d = x[ri(0, a)] - x[ri(b, a)];
            sep2 += d * d;
        }
        h += params_.epsilon * std::exp(-sep2 / (2.0 * w2));
    }
    return h;
}

Eigen::VectorXd ExperimentHamiltonian::gradient(const PhaseVector& x) const {
    if (x.size() != dim()) throw data_error("hamiltonian: dimension mismatch");
    const double w2 = params_.width * params_.width;

    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (int a = 0; a < 3; ++a) {
        g[ri(0, a)] = x[ri(0, a)];
        g[pi_(0, a)] = x[pi_(0, a)];
    }
    for (int b = 1; b <= n_bath_; ++b) {
        double sep2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            g[pi_(b, a)] = x[pi_(b, a)] / params_.m_env;
            const double d = x[ri(0, a)] - x[ri(b, a)];
            sep2 += d * d;
        }
        const double v = params_.epsilon * std::exp(-sep2 / (2.0 * w2));
        for (int a = 0; a < 3; ++a) {
            const double d = x[ri(0, a)] - x[ri(b, a)];
            const double f = -v * d / w2;  // dV/dr_sys component
            g[ri(0, a)] += f;
            g[ri(b, a)] -= f;
        }
    }
    return g;
}

Eigen::MatrixXd ExperimentHamiltonian::hessian(const PhaseVector& x) const {
    if (x.size() != dim()) throw data_error("hamiltonian: dimension mismatch");
    const double w2 = params_.width * params_.width;

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.size(), x.size());
    for (int a = 0; a < 3; ++a) {
        h(ri(0, a), ri(0, a)) = 1.0;
        h(pi_(0, a), pi_(0, a)) = 1.0;
    }
    for (int b = 1; b <= n_bath_; ++b) {
        Eigen::Vector3d d;
        for (int a = 0; a < 3; ++a) {
            h(pi_(b, a), pi_(b, a)) = 1.0 / params_.m_env;
            d[a] = x[ri(0, a)] - x[ri(b, a)];
        }
        const double v = params_.epsilon * std::exp(-d.squaredNorm() / (2.0 * w2));
        // d^2V/dr_s dr_s = v/w^2 (d d^T / w^2 - I); same for the bath block,
        // with the cross block negated.
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 3; ++c) {
                const double m =
                    v / w2 * (d[a] * d[c] / w2 - (a == c ? 1.0 : 0.0));
                h(ri(0, a), ri(0, c)) += m;
                h(ri(b, a), ri(b, c)) += m;
                h(ri(0, a), ri(b, c)) -= m;
                h(ri(b, a), ri(0, c)) -= m;
            }
        }
    }
    return 0.5 * h;
}

double ExperimentHamiltonian::lagrangian(const PhaseVector& x) const {
    if (x.size() != dim()) throw data_error("hamiltonian: dimension mismatch");
    const double w2 = params_.width * params_.width;

    // T - V for a kinetic-plus-potential Hamiltonian.
    double kinetic = 0.0, potential = 0.0;
    for (int a = 0; a < 3; ++a) {
        kinetic += 0.5 * x[pi_(0, a)] * x[pi_(0, a)];
        potential += 0.5 * x[ri(0, a)] * x[ri(0, a)];
    }
    for (int b = 1; b <= n_bath_; ++b) {
        double sep2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            kinetic += 0.5 * x[pi_(b, a)] * x[pi_(b, a)] / params_.m_env;
            const double d = x[ri(0, a)] - x[ri(b, a)];
            sep2 += d * d;
        }
        potential += params_.epsilon * std::exp(-sep2 / (2.0 * w2));
    }
    return kinetic - potential;
}

}  // namespace gaussdrift
