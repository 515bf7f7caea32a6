#include "gaussdrift/propagator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace gaussdrift {

namespace {

// Coefficient of Tr(Sigma H_minus) in the phase equation, with the
// half-Hessian convention used throughout. Pinned by the wavefunction
// oracle in the propagator tests.
constexpr double kPhaseTraceCoeff = 1.0;

struct RhsWorkspace {
    Eigen::MatrixXd ha, hb, hplus, hminus;
    Eigen::MatrixXd sre, sim;          // Sigma parts
    Eigen::MatrixXd bre, bim;          // hplus * Sigma
    Eigen::MatrixXd ere, eim;          // hminus * Sigma
    Eigen::MatrixXd qre, qim;          // Sigma * (hminus * Sigma)
    Eigen::MatrixXd dre, dim_;         // Sigma derivative parts
    Eigen::MatrixXd c;                 // S hminus S

    void resize(int d) {
        if (ha.rows() == d) return;
        ha.resize(d, d); hb.resize(d, d); hplus.resize(d, d); hminus.resize(d, d);
        sre.resize(d, d); sim.resize(d, d);
        bre.resize(d, d); bim.resize(d, d);
        ere.resize(d, d); eim.resize(d, d);
        qre.resize(d, d); qim.resize(d, d);
        dre.resize(d, d); dim_.resize(d, d);
        c.resize(d, d);
    }
};

void eval_rhs(const HamiltonianModel& model, const Eigen::VectorXd& y, int d,
              bool has_offset, Eigen::VectorXd& dy, RhsWorkspace& ws) {
    ws.resize(d);
    dy.resize(flat_total_length(d, has_offset));

    const Eigen::VectorXd xa = y.segment(0, d);
    const Eigen::VectorXd xb = y.segment(d, d);
    const bool equal = xa == xb;

    const Eigen::VectorXd ga = model.gradient(xa);
    const double va = model.value(xa);
    dy.segment(0, d) = apply_symplectic(ga);
    Eigen::VectorXd gb;
    double lag_diff = 0.0;
    if (equal) {
        dy.segment(d, d) = dy.segment(0, d);
        ws.hplus = model.hessian(xa);
    } else {
        gb = model.gradient(xb);
        const double vb = model.value(xb);
        dy.segment(d, d) = apply_symplectic(gb);
        ws.ha = model.hessian(xa);
        ws.hb = model.hessian(xb);
        ws.hplus = 0.5 * (ws.ha + ws.hb);
        ws.hminus = ws.ha - ws.hb;
        lag_diff = lagrangian_from(ga, va, xa) - lagrangian_from(gb, vb, xb);
    }

    unpack_sigma(y, d, ws.sre, ws.sim);

    // d(Sigma)/dt = 2 (S H+ Sigma - Sigma H+ S)
    //               - i/2 S H- S - 2 i Sigma H- Sigma.
    ws.bre.noalias() = ws.hplus * ws.sre;
    ws.bim.noalias() = ws.hplus * ws.sim;
    ws.dre = 2.0 * (symplectic_left(ws.bre) - symplectic_right(ws.bre.transpose().eval()));
    ws.dim_ = 2.0 * (symplectic_left(ws.bim) - symplectic_right(ws.bim.transpose().eval()));

    double phase_dot = 0.0;
    double scale_dot = 0.0;
    if (!equal) {
        ws.c = symplectic_right(symplectic_left(ws.hminus));
        ws.ere.noalias() = ws.hminus * ws.sre;
        ws.eim.noalias() = ws.hminus * ws.sim;
        ws.qre.noalias() = ws.sre * ws.ere;
        ws.qre.noalias() -= ws.sim * ws.eim;
        ws.qim.noalias() = ws.sre * ws.eim;
        ws.qim.noalias() += ws.sim * ws.ere;

        ws.dim_ -= 0.5 * ws.c;
        ws.dre += 2.0 * ws.qim;
        ws.dim_ -= 2.0 * ws.qre;

        const double tr_re = ws.ere.trace();
        const double tr_im = ws.eim.trace();
        phase_dot = lag_diff - kPhaseTraceCoeff * tr_re;
        scale_dot = kPhaseTraceCoeff * tr_im;
    }

    if (has_offset) {
        // Post-trace centroid correction c: dc/dt = 2 (S H+ - i Sigma H-) c,
        // the linearized flow a constant displacement of the complex centroid
        // obeys. The prefactor picks up -i (g_-(z)^T c + c^T H- c), with
        // g_-(z) the gradient difference of the two local expansions at the
        // formula centroid z.
        const int o = flat_offset_start(d);
        Eigen::VectorXd cre(d), cim(d);
        for (int i = 0; i < d; ++i) {
            cre[i] = y[o + 2 * i];
            cim[i] = y[o + 2 * i + 1];
        }

        Eigen::VectorXd dcre = 2.0 * apply_symplectic(Eigen::VectorXd(ws.hplus * cre));
        Eigen::VectorXd dcim = 2.0 * apply_symplectic(Eigen::VectorXd(ws.hplus * cim));
        if (!equal) {
            const Eigen::VectorXd ecre = ws.hminus * cre;
            const Eigen::VectorXd ecim = ws.hminus * cim;
            const Eigen::VectorXd sig_ec_re = ws.sre * ecre - ws.sim * ecim;
            const Eigen::VectorXd sig_ec_im = ws.sre * ecim + ws.sim * ecre;
            // -2 i (a + i b) = 2 b - 2 i a
            dcre += 2.0 * sig_ec_im;
            dcim -= 2.0 * sig_ec_re;

            // Formula centroid z = mid + i Sigma S (xa - xb).
            const Eigen::VectorXd u = apply_symplectic(Eigen::VectorXd(xa - xb));
            const Eigen::VectorXd zre = 0.5 * (xa + xb) - ws.sim * u;
            const Eigen::VectorXd zim = ws.sre * u;

            const Eigen::VectorXd gmr =
                (ga - gb) + 2.0 * (ws.ha * (zre - xa) - ws.hb * (zre - xb));
            const Eigen::VectorXd gmi = 2.0 * (ws.hminus * zim);

            const double q_re = gmr.dot(cre) - gmi.dot(cim) +
                                cre.dot(ecre) - cim.dot(ecim);
            const double q_im = gmr.dot(cim) + gmi.dot(cre) +
                                cre.dot(ecim) + cim.dot(ecre);
            phase_dot -= q_re;
            scale_dot += q_im;
        }
        for (int i = 0; i < d; ++i) {
            dy[o + 2 * i] = dcre[i];
            dy[o + 2 * i + 1] = dcim[i];
        }
    }

    int idx = flat_sigma_offset(d);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            dy[idx++] = ws.dre(i, j);
            dy[idx++] = ws.dim_(i, j);
        }
    }
    dy[flat_phase_index(d)] = phase_dot;
    dy[flat_scale_index(d)] = scale_dot;
}

// Dormand-Prince 5(4) tableau (autonomous right-hand side; no stage times).
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,      0.0,       500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784., 11.0 / 84, 0.0};
constexpr double kErr[7] = {71.0 / 57600,       0.0,         -71.0 / 16695,
                            71.0 / 1920,        -17253.0 / 339200,
                            22.0 / 525,         -1.0 / 40};

double update_det_arg(const Eigen::VectorXd& y, int d, double previous) {
    Eigen::MatrixXd re(d, d), im(d, d);
    unpack_sigma(y, d, re, im);
    Eigen::MatrixXcd sigma =
        re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
    const Complex det = Eigen::PartialPivLU<Eigen::MatrixXcd>(sigma).determinant();
    const double principal = std::arg(det);
    const double two_pi = 2.0 * std::numbers::pi;
    return principal + two_pi * std::round((previous - principal) / two_pi);
}

}  // namespace

DynamicalState pack_state(const GaussianOperator& g, double time) {
    const int d = g.dim();
    DynamicalState st;
    st.dim = d;
    st.time = time;
    st.det_arg = g.det_arg;
    st.has_offset = g.ledger.centroid_offset.size() != 0;
    st.y.resize(flat_total_length(d, st.has_offset));
    st.y.segment(0, d) = g.x_alpha;
    st.y.segment(d, d) = g.x_beta;
    int idx = flat_sigma_offset(d);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            st.y[idx++] = g.sigma(i, j).real();
            st.y[idx++] = g.sigma(i, j).imag();
        }
    }
    st.y[flat_phase_index(d)] = g.phase;
    st.y[flat_scale_index(d)] = g.log_scale;
    if (st.has_offset) {
        if (g.ledger.centroid_offset.size() != d)
            throw data_error("pack_state: ledger offset dimension mismatch");
        const int o = flat_offset_start(d);
        for (int i = 0; i < d; ++i) {
            st.y[o + 2 * i] = g.ledger.centroid_offset[i].real();
            st.y[o + 2 * i + 1] = g.ledger.centroid_offset[i].imag();
        }
    }
    return st;
}

void unpack_state(const DynamicalState& state, GaussianOperator& g) {
    const int d = state.dim;
    if (phase_dim(g.registry) != d)
        throw data_error("unpack_state: registry does not match state dimension");
    g.x_alpha = state.y.segment(0, d);
    g.x_beta = state.y.segment(d, d);
    g.sigma.resize(d, d);
    int idx = flat_sigma_offset(d);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            const Complex v(state.y[idx], state.y[idx + 1]);
            idx += 2;
            g.sigma(i, j) = v;
            g.sigma(j, i) = v;
        }
    }
    g.phase = state.y[flat_phase_index(d)];
    g.log_scale = state.y[flat_scale_index(d)];
    if (state.has_offset) {
        const int o = flat_offset_start(d);
        g.ledger.centroid_offset.resize(d);
        for (int i = 0; i < d; ++i)
            g.ledger.centroid_offset[i] =
                Complex(state.y[o + 2 * i], state.y[o + 2 * i + 1]);
    } else {
        g.ledger.centroid_offset.resize(0);
    }
    g.det_arg = state.det_arg;
}

void unpack_sigma(const Eigen::VectorXd& y, int d, Eigen::MatrixXd& re,
                  Eigen::MatrixXd& im) {
    re.resize(d, d);
    im.resize(d, d);
    int idx = flat_sigma_offset(d);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            re(i, j) = y[idx];
            re(j, i) = y[idx];
            im(i, j) = y[idx + 1];
            im(j, i) = y[idx + 1];
            idx += 2;
        }
    }
}

Eigen::VectorXd rhs_offdiagonal(const HamiltonianModel& model,
                                const Eigen::VectorXd& y, int d) {
    bool has_offset;
    if (y.size() == flat_total_length(d, false)) has_offset = false;
    else if (y.size() == flat_total_length(d, true)) has_offset = true;
    else throw data_error("rhs: flattened state has wrong length");
    RhsWorkspace ws;
    Eigen::VectorXd dy;
    eval_rhs(model, y, d, has_offset, dy, ws);
    return dy;
}

Eigen::VectorXd rhs_diagonal(const HamiltonianModel& model,
                             const Eigen::VectorXd& y, int d) {
    if (y.size() != flat_total_length(d, false) &&
        y.size() != flat_total_length(d, true))
        throw data_error("rhs: flattened state has wrong length");
    if (y.segment(0, d) != y.segment(d, d))
        throw data_error("rhs_diagonal requires x_alpha == x_beta");
    return rhs_offdiagonal(model, y, d);
}

IntegrateResult integrate(const HamiltonianModel& model, DynamicalState& state,
                          double t_target, const IntegratorOptions& opts,
                          const StepCallback& callback) {
    if (t_target < state.time)
        throw data_error("integrate: t_target precedes current time");
    IntegrateResult result;
    if (t_target == state.time) {
        result.reached_target = true;
        return result;
    }

    const int d = state.dim;
    const int n = flat_total_length(d, state.has_offset);
    if (state.y.size() != n)
        throw data_error("integrate: flattened state has wrong length");

    RhsWorkspace ws;
    std::array<Eigen::VectorXd, 7> k;
    Eigen::VectorXd ytmp(n), ynew(n);

    double dt = std::min({opts.initial_step, opts.max_step, t_target - state.time});
    bool fsal_valid = false;

    while (state.time < t_target) {
        dt = std::min(dt, t_target - state.time);
        if (dt < opts.min_step) {
            std::ostringstream msg;
            msg << "integrator step underflow (stiffness) at t = " << state.time
                << ", dt = " << dt << ", dim = " << d;
            throw numerics_error(msg.str());
        }

        if (!fsal_valid) eval_rhs(model, state.y, d, state.has_offset, k[0], ws);
        for (int s = 1; s < 7; ++s) {
            ytmp = state.y;
            for (int j = 0; j < s; ++j)
                if (kA[s][j] != 0.0) ytmp += (dt * kA[s][j]) * k[j];
            eval_rhs(model, ytmp, d, state.has_offset, k[s], ws);
        }

        ynew = state.y;
        for (int j = 0; j < 7; ++j)
            if (kB5[j] != 0.0) ynew += (dt * kB5[j]) * k[j];

        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            double e = 0.0;
            for (int j = 0; j < 7; ++j) e += kErr[j] * k[j][i];
            e *= dt;
            const double tol =
                opts.abs_tol +
                opts.rel_tol * std::max(std::abs(state.y[i]), std::abs(ynew[i]));
            const double ratio = std::abs(e) / tol;
            if (!std::isfinite(ratio)) {  // NaN must force a rejection
                err = std::numeric_limits<double>::infinity();
                break;
            }
            err = std::max(err, ratio);
        }

        if (!std::isfinite(err)) {
            dt *= 0.2;
            fsal_valid = false;
            ++result.n_rejected;
            continue;
        }

        if (err <= 1.0) {
            const bool final_step = (state.time + dt >= t_target);
            state.time = final_step ? t_target : state.time + dt;
            state.y.swap(ynew);
            state.det_arg = update_det_arg(state.y, d, state.det_arg);
            k[0] = k[6];  // first-same-as-last
            fsal_valid = true;
            ++result.n_accepted;

            const double factor =
                err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            dt *= std::clamp(factor, 0.2, 5.0);
            dt = std::min(dt, opts.max_step);

            if (callback && callback(state) == StepAction::kStop) return result;
        } else {
            dt *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            ++result.n_rejected;
        }
    }

    result.reached_target = true;
    return result;
}

}  // namespace gaussdrift
