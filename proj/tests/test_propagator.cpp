#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gaussdrift/propagator.hpp"
#include "oracle_utils.hpp"

using namespace gaussdrift;

namespace {

const Registry kOneCoord = {{0, 1}};

PhaseVector vec2(double r, double p) {
    PhaseVector v(2);
    v << r, p;
    return v;
}

GaussianOperator random_offdiag_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto g = make_coherent_pair(vec2(u(rng), u(rng)), vec2(u(rng), u(rng)),
                                kOneCoord);
    g.sigma = oracle::random_complex_symmetric(2, rng, 0.05);
    g.phase = u(rng);
    g.log_scale = 0.1 * u(rng);
    return g;
}

oracle::Model1D quartic_model(double lambda, double mass = 1.0) {
    return oracle::Model1D(
        [lambda](double r) { return 0.5 * r * r + lambda * r * r * r * r; },
        [lambda](double r) { return r + 4.0 * lambda * r * r * r; },
        [lambda](double r) { return 1.0 + 12.0 * lambda * r * r; }, mass);
}

// Flattened-state covariance as a complex matrix.
Eigen::MatrixXcd sigma_of(const Eigen::VectorXd& y, int d) {
    Eigen::MatrixXd re(d, d), im(d, d);
    unpack_sigma(y, d, re, im);
    return re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
}

}  // namespace

TEST_CASE("free-particle covariance flow against the direct matrix product") {
    const double mass = 1.7;
    auto model = oracle::QuadraticModel::free_particle(1, mass);

    auto g = make_coherent(vec2(0.4, 0.9), kOneCoord);
    const double srr = 0.8, srp = 0.31, spp = 0.5;
    g.sigma << Complex(srr, 0), Complex(srp, 0), Complex(srp, 0), Complex(spp, 0);

    const DynamicalState st = pack_state(g, 0.0);
    const Eigen::VectorXd dy = rhs_diagonal(model, st.y, 2);

    // Oracle: classical flow S Hf Sigma + Sigma Hf S^T with the full Hessian.
    const Eigen::MatrixXd s = symplectic_form(1);
    Eigen::MatrixXd hf = Eigen::MatrixXd::Zero(2, 2);
    hf(1, 1) = 1.0 / mass;
    const Eigen::MatrixXd sigma_re = g.sigma.real();
    const Eigen::MatrixXd expected =
        s * hf * sigma_re + sigma_re * hf * s.transpose();

    CHECK(dy[sigma_entry_index(2, 0, 0)] ==
          doctest::Approx(expected(0, 0)).epsilon(1e-14));
    CHECK(dy[sigma_entry_index(2, 0, 1)] ==
          doctest::Approx(expected(0, 1)).epsilon(1e-14));
    CHECK(dy[sigma_entry_index(2, 1, 1)] ==
          doctest::Approx(expected(1, 1)).epsilon(1e-14));

    // Spot values: d(s_rr)/dt = 2 s_rp / m, d(s_rp)/dt = s_pp / m, d(s_pp)/dt = 0.
    CHECK(dy[sigma_entry_index(2, 0, 0)] == doctest::Approx(2.0 * srp / mass));
    CHECK(dy[sigma_entry_index(2, 0, 1)] == doctest::Approx(spp / mass));
    CHECK(dy[sigma_entry_index(2, 1, 1)] == 0.0);
}

TEST_CASE("coherent state is stationary under the harmonic flow") {
    auto model = oracle::QuadraticModel::harmonic(1);
    const auto g = make_coherent(vec2(0.7, -0.2), kOneCoord);
    const DynamicalState st = pack_state(g, 0.0);
    const Eigen::VectorXd dy = rhs_diagonal(model, st.y, 2);

    for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j) {
            CHECK(dy[sigma_entry_index(2, i, j)] == 0.0);
            CHECK(dy[sigma_entry_index(2, i, j) + 1] == 0.0);
        }
    CHECK(dy[flat_phase_index(2)] == 0.0);
    CHECK(dy[flat_scale_index(2)] == 0.0);
}

TEST_CASE("stationary point has zero trajectory velocity") {
    auto model = oracle::QuadraticModel::harmonic(1);
    const auto g = make_coherent(vec2(0.0, 0.0), kOneCoord);
    const Eigen::VectorXd dy = rhs_diagonal(model, pack_state(g, 0.0).y, 2);
    CHECK(dy.segment(0, 4).norm() == 0.0);
}

TEST_CASE("equal branches reduce bitwise to the diagonal flow") {
    std::mt19937_64 rng(31);
    auto g = random_offdiag_state(rng);
    g.x_beta = g.x_alpha;
    auto model = quartic_model(0.08);

    const DynamicalState st = pack_state(g, 0.0);
    const Eigen::VectorXd lhs = rhs_offdiagonal(model, st.y, 2);
    const Eigen::VectorXd rhs = rhs_diagonal(model, st.y, 2);
    CHECK(lhs == rhs);  // exact bitwise equality

    // The imaginary covariance velocity vanishes identically when Sigma is
    // real and the branches coincide.
    auto gr = make_coherent(vec2(0.5, 0.5), kOneCoord);
    const Eigen::VectorXd dyr = rhs_diagonal(model, pack_state(gr, 0.0).y, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j)
            CHECK(dyr[sigma_entry_index(2, i, j) + 1] == 0.0);
}

TEST_CASE("constant curvature keeps the diagonal covariance form") {
    // Position-independent Hessian: H_minus = 0 for any separation, the phase
    // velocity is the Lagrangian difference, and the scale stays put.
    auto model = oracle::QuadraticModel::harmonic(1);
    const auto g = make_coherent_pair(vec2(1.5, 0.0), vec2(-1.5, 0.4), kOneCoord);
    const DynamicalState st = pack_state(g, 0.0);
    const Eigen::VectorXd dy = rhs_offdiagonal(model, st.y, 2);

    const double lag_a = model.lagrangian(g.x_alpha);
    const double lag_b = model.lagrangian(g.x_beta);
    CHECK(dy[flat_phase_index(2)] == doctest::Approx(lag_a - lag_b).epsilon(1e-14));
    CHECK(dy[flat_scale_index(2)] == 0.0);

    // Sigma = 1/2 Identity is stationary for the harmonic pair as well.
    for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j) {
            CHECK(dy[sigma_entry_index(2, i, j)] == 0.0);
            CHECK(dy[sigma_entry_index(2, i, j) + 1] == 0.0);
        }
}

TEST_CASE("swapping the branches conjugates the flow") {
    std::mt19937_64 rng(47);
    auto model = quartic_model(0.06);
    const auto g = random_offdiag_state(rng);

    GaussianOperator swapped = g;
    std::swap(swapped.x_alpha, swapped.x_beta);
    swapped.sigma = g.sigma.conjugate();

    const Eigen::VectorXd dy = rhs_offdiagonal(model, pack_state(g, 0.0).y, 2);
    const Eigen::VectorXd dy_swap =
        rhs_offdiagonal(model, pack_state(swapped, 0.0).y, 2);

    for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j) {
            const int k = sigma_entry_index(2, i, j);
            CHECK(dy_swap[k] == doctest::Approx(dy[k]).epsilon(1e-12));
            CHECK(dy_swap[k + 1] == doctest::Approx(-dy[k + 1]).epsilon(1e-12));
        }
    CHECK(dy_swap[flat_phase_index(2)] ==
          doctest::Approx(-dy[flat_phase_index(2)]).epsilon(1e-12));
    CHECK(dy_swap[flat_scale_index(2)] ==
          doctest::Approx(dy[flat_scale_index(2)]).epsilon(1e-12));
}

TEST_CASE("integrate basics") {
    auto model = oracle::QuadraticModel::harmonic(1);
    auto g = make_coherent(vec2(1.0, 0.0), kOneCoord);
    DynamicalState st = pack_state(g, 0.0);

    SUBCASE("zero-length integration is the identity") {
        const Eigen::VectorXd before = st.y;
        const auto res = integrate(model, st, 0.0);
        CHECK(res.reached_target);
        CHECK(st.y == before);
    }

    SUBCASE("backwards integration is rejected") {
        st.time = 1.0;
        CHECK_THROWS_AS(integrate(model, st, 0.5), Error);
    }

    SUBCASE("step underflow raises a stiffness error") {
        oracle::Model1D bad(
            [](double r) { return r < 1.0 ? 0.0 : std::nan(""); },
            [](double r) { return r < 1.0 ? 0.0 : std::nan(""); },
            [](double) { return 0.0; });
        auto gb = make_coherent(vec2(0.9, 0.5), kOneCoord);  // moving past r = 1
        DynamicalState sb = pack_state(gb, 0.0);
        CHECK_THROWS_AS(integrate(bad, sb, 2.0), Error);
    }
}

TEST_CASE("squeezed harmonic state returns after one period") {
    auto model = oracle::QuadraticModel::harmonic(1);
    auto g = make_coherent(vec2(1.2, -0.3), kOneCoord);
    g.sigma << Complex(0.3, 0), Complex(0, 0), Complex(0, 0), Complex(1.0 / 1.2, 0);

    DynamicalState st = pack_state(g, 0.0);
    const Eigen::VectorXd y0 = st.y;
    IntegratorOptions opts;
    opts.rel_tol = 1e-11;
    opts.abs_tol = 1e-13;
    integrate(model, st, 2.0 * std::numbers::pi, opts);

    CHECK((st.y.segment(0, 4) - y0.segment(0, 4)).cwiseAbs().maxCoeff() < 1e-8);
    GaussianOperator gf = g;
    unpack_state(st, gf);
    CHECK((gf.sigma - g.sigma).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("determinant is conserved by quadratic flows") {
    std::mt19937_64 rng(17);
    // Random symmetric quadratic form on 2 coordinates, random SPD covariance.
    Eigen::MatrixXd k = oracle::random_spd(4, rng, 1.0);
    oracle::QuadraticModel model(k, Eigen::VectorXd::Zero(4));

    const Registry reg = {{0, 2}};
    PhaseVector x(4);
    x << 0.5, -0.2, 0.1, 0.7;
    auto g = make_coherent(x, reg);
    g.sigma = oracle::random_spd(4, rng, 0.4).cast<Complex>();

    const Complex det0 =
        Eigen::PartialPivLU<Eigen::MatrixXcd>(g.sigma).determinant();

    DynamicalState st = pack_state(g, 0.0);
    IntegratorOptions opts;
    opts.rel_tol = 1e-10;
    opts.abs_tol = 1e-12;
    integrate(model, st, 3.0, opts);

    const Complex det1 =
        Eigen::PartialPivLU<Eigen::MatrixXcd>(sigma_of(st.y, 4)).determinant();
    CHECK(std::abs(det1 - det0) < 1e-8 * std::abs(det0));
}

TEST_CASE("branch energy is conserved") {
    auto model = quartic_model(0.05);
    auto g = make_coherent(vec2(1.1, 0.4), kOneCoord);
    const double e0 = model.value(g.x_alpha);

    DynamicalState st = pack_state(g, 0.0);
    IntegratorOptions opts;
    opts.rel_tol = 1e-9;
    opts.abs_tol = 1e-11;
    integrate(model, st, 2.0 * std::numbers::pi, opts);

    const double e1 = model.value(st.y.segment(0, 2));
    CHECK(std::abs(e1 - e0) < 1e-6 * std::abs(e0));
}

TEST_CASE("halving the tolerance at least halves the error") {
    auto model = quartic_model(0.05);
    const auto g =
        make_coherent_pair(vec2(0.9, 0.2), vec2(-0.6, -0.1), kOneCoord);

    auto run = [&](double tol) {
        DynamicalState st = pack_state(g, 0.0);
        IntegratorOptions opts;
        opts.rel_tol = tol;
        opts.abs_tol = tol * 1e-2;
        integrate(model, st, 4.0, opts);
        return st.y;
    };

    const Eigen::VectorXd reference = run(1e-13);
    const double err1 = (run(1e-5) - reference).norm();
    const double err2 = (run(2.5e-6) - reference).norm();
    // Two halvings of the tolerance must reduce the error by at least x2 each.
    CHECK(err2 * 4.0 <= err1);
}

// ---------------------------------------------------------------------------
// Wavefunction oracle: propagate each branch as a 1D complex Gaussian under
// the locally quadratic expansion of the same potential and compare the
// operator trace Tr rho = exp(eta + scale + i phase) with the closed-form
// overlap <psi_beta | psi_alpha>. Exact for quadratic potentials; identical
// local approximation for anharmonic ones.

namespace {

Complex trace_from_state(const GaussianOperator& g) {
    return std::exp(log_prefactor(g));
}

void check_against_packets(const oracle::Model1D& model, double qa, double pa,
                           double qb, double pb, double t_end, double tol) {
    auto g = make_coherent_pair(vec2(qa, pa), vec2(qb, pb), kOneCoord);
    DynamicalState st = pack_state(g, 0.0);
    IntegratorOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 1e-14;

    auto ket = oracle::coherent_packet(qa, pa);
    auto bra = oracle::coherent_packet(qb, pb);

    // t = 0: the representations must agree exactly.
    CHECK(std::abs(trace_from_state(g) - oracle::packet_overlap(bra, ket)) <
          1e-13);

    for (double t : {0.3 * t_end, 0.7 * t_end, t_end}) {
        integrate(model, st, t, opts);
        GaussianOperator gt = g;
        unpack_state(st, gt);

        const auto ket_t = oracle::propagate_packet(model, ket, t);
        const auto bra_t = oracle::propagate_packet(model, bra, t);
        const Complex expected = oracle::packet_overlap(bra_t, ket_t);
        const Complex actual = trace_from_state(gt);

        CAPTURE(t);
        CHECK(std::abs(actual - expected) < tol);

        // A rank-one operator keeps unit Hilbert-Schmidt norm under the
        // per-branch unitary evolution.
        CHECK(std::abs(hs_inner(gt, gt) - Complex(1.0, 0.0)) < 1e-9);

        // The branch trajectories agree with the packet centers.
        CHECK(gt.x_alpha[0] == doctest::Approx(ket_t.q).epsilon(1e-9));
        CHECK(gt.x_beta[1] == doctest::Approx(bra_t.p).epsilon(1e-9));
    }
}

}  // namespace

TEST_CASE("wavefunction oracle, harmonic potential") {
    oracle::Model1D model([](double r) { return 0.5 * r * r; },
                          [](double r) { return r; }, [](double) { return 1.0; });
    check_against_packets(model, 0.7, 0.3, -0.5, 0.1, 3.7, 1e-9);
}

TEST_CASE("wavefunction oracle, anharmonic potential") {
    // Distinct local curvatures at the two branches exercise every term of
    // the complex covariance and phase equations.
    auto model = quartic_model(0.05);
    check_against_packets(model, 0.8, 0.0, -0.6, 0.25, 2.5, 5e-7);
}

TEST_CASE("wavefunction oracle, heavier mass and stronger anharmonicity") {
    auto model = quartic_model(0.12, 1.8);
    check_against_packets(model, 0.5, -0.3, -0.45, 0.2, 1.8, 5e-7);
}
