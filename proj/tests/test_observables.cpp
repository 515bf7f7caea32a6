#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gaussdrift/experiment.hpp"
#include "gaussdrift/observables.hpp"

using namespace gaussdrift;

namespace {

const Registry kOneCoord = {{0, 1}};

GaussianOperator coherent_at(double r, double p) {
    PhaseVector x(2);
    x << r, p;
    return make_coherent(x, kOneCoord);
}

CoherenceSeries synthetic_series(double gamma, int n, double t_max,
                                 double noise = 0.0, unsigned seed = 0) {
    CoherenceSeries s;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const double t = t_max * i / (n - 1);
        s.times.push_back(t);
        double v = std::exp(-gamma * t);
        if (noise > 0.0 && i > 0) v *= 1.0 + noise * g(rng);
        s.values.push_back(v);
        s.stderrs.push_back(noise * v);
    }
    s.n_realizations = 100;
    return s;
}

}  // namespace

TEST_CASE("coherence norm basics") {
    CHECK_THROWS_AS(coherence_norm({}, CoherenceMode::kAveragedOperator), Error);

    const auto g = coherent_at(0.4, -0.2);

    SUBCASE("single pure operator has unit norm") {
        for (auto mode :
             {CoherenceMode::kAveragedOperator, CoherenceMode::kMeanOfNorms}) {
            CHECK(coherence_norm({g}, mode) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    SUBCASE("identical copies average to the single value") {
        const std::vector<GaussianOperator> many(7, g);
        for (auto mode :
             {CoherenceMode::kAveragedOperator, CoherenceMode::kMeanOfNorms}) {
            CHECK(coherence_norm(many, mode) ==
                  doctest::Approx(coherence_norm({g}, mode)).epsilon(1e-12));
        }
        // Jackknife spread of identical members is zero.
        CHECK(ensemble_coherence(many, CoherenceMode::kAveragedOperator).stderr_ ==
              doctest::Approx(0.0));
    }

    SUBCASE("opposite phases interfere in the operator average only") {
        const double phi = 0.65;
        auto plus = g, minus = g;
        plus.phase += phi;
        minus.phase -= phi;
        const std::vector<GaussianOperator> pair = {plus, minus};

        const double avg = coherence_norm(pair, CoherenceMode::kAveragedOperator);
        CHECK(avg == doctest::Approx(std::abs(std::cos(phi))).epsilon(1e-12));

        const double mean = coherence_norm(pair, CoherenceMode::kMeanOfNorms);
        CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("dimension mismatch is rejected") {
        const Registry sys3 = {{0, 3}};
        const auto g6 = make_coherent(PhaseVector::Zero(6), sys3);
        CHECK_THROWS_AS(
            coherence_norm({g, g6}, CoherenceMode::kAveragedOperator), Error);
    }

    SUBCASE("weights scale the average") {
        auto damped = g;
        damped.weight = Complex(0.5, 0.0);
        CHECK(coherence_norm({damped}, CoherenceMode::kAveragedOperator) ==
              doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("initial cat component for each separation direction") {
    RunConfig config;
    const double dx = 6.0;

    config.separation = Separation::kPosition;
    auto g = initial_cat_operator(config, dx);
    CHECK(g.x_alpha[0] == 3.0);
    CHECK(g.x_beta[0] == -3.0);
    CHECK(g.x_alpha[1] == 0.0);
    CHECK((g.x_alpha - g.x_beta).norm() == doctest::Approx(dx));

    config.separation = Separation::kMomentum;
    g = initial_cat_operator(config, dx);
    CHECK(g.x_alpha[1] == 3.0);
    CHECK(g.x_alpha[0] == 0.0);
    CHECK((g.x_alpha - g.x_beta).norm() == doctest::Approx(dx));

    config.separation = Separation::kMixed;
    g = initial_cat_operator(config, dx);
    CHECK(g.x_alpha[0] == doctest::Approx(g.x_alpha[1]));
    CHECK((g.x_alpha - g.x_beta).norm() == doctest::Approx(dx));

    // All variants are normalized coherent pairs of the system particle.
    CHECK(g.registry.size() == 1);
    CHECK(std::abs(hs_inner(g, g) - Complex(1.0, 0.0)) < 1e-12);

    CHECK(resolve_threads(3) == 3);
    CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("decay fitting") {
    SUBCASE("noiseless exponential is recovered exactly") {
        const auto fit = fit_decay(synthetic_series(0.1, 50, 10.0));
        CHECK(fit.gamma == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(fit.gamma_stderr < 1e-12);
        CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(fit.n_points == 49);  // t = 0 anchors the normalization
    }

    SUBCASE("constant series has zero decay") {
        const auto fit = fit_decay(synthetic_series(0.0, 30, 10.0));
        CHECK(fit.gamma == 0.0);
    }

    SUBCASE("one percent noise leaves the rate within half a percent point") {
        // Monte Carlo check over independent noise draws.
        for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
            const auto fit =
                fit_decay(synthetic_series(0.05, 50, 10.0, 0.01, seed));
            CHECK(std::abs(fit.gamma - 0.05) < 0.005);
            CHECK(fit.gamma_stderr < 0.005);
            CHECK(fit.gamma_stderr > 0.0);
        }
    }

    SUBCASE("points below the noise floor are excluded") {
        auto s = synthetic_series(0.5, 40, 20.0);
        for (std::size_t i = 0; i < s.times.size(); ++i)
            s.stderrs[i] = 0.05;  // late points have stderr/value > 0.5
        const auto fit = fit_decay(s);
        CHECK(fit.n_points < 39);
        CHECK(fit.window_t1 < 20.0);
        CHECK(fit.gamma == doctest::Approx(0.5).epsilon(1e-6));
    }

    SUBCASE("insufficient data raises") {
        CHECK_THROWS_AS(fit_decay(synthetic_series(0.1, 4, 1.0)), Error);

        // All points below the noise floor count as unusable.
        auto s = synthetic_series(0.1, 20, 10.0);
        for (auto& e : s.stderrs) e = 10.0;
        CHECK_THROWS_AS(fit_decay(s), Error);
    }
}
