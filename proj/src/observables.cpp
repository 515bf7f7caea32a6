#include "gaussdrift/observables.hpp"

#include <algorithm>
#include <cmath>

namespace gaussdrift {

namespace {

// Weighted Gram matrix G(m, m') = w_m conj(w_m') Tr(rho_m rho_m'^dagger).
// Hermitian, so only the upper triangle is evaluated.
Eigen::MatrixXcd weighted_gram(const std::vector<GaussianOperator>& ops) {
    const int m = static_cast<int>(ops.size());
    Eigen::MatrixXcd gram(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            const Complex v =
                ops[i].weight * std::conj(ops[j].weight) * hs_inner(ops[i], ops[j]);
            gram(i, j) = v;
            gram(j, i) = std::conj(v);
        }
    }
    return gram;
}

double sqrt_clamped(double x) { return std::sqrt(std::max(0.0, x)); }

}  // namespace

double coherence_norm(const std::vector<GaussianOperator>& reduced_ops,
                      CoherenceMode mode) {
    return ensemble_coherence(reduced_ops, mode).value;
}

CoherencePoint ensemble_coherence(const std::vector<GaussianOperator>& reduced_ops,
                                  CoherenceMode mode) {
    if (reduced_ops.empty())
        throw data_error("coherence_norm: empty operator list");
    const int m = static_cast<int>(reduced_ops.size());
    for (const auto& op : reduced_ops)
        if (op.dim() != reduced_ops.front().dim())
            throw data_error("coherence_norm: dimension mismatch among members");

    CoherencePoint out;

    if (mode == CoherenceMode::kMeanOfNorms) {
        double sum = 0.0, sum2 = 0.0;
        for (const auto& op : reduced_ops) {
            const double v = std::abs(op.weight) * sqrt_clamped(hs_inner(op, op).real());
            sum += v;
            sum2 += v * v;
        }
        out.value = sum / m;
        if (m > 1) {
            const double var = std::max(0.0, (sum2 - sum * sum / m) / (m - 1));
            out.stderr_ = std::sqrt(var / m);
        }
        return out;
    }

    const Eigen::MatrixXcd gram = weighted_gram(reduced_ops);
    const double total = gram.sum().real();
    out.value = sqrt_clamped(total) / m;

    if (m > 1) {
        // Jackknife over realizations using the Gram row sums.
        std::vector<double> loo(m);
        double loo_mean = 0.0;
        for (int i = 0; i < m; ++i) {
            const Complex row = gram.row(i).sum();
            const double s = total - 2.0 * row.real() + gram(i, i).real();
            loo[i] = sqrt_clamped(s) / (m - 1);
            loo_mean += loo[i];
        }
        loo_mean /= m;
        double ss = 0.0;
        for (int i = 0; i < m; ++i) ss += (loo[i] - loo_mean) * (loo[i] - loo_mean);
        out.stderr_ = std::sqrt(ss * (m - 1) / static_cast<double>(m));
    }
    return out;
}

DecayFit fit_decay(const CoherenceSeries& series) {
    if (series.times.size() != series.values.size() ||
        (!series.stderrs.empty() && series.stderrs.size() != series.values.size()))
        throw data_error("fit_decay: ragged series");

    std::vector<double> t, logv, sigma_log;
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        if (series.times[i] <= 0.0) continue;  // t = 0 is the normalization anchor
        const double v = series.values[i];
        if (!(v > 0.0) || !std::isfinite(v)) continue;
        const double se = series.stderrs.empty() ? 0.0 : series.stderrs[i];
        if (!std::isfinite(se) || (se > 0.0 && se / v > 0.5)) continue;  // noise floor
        t.push_back(series.times[i]);
        logv.push_back(std::log(v));
        sigma_log.push_back(std::max(se / v, 1e-12));
    }

    if (t.size() < 5)
        throw data_error("insufficient data for decay fit (" +
                         std::to_string(t.size()) + " usable points, need 5)");

    const std::size_t n = t.size();
    double sw = 0.0, swt = 0.0, swy = 0.0;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 1.0 / (sigma_log[i] * sigma_log[i]);
        sw += w[i];
        swt += w[i] * t[i];
        swy += w[i] * logv[i];
    }
    const double tbar = swt / sw, ybar = swy / sw;

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (t[i] - tbar) * (t[i] - tbar);
        sxy += w[i] * (t[i] - tbar) * (logv[i] - ybar);
    }
    if (!(sxx > 0.0)) throw data_error("fit_decay: degenerate time axis");

    const double slope = sxy / sxx;
    const double intercept = ybar - slope * tbar;

    double chi2 = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = logv[i] - (intercept + slope * t[i]);
        chi2 += w[i] * r * r;
        ss_tot += w[i] * (logv[i] - ybar) * (logv[i] - ybar);
    }

    DecayFit fit;
    fit.gamma = std::max(0.0, -slope);
    // Slope variance scaled by the reduced chi-square, so it stays meaningful
    // when the per-point uncertainties are absent or unreliable.
    fit.gamma_stderr = n > 2 ? std::sqrt(std::max(0.0, chi2 / (n - 2)) / sxx) : 0.0;
    fit.r_squared = ss_tot > 0.0 ? 1.0 - chi2 / ss_tot : 1.0;
    fit.window_t0 = *std::min_element(t.begin(), t.end());
    fit.window_t1 = *std::max_element(t.begin(), t.end());
    fit.n_points = static_cast<int>(n);
    return fit;
}

}  // namespace gaussdrift
