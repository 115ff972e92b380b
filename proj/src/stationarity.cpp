#include "lpplscan/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "lpplscan/parallel.hpp"
#include "lpplscan/rng.hpp"

namespace lppl {

namespace {

constexpr std::size_t kMinUnitRootLength = 25;

void require_variation(std::span<const double> x, const char* what) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) throw std::invalid_argument(std::string(what) + ": zero-variance series");
    for (const double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
    }
}

struct SlopeRegression {
    double slope = 0.0;
    double std_error = 0.0;
    double rss = 0.0;
    double sxx = 0.0;
    std::size_t observations = 0;
    std::vector<double> residuals;
};

// d_nu_t = slope * nu_{t-1} + e_t, t = 1..n-1.
SlopeRegression lag_slope(std::span<const double> x) {
    const std::size_t n = x.size();
    SlopeRegression r;
    double sxy = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
        r.sxx += x[t - 1] * x[t - 1];
        sxy += x[t - 1] * (x[t] - x[t - 1]);
    }
    if (!(r.sxx > 0.0)) throw std::invalid_argument("unit-root regression: zero regressor");
    r.slope = sxy / r.sxx;
    r.residuals.resize(n - 1);
    for (std::size_t t = 1; t < n; ++t) {
        const double e = (x[t] - x[t - 1]) - r.slope * x[t - 1];
        r.residuals[t - 1] = e;
        r.rss += e * e;
    }
    r.observations = n - 1;
    const double s2 = r.rss / static_cast<double>(r.observations - 1);
    r.std_error = std::sqrt(s2 / r.sxx);
    return r;
}

UnitRootReport make_report(UnitRootTest test, double statistic, int bandwidth_or_lags,
                           std::size_t observations) {
    UnitRootReport rep;
    rep.test = test;
    rep.statistic = statistic;
    rep.critical_values = no_constant_critical_values();
    for (const auto& [level, cv] : rep.critical_values) rep.reject[level] = statistic < cv;
    rep.bandwidth_or_lags = bandwidth_or_lags;
    rep.observations = observations;
    return rep;
}

double df_statistic(std::span<const double> x) {
    const auto r = lag_slope(x);
    return r.slope / r.std_error;
}

}  // namespace

const std::map<double, double>& no_constant_critical_values() {
    static const std::map<double, double> values{
        {0.001, -3.588}, {0.01, -2.567}, {0.05, -1.941}};
    return values;
}

int newey_west_bandwidth(std::size_t n) {
    return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
}

UnitRootReport dickey_fuller(std::span<const double> x, int lags) {
    if (x.size() < kMinUnitRootLength) {
        throw std::invalid_argument("dickey_fuller needs at least 25 observations");
    }
    if (lags < 0) throw std::invalid_argument("dickey_fuller: lags must be >= 0");
    require_variation(x, "dickey_fuller");
    if (lags == 0) {
        const auto r = lag_slope(x);
        return make_report(UnitRootTest::dickey_fuller, r.slope / r.std_error, 0, r.observations);
    }

    const std::size_t n = x.size();
    const std::size_t p = static_cast<std::size_t>(lags);
    if (n < p + 10) throw std::invalid_argument("dickey_fuller: too many lags for series length");
    const std::size_t rows = n - 1 - p;
    const std::size_t cols = 1 + p;
    Eigen::MatrixXd X(rows, cols);
    Eigen::VectorXd y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + p + 1;
        y[r] = x[t] - x[t - 1];
        X(r, 0) = x[t - 1];
        for (std::size_t j = 1; j <= p; ++j) X(r, j) = x[t - j] - x[t - j - 1];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < static_cast<Eigen::Index>(cols)) {
        throw std::invalid_argument("dickey_fuller: rank-deficient lag regression");
    }
    const Eigen::VectorXd coef = qr.solve(y);
    const double rss = (y - X * coef).squaredNorm();
    const double s2 = rss / static_cast<double>(rows - cols);
    const Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();
    const double se = std::sqrt(s2 * xtx_inv(0, 0));
    return make_report(UnitRootTest::dickey_fuller, coef[0] / se, lags, rows);
}

UnitRootReport phillips_perron(std::span<const double> x, std::optional<int> bandwidth) {
    if (x.size() < kMinUnitRootLength) {
        throw std::invalid_argument("phillips_perron needs at least 25 observations");
    }
    require_variation(x, "phillips_perron");
    const int lag_window = bandwidth.value_or(newey_west_bandwidth(x.size()));
    if (lag_window < 0) throw std::invalid_argument("phillips_perron: bandwidth must be >= 0");

    const auto r = lag_slope(x);
    const double T = static_cast<double>(r.observations);
    const auto& e = r.residuals;
    const double gamma0 = r.rss / T;
    double lrv = gamma0;
    for (int j = 1; j <= lag_window && static_cast<std::size_t>(j) < e.size(); ++j) {
        double gj = 0.0;
        for (std::size_t t = static_cast<std::size_t>(j); t < e.size(); ++t) gj += e[t] * e[t - j];
        gj /= T;
        lrv += 2.0 * (1.0 - j / (lag_window + 1.0)) * gj;
    }
    if (!(lrv > 0.0)) throw std::invalid_argument("phillips_perron: non-positive long-run variance");

    const double t_rho = r.slope / r.std_error;
    const double s = std::sqrt(r.rss / (T - 1.0));
    const double lambda = std::sqrt(lrv);
    const double z_t =
        std::sqrt(gamma0 / lrv) * t_rho - (lrv - gamma0) / (2.0 * lambda) * (T * r.std_error / s);
    return make_report(UnitRootTest::phillips_perron, z_t, lag_window, r.observations);
}

Ar1Report estimate_ar1(std::span<const double> x) {
    if (x.size() < 10) throw std::invalid_argument("estimate_ar1 needs at least 10 observations");
    require_variation(x, "estimate_ar1");
    const auto r = lag_slope(x);
    Ar1Report rep;
    rep.alpha_hat = -r.slope;
    rep.std_error = r.std_error;
    rep.t_statistic = -rep.alpha_hat / rep.std_error;
    rep.innovation_variance = r.rss / static_cast<double>(r.observations - 1);
    rep.observations = r.observations;
    return rep;
}

PacfResult pacf(std::span<const double> x, int max_lag) {
    const std::size_t n = x.size();
    if (max_lag < 1 || static_cast<double>(max_lag) >= static_cast<double>(n) / 4.0) {
        throw std::invalid_argument("pacf: need 1 <= max_lag < n/4");
    }
    require_variation(x, "pacf");
    double mean = 0.0;
    for (const double v : x) mean += v;
    mean /= static_cast<double>(n);

    std::vector<double> acf(max_lag + 1, 0.0);
    for (int k = 0; k <= max_lag; ++k) {
        double c = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) c += (x[t] - mean) * (x[t + k] - mean);
        acf[k] = c;
    }
    for (int k = max_lag; k >= 0; --k) acf[k] /= acf[0];

    // Durbin-Levinson.
    PacfResult out;
    out.values.resize(max_lag);
    std::vector<double> phi(max_lag + 1, 0.0);
    std::vector<double> prev(max_lag + 1, 0.0);
    double v = 1.0;
    for (int k = 1; k <= max_lag; ++k) {
        double num = acf[k];
        for (int j = 1; j < k; ++j) num -= prev[j] * acf[k - j];
        const double pk = num / v;
        phi[k] = pk;
        for (int j = 1; j < k; ++j) phi[j] = prev[j] - pk * prev[k - j];
        v *= (1.0 - pk * pk);
        out.values[k - 1] = pk;
        prev = phi;
    }
    out.band = 2.0 / std::sqrt(static_cast<double>(n));
    return out;
}

ArOrderReport select_ar_order(std::span<const double> x, int max_order) {
    if (max_order < 1) throw std::invalid_argument("select_ar_order: max_order must be >= 1");
    const std::size_t n = x.size();
    if (n <= 10u * static_cast<std::size_t>(max_order)) {
        throw std::invalid_argument("select_ar_order: series too short for max_order");
    }
    require_variation(x, "select_ar_order");
    const std::size_t p = static_cast<std::size_t>(max_order);
    const std::size_t m = n - p;
    const double dm = static_cast<double>(m);
    Eigen::VectorXd y(m);
    Eigen::MatrixXd lagged(m, p);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t t = r + p;
        y[r] = x[t];
        for (std::size_t j = 1; j <= p; ++j) lagged(r, j - 1) = x[t - j];
    }

    ArOrderReport rep;
    rep.effective_sample = m;
    const double sic_penalty = std::log(dm) / dm;
    const double hq_penalty = 2.0 * std::log(std::log(dm)) / dm;
    for (int k = 0; k <= max_order; ++k) {
        double rss = y.squaredNorm();
        if (k > 0) {
            const auto X = lagged.leftCols(k);
            const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
            rss = (y - X * coef).squaredNorm();
        }
        ArOrderRow row;
        row.order = k;
        row.innovation_variance = rss / dm;
        const double base = std::log(row.innovation_variance);
        row.sic = base + k * sic_penalty;
        row.hq = base + k * hq_penalty;
        rep.criterion_values.push_back(row);
    }
    auto argmin = [&](auto member) {
        int best = 0;
        for (const auto& row : rep.criterion_values) {
            if (row.*member < rep.criterion_values[best].*member) best = row.order;
        }
        return best;
    };
    rep.order_sic = argmin(&ArOrderRow::sic);
    rep.order_hq = argmin(&ArOrderRow::hq);
    return rep;
}

std::map<double, double> simulate_df_null_quantiles(const std::vector<double>& levels,
                                                    int replications, int length,
                                                    std::uint64_t seed, unsigned threads) {
    if (replications < 10 || length < static_cast<int>(kMinUnitRootLength)) {
        throw std::invalid_argument("simulate_df_null_quantiles: too few replications or steps");
    }
    std::vector<double> stats(static_cast<std::size_t>(replications));
    parallel_for(stats.size(), threads, [&](std::size_t i) {
        Philox4x32 rng(derive_seed(seed, i));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> walk(static_cast<std::size_t>(length));
        double level = 0.0;
        for (auto& w : walk) {
            level += normal(rng);
            w = level;
        }
        stats[i] = df_statistic(walk);
    });
    std::sort(stats.begin(), stats.end());
    std::map<double, double> out;
    for (const double level : levels) {
        const double pos = level * static_cast<double>(stats.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, stats.size() - 1);
        out[level] = stats[lo] + (pos - lo) * (stats[hi] - stats[lo]);
    }
    return out;
}

}  // namespace lppl
