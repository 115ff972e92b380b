#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lppl {

enum class UnitRootTest { dickey_fuller, phillips_perron };

// Significance level -> critical value for the no-constant, no-trend unit-root
// regression. 1% and 5% are the asymptotic MacKinnon values; 0.1% is the value
// tabulated alongside the residual study this tool reproduces.
const std::map<double, double>& no_constant_critical_values();

struct UnitRootReport {
    UnitRootTest test = UnitRootTest::dickey_fuller;
    double statistic = 0.0;
    std::map<double, double> critical_values;
    std::map<double, bool> reject;
    std::string regression_spec = "no-constant";
    int bandwidth_or_lags = 0;
    std::size_t observations = 0;  // regression sample size

    bool rejects(double level) const { return reject.at(level); }
};

// Regression of d_nu_t on nu_{t-1} (plus `lags` lagged differences), no
// intercept. Statistic is the t-ratio of the nu_{t-1} slope.
UnitRootReport dickey_fuller(std::span<const double> resid, int lags = 0);

// Z_t statistic: the lag-0 regression above with a Newey-West (Bartlett)
// long-run variance correction. Default bandwidth floor(4 (n/100)^(2/9)).
UnitRootReport phillips_perron(std::span<const double> resid,
                               std::optional<int> bandwidth = std::nullopt);

int newey_west_bandwidth(std::size_t n);

struct Ar1Report {
    double alpha_hat = 0.0;
    double std_error = 0.0;
    double t_statistic = 0.0;  // -alpha_hat / std_error
    double innovation_variance = 0.0;
    std::size_t observations = 0;
};

// nu_{t+1} - nu_t = -alpha nu_t + u_t by OLS.
Ar1Report estimate_ar1(std::span<const double> resid);

struct PacfResult {
    std::vector<double> values;  // lags 1..max_lag
    double band = 0.0;           // two-standard-error band 2/sqrt(n)
};

PacfResult pacf(std::span<const double> series, int max_lag);

enum class InformationCriterion { sic, hq };

struct ArOrderRow {
    int order = 0;
    double innovation_variance = 0.0;
    double sic = 0.0;
    double hq = 0.0;
};

struct ArOrderReport {
    int order_sic = 0;
    int order_hq = 0;
    std::size_t effective_sample = 0;
    std::vector<ArOrderRow> criterion_values;

    int selected(InformationCriterion c) const {
        return c == InformationCriterion::sic ? order_sic : order_hq;
    }
};

// AR(k), k = 0..max_order, fitted without intercept on the common sample that
// drops the first max_order observations.
ArOrderReport select_ar_order(std::span<const double> resid, int max_order);

// Quantiles of the no-constant Dickey-Fuller statistic under a Gaussian random
// walk, estimated from `replications` simulated walks of length `length`.
std::map<double, double> simulate_df_null_quantiles(const std::vector<double>& levels,
                                                    int replications, int length,
                                                    std::uint64_t seed, unsigned threads = 1);

}  // namespace lppl
