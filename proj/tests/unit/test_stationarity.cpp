#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "lpplscan/rng.hpp"
#include "lpplscan/stationarity.hpp"

using namespace lppl;

namespace {

// nu_{t+1} = (1 - alpha) nu_t + u_t with nu_0 drawn from the stationary law.
std::vector<double> ar1(double alpha, double sigma, std::size_t n, std::uint64_t seed) {
    Philox4x32 rng(seed);
    std::normal_distribution<double> z(0.0, sigma);
    std::vector<double> x(n);
    const double phi = 1.0 - alpha;
    x[0] = phi < 1.0 ? z(rng) / std::sqrt(1.0 - phi * phi) : 0.0;
    for (std::size_t i = 1; i < n; ++i) x[i] = phi * x[i - 1] + z(rng);
    return x;
}

std::vector<double> random_walk(std::size_t n, std::uint64_t seed, double ma = 0.0) {
    Philox4x32 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> x(n);
    double prev_e = z(rng);
    x[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double e = z(rng);
        x[i] = x[i - 1] + e + ma * prev_e;
        prev_e = e;
    }
    return x;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) { return ar1(1.0, 1.0, n, seed); }

double lag1_autocorrelation(const std::vector<double>& x) {
    double mean = 0.0;
    for (const double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        den += (x[i] - mean) * (x[i] - mean);
        if (i > 0) num += (x[i] - mean) * (x[i - 1] - mean);
    }
    return num / den;
}

}  // namespace

TEST(CriticalValues, NoConstantTable) {
    const auto& cv = no_constant_critical_values();
    EXPECT_EQ(cv.at(0.001), -3.588);
    EXPECT_EQ(cv.at(0.01), -2.567);
    EXPECT_EQ(cv.at(0.05), -1.941);
}

TEST(DickeyFuller, SizeUnderRandomWalkNull) {
    int reject_df = 0, reject_pp = 0;
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) {
        const auto x = random_walk(1000, derive_seed(101, r));
        reject_df += dickey_fuller(x).rejects(0.05);
        reject_pp += phillips_perron(x).rejects(0.05);
    }
    EXPECT_NEAR(reject_df / double(reps), 0.05, 0.02);
    EXPECT_NEAR(reject_pp / double(reps), 0.05, 0.03);
}

TEST(DickeyFuller, PowerAgainstSlowMeanReversion) {
    int reject = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        reject += dickey_fuller(ar1(0.03, 0.0084, 946, derive_seed(7, r))).rejects(0.001);
    }
    EXPECT_GT(reject, reps / 2);
}

TEST(DickeyFuller, AlternatingSeriesRejectsEverywhere) {
    std::vector<double> x(60);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::pow(-0.5, static_cast<double>(t));
    const auto r = dickey_fuller(x);
    EXPECT_LT(r.statistic, -10.0);
    for (const auto& [level, rej] : r.reject) EXPECT_TRUE(rej) << level;
}

TEST(DickeyFuller, RejectionMatchesCriticalValues) {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto r = dickey_fuller(ar1(0.02, 1.0, 300, s));
        for (const auto& [level, cv] : r.critical_values) {
            EXPECT_EQ(r.reject.at(level), r.statistic < cv);
        }
        EXPECT_EQ(r.regression_spec, "no-constant");
        EXPECT_EQ(r.bandwidth_or_lags, 0);
    }
}

TEST(DickeyFuller, AugmentedLagsReduceSample) {
    const auto x = ar1(0.05, 1.0, 400, 3);
    const auto r0 = dickey_fuller(x);
    const auto r2 = dickey_fuller(x, 2);
    EXPECT_EQ(r0.observations, 399u);
    EXPECT_EQ(r2.observations, 397u);
    EXPECT_EQ(r2.bandwidth_or_lags, 2);
}

TEST(DickeyFuller, Errors) {
    EXPECT_THROW(dickey_fuller(std::vector<double>(100, 3.0)), std::invalid_argument);
    EXPECT_THROW(dickey_fuller(ar1(0.1, 1.0, 24, 1)), std::invalid_argument);
    auto bad = ar1(0.1, 1.0, 100, 1);
    bad[10] = NAN;
    EXPECT_THROW(dickey_fuller(bad), std::invalid_argument);
}

TEST(PhillipsPerron, CloseToDfForWhiteInnovations) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto x = ar1(0.03, 0.0084, 946, derive_seed(55, s));
        EXPECT_NEAR(phillips_perron(x).statistic, dickey_fuller(x).statistic, 0.3);
    }
}

TEST(PhillipsPerron, ZeroBandwidthEqualsDf) {
    const auto x = ar1(0.04, 1.0, 500, 9);
    EXPECT_EQ(phillips_perron(x, 0).statistic, dickey_fuller(x).statistic);
}

TEST(PhillipsPerron, CorrectsSerialCorrelationUnderNull) {
    // Negative MA(1) increments make the unaugmented DF regression over-reject.
    int reject_df = 0, reject_pp = 0;
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) {
        const auto x = random_walk(1000, derive_seed(202, r), -0.2);
        reject_df += dickey_fuller(x).rejects(0.05);
        reject_pp += phillips_perron(x).rejects(0.05);
    }
    EXPECT_NEAR(reject_pp / double(reps), 0.05, 0.03);
    EXPECT_GT(reject_df / double(reps), 0.1);
}

TEST(PhillipsPerron, BandwidthRule) {
    EXPECT_EQ(newey_west_bandwidth(100), 4);
    EXPECT_EQ(newey_west_bandwidth(946), 6);
    EXPECT_EQ(newey_west_bandwidth(1500), 7);
    EXPECT_EQ(phillips_perron(ar1(0.1, 1.0, 946, 2)).bandwidth_or_lags, 6);
}

TEST(Ar1, RecoversAlpha) {
    const auto x = ar1(0.05, 1.0, 5000, 31);
    const auto r = estimate_ar1(x);
    EXPECT_NEAR(r.alpha_hat, 0.05, 3.0 * r.std_error);
    EXPECT_GT(r.innovation_variance, 0.0);
    EXPECT_EQ(r.observations, 4999u);
}

TEST(Ar1, WhiteNoiseGivesAlphaNearOne) {
    const auto r = estimate_ar1(white_noise(5000, 4));
    EXPECT_NEAR(r.alpha_hat, 1.0, 0.05);
}

TEST(Ar1, TStatisticEqualsDfStatistic) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto x = ar1(0.03, 0.0084, 946, s);
        const auto r = estimate_ar1(x);
        EXPECT_NEAR(r.t_statistic, -r.alpha_hat / r.std_error, 1e-12);
        EXPECT_NEAR(r.t_statistic, dickey_fuller(x).statistic, 1e-9);
    }
    EXPECT_THROW(estimate_ar1(ar1(0.1, 1.0, 9, 1)), std::invalid_argument);
}

TEST(Pacf, WhiteNoiseStaysInBand) {
    int inside = 0, total = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto p = pacf(white_noise(1000, derive_seed(3, s)), 20);
        EXPECT_NEAR(p.band, 2.0 / std::sqrt(1000.0), 1e-15);
        for (const double v : p.values) {
            inside += std::fabs(v) <= p.band;
            ++total;
        }
    }
    EXPECT_GE(inside, 0.9 * total);
}

TEST(Pacf, Ar1Signature) {
    const auto x = ar1(0.03, 1.0, 5000, 17);
    const auto p = pacf(x, 20);
    EXPECT_NEAR(p.values[0], 0.97, 0.02);
    int inside = 0;
    for (std::size_t k = 1; k < p.values.size(); ++k) inside += std::fabs(p.values[k]) <= p.band;
    EXPECT_GE(inside, 17);
    EXPECT_NEAR(p.values[0], lag1_autocorrelation(x), 1e-9);
}

TEST(Pacf, Preconditions) {
    const auto x = white_noise(100, 1);
    EXPECT_NO_THROW(pacf(x, 24));
    EXPECT_THROW(pacf(x, 25), std::invalid_argument);
    EXPECT_THROW(pacf(x, 0), std::invalid_argument);
    EXPECT_THROW(pacf(std::vector<double>(100, 1.0), 5), std::invalid_argument);
}

TEST(ArOrder, SelectsOneForAr1) {
    int sic = 0, hq = 0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        const auto r = select_ar_order(ar1(0.05, 1.0, 900, derive_seed(77, s)), 5);
        sic += r.order_sic == 1;
        hq += r.order_hq == 1;
    }
    EXPECT_GE(sic, 0.9 * seeds);
    EXPECT_GE(hq, 0.9 * seeds);
}

TEST(ArOrder, SelectsZeroForWhiteNoise) {
    int zero = 0;
    for (int s = 0; s < 30; ++s) {
        zero += select_ar_order(white_noise(900, derive_seed(78, s)), 5).order_sic == 0;
    }
    EXPECT_GE(zero, 27);
}

TEST(ArOrder, HannanQuinnFindsThirdOrder) {
    int three = 0;
    const int seeds = 30;
    for (int s = 0; s < seeds; ++s) {
        Philox4x32 rng(derive_seed(79, s));
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<double> x(2000, 0.0);
        for (std::size_t t = 3; t < x.size(); ++t) {
            x[t] = 0.5 * x[t - 1] - 0.3 * x[t - 2] + 0.2 * x[t - 3] + z(rng);
        }
        three += select_ar_order(x, 6).selected(InformationCriterion::hq) == 3;
    }
    EXPECT_GT(three, seeds / 2);
}

TEST(ArOrder, ReportedOrdersMinimizeCriteria) {
    const auto r = select_ar_order(ar1(0.2, 1.0, 600, 5), 6);
    ASSERT_EQ(r.criterion_values.size(), 7u);
    EXPECT_EQ(r.effective_sample, 594u);
    for (const auto& row : r.criterion_values) {
        EXPECT_LE(r.criterion_values[r.order_sic].sic, row.sic);
        EXPECT_LE(r.criterion_values[r.order_hq].hq, row.hq);
    }
    EXPECT_THROW(select_ar_order(ar1(0.2, 1.0, 50, 5), 5), std::invalid_argument);
    EXPECT_THROW(select_ar_order(ar1(0.2, 1.0, 500, 5), 0), std::invalid_argument);
}

TEST(ScaleInvariance, StatisticsIgnorePositiveScaling) {
    const auto x = ar1(0.05, 1.0, 800, 44);
    auto y = x;
    for (auto& v : y) v *= 0.0037;
    EXPECT_NEAR(dickey_fuller(x).statistic, dickey_fuller(y).statistic, 1e-9);
    EXPECT_NEAR(phillips_perron(x).statistic, phillips_perron(y).statistic, 1e-9);
    const auto px = pacf(x, 10), py = pacf(y, 10);
    for (int k = 0; k < 10; ++k) EXPECT_NEAR(px.values[k], py.values[k], 1e-9);
    EXPECT_EQ(select_ar_order(x, 5).order_sic, select_ar_order(y, 5).order_sic);
    EXPECT_EQ(select_ar_order(x, 5).order_hq, select_ar_order(y, 5).order_hq);
}

TEST(DfNull, SimulatedQuantilesNearTabulated) {
    const auto q = simulate_df_null_quantiles({0.01, 0.05}, 4000, 500, 9);
    EXPECT_NEAR(q.at(0.05), -1.94, 0.08);
    EXPECT_NEAR(q.at(0.01), -2.57, 0.15);
    EXPECT_EQ(q, simulate_df_null_quantiles({0.01, 0.05}, 4000, 500, 9, 3));
}

TEST(DfNull, MillionWalkOracle) {
    // Re-derives the no-constant thresholds at the sample size of the residual tests.
    const auto q = simulate_df_null_quantiles({0.001, 0.01, 0.05}, 1000000, 946, 2024);
    EXPECT_NEAR(q.at(0.05), -1.941, 0.02);
    EXPECT_NEAR(q.at(0.01), -2.567, 0.02);
    // The adopted 0.1% value is stricter than the simulated one.
    EXPECT_LT(-3.588, q.at(0.001));
    EXPECT_LT(q.at(0.001), q.at(0.01));
    std::printf("simulated no-constant DF quantiles (n=946, 1e6 walks): 0.1%% %.3f, 1%% %.3f, 5%% %.3f\n",
                q.at(0.001), q.at(0.01), q.at(0.05));
}
