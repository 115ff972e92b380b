#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "lpplscan/bayes.hpp"
#include "lpplscan/errors.hpp"
#include "lpplscan/rng.hpp"
#include "lpplscan/serialization.hpp"
#include "oracles.hpp"

using namespace lppl;

namespace {

const LpplParams kCentral{6.0, 0.05, 0.8, 0.5, 9.5, 3.14, 1005.0};

std::vector<double> log_returns(std::span<const double> q) {
    std::vector<double> r;
    for (std::size_t i = 1; i < q.size(); ++i) r.push_back(q[i] - q[i - 1]);
    return r;
}

std::vector<double> gaussian_path(std::size_t n, double mu, double sd, std::uint64_t seed) {
    Philox4x32 rng(seed);
    std::normal_distribution<double> z(mu, sd);
    std::vector<double> q(n);
    q[0] = 6.0;
    for (std::size_t i = 1; i < n; ++i) q[i] = q[i - 1] + z(rng);
    return q;
}

// Sample mean and mean squared deviation of the returns.
std::pair<double, double> return_moments(std::span<const double> q) {
    const auto r = log_returns(q);
    double mean = 0.0;
    for (const double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double var = 0.0;
    for (const double v : r) var += (v - mean) * (v - mean);
    return {mean, var / static_cast<double>(r.size())};
}

ModelEvidence evidence_with_mean(double mean, std::string fp = "x") {
    ModelEvidence e;
    e.mean = mean;
    e.series_fingerprint = std::move(fp);
    return e;
}

}  // namespace

TEST(Likelihood, GaussianAtMaximumMatchesClosedForm) {
    const auto q = gaussian_path(500, 3e-4, 0.01, 4);
    const auto [mean, var] = return_moments(q);
    const double n = static_cast<double>(q.size() - 1);
    const double expected = -0.5 * n * (std::log(2.0 * std::numbers::pi * var) + 1.0);
    EXPECT_NEAR(log_likelihood(BsTheta{mean, 1.0 / var}, q), expected, 1e-9 * std::fabs(expected));
    // The maximum: perturbing either parameter lowers the likelihood.
    const double peak = log_likelihood(BsTheta{mean, 1.0 / var}, q);
    EXPECT_LT(log_likelihood(BsTheta{mean + 1e-4, 1.0 / var}, q), peak);
    EXPECT_LT(log_likelihood(BsTheta{mean, 1.1 / var}, q), peak);
}

TEST(Likelihood, LpplWithoutBubbleReducesToDriftlessGaussian) {
    const auto q = gaussian_path(300, 0.0, 0.01, 5);
    LpplTheta th{9000.0, 0.0, kCentral};
    th.lppl.B = 0.0;
    th.lppl.t_c = 400.0;
    const double bs = log_likelihood(BsTheta{0.0, 9000.0}, q);
    EXPECT_NEAR(log_likelihood_lppl(th, q), bs, 1e-9 * std::fabs(bs));
    EXPECT_NEAR(log_likelihood_pl(th, q), bs, 1e-9 * std::fabs(bs));
}

TEST(Likelihood, PowerLawIsNestedAtZeroOscillation) {
    const auto s = simulate_bubble(kCentral, {0.03, 0.008}, 946, lppl_h(kCentral, 0.0), 3);
    for (const double c : {0.0, 0.3, 0.9}) {
        LpplTheta th{15000.0, 0.04, kCentral};
        th.lppl.C = c;
        LpplTheta off = th;
        off.lppl.C = 0.0;
        EXPECT_NEAR(log_likelihood_pl(th, s.log_prices()), log_likelihood_lppl(off, s.log_prices()), 1e-10);
        EXPECT_EQ(log_likelihood(Model::pl, th, s.log_prices()), log_likelihood_pl(th, s.log_prices()));
    }
}

TEST(Likelihood, TrueBubbleBeatsGaussianFit) {
    const OuResidualParams r{0.03, 0.008};
    int wins = 0;
    const int paths = 50;
    for (int i = 0; i < paths; ++i) {
        const auto s = simulate_bubble(kCentral, r, 946, lppl_h(kCentral, 0.0), derive_seed(31, i));
        const auto q = s.log_prices();
        const auto [mean, var] = return_moments(q);
        // Structural parameters at truth; precision at its own maximum for both models.
        const auto adj = adjusted_returns(q, kCentral, r.alpha);
        double sq = 0.0;
        for (std::size_t t = 0; t < adj.size(); ++t) {
            const double e = adj[t] - lppl_delta_h(kCentral, static_cast<double>(t));
            sq += e * e;
        }
        const double tau = static_cast<double>(adj.size()) / sq;
        const double lppl = log_likelihood_lppl(LpplTheta{tau, r.alpha, kCentral}, q);
        wins += lppl > log_likelihood(BsTheta{mean, 1.0 / var}, q);
    }
    EXPECT_GE(wins, 0.95 * paths);
}

TEST(Likelihood, DomainErrors) {
    const auto q = gaussian_path(50, 0.0, 0.01, 1);
    EXPECT_THROW(log_likelihood(BsTheta{0.0, 0.0}, q), std::domain_error);
    EXPECT_THROW(log_likelihood(BsTheta{NAN, 1.0}, q), std::domain_error);
    LpplTheta th{1.0, 0.0, kCentral};
    th.lppl.t_c = 49.0;
    EXPECT_THROW(log_likelihood_lppl(th, q), std::domain_error);
    EXPECT_THROW(log_likelihood(Model::bs, th, q), std::invalid_argument);
    EXPECT_THROW(log_likelihood(BsTheta{}, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(AdjustedReturns, ZeroAlphaGivesPlainReturns) {
    const auto q = gaussian_path(100, 0.0, 0.01, 2);
    EXPECT_EQ(adjusted_returns(q, kCentral, 0.0), log_returns(q));
}

TEST(AdjustedReturns, RecoverSimulatedInnovations) {
    const OuResidualParams r{0.03, 0.008};
    const auto s = simulate_bubble(kCentral, r, 946, lppl_h(kCentral, 0.0), 17);
    const auto adj = adjusted_returns(s.log_prices(), kCentral, r.alpha);
    const auto u = bubble_innovations(r, 945, 17);
    ASSERT_EQ(adj.size(), u.size());
    for (std::size_t t = 0; t < adj.size(); ++t) {
        ASSERT_NEAR(adj[t] - lppl_delta_h(kCentral, static_cast<double>(t)), u[t], 1e-12) << t;
    }
}

TEST(LogMeanExp, StableAndExact) {
    const std::vector<double> v{std::log(1.0), std::log(2.0), std::log(6.0)};
    EXPECT_NEAR(log_mean_exp(v), std::log(3.0), 1e-15);
    std::vector<double> shifted = v;
    for (auto& x : shifted) x -= 5000.0;
    EXPECT_NEAR(log_mean_exp(shifted), std::log(3.0) - 5000.0, 1e-9);
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(log_mean_exp(std::vector<double>{-inf, -inf}), -inf);
    EXPECT_NEAR(log_mean_exp(std::vector<double>{-inf, 0.0}), std::log(0.5), 1e-15);
    EXPECT_THROW(log_mean_exp(std::vector<double>{}), std::invalid_argument);
}

TEST(Evidence, PointMassPriorGivesLikelihood) {
    const auto q = gaussian_path(200, 1e-3, 0.01, 8);
    PriorSpec p;
    p.mu = {1e-3, 1e-12};
    p.tau = {1e12, 1e4 / 1e12};  // mean 1e4, sd 1e-2
    const auto ev = log_marginal_likelihood(Model::bs, q, p, 200, 2, 1);
    const double ll = log_likelihood(BsTheta{1e-3, 1e4}, q);
    EXPECT_NEAR(ev.mean, ll, 1e-4);

    const auto s = simulate_bubble(kCentral, {0.03, 0.008}, 300, lppl_h(kCentral, 0.0), 9);
    const LpplParams& t = kCentral;
    PriorSpec lp;
    lp.tau = {1e12, 15000.0 / 1e12};
    lp.alpha = {1e12, 0.03 / 1e12};
    lp.A = {t.A, 1e-12};
    lp.B = {1e12, t.B / 1e12};
    lp.C = {t.C, t.C + 1e-12};
    lp.beta = {1e12 * t.beta, 1e12 * (1.0 - t.beta)};
    lp.omega = {1e12, t.omega / 1e12};
    lp.phi = {t.phi, t.phi + 1e-12};
    lp.tc_minus_tN = {1e12, (t.t_c - 299.0) / 1e12};
    const auto ev_l = log_marginal_likelihood(Model::lppl, s.log_prices(), lp, 200, 2, 1);
    const double ll_l = log_likelihood_lppl(LpplTheta{15000.0, 0.03, t}, s.log_prices());
    EXPECT_NEAR(ev_l.mean, ll_l, 1e-3);
}

TEST(Evidence, FiveObservationsAgreeWithQuadrature) {
    const std::vector<double> q{5.0, 5.003, 4.999, 5.004, 5.006};
    const PriorSpec p;
    const double ref = oracle::bs_log_evidence(q, p);
    const auto ev = log_marginal_likelihood(Model::bs, q, p, 10000, 20, 3);
    EXPECT_NEAR(ev.mean, ref, 0.05);
    EXPECT_LE(ev.quantile_2_5, ev.mean);
    EXPECT_GE(ev.quantile_97_5, ev.mean);
}

TEST(Evidence, NarrowingPriorOnMaximumRaisesEvidence) {
    const auto q = gaussian_path(150, 2e-3, 0.01, 12);
    const auto [mean, var] = return_moments(q);
    double previous = -std::numeric_limits<double>::infinity();
    for (const double sd : {1e-2, 1e-3, 1e-4}) {
        PriorSpec p;
        p.mu = {mean, sd};
        p.tau = {1e6, (1.0 / var) / 1e6};
        const double ev = log_marginal_likelihood(Model::bs, q, p, 2000, 4, 2).mean;
        EXPECT_GT(ev, previous) << sd;
        previous = ev;
    }
}

TEST(Evidence, DeterministicAcrossThreadCounts) {
    const auto s = simulate_bubble(kCentral, {0.03, 0.008}, 400, lppl_h(kCentral, 0.0), 6);
    const PriorSpec p;
    const auto a = log_marginal_likelihood(Model::lppl, s, p, 500, 4, 77, 1);
    const auto b = log_marginal_likelihood(Model::lppl, s, p, 500, 4, 77, 3);
    const auto c = log_marginal_likelihood(Model::lppl, s, p, 500, 4, 78, 1);
    EXPECT_EQ(a.log_ml_estimates, b.log_ml_estimates);
    EXPECT_NE(a.log_ml_estimates, c.log_ml_estimates);
    EXPECT_EQ(a.series_fingerprint, fingerprint(s));
    EXPECT_EQ(a.repetitions, 4);
    EXPECT_EQ(a.mc_samples_per_rep, 500);
}

TEST(Evidence, ArgumentErrors) {
    const auto q = gaussian_path(50, 0.0, 0.01, 1);
    const PriorSpec p;
    EXPECT_THROW(log_marginal_likelihood(Model::bs, q, p, 99, 2, 1), std::invalid_argument);
    EXPECT_THROW(log_marginal_likelihood(Model::bs, q, p, 100, 1, 1), std::invalid_argument);
    PriorSpec bad;
    bad.tau.scale = -1.0;
    EXPECT_THROW(log_marginal_likelihood(Model::bs, q, bad, 100, 2, 1), std::invalid_argument);
}

TEST(Evidence, UnderflowIsAFitError) {
    std::vector<double> q{0.0, 1e200, -1e200, 1e200};
    EXPECT_THROW(log_marginal_likelihood(Model::bs, q, PriorSpec{}, 100, 2, 1), FitError);
}

TEST(BayesFactor, DifferenceOfMeans) {
    EXPECT_EQ(bayes_factor(evidence_with_mean(-10.0), evidence_with_mean(-10.0)), 1.0);
    EXPECT_NEAR(bayes_factor(evidence_with_mean(-5.0), evidence_with_mean(-10.0)), 148.4131591025766, 1e-9);
    EXPECT_EQ(log_bayes_factor(evidence_with_mean(2.5), evidence_with_mean(-1.0)), 3.5);
    EXPECT_THROW(log_bayes_factor(evidence_with_mean(0.0, "a"), evidence_with_mean(0.0, "b")),
                 std::invalid_argument);
}

TEST(Priors, DefaultHyperparameters) {
    const PriorSpec p;
    EXPECT_EQ(p.mu.mean, 0.0003);
    EXPECT_EQ(p.mu.sd, 0.01);
    EXPECT_EQ(p.tau.shape * p.tau.scale, 1e5);
    EXPECT_EQ(p.alpha.shape * p.alpha.scale, 0.05);
    EXPECT_EQ(p.A.mean, 6.0);
    EXPECT_NEAR(p.A.sd * p.A.sd, 0.05, 1e-15);
    EXPECT_EQ(p.B.shape * p.B.scale, 0.01);
    EXPECT_EQ(p.beta.a, 40.0);
    EXPECT_EQ(p.beta.b, 30.0);
    EXPECT_NEAR(p.omega.shape * p.omega.scale, 6.4, 1e-12);
    EXPECT_NEAR(p.phi.hi, 2.0 * std::numbers::pi, 1e-15);
    EXPECT_EQ(p.tc_minus_tN.shape * p.tc_minus_tN.scale, 30.0);
    EXPECT_NO_THROW(p.validate());
}

TEST(Priors, JsonRoundTrip) {
    PriorSpec p;
    p.mu = {0.001, 0.02};
    p.omega = {9.0, 0.8};
    p.beta = {3.0, 4.0};
    const auto back = priors_from_json(to_json(p));
    EXPECT_EQ(to_json(back).dump(), to_json(p).dump());
    EXPECT_EQ(priors_from_json(Json::object()).tau.scale, PriorSpec{}.tau.scale);
    EXPECT_THROW(priors_from_json(Json{{"gamma", Json::object()}}), InputError);
    EXPECT_THROW(priors_from_json(Json{{"mu", {{"sd", "wide"}}}}), InputError);
}

TEST(Models, ParseAndFormat) {
    EXPECT_EQ(parse_model("LPPL"), Model::lppl);
    EXPECT_EQ(parse_model("bs"), Model::bs);
    EXPECT_EQ(parse_model("Pl"), Model::pl);
    EXPECT_EQ(to_string(Model::lppl), to_string(parse_model(to_string(Model::lppl))));
    EXPECT_THROW(parse_model("garch"), InputError);
}

TEST(Quantiles, LinearInterpolation) {
    EXPECT_EQ(empirical_quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
    EXPECT_EQ(empirical_quantile({1.0, 2.0}, 0.0), 1.0);
    EXPECT_EQ(empirical_quantile({1.0, 2.0}, 1.0), 2.0);
    EXPECT_NEAR(empirical_quantile({0.0, 10.0}, 0.025), 0.25, 1e-12);
}
