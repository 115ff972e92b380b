#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lpplscan/lppl_model.hpp"
#include "lpplscan/timeseries.hpp"

namespace lppl {

// BS: constant-drift Gaussian returns. PL: LPPL model with C = 0.
// LPPL: volatility-confined LPPL (mean-reverting residuals around H).
enum class Model { bs, pl, lppl };

std::string to_string(Model model);
Model parse_model(std::string_view name);  // "bs" | "pl" | "lppl", case-insensitive; InputError otherwise

struct NormalPrior {
    double mean = 0.0;
    double sd = 1.0;
};
// Shape-scale parametrization: E[X] = shape * scale.
struct GammaPrior {
    double shape = 1.0;
    double scale = 1.0;
};
struct BetaPrior {
    double a = 1.0;
    double b = 1.0;
};
struct UniformPrior {
    double lo = 0.0;
    double hi = 1.0;
};

struct PriorSpec {
    NormalPrior mu{0.0003, 0.01};
    GammaPrior tau{1.0, 1e5};
    GammaPrior alpha{1.0, 0.05};
    NormalPrior A{6.0, 0.22360679774997896};  // variance 0.05
    GammaPrior B{1.0, 0.01};
    UniformPrior C{0.0, 1.0};
    BetaPrior beta{40.0, 30.0};
    GammaPrior omega{16.0, 0.4};
    UniformPrior phi{0.0, 6.283185307179586};
    GammaPrior tc_minus_tN{1.0, 30.0};

    void validate() const;
};

struct BsTheta {
    double mu = 0.0;
    double tau = 1.0;  // precision of one-day returns
};

// Shared by PL and LPPL; PL ignores lppl.C.
struct LpplTheta {
    double tau = 1.0;
    double alpha = 0.0;
    LpplParams lppl;
};

// r_t + alpha (ln I_{t-1} - H(t-1)), t = 1..n-1.
std::vector<double> adjusted_returns(std::span<const double> log_prices, const LpplParams& params,
                                     double alpha);

// Sum over i = 1..N of log N(r_i; mean_i, 1/tau), conditioning on the first
// observation. Throws std::domain_error on non-finite inputs or t_c <= t_N.
double log_likelihood(const BsTheta& theta, std::span<const double> log_prices);
double log_likelihood_lppl(const LpplTheta& theta, std::span<const double> log_prices);
// Independent C = 0 code path (no log-periodic term evaluated).
double log_likelihood_pl(const LpplTheta& theta, std::span<const double> log_prices);
double log_likelihood(Model model, const LpplTheta& theta, std::span<const double> log_prices);

// log(mean(exp(values))) computed stably. -inf if every value is -inf.
double log_mean_exp(std::span<const double> values);

struct ModelEvidence {
    Model model = Model::bs;
    std::vector<double> log_ml_estimates;  // one per repetition
    double mean = 0.0;
    double quantile_2_5 = 0.0;
    double quantile_97_5 = 0.0;
    int mc_samples_per_rep = 0;
    int repetitions = 0;
    std::uint64_t seed = 0;
    std::string series_fingerprint;
};

// Plain prior-sampling Monte Carlo: each repetition draws `mc_samples` parameter
// vectors from the priors (repetition r uses derive_seed(seed, r)) and takes
// the log-mean-exp of their log-likelihoods.
ModelEvidence log_marginal_likelihood(Model model, std::span<const double> log_prices,
                                      const PriorSpec& priors, int mc_samples, int repetitions,
                                      std::uint64_t seed, unsigned threads = 1,
                                      std::string series_fingerprint = {});
ModelEvidence log_marginal_likelihood(Model model, const PriceSeries& series,
                                      const PriorSpec& priors, int mc_samples, int repetitions,
                                      std::uint64_t seed, unsigned threads = 1);

// Mean log-ML of a minus mean log-ML of b; bayes_factor exponentiates it.
// Throws std::invalid_argument when the two estimates come from different series.
double log_bayes_factor(const ModelEvidence& a, const ModelEvidence& b);
double bayes_factor(const ModelEvidence& a, const ModelEvidence& b);

// Empirical quantile with linear interpolation between order statistics.
double empirical_quantile(std::vector<double> values, double q);

}  // namespace lppl
