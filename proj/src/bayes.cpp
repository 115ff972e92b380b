#include "lpplscan/bayes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "lpplscan/errors.hpp"
#include "lpplscan/parallel.hpp"
#include "lpplscan/rng.hpp"

namespace lppl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_returns(std::span<const double> q) {
    if (q.size() < 2) throw std::invalid_argument("likelihood needs at least 2 log-prices");
}

// Gaussian log-density sum of `sq_sum` squared deviations over `count` steps.
double gaussian_sum(double tau, double sq_sum, std::size_t count) {
    return static_cast<double>(count) * (0.5 * std::log(tau) - kHalfLog2Pi) - 0.5 * tau * sq_sum;
}

bool valid_lppl_theta(const LpplTheta& th, std::size_t n) {
    return std::isfinite(th.tau) && th.tau > 0.0 && std::isfinite(th.alpha) &&
           th.lppl.all_finite() && th.lppl.t_c > static_cast<double>(n - 1);
}

class PriorSampler {
public:
    PriorSampler(const PriorSpec& p, std::uint64_t seed)
        : rng_(seed),
          mu_(p.mu.mean, p.mu.sd),
          tau_(p.tau.shape, p.tau.scale),
          alpha_(p.alpha.shape, p.alpha.scale),
          a_(p.A.mean, p.A.sd),
          b_(p.B.shape, p.B.scale),
          c_(p.C.lo, p.C.hi),
          beta_x_(p.beta.a, 1.0),
          beta_y_(p.beta.b, 1.0),
          omega_(p.omega.shape, p.omega.scale),
          phi_(p.phi.lo, p.phi.hi),
          tc_(p.tc_minus_tN.shape, p.tc_minus_tN.scale) {}

    BsTheta draw_bs() { return {mu_(rng_), tau_(rng_)}; }

    LpplTheta draw_lppl(double t_n) {
        LpplTheta th;
        th.tau = tau_(rng_);
        th.alpha = alpha_(rng_);
        th.lppl.A = a_(rng_);
        th.lppl.B = b_(rng_);
        th.lppl.C = c_(rng_);
        const double x = beta_x_(rng_);
        const double y = beta_y_(rng_);
        th.lppl.beta = x / (x + y);
        th.lppl.omega = omega_(rng_);
        th.lppl.phi = phi_(rng_);
        th.lppl.t_c = t_n + tc_(rng_);
        return th;
    }

private:
    Philox4x32 rng_;
    std::normal_distribution<double> mu_;
    std::gamma_distribution<double> tau_;
    std::gamma_distribution<double> alpha_;
    std::normal_distribution<double> a_;
    std::gamma_distribution<double> b_;
    std::uniform_real_distribution<double> c_;
    std::gamma_distribution<double> beta_x_;
    std::gamma_distribution<double> beta_y_;
    std::gamma_distribution<double> omega_;
    std::uniform_real_distribution<double> phi_;
    std::gamma_distribution<double> tc_;
};

double lppl_loglik_unchecked(const LpplTheta& th, std::span<const double> q, bool log_periodic) {
    const auto& p = th.lppl;
    const double damp = log_periodic ? p.C * lppl_damping(p.beta, p.omega) : 0.0;
    auto h_at = [&](std::size_t i) {
        const double ln_dt = std::log(p.t_c - static_cast<double>(i));
        const double power = std::exp(p.beta * ln_dt);
        const double osc = log_periodic ? damp * std::cos(p.omega * ln_dt + p.phi) : 0.0;
        return p.A - p.B * power * (1.0 + osc);
    };
    double h_prev = h_at(0);
    double sq = 0.0;
    for (std::size_t i = 1; i < q.size(); ++i) {
        const double h = h_at(i);
        const double e = (q[i] - q[i - 1]) - (h - h_prev) + th.alpha * (q[i - 1] - h_prev);
        sq += e * e;
        h_prev = h;
    }
    return gaussian_sum(th.tau, sq, q.size() - 1);
}

double bs_loglik_unchecked(const BsTheta& th, std::span<const double> q) {
    double sq = 0.0;
    for (std::size_t i = 1; i < q.size(); ++i) {
        const double e = (q[i] - q[i - 1]) - th.mu;
        sq += e * e;
    }
    return gaussian_sum(th.tau, sq, q.size() - 1);
}

}  // namespace

std::string to_string(Model model) {
    switch (model) {
        case Model::bs: return "BS";
        case Model::pl: return "PL";
        case Model::lppl: return "LPPL";
    }
    return "?";
}

Model parse_model(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "bs") return Model::bs;
    if (lower == "pl") return Model::pl;
    if (lower == "lppl") return Model::lppl;
    throw InputError("unknown model '" + std::string(name) + "' (expected bs, pl or lppl)");
}

void PriorSpec::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string("prior hyperparameter must be positive: ") + what);
        }
    };
    positive(mu.sd, "mu.sd");
    positive(tau.shape, "tau.shape");
    positive(tau.scale, "tau.scale");
    positive(alpha.shape, "alpha.shape");
    positive(alpha.scale, "alpha.scale");
    positive(A.sd, "A.sd");
    positive(B.shape, "B.shape");
    positive(B.scale, "B.scale");
    positive(beta.a, "beta.a");
    positive(beta.b, "beta.b");
    positive(omega.shape, "omega.shape");
    positive(omega.scale, "omega.scale");
    positive(tc_minus_tN.shape, "tc_minus_tN.shape");
    positive(tc_minus_tN.scale, "tc_minus_tN.scale");
    if (!(C.lo < C.hi) || !(phi.lo < phi.hi)) {
        throw std::invalid_argument("uniform prior bounds must satisfy lo < hi");
    }
}

std::vector<double> adjusted_returns(std::span<const double> q, const LpplParams& params,
                                     double alpha) {
    require_returns(q);
    if (!(params.t_c > static_cast<double>(q.size() - 1))) {
        throw std::domain_error("adjusted_returns: t_c inside the series range");
    }
    std::vector<double> out(q.size() - 1);
    for (std::size_t t = 1; t < q.size(); ++t) {
        out[t - 1] = (q[t] - q[t - 1]) + alpha * (q[t - 1] - lppl_h(params, static_cast<double>(t - 1)));
    }
    return out;
}

double log_likelihood(const BsTheta& theta, std::span<const double> q) {
    require_returns(q);
    if (!std::isfinite(theta.mu) || !std::isfinite(theta.tau) || !(theta.tau > 0.0)) {
        throw std::domain_error("BS likelihood: mu must be finite and tau positive");
    }
    return bs_loglik_unchecked(theta, q);
}

double log_likelihood_lppl(const LpplTheta& theta, std::span<const double> q) {
    require_returns(q);
    if (!valid_lppl_theta(theta, q.size())) {
        throw std::domain_error("LPPL likelihood: non-finite parameters or t_c <= t_N");
    }
    return lppl_loglik_unchecked(theta, q, true);
}

double log_likelihood_pl(const LpplTheta& theta, std::span<const double> q) {
    require_returns(q);
    if (!valid_lppl_theta(theta, q.size())) {
        throw std::domain_error("PL likelihood: non-finite parameters or t_c <= t_N");
    }
    return lppl_loglik_unchecked(theta, q, false);
}

double log_likelihood(Model model, const LpplTheta& theta, std::span<const double> q) {
    switch (model) {
        case Model::pl: return log_likelihood_pl(theta, q);
        case Model::lppl: return log_likelihood_lppl(theta, q);
        case Model::bs: break;
    }
    throw std::invalid_argument("BS likelihood takes BsTheta");
}

double log_mean_exp(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("log_mean_exp of empty set");
    const double peak = *std::max_element(values.begin(), values.end());
    if (peak == kNegInf) return kNegInf;
    double sum = 0.0;
    for (const double v : values) sum += std::exp(v - peak);
    return peak + std::log(sum) - std::log(static_cast<double>(values.size()));
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of empty set");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ModelEvidence log_marginal_likelihood(Model model, std::span<const double> q,
                                      const PriorSpec& priors, int mc_samples, int repetitions,
                                      std::uint64_t seed, unsigned threads,
                                      std::string series_fingerprint) {
    if (mc_samples < 100) throw std::invalid_argument("mc_samples must be >= 100");
    if (repetitions < 2) throw std::invalid_argument("repetitions must be >= 2");
    require_returns(q);
    priors.validate();
    const double t_n = static_cast<double>(q.size() - 1);

    ModelEvidence ev;
    ev.model = model;
    ev.mc_samples_per_rep = mc_samples;
    ev.repetitions = repetitions;
    ev.seed = seed;
    ev.series_fingerprint = std::move(series_fingerprint);
    ev.log_ml_estimates.assign(static_cast<std::size_t>(repetitions), 0.0);

    parallel_for(static_cast<std::size_t>(repetitions), threads, [&](std::size_t r) {
        PriorSampler sampler(priors, derive_seed(seed, r));
        std::vector<double> logliks(static_cast<std::size_t>(mc_samples));
        for (auto& ll : logliks) {
            if (model == Model::bs) {
                ll = bs_loglik_unchecked(sampler.draw_bs(), q);
            } else {
                const auto th = sampler.draw_lppl(t_n);
                ll = valid_lppl_theta(th, q.size())
                         ? lppl_loglik_unchecked(th, q, model == Model::lppl)
                         : kNegInf;
            }
            if (std::isnan(ll)) ll = kNegInf;
        }
        ev.log_ml_estimates[r] = log_mean_exp(logliks);
    });

    for (const double v : ev.log_ml_estimates) {
        if (!std::isfinite(v)) {
            throw FitError("every sampled likelihood underflowed for model " + to_string(model) +
                           "; the priors do not overlap the data (check the price level against "
                           "the A prior, or widen the priors)");
        }
    }
    double sum = 0.0;
    for (const double v : ev.log_ml_estimates) sum += v;
    ev.mean = sum / static_cast<double>(repetitions);
    ev.quantile_2_5 = empirical_quantile(ev.log_ml_estimates, 0.025);
    ev.quantile_97_5 = empirical_quantile(ev.log_ml_estimates, 0.975);
    return ev;
}

ModelEvidence log_marginal_likelihood(Model model, const PriceSeries& series,
                                      const PriorSpec& priors, int mc_samples, int repetitions,
                                      std::uint64_t seed, unsigned threads) {
    return log_marginal_likelihood(model, series.log_prices(), priors, mc_samples, repetitions,
                                   seed, threads, fingerprint(series));
}

double log_bayes_factor(const ModelEvidence& a, const ModelEvidence& b) {
    if (a.series_fingerprint != b.series_fingerprint) {
        throw std::invalid_argument("Bayes factor of evidence computed on different series");
    }
    return a.mean - b.mean;
}

double bayes_factor(const ModelEvidence& a, const ModelEvidence& b) {
    return std::exp(log_bayes_factor(a, b));
}

}  // namespace lppl
