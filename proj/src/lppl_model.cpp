#include "lpplscan/lppl_model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "lpplscan/rng.hpp"

namespace lppl {

bool LpplParams::all_finite() const noexcept {
    return std::isfinite(A) && std::isfinite(B) && std::isfinite(C) && std::isfinite(beta) &&
           std::isfinite(omega) && std::isfinite(phi) && std::isfinite(t_c);
}

void GarchParams::validate() const {
    if (!(sigma0_sq > 0.0) || !(arch >= 0.0) || !(garch >= 0.0) || !(arch + garch < 1.0)) {
        throw std::invalid_argument(
            "GARCH parameters must satisfy sigma0_sq > 0, arch >= 0, garch >= 0, arch + garch < 1");
    }
    if (student_df < 3) throw std::invalid_argument("Student-t degrees of freedom must be >= 3");
    if (!std::isfinite(mu0)) throw std::invalid_argument("GARCH mu0 must be finite");
}

double lppl_damping(double beta, double omega) noexcept {
    const double r = omega / beta;
    return 1.0 / std::sqrt(1.0 + r * r);
}

double lppl_h(const LpplParams& p, double t) {
    if (!p.all_finite()) throw std::domain_error("LPPL parameters must be finite");
    const double dt = p.t_c - t;
    if (!(dt > 0.0)) {
        throw std::domain_error("LPPL evaluated at t=" + std::to_string(t) +
                                " not before t_c=" + std::to_string(p.t_c));
    }
    const double log_dt = std::log(dt);
    const double power = std::exp(p.beta * log_dt);
    const double osc = p.C * lppl_damping(p.beta, p.omega) * std::cos(p.omega * log_dt + p.phi);
    return p.A - p.B * power * (1.0 + osc);
}

double lppl_delta_h(const LpplParams& p, double t) {
    // A is dropped so it cancels exactly rather than to rounding.
    LpplParams shape = p;
    shape.A = 0.0;
    return lppl_h(shape, t + 1.0) - lppl_h(shape, t);
}

std::vector<double> lppl_trajectory(const LpplParams& params, std::size_t n) {
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = lppl_h(params, static_cast<double>(i));
    return h;
}

std::vector<double> bubble_innovations(const OuResidualParams& resid, std::size_t steps,
                                       std::uint64_t seed) {
    if (!(resid.sigma_u >= 0.0)) throw std::invalid_argument("sigma_u must be >= 0");
    std::vector<double> u(steps, 0.0);
    if (resid.sigma_u == 0.0) return u;
    Philox4x32 rng(seed);
    std::normal_distribution<double> normal(0.0, resid.sigma_u);
    for (auto& x : u) x = normal(rng);
    return u;
}

PriceSeries simulate_bubble(const LpplParams& params, const OuResidualParams& resid,
                            std::size_t length, double ln_i0, std::uint64_t seed,
                            Date first_date) {
    if (length < 2) throw std::invalid_argument("simulate_bubble: length must be >= 2");
    if (!(static_cast<double>(length) + 1.0 < params.t_c)) {
        throw std::invalid_argument("simulate_bubble: t_c must exceed length + 1");
    }
    if (!(resid.alpha >= 0.0 && resid.alpha < 1.0)) {
        throw std::invalid_argument("simulate_bubble: alpha must lie in [0, 1)");
    }
    const auto h = lppl_trajectory(params, length);
    const auto u = bubble_innovations(resid, length - 1, seed);
    std::vector<double> ln_i(length);
    ln_i[0] = ln_i0;
    for (std::size_t t = 0; t + 1 < length; ++t) {
        ln_i[t + 1] = ln_i[t] + (h[t + 1] - h[t]) - resid.alpha * (ln_i[t] - h[t]) + u[t];
    }
    return PriceSeries(business_days(first_date, length), std::move(ln_i), "close");
}

PriceSeries simulate_garch(const GarchParams& params, std::size_t length, double ln_i0,
                           std::uint64_t seed, Date first_date) {
    params.validate();
    if (length < 2) throw std::invalid_argument("simulate_garch: length must be >= 2");
    Philox4x32 rng(seed);
    const double n = params.student_df;
    std::student_t_distribution<double> student(n);
    const double standardize = 1.0 / std::sqrt(n / (n - 2.0));

    std::vector<double> ln_i(length);
    ln_i[0] = ln_i0;
    // Presample returns sit at mu0, so the first shock term vanishes and the
    // variance starts at its unconditional level.
    double prev_shock = 0.0;
    double variance = params.unconditional_variance();
    for (std::size_t t = 1; t < length; ++t) {
        if (t > 1) {
            variance = params.sigma0_sq + params.arch * prev_shock * prev_shock +
                       params.garch * variance;
        }
        const double z = student(rng) * standardize;
        const double shock = std::sqrt(variance) * z;
        ln_i[t] = ln_i[t - 1] + params.mu0 + shock;
        prev_shock = shock;
    }
    return PriceSeries(business_days(first_date, length), std::move(ln_i), "close");
}

}  // namespace lppl
