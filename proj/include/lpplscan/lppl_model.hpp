#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lpplscan/timeseries.hpp"

namespace lppl {

// Log-periodic power law trajectory
//   H(t) = A - B (t_c - t)^beta [1 + C / sqrt(1 + (omega/beta)^2) cos(omega ln(t_c - t) + phi)]
// with t and t_c in trading days.
struct LpplParams {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    double beta = 0.5;
    double omega = 8.0;
    double phi = 0.0;
    double t_c = 0.0;

    bool all_finite() const noexcept;
};

// Mean-reverting residual nu_{t+1} - nu_t = -alpha nu_t + u_t, u_t ~ N(0, sigma_u^2).
struct OuResidualParams {
    double alpha = 0.03;
    double sigma_u = 0.008;
};

// GARCH(1,1) with standardized Student-t innovations:
//   r_t = mu0 + sigma_t z_t,  sigma_t^2 = sigma0_sq + arch (r_{t-1} - mu0)^2 + garch sigma_{t-1}^2
struct GarchParams {
    double mu0 = 5.4e-4;
    double sigma0_sq = 5.1e-7;
    double arch = 0.07;
    double garch = 0.926;
    int student_df = 7;

    double unconditional_variance() const noexcept { return sigma0_sq / (1.0 - arch - garch); }
    void validate() const;
};

// Damping factor 1 / sqrt(1 + (omega/beta)^2) applied to C.
double lppl_damping(double beta, double omega) noexcept;

// Throws std::domain_error when t >= t_c or params are non-finite.
double lppl_h(const LpplParams& params, double t);
double lppl_delta_h(const LpplParams& params, double t);

// H(0), ..., H(n-1).
std::vector<double> lppl_trajectory(const LpplParams& params, std::size_t n);

// The u_t draws simulate_bubble uses for `steps` transitions; replaying with the
// same seed reproduces them bit-for-bit.
std::vector<double> bubble_innovations(const OuResidualParams& resid, std::size_t steps,
                                       std::uint64_t seed);

// ln I_{t+1} = ln I_t + dH_t - alpha (ln I_t - H_t) + u_t, for t = 0..length-2.
// sigma_u == 0 is accepted and yields the noiseless recursion.
PriceSeries simulate_bubble(const LpplParams& params, const OuResidualParams& resid,
                            std::size_t length, double ln_i0, std::uint64_t seed,
                            Date first_date = Date{std::chrono::year{2000}, std::chrono::January,
                                                   std::chrono::day{3}});

PriceSeries simulate_garch(const GarchParams& params, std::size_t length, double ln_i0,
                           std::uint64_t seed,
                           Date first_date = Date{std::chrono::year{2000}, std::chrono::January,
                                                  std::chrono::day{3}});

}  // namespace lppl
