#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lpplscan/lppl_model.hpp"
#include "lpplscan/timeseries.hpp"

namespace lppl {

enum class LocalOptimizer { simplex, gradient };

struct GridCounts {
    int t_c = 10;
    int beta = 8;
    int omega = 8;
    int phi = 4;
};

struct FitConfig {
    int tc_max_beyond_end = 252;
    GridCounts grid;
    LocalOptimizer local_optimizer = LocalOptimizer::simplex;
    int max_iterations = 4000;       // per local run
    double convergence_tol = 1e-10;  // relative SSE change
    int refine_top = 20;
    // Search box. Wider than the qualification bounds on purpose.
    double beta_min = 0.05;
    double beta_max = 0.95;
    double omega_min = 4.0;
    double omega_max = 16.0;
    unsigned threads = 1;

    void validate() const;
};

// Minimum series length accepted by fit_lppl.
inline constexpr std::size_t kMinFitLength = 100;

struct LinearSubfit {
    double A = 0.0;
    double B = 0.0;
    double BC = 0.0;  // B * C
    double sse = 0.0;
    bool rank_deficient = false;
};

// Least squares for (A, B, B*C) with the nonlinear parameters held fixed:
// basis {1, -(t_c-t)^beta, -(t_c-t)^beta cos(omega ln(t_c-t) + phi) / sqrt(1+(omega/beta)^2)}.
LinearSubfit linear_subfit(std::span<const double> log_prices, double beta, double omega,
                           double phi, double t_c);

struct ConditionReport {
    bool b_positive = false;
    bool beta_in_range = false;   // 0.1 <= beta <= 0.9
    bool omega_in_range = false;  // 6 <= omega <= 13
    bool c_bounded = false;       // |C| < 1
    bool tc_in_horizon = false;   // last < t_c <= last + tc_max_beyond_end
    bool qualified = false;
};

ConditionReport check_lppl_conditions(const LpplParams& params, double last_index,
                                      int tc_max_beyond_end);

struct LpplFit {
    LpplParams params;
    double sse = 0.0;
    std::vector<double> residuals;  // ln I_t - H(t)
    ConditionReport conditions;
    bool qualified = false;
    int starts_refined = 0;
    int starts_converged = 0;
    long evaluations = 0;
};

// Throws FitError for degenerate (constant) input or when no start converges,
// std::invalid_argument for series shorter than kMinFitLength.
LpplFit fit_lppl(const PriceSeries& series, const FitConfig& config = {});
LpplFit fit_lppl(std::span<const double> log_prices, const FitConfig& config = {});

// Residuals and SSE of `params` against the series.
std::vector<double> lppl_residuals(std::span<const double> log_prices, const LpplParams& params);

}  // namespace lppl
