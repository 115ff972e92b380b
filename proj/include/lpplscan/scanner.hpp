#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lpplscan/calibration.hpp"
#include "lpplscan/lppl_model.hpp"
#include "lpplscan/timeseries.hpp"

namespace lppl {

inline const std::vector<double> kDefaultSignificanceLevels{0.001, 0.01};

struct WindowVerdict {
    Window window;
    Date start_date;
    Date end_date;
    bool fit_ok = false;
    std::string fit_error;  // set when the fit failed; the window counts as unqualified
    bool qualified = false;
    LpplParams params;
    double sse = 0.0;
    // Residual diagnostics; empty when no fit exists or the tests could not run.
    std::map<double, bool> df_reject;
    std::map<double, bool> pp_reject;
    std::optional<double> df_statistic;
    std::optional<double> pp_statistic;
    std::optional<double> alpha_hat;
};

struct LevelSummary {
    std::size_t tested = 0;  // windows with residual tests
    double not_reject_df = 0.0;
    double not_reject_pp = 0.0;
    // Over qualified windows: fraction rejecting the unit-root null with both tests.
    std::optional<double> p_stationary_given_lppl;
};

// Cumulative group: every window whose start index is >= start_index.
struct GroupSummary {
    std::size_t start_index = 0;
    Date start_date;
    std::size_t windows = 0;
    std::size_t qualified = 0;
    double p_lppl = 0.0;
    std::map<double, std::optional<double>> p_stationary_given_lppl;
};

struct ScanReport {
    std::string mode;  // "sliding" | "shrinking" | "garch-ensemble"
    std::vector<WindowVerdict> verdicts;
    std::size_t qualified_count = 0;
    double p_lppl = 0.0;
    std::map<double, LevelSummary> levels;
    std::vector<GroupSummary> groups;

    // Config echo.
    std::size_t window_length = 0;
    std::size_t step = 0;
    std::size_t min_length = 0;
    std::size_t end_index = 0;
    std::vector<double> significance_levels;
    FitConfig fit_config;
    std::uint64_t seed = 0;

    // Recomputes every aggregate from `verdicts` and compares.
    bool self_consistent() const;
};

struct LengthSpec {
    std::size_t lo = 750;
    std::size_t hi = 750;  // lo == hi means a fixed length

    static LengthSpec fixed(std::size_t n) { return {n, n}; }
    static LengthSpec uniform(std::size_t lo, std::size_t hi) { return {lo, hi}; }
};

std::size_t sliding_window_count(std::size_t series_length, std::size_t window_length,
                                 std::size_t step);

ScanReport sliding_scan(const PriceSeries& series, std::size_t window_length, std::size_t step,
                        const FitConfig& fit_config,
                        const std::vector<double>& levels = kDefaultSignificanceLevels,
                        unsigned threads = 1);

// Windows [s, end_index] for s = 0, start_step, 2 start_step, ... while the
// window keeps at least min_length observations. `group_starts` (indices)
// define cumulative summaries over every window starting at or after them;
// index 0 is always included.
ScanReport shrinking_scan(const PriceSeries& series, std::size_t end_index, std::size_t start_step,
                          std::size_t min_length, const FitConfig& fit_config,
                          const std::vector<double>& levels = kDefaultSignificanceLevels,
                          std::vector<std::size_t> group_starts = {}, unsigned threads = 1);

// Path i uses seed derive_seed(seed, i); its length is drawn from stream 1 of
// the same key, the returns from stream 0.
ScanReport garch_ensemble(const GarchParams& params, std::size_t count, LengthSpec lengths,
                          const FitConfig& fit_config, std::uint64_t seed,
                          const std::vector<double>& levels = kDefaultSignificanceLevels,
                          unsigned threads = 1, double ln_i0 = 0.0);

// Fits one window and runs the residual tests.
WindowVerdict evaluate_window(const PriceSeries& window_series, Window window,
                              const FitConfig& fit_config, const std::vector<double>& levels);

}  // namespace lppl
