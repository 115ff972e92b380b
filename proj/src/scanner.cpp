#include "lpplscan/scanner.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "lpplscan/errors.hpp"
#include "lpplscan/parallel.hpp"
#include "lpplscan/rng.hpp"
#include "lpplscan/stationarity.hpp"

namespace lppl {

namespace {

void validate_levels(const std::vector<double>& levels) {
    if (levels.empty()) throw std::invalid_argument("at least one significance level is required");
    const auto& table = no_constant_critical_values();
    for (const double l : levels) {
        if (!table.contains(l)) {
            throw std::invalid_argument("unsupported significance level " + std::to_string(l) +
                                        " (supported: 0.001, 0.01, 0.05)");
        }
    }
}

bool rejects_both(const WindowVerdict& v, double level) {
    return v.df_reject.at(level) && v.pp_reject.at(level);
}

std::optional<double> conditional_rate(const std::vector<WindowVerdict>& verdicts,
                                       std::size_t from_index, double level) {
    std::size_t qualified = 0;
    std::size_t stationary = 0;
    for (const auto& v : verdicts) {
        if (v.window.start_index < from_index || !v.qualified || v.df_reject.empty()) continue;
        ++qualified;
        if (rejects_both(v, level)) ++stationary;
    }
    if (qualified == 0) return std::nullopt;
    return static_cast<double>(stationary) / static_cast<double>(qualified);
}

void summarize(ScanReport& report, const std::vector<std::size_t>& group_starts) {
    const auto& verdicts = report.verdicts;
    report.qualified_count = static_cast<std::size_t>(
        std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.qualified; }));
    report.p_lppl = verdicts.empty() ? 0.0
                                     : static_cast<double>(report.qualified_count) /
                                           static_cast<double>(verdicts.size());
    report.levels.clear();
    for (const double level : report.significance_levels) {
        LevelSummary s;
        std::size_t keep_df = 0;
        std::size_t keep_pp = 0;
        for (const auto& v : verdicts) {
            if (v.df_reject.empty()) continue;
            ++s.tested;
            if (!v.df_reject.at(level)) ++keep_df;
            if (!v.pp_reject.at(level)) ++keep_pp;
        }
        if (s.tested > 0) {
            s.not_reject_df = static_cast<double>(keep_df) / static_cast<double>(s.tested);
            s.not_reject_pp = static_cast<double>(keep_pp) / static_cast<double>(s.tested);
        }
        s.p_stationary_given_lppl = conditional_rate(verdicts, 0, level);
        report.levels[level] = s;
    }
    report.groups.clear();
    for (const std::size_t start : group_starts) {
        GroupSummary g;
        g.start_index = start;
        for (const auto& v : verdicts) {
            if (v.window.start_index < start) continue;
            ++g.windows;
            if (v.qualified) ++g.qualified;
        }
        g.p_lppl = g.windows == 0 ? 0.0
                                  : static_cast<double>(g.qualified) / static_cast<double>(g.windows);
        for (const double level : report.significance_levels) {
            g.p_stationary_given_lppl[level] = conditional_rate(verdicts, start, level);
        }
        report.groups.push_back(g);
    }
}

void label_groups(ScanReport& report, const PriceSeries& series) {
    for (auto& g : report.groups) g.start_date = series.date(g.start_index);
}

std::vector<std::size_t> group_starts_of(const ScanReport& report) {
    std::vector<std::size_t> starts;
    for (const auto& g : report.groups) starts.push_back(g.start_index);
    return starts;
}

FitConfig single_threaded(FitConfig config) {
    config.threads = 1;
    return config;
}

}  // namespace

bool ScanReport::self_consistent() const {
    ScanReport copy = *this;
    summarize(copy, group_starts_of(*this));
    if (copy.qualified_count != qualified_count || copy.p_lppl != p_lppl) return false;
    if (copy.levels.size() != levels.size()) return false;
    for (const auto& [level, s] : levels) {
        const auto& c = copy.levels.at(level);
        if (c.tested != s.tested || c.not_reject_df != s.not_reject_df ||
            c.not_reject_pp != s.not_reject_pp ||
            c.p_stationary_given_lppl != s.p_stationary_given_lppl) {
            return false;
        }
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& a = groups[i];
        const auto& b = copy.groups[i];
        if (a.windows != b.windows || a.qualified != b.qualified || a.p_lppl != b.p_lppl ||
            a.p_stationary_given_lppl != b.p_stationary_given_lppl) {
            return false;
        }
    }
    return true;
}

std::size_t sliding_window_count(std::size_t series_length, std::size_t window_length,
                                 std::size_t step) {
    if (step == 0) throw std::invalid_argument("step must be >= 1");
    if (series_length < window_length) return 0;
    return (series_length - window_length) / step + 1;
}

WindowVerdict evaluate_window(const PriceSeries& window_series, Window window,
                              const FitConfig& fit_config, const std::vector<double>& levels) {
    WindowVerdict v;
    v.window = window;
    v.start_date = window_series.date(0);
    v.end_date = window_series.date(window_series.last_index());
    try {
        const auto fit = fit_lppl(window_series, fit_config);
        v.fit_ok = true;
        v.qualified = fit.qualified;
        v.params = fit.params;
        v.sse = fit.sse;
        try {
            const auto df = dickey_fuller(fit.residuals);
            const auto pp = phillips_perron(fit.residuals);
            const auto ar1 = estimate_ar1(fit.residuals);
            for (const double level : levels) {
                v.df_reject[level] = df.reject.at(level);
                v.pp_reject[level] = pp.reject.at(level);
            }
            v.df_statistic = df.statistic;
            v.pp_statistic = pp.statistic;
            v.alpha_hat = ar1.alpha_hat;
        } catch (const std::invalid_argument&) {
            // Residual tests unavailable (e.g. zero-variance residuals); verdict keeps the fit.
        }
    } catch (const FitError& e) {
        v.fit_error = e.what();
    } catch (const std::invalid_argument& e) {
        v.fit_error = e.what();
    }
    return v;
}

ScanReport sliding_scan(const PriceSeries& series, std::size_t window_length, std::size_t step,
                        const FitConfig& fit_config, const std::vector<double>& levels,
                        unsigned threads) {
    validate_levels(levels);
    fit_config.validate();
    if (window_length < 2 || series.size() < window_length) {
        throw InputError("series of length " + std::to_string(series.size()) +
                         " is shorter than the window length " + std::to_string(window_length));
    }
    const std::size_t count = sliding_window_count(series.size(), window_length, step);
    ScanReport report;
    report.mode = "sliding";
    report.window_length = window_length;
    report.step = step;
    report.significance_levels = levels;
    report.fit_config = fit_config;
    report.verdicts.resize(count);
    const auto inner = threads > 1 ? single_threaded(fit_config) : fit_config;
    parallel_for(count, threads, [&](std::size_t k) {
        const Window w{k * step, window_length};
        report.verdicts[k] = evaluate_window(slice(series, w), w, inner, levels);
    });
    summarize(report, {0});
    label_groups(report, series);
    return report;
}

ScanReport shrinking_scan(const PriceSeries& series, std::size_t end_index, std::size_t start_step,
                          std::size_t min_length, const FitConfig& fit_config,
                          const std::vector<double>& levels, std::vector<std::size_t> group_starts,
                          unsigned threads) {
    validate_levels(levels);
    fit_config.validate();
    if (start_step == 0) throw std::invalid_argument("start step must be >= 1");
    if (end_index >= series.size()) throw InputError("end index beyond the series");
    if (min_length < 2 || end_index + 1 < min_length) {
        throw InputError("series ending at the end date is shorter than the minimum window");
    }
    std::vector<Window> windows;
    for (std::size_t s = 0; end_index + 1 - s >= min_length; s += start_step) {
        windows.push_back({s, end_index + 1 - s});
        if (end_index + 1 < s + start_step + min_length) break;
    }

    ScanReport report;
    report.mode = "shrinking";
    report.step = start_step;
    report.min_length = min_length;
    report.end_index = end_index;
    report.significance_levels = levels;
    report.fit_config = fit_config;
    report.verdicts.resize(windows.size());
    const auto inner = threads > 1 ? single_threaded(fit_config) : fit_config;
    parallel_for(windows.size(), threads, [&](std::size_t k) {
        report.verdicts[k] = evaluate_window(slice(series, windows[k]), windows[k], inner, levels);
    });
    group_starts.push_back(0);
    std::sort(group_starts.begin(), group_starts.end());
    group_starts.erase(std::unique(group_starts.begin(), group_starts.end()), group_starts.end());
    summarize(report, group_starts);
    label_groups(report, series);
    return report;
}

ScanReport garch_ensemble(const GarchParams& params, std::size_t count, LengthSpec lengths,
                          const FitConfig& fit_config, std::uint64_t seed,
                          const std::vector<double>& levels, unsigned threads, double ln_i0) {
    validate_levels(levels);
    fit_config.validate();
    params.validate();
    if (count < 1) throw std::invalid_argument("ensemble count must be >= 1");
    if (lengths.lo < 750 || lengths.hi < lengths.lo) {
        throw std::invalid_argument("ensemble lengths must satisfy 750 <= lo <= hi");
    }
    ScanReport report;
    report.mode = "garch-ensemble";
    report.window_length = lengths.hi;
    report.min_length = lengths.lo;
    report.significance_levels = levels;
    report.fit_config = fit_config;
    report.seed = seed;
    report.verdicts.resize(count);
    const auto inner = threads > 1 ? single_threaded(fit_config) : fit_config;
    parallel_for(count, threads, [&](std::size_t i) {
        const std::uint64_t path_seed = derive_seed(seed, i);
        std::size_t length = lengths.lo;
        if (lengths.hi > lengths.lo) {
            Philox4x32 length_rng(path_seed, 1);
            std::uniform_int_distribution<std::size_t> pick(lengths.lo, lengths.hi);
            length = pick(length_rng);
        }
        const auto path = simulate_garch(params, length, ln_i0, path_seed);
        report.verdicts[i] = evaluate_window(path, Window{0, length}, inner, levels);
    });
    summarize(report, {0});
    return report;
}

}  // namespace lppl
