#include "lpplscan/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpplscan/bayes.hpp"
#include "lpplscan/calibration.hpp"
#include "lpplscan/errors.hpp"
#include "lpplscan/lppl_model.hpp"
#include "lpplscan/parallel.hpp"
#include "lpplscan/rng.hpp"
#include "lpplscan/scanner.hpp"
#include "lpplscan/serialization.hpp"
#include "lpplscan/stationarity.hpp"
#include "lpplscan/timeseries.hpp"

#ifndef LPPLSCAN_VERSION
#define LPPLSCAN_VERSION "0.0.0"
#endif

namespace lppl::cli {

namespace {

namespace fs = std::filesystem;

struct InputOptions {
    std::string path;
    std::string date_column = "date";
    std::string price_column = "close";
    std::string transform = "log";
    std::string from;
    std::string to;
};

struct FitOptions {
    int tc_max = 252;
    int grid_tc = 10;
    int grid_beta = 8;
    int grid_omega = 8;
    int grid_phi = 4;
    std::string optimizer = "simplex";
    int max_iterations = 4000;
    double tol = 1e-10;
    int refine_top = 20;
};

struct Common {
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0: one per hardware thread
    std::string out = "lpplscan";
};

// Kept at namespace scope so the config JSON can be rebuilt after parsing.
struct DiagnosticOptions {
    int pacf_lags = 20;
    int ar_max_order = 5;
};

CsvOptions csv_options(const InputOptions& in) {
    CsvOptions o;
    o.date_column = in.date_column;
    o.price_column = in.price_column;
    o.transform = in.transform == "log" ? PriceTransform::log : PriceTransform::as_is;
    return o;
}

void add_input_options(CLI::App* cmd, InputOptions& in, bool required = true) {
    auto* opt = cmd->add_option("--input,-i", in.path, "Price CSV (one header row, ISO dates)");
    if (required) opt->required();
    cmd->add_option("--date-column", in.date_column, "Name of the date column");
    cmd->add_option("--price-column", in.price_column, "Name of the price column");
    cmd->add_option("--transform", in.transform, "Stored value: log of the price, or as-is")
        ->check(CLI::IsMember({"log", "as-is"}));
    cmd->add_option("--from", in.from, "First date to keep (YYYY-MM-DD)");
    cmd->add_option("--to", in.to, "Last date to keep (YYYY-MM-DD)");
}

void add_fit_options(CLI::App* cmd, FitOptions& f) {
    cmd->add_option("--tc-max", f.tc_max, "Search t_c up to this many trading days past the end")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--grid-tc", f.grid_tc, "Multistart grid points for t_c")->check(CLI::PositiveNumber);
    cmd->add_option("--grid-beta", f.grid_beta, "Multistart grid points for beta")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--grid-omega", f.grid_omega, "Multistart grid points for omega")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--grid-phi", f.grid_phi, "Multistart grid points for phi")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--optimizer", f.optimizer, "Local optimizer")
        ->check(CLI::IsMember({"simplex", "gradient"}));
    cmd->add_option("--max-iterations", f.max_iterations, "Iteration cap per local run")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol", f.tol, "Convergence tolerance on relative SSE change")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--refine-top", f.refine_top, "Grid starts refined locally")
        ->check(CLI::PositiveNumber);
}

void add_common_options(CLI::App* cmd, Common& c, bool with_seed) {
    if (with_seed) cmd->add_option("--seed", c.seed, "Master seed of the run");
    cmd->add_option("--threads", c.threads, "Worker threads (0: all hardware threads)");
    cmd->add_option("--out,-o", c.out, "Output path prefix");
}

unsigned resolved_threads(const Common& c) {
    return c.threads == 0 ? default_thread_count() : c.threads;
}

FitConfig fit_config(const FitOptions& f, unsigned threads) {
    FitConfig c;
    c.tc_max_beyond_end = f.tc_max;
    c.grid = {f.grid_tc, f.grid_beta, f.grid_omega, f.grid_phi};
    c.local_optimizer = f.optimizer == "gradient" ? LocalOptimizer::gradient : LocalOptimizer::simplex;
    c.max_iterations = f.max_iterations;
    c.convergence_tol = f.tol;
    c.refine_top = f.refine_top;
    c.threads = threads;
    c.validate();
    return c;
}

std::optional<Date> optional_date(const std::string& text) {
    if (text.empty()) return std::nullopt;
    return parse_date(text);
}

PriceSeries load_series(const InputOptions& in) {
    const auto full = ingest_csv(in.path, csv_options(in));
    if (in.from.empty() && in.to.empty()) return full;
    return select_dates(full, optional_date(in.from), optional_date(in.to));
}

Json input_json(const InputOptions& in) {
    return Json{{"path", in.path},         {"date_column", in.date_column},
                {"price_column", in.price_column}, {"transform", in.transform},
                {"from", in.from.empty() ? Json(nullptr) : Json(in.from)},
                {"to", in.to.empty() ? Json(nullptr) : Json(in.to)}};
}

Json series_json(const PriceSeries& s) {
    return Json{{"fingerprint", fingerprint(s)},
                {"observations", s.size()},
                {"first_date", format_date(s.date(0))},
                {"last_date", format_date(s.date(s.last_index()))},
                {"source_column", s.source_column()}};
}

// SOURCE_DATE_EPOCH pins the timestamp, which makes whole output files
// byte-identical across runs.
std::string timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* fixed = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(fixed, &end, 10);
        if (end != fixed && *end == '\0') now = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Json manifest(const std::string& command, Json config, Json inputs,
              std::optional<std::uint64_t> seed) {
    return Json{{"command", command},
                {"tool_version", LPPLSCAN_VERSION},
                {"schema_version", kSchemaVersion},
                {"seed", seed ? Json(*seed) : Json(nullptr)},
                {"config", std::move(config)},
                {"inputs", std::move(inputs)},
                {"timestamp", timestamp()}};
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_json(const fs::path& path, const Json& doc) {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Calendar date of a (possibly fractional, possibly future) trading-day index,
// counting weekdays past the last observation.
std::string trading_day_date(const PriceSeries& s, double t) {
    if (t <= static_cast<double>(s.last_index())) {
        return format_date(s.date(static_cast<std::size_t>(std::max(0.0, std::floor(t)))));
    }
    const auto ahead = static_cast<std::size_t>(std::lround(t - static_cast<double>(s.last_index())));
    if (ahead == 0) return format_date(s.date(s.last_index()));
    const auto next = Date{std::chrono::sys_days{s.date(s.last_index())} + std::chrono::days{1}};
    return format_date(business_days(next, ahead).back());
}

Json residual_diagnostics(std::span<const double> resid, const DiagnosticOptions& d) {
    try {
        return Json{{"dickey_fuller", to_json(dickey_fuller(resid))},
                    {"phillips_perron", to_json(phillips_perron(resid))},
                    {"ar1", to_json(estimate_ar1(resid))},
                    {"pacf", to_json(pacf(resid, d.pacf_lags))},
                    {"ar_order", to_json(select_ar_order(resid, d.ar_max_order))}};
    } catch (const std::invalid_argument& e) {
        return Json{{"error", e.what()}};
    }
}

Json fit_options_json(const FitOptions& f) {
    return Json{{"tc_max", f.tc_max},
                {"grid", {f.grid_tc, f.grid_beta, f.grid_omega, f.grid_phi}},
                {"optimizer", f.optimizer},
                {"max_iterations", f.max_iterations},
                {"tol", f.tol},
                {"refine_top", f.refine_top}};
}

// ---- fit ----------------------------------------------------------------

struct FitCommand {
    InputOptions input;
    FitOptions fit;
    Common common;
    DiagnosticOptions diag;
    bool plot_data = false;

    void attach(CLI::App* cmd) {
        add_input_options(cmd, input);
        add_fit_options(cmd, fit);
        add_common_options(cmd, common, false);
        cmd->add_option("--pacf-lags", diag.pacf_lags, "PACF lags in the residual diagnostics")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--ar-max-order", diag.ar_max_order, "Largest AR order for SIC/HQ selection")
            ->check(CLI::PositiveNumber);
        cmd->add_flag("--plot-data", plot_data,
                      "Also write <out>.plotdata.csv (t, date, ln_I, H, nu, lag, pacf)");
    }

    int execute(std::ostream& out) const {
        const auto series = load_series(input);
        const auto cfg = fit_config(fit, resolved_threads(common));
        const auto result = fit_lppl(series, cfg);
        const Json diagnostics = residual_diagnostics(result.residuals, diag);

        Json config = fit_options_json(fit);
        config["input"] = input_json(input);
        config["pacf_lags"] = diag.pacf_lags;
        config["ar_max_order"] = diag.ar_max_order;
        config["threads"] = cfg.threads;
        Json doc{{"schema_version", kSchemaVersion},
                 {"manifest", manifest("fit", config,
                                       Json::array({{{"path", input.path},
                                                     {"fingerprint", fingerprint(series)}}}),
                                       std::nullopt)},
                 {"series", series_json(series)},
                 {"fit", to_json(result, true)},
                 {"t_c_date", trading_day_date(series, result.params.t_c)},
                 {"residual_diagnostics", diagnostics}};
        const fs::path json_path = common.out + ".fit.json";
        write_json(json_path, doc);
        out << "fit: qualified=" << (result.qualified ? "true" : "false")
            << " t_c=" << result.params.t_c << " (" << doc["t_c_date"].get<std::string>() << ")"
            << " beta=" << result.params.beta << " omega=" << result.params.omega
            << " sse=" << result.sse << "\n"
            << "wrote " << json_path.string() << "\n";

        if (plot_data) {
            const fs::path csv_path = common.out + ".plotdata.csv";
            write_plot_data(csv_path, series, result);
            out << "wrote " << csv_path.string() << "\n";
        }
        return kExitOk;
    }

    void write_plot_data(const fs::path& path, const PriceSeries& series,
                         const LpplFit& result) const {
        std::vector<double> pacf_values;
        try {
            pacf_values = pacf(result.residuals, diag.pacf_lags).values;
        } catch (const std::invalid_argument&) {
        }
        ensure_parent(path);
        std::ofstream csv(path);
        if (!csv) throw InputError("cannot write " + path.string());
        csv << "t,date,ln_I,H,nu,lag,pacf\n";
        for (std::size_t t = 0; t < series.size(); ++t) {
            const double ln_i = series.log_price(t);
            const double nu = result.residuals[t];
            csv << t << ',' << format_date(series.date(t)) << ',' << num(ln_i) << ','
                << num(ln_i - nu) << ',' << num(nu) << ',';
            if (t < pacf_values.size()) csv << t + 1 << ',' << num(pacf_values[t]);
            else csv << ',';
            csv << '\n';
        }
    }
};

// ---- scan ---------------------------------------------------------------

struct ScanCommand {
    InputOptions input;
    FitOptions fit;
    Common common;
    std::string mode = "sliding";
    std::size_t window = 750;
    std::optional<std::size_t> step;
    std::size_t min_length = 750;
    std::string end;
    std::vector<std::string> group_starts;
    std::vector<double> levels = kDefaultSignificanceLevels;
    std::size_t count = 1000;
    std::size_t length_lo = 750;
    std::size_t length_hi = 1500;
    GarchParams garch;

    void attach(CLI::App* cmd) {
        add_input_options(cmd, input, false);
        add_fit_options(cmd, fit);
        add_common_options(cmd, common, true);
        cmd->add_option("--mode", mode, "Window scheme; garch fits a simulated ensemble instead of --input")
            ->check(CLI::IsMember({"sliding", "shrinking", "garch"}));
        cmd->add_option("--window", window, "Sliding window length in trading days");
        cmd->add_option("--step", step,
                        "Start-index increment (default: 25 sliding, 5 shrinking)");
        cmd->add_option("--min-length", min_length, "Shortest shrinking window");
        cmd->add_option("--end", end, "Fixed last date of shrinking windows (default: last date)");
        cmd->add_option("--group-start", group_starts,
                        "Start date of a cumulative summary group (shrinking; repeatable)");
        cmd->add_option("--levels", levels, "Significance levels of the unit-root tests")
            ->delimiter(',');
        cmd->add_option("--count", count, "GARCH ensemble size");
        cmd->add_option("--length-min", length_lo, "Shortest GARCH path");
        cmd->add_option("--length-max", length_hi, "Longest GARCH path");
        cmd->add_option("--mu0", garch.mu0, "GARCH mean daily return");
        cmd->add_option("--sigma0-sq", garch.sigma0_sq, "GARCH variance intercept");
        cmd->add_option("--arch", garch.arch, "GARCH ARCH coefficient");
        cmd->add_option("--garch", garch.garch, "GARCH persistence coefficient");
        cmd->add_option("--student-df", garch.student_df, "Student-t degrees of freedom");
    }

    int execute(std::ostream& out) const {
        const unsigned threads = resolved_threads(common);
        const auto cfg = fit_config(fit, threads);
        const std::size_t resolved_step = step.value_or(mode == "shrinking" ? 5 : 25);
        Json config = fit_options_json(fit);
        config["mode"] = mode;
        config["levels"] = levels;
        config["threads"] = threads;
        Json inputs = Json::array();
        std::optional<PriceSeries> series;
        ScanReport report;

        if (mode == "garch") {
            config["garch"] = to_json(garch);
            config["count"] = count;
            config["lengths"] = {length_lo, length_hi};
            report = garch_ensemble(garch, count, LengthSpec::uniform(length_lo, length_hi), cfg,
                                    common.seed, levels, threads);
        } else {
            if (input.path.empty()) throw InputError("--input is required for mode " + mode);
            series = load_series(input);
            config["input"] = input_json(input);
            config["step"] = resolved_step;
            inputs.push_back({{"path", input.path}, {"fingerprint", fingerprint(*series)}});
            if (mode == "sliding") {
                config["window"] = window;
                report = sliding_scan(*series, window, resolved_step, cfg, levels, threads);
            } else {
                std::size_t end_index = series->last_index();
                if (!end.empty()) {
                    const auto idx = series->last_on_or_before(parse_date(end));
                    if (!idx) throw InputError("--end " + end + " precedes the series");
                    end_index = *idx;
                }
                std::vector<std::size_t> starts;
                for (const auto& g : group_starts) {
                    const auto idx = series->first_on_or_after(parse_date(g));
                    if (!idx || *idx > end_index) {
                        throw InputError("--group-start " + g + " lies after the end date");
                    }
                    starts.push_back(*idx);
                }
                config["end"] = format_date(series->date(end_index));
                config["min_length"] = min_length;
                config["group_starts"] = group_starts;
                report = shrinking_scan(*series, end_index, resolved_step, min_length, cfg, levels,
                                        starts, threads);
            }
        }
        if (!report.self_consistent()) {
            throw std::logic_error("scan report aggregates are inconsistent with its verdicts");
        }

        Json doc{{"schema_version", kSchemaVersion},
                 {"manifest", manifest("scan", config, inputs,
                                       mode == "garch" ? std::optional(common.seed) : std::nullopt)}};
        if (series) doc["series"] = series_json(*series);
        doc["report"] = to_json(report);
        const fs::path json_path = common.out + ".scan.json";
        const fs::path csv_path = common.out + ".scan.csv";
        write_json(json_path, doc);
        {
            std::ofstream csv(csv_path);
            if (!csv) throw InputError("cannot write " + csv_path.string());
            write_scan_csv(report, csv);
        }
        out << "scan (" << mode << "): " << report.verdicts.size() << " windows, "
            << report.qualified_count << " qualified, P_LPPL=" << report.p_lppl << "\n"
            << "wrote " << json_path.string() << " and " << csv_path.string() << "\n";
        return kExitOk;
    }
};

// ---- sim ----------------------------------------------------------------

struct SimCommand {
    Common common;
    std::string model;
    std::size_t length = 946;
    std::optional<std::size_t> length_max;
    std::size_t count = 1;
    std::optional<double> ln_i0;
    std::string start_date = "2000-01-03";
    std::string price_column = "close";
    std::string transform = "log";
    LpplParams bubble{6.0, 0.05, 0.8, 0.5, 9.5, 3.141592653589793, 0.0};
    double tc_offset = 60.0;
    OuResidualParams resid;
    GarchParams garch;

    void attach(CLI::App* cmd) {
        add_common_options(cmd, common, true);
        cmd->add_option("--model", model, "Generator")
            ->required()
            ->check(CLI::IsMember({"garch", "bubble"}));
        cmd->add_option("--length", length, "Observations per path");
        cmd->add_option("--length-max", length_max,
                        "Draw each length uniformly from [--length, --length-max]");
        cmd->add_option("--count", count, "Number of paths")->check(CLI::PositiveNumber);
        cmd->add_option("--ln-i0", ln_i0, "Initial log-price (default: H(0) for bubble, 0 for garch)");
        cmd->add_option("--start-date", start_date, "Date of the first observation");
        cmd->add_option("--price-column", price_column, "Name of the written price column");
        cmd->add_option("--transform", transform,
                        "log: write exp(ln I) so ingesting with log inverts it; as-is: write ln I")
            ->check(CLI::IsMember({"log", "as-is"}));
        cmd->add_option("--A", bubble.A, "LPPL level A");
        cmd->add_option("--B", bubble.B, "LPPL amplitude B");
        cmd->add_option("--C", bubble.C, "LPPL relative log-periodic amplitude C");
        cmd->add_option("--beta", bubble.beta, "LPPL exponent beta");
        cmd->add_option("--omega", bubble.omega, "LPPL angular log-frequency omega");
        cmd->add_option("--phi", bubble.phi, "LPPL phase phi");
        cmd->add_option("--tc-offset", tc_offset, "t_c minus the last index, in trading days");
        cmd->add_option("--alpha", resid.alpha, "Residual mean-reversion rate");
        cmd->add_option("--sigma-u", resid.sigma_u, "Residual innovation standard deviation");
        cmd->add_option("--mu0", garch.mu0, "GARCH mean daily return");
        cmd->add_option("--sigma0-sq", garch.sigma0_sq, "GARCH variance intercept");
        cmd->add_option("--arch", garch.arch, "GARCH ARCH coefficient");
        cmd->add_option("--garch", garch.garch, "GARCH persistence coefficient");
        cmd->add_option("--student-df", garch.student_df, "Student-t degrees of freedom");
    }

    int execute(std::ostream& out) const {
        if (length < 2) throw InputError("--length must be >= 2");
        if (length_max && *length_max < length) throw InputError("--length-max below --length");
        const Date first = parse_date(start_date);
        CsvOptions csv;
        csv.price_column = price_column;
        csv.transform = transform == "log" ? PriceTransform::log : PriceTransform::as_is;

        Json config{{"model", model},
                    {"length", length},
                    {"length_max", length_max ? Json(*length_max) : Json(nullptr)},
                    {"count", count},
                    {"ln_i0", ln_i0 ? Json(*ln_i0) : Json(nullptr)},
                    {"start_date", start_date},
                    {"price_column", price_column},
                    {"transform", transform}};
        if (model == "bubble") {
            config["lppl"] = to_json(bubble);
            config["lppl"].erase("t_c");
            config["tc_offset"] = tc_offset;
            config["residual"] = to_json(resid);
        } else {
            config["garch"] = to_json(garch);
        }

        Json files = Json::array();
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint64_t path_seed = derive_seed(common.seed, i);
            std::size_t n = length;
            if (length_max && *length_max > length) {
                Philox4x32 length_rng(path_seed, 1);
                std::uniform_int_distribution<std::size_t> pick(length, *length_max);
                n = pick(length_rng);
            }
            Json entry{{"index", i}, {"seed", path_seed}, {"length", n}};
            std::optional<PriceSeries> path;
            if (model == "bubble") {
                LpplParams p = bubble;
                p.t_c = static_cast<double>(n - 1) + tc_offset;
                path = simulate_bubble(p, resid, n, ln_i0.value_or(lppl_h(p, 0.0)), path_seed, first);
                entry["t_c"] = p.t_c;
            } else {
                path = simulate_garch(garch, n, ln_i0.value_or(0.0), path_seed, first);
            }
            char suffix[32];
            std::snprintf(suffix, sizeof suffix, "_%03zu.csv", i);
            const fs::path file = common.out + suffix;
            ensure_parent(file);
            write_csv(*path, file, csv);
            entry["path"] = file.string();
            entry["fingerprint"] = fingerprint(*path);
            files.push_back(entry);
        }
        Json doc{{"schema_version", kSchemaVersion},
                 {"manifest", manifest("sim", config, Json::array(), common.seed)},
                 {"files", files}};
        const fs::path manifest_path = common.out + ".sim.json";
        write_json(manifest_path, doc);
        out << "sim (" << model << "): wrote " << count << " series and "
            << manifest_path.string() << "\n";
        return kExitOk;
    }
};

// ---- bayes --------------------------------------------------------------

struct BayesCommand {
    InputOptions input;
    Common common;
    std::vector<std::string> models{"bs", "pl", "lppl"};
    std::string priors_path;
    int samples = 10000;
    int reps = 100;
    bool dump_priors = false;
    std::string a_prior_scale = "variance";

    void attach(CLI::App* cmd) {
        add_input_options(cmd, input, false);
        add_common_options(cmd, common, true);
        cmd->add_option("--models", models, "Models to compare")
            ->delimiter(',')
            ->check(CLI::IsMember({"bs", "pl", "lppl", "BS", "PL", "LPPL"}));
        cmd->add_option("--priors", priors_path, "JSON prior file (keys as printed by --dump-priors)");
        cmd->add_option("--samples", samples, "Prior draws per repetition");
        cmd->add_option("--reps", reps, "Independent repetitions");
        cmd->add_flag("--dump-priors", dump_priors, "Print the resolved priors as JSON and exit");
        cmd->add_option("--a-prior-scale", a_prior_scale,
                        "Reading of the second parameter of the default A prior, 0.05")
            ->check(CLI::IsMember({"variance", "sd"}));
    }

    PriorSpec resolved_priors() const {
        PriorSpec p;
        if (a_prior_scale == "sd") p.A.sd = 0.05;
        if (!priors_path.empty()) {
            std::ifstream in(priors_path);
            if (!in) throw InputError("cannot open " + priors_path);
            Json j;
            try {
                j = Json::parse(in);
            } catch (const Json::parse_error& e) {
                throw InputError(priors_path + ": " + e.what());
            }
            const PriorSpec base = p;
            p = priors_from_json(j);
            if (!j.contains("A")) p.A = base.A;
        }
        try {
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        return p;
    }

    int execute(std::ostream& out) const {
        const PriorSpec priors = resolved_priors();
        if (dump_priors) {
            out << to_json(priors).dump(2) << '\n';
            return kExitOk;
        }
        if (input.path.empty()) throw InputError("--input is required");
        const auto series = load_series(input);
        const unsigned threads = resolved_threads(common);
        std::vector<ModelEvidence> evidence;
        for (const auto& name : models) {
            evidence.push_back(log_marginal_likelihood(parse_model(name), series, priors, samples,
                                                       reps, common.seed, threads));
        }
        Json config{{"input", input_json(input)},
                    {"models", models},
                    {"priors_file", priors_path.empty() ? Json(nullptr) : Json(priors_path)},
                    {"a_prior_scale", a_prior_scale},
                    {"samples", samples},
                    {"reps", reps},
                    {"threads", threads}};
        Json ev = Json::array();
        for (const auto& e : evidence) ev.push_back(to_json(e));
        Json factors = Json::object();
        for (std::size_t a = 0; a < evidence.size(); ++a) {
            for (std::size_t b = 0; b < evidence.size(); ++b) {
                if (a == b) continue;
                factors[to_string(evidence[a].model) + "_vs_" + to_string(evidence[b].model)] =
                    log_bayes_factor(evidence[a], evidence[b]);
            }
        }
        Json doc{{"schema_version", kSchemaVersion},
                 {"manifest", manifest("bayes", config,
                                       Json::array({{{"path", input.path},
                                                     {"fingerprint", fingerprint(series)}}}),
                                       common.seed)},
                 {"series", series_json(series)},
                 {"priors", to_json(priors)},
                 {"evidence", ev},
                 {"log_bayes_factors", factors}};
        const fs::path json_path = common.out + ".bayes.json";
        write_json(json_path, doc);
        for (const auto& e : evidence) {
            out << to_string(e.model) << ": log-ML " << e.mean << " [" << e.quantile_2_5 << ", "
                << e.quantile_97_5 << "]\n";
        }
        out << "wrote " << json_path.string() << "\n";
        return kExitOk;
    }
};

// ---- residual-test -------------------------------------------------------

struct ResidualCommand {
    Common common;
    std::string path;
    std::string column = "nu";
    std::vector<double> levels{0.001, 0.01, 0.05};
    int df_lags = 0;
    std::optional<int> pp_bandwidth;
    DiagnosticOptions diag;
    int null_reps = 2000;
    std::optional<int> null_length;

    void attach(CLI::App* cmd) {
        add_common_options(cmd, common, true);
        cmd->add_option("--input,-i", path, "CSV holding the residual series")->required();
        cmd->add_option("--column", column, "Residual column name");
        cmd->add_option("--levels", levels, "Significance levels")->delimiter(',');
        cmd->add_option("--df-lags", df_lags, "Lagged differences in the Dickey-Fuller regression")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--pp-bandwidth", pp_bandwidth,
                        "Phillips-Perron Bartlett bandwidth (default floor(4 (n/100)^(2/9)))");
        cmd->add_option("--pacf-lags", diag.pacf_lags, "PACF lags")->check(CLI::PositiveNumber);
        cmd->add_option("--ar-max-order", diag.ar_max_order, "Largest AR order for SIC/HQ")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--null-reps", null_reps,
                        "Random walks simulated for the Dickey-Fuller null (0 disables)")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--null-length", null_length,
                        "Length of the simulated walks (default: residual length)");
    }

    int execute(std::ostream& out) const {
        const auto resid = read_numeric_column(path, column);
        const auto& table = no_constant_critical_values();
        for (const double l : levels) {
            if (!table.contains(l)) {
                throw InputError("unsupported level " + level_key(l) + " (supported: 0.001, 0.01, 0.05)");
            }
        }
        const unsigned threads = resolved_threads(common);
        const auto df = dickey_fuller(resid, df_lags);
        const auto pp = phillips_perron(resid, pp_bandwidth);
        Json report{{"observations", resid.size()},
                    {"dickey_fuller", to_json(df)},
                    {"phillips_perron", to_json(pp)},
                    {"ar1", to_json(estimate_ar1(resid))},
                    {"pacf", to_json(pacf(resid, diag.pacf_lags))},
                    {"ar_order", to_json(select_ar_order(resid, diag.ar_max_order))}};
        if (null_reps > 0) {
            const int n = null_length.value_or(static_cast<int>(resid.size()));
            const auto q = simulate_df_null_quantiles(levels, null_reps, n, common.seed, threads);
            Json crit = Json::object();
            Json df_rej = Json::object();
            Json pp_rej = Json::object();
            for (const auto& [level, value] : q) {
                crit[level_key(level)] = value;
                df_rej[level_key(level)] = df.statistic < value;
                pp_rej[level_key(level)] = pp.statistic < value;
            }
            report["simulated_null"] = {{"replications", null_reps},
                                        {"length", n},
                                        {"critical_values", crit},
                                        {"dickey_fuller_reject", df_rej},
                                        {"phillips_perron_reject", pp_rej}};
        }
        Json config{{"input", path},
                    {"column", column},
                    {"levels", levels},
                    {"df_lags", df_lags},
                    {"pp_bandwidth", pp_bandwidth ? Json(*pp_bandwidth) : Json(nullptr)},
                    {"pacf_lags", diag.pacf_lags},
                    {"ar_max_order", diag.ar_max_order},
                    {"null_reps", null_reps},
                    {"threads", threads}};
        Json doc{{"schema_version", kSchemaVersion},
                 {"manifest", manifest("residual-test", config,
                                       Json::array({{{"path", path}}}), common.seed)},
                 {"residual_diagnostics", report}};
        const fs::path json_path = common.out + ".residual.json";
        write_json(json_path, doc);
        out << "DF " << df.statistic << ", PP " << pp.statistic << "\n"
            << "wrote " << json_path.string() << "\n";
        return kExitOk;
    }
};

void report_error(std::ostream& err, int code, const std::string& kind, const std::string& message,
                  const std::string& diagnostics = {}) {
    Json e{{"exit_code", code}, {"kind", kind}, {"message", message}};
    if (!diagnostics.empty()) e["diagnostics"] = diagnostics;
    err << Json{{"error", e}}.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"LPPL bubble diagnostics: calibration, residual unit-root tests, window scans, "
                 "simulation and Bayesian model comparison",
                 "lpplscan"};
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", LPPLSCAN_VERSION);
    app.set_config("--config", "", "TOML/INI file; [fit], [scan], ... sections hold subcommand options");
    app.require_subcommand(1);

    FitCommand fit;
    ScanCommand scan;
    SimCommand sim;
    BayesCommand bayes;
    ResidualCommand residual;
    auto* fit_cmd = app.add_subcommand("fit", "Calibrate the LPPL trajectory to a price series");
    auto* scan_cmd = app.add_subcommand("scan", "Sliding, shrinking or GARCH-ensemble window scans");
    auto* sim_cmd = app.add_subcommand("sim", "Simulate GARCH or volatility-confined bubble paths");
    auto* bayes_cmd = app.add_subcommand("bayes", "Monte-Carlo log marginal likelihoods of BS, PL, LPPL");
    auto* residual_cmd = app.add_subcommand("residual-test", "Unit-root and AR diagnostics of a residual series");
    fit.attach(fit_cmd);
    scan.attach(scan_cmd);
    sim.attach(sim_cmd);
    bayes.attach(bayes_cmd);
    residual.attach(residual_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        report_error(err, kExitInput, "usage", e.what());
        return kExitInput;
    }

    try {
        if (fit_cmd->parsed()) return fit.execute(out);
        if (scan_cmd->parsed()) return scan.execute(out);
        if (sim_cmd->parsed()) return sim.execute(out);
        if (bayes_cmd->parsed()) return bayes.execute(out);
        if (residual_cmd->parsed()) return residual.execute(out);
    } catch (const FitError& e) {
        report_error(err, kExitFit, "fit_error", e.what(), e.diagnostics());
        return kExitFit;
    } catch (const InputError& e) {
        report_error(err, kExitInput, "input_error", e.what());
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        report_error(err, kExitInput, "input_error", e.what());
        return kExitInput;
    } catch (const std::out_of_range& e) {
        report_error(err, kExitInput, "input_error", e.what());
        return kExitInput;
    } catch (const std::domain_error& e) {
        report_error(err, kExitInput, "input_error", e.what());
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        report_error(err, kExitInput, "io_error", e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        report_error(err, kExitInternal, "internal_error", e.what());
        return kExitInternal;
    }
    return kExitInternal;
}

}  // namespace lppl::cli
