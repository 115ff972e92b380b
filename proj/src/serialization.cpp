#include "lpplscan/serialization.hpp"

#include <cstdio>
#include <ostream>
#include <set>

#include "lpplscan/errors.hpp"

namespace lppl {

namespace {

const char* test_name(UnitRootTest t) {
    return t == UnitRootTest::dickey_fuller ? "dickey_fuller" : "phillips_perron";
}

Json optional_number(const std::optional<double>& v) {
    return v ? Json(*v) : Json(nullptr);
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string{}; }

}  // namespace

std::string level_key(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", level);
    return buf;
}

Json to_json(const LpplParams& p) {
    return Json{{"A", p.A},     {"B", p.B},         {"C", p.C}, {"beta", p.beta},
                {"omega", p.omega}, {"phi", p.phi}, {"t_c", p.t_c}};
}

Json to_json(const FitConfig& c) {
    return Json{{"tc_max_beyond_end", c.tc_max_beyond_end},
                {"grid", {{"t_c", c.grid.t_c}, {"beta", c.grid.beta}, {"omega", c.grid.omega},
                          {"phi", c.grid.phi}}},
                {"local_optimizer",
                 c.local_optimizer == LocalOptimizer::simplex ? "simplex" : "gradient"},
                {"max_iterations", c.max_iterations},
                {"convergence_tol", c.convergence_tol},
                {"refine_top", c.refine_top},
                {"beta_bounds", {c.beta_min, c.beta_max}},
                {"omega_bounds", {c.omega_min, c.omega_max}}};
}

Json to_json(const ConditionReport& r) {
    return Json{{"B_positive", r.b_positive},       {"beta_in_range", r.beta_in_range},
                {"omega_in_range", r.omega_in_range}, {"abs_C_below_1", r.c_bounded},
                {"t_c_in_horizon", r.tc_in_horizon}, {"qualified", r.qualified}};
}

Json to_json(const LpplFit& fit, bool include_residuals) {
    Json j{{"params", to_json(fit.params)},
           {"sse", fit.sse},
           {"qualified", fit.qualified},
           {"conditions", to_json(fit.conditions)},
           {"optimizer",
            {{"starts_refined", fit.starts_refined},
             {"starts_converged", fit.starts_converged},
             {"evaluations", fit.evaluations}}}};
    if (include_residuals) j["residuals"] = fit.residuals;
    return j;
}

Json to_json(const UnitRootReport& r) {
    Json cv = Json::object();
    Json rej = Json::object();
    for (const auto& [level, value] : r.critical_values) cv[level_key(level)] = value;
    for (const auto& [level, value] : r.reject) rej[level_key(level)] = value;
    return Json{{"test", test_name(r.test)},
                {"statistic", r.statistic},
                {"critical_values", cv},
                {"reject", rej},
                {"regression_spec", r.regression_spec},
                {r.test == UnitRootTest::dickey_fuller ? "lags" : "bandwidth", r.bandwidth_or_lags},
                {"observations", r.observations}};
}

Json to_json(const Ar1Report& r) {
    return Json{{"alpha_hat", r.alpha_hat},
                {"std_error", r.std_error},
                {"t_statistic", r.t_statistic},
                {"innovation_variance", r.innovation_variance},
                {"observations", r.observations}};
}

Json to_json(const PacfResult& r) { return Json{{"values", r.values}, {"band", r.band}}; }

Json to_json(const ArOrderReport& r) {
    Json rows = Json::array();
    for (const auto& row : r.criterion_values) {
        rows.push_back({{"order", row.order},
                        {"innovation_variance", row.innovation_variance},
                        {"sic", row.sic},
                        {"hq", row.hq}});
    }
    return Json{{"order_sic", r.order_sic},
                {"order_hq", r.order_hq},
                {"effective_sample", r.effective_sample},
                {"criterion_values", rows}};
}

Json to_json(const GarchParams& p) {
    return Json{{"mu0", p.mu0},     {"sigma0_sq", p.sigma0_sq}, {"arch", p.arch},
                {"garch", p.garch}, {"student_df", p.student_df}};
}

Json to_json(const OuResidualParams& p) {
    return Json{{"alpha", p.alpha}, {"sigma_u", p.sigma_u}};
}

Json to_json(const PriorSpec& p) {
    auto normal = [](const NormalPrior& d) {
        return Json{{"dist", "normal"}, {"mean", d.mean}, {"sd", d.sd}};
    };
    auto gamma = [](const GammaPrior& d) {
        return Json{{"dist", "gamma"}, {"shape", d.shape}, {"scale", d.scale}};
    };
    auto uniform = [](const UniformPrior& d) {
        return Json{{"dist", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
    };
    return Json{{"mu", normal(p.mu)},
                {"tau", gamma(p.tau)},
                {"alpha", gamma(p.alpha)},
                {"A", normal(p.A)},
                {"B", gamma(p.B)},
                {"C", uniform(p.C)},
                {"beta", {{"dist", "beta"}, {"a", p.beta.a}, {"b", p.beta.b}}},
                {"omega", gamma(p.omega)},
                {"phi", uniform(p.phi)},
                {"tc_minus_tN", gamma(p.tc_minus_tN)}};
}

PriorSpec priors_from_json(const Json& j) {
    PriorSpec p;
    if (!j.is_object()) throw InputError("priors document must be a JSON object");
    const std::set<std::string> known{"mu", "tau", "alpha", "A", "B", "C",
                                      "beta", "omega", "phi", "tc_minus_tN"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw InputError("unknown prior '" + key + "'");
    }
    auto read = [&](const char* key, const char* field, double& target) {
        if (!j.contains(key)) return;
        const auto& d = j.at(key);
        if (d.contains(field)) {
            if (!d.at(field).is_number()) {
                throw InputError(std::string("prior ") + key + "." + field + " must be a number");
            }
            target = d.at(field).get<double>();
        }
    };
    read("mu", "mean", p.mu.mean);
    read("mu", "sd", p.mu.sd);
    read("tau", "shape", p.tau.shape);
    read("tau", "scale", p.tau.scale);
    read("alpha", "shape", p.alpha.shape);
    read("alpha", "scale", p.alpha.scale);
    read("A", "mean", p.A.mean);
    read("A", "sd", p.A.sd);
    read("B", "shape", p.B.shape);
    read("B", "scale", p.B.scale);
    read("C", "lo", p.C.lo);
    read("C", "hi", p.C.hi);
    read("beta", "a", p.beta.a);
    read("beta", "b", p.beta.b);
    read("omega", "shape", p.omega.shape);
    read("omega", "scale", p.omega.scale);
    read("phi", "lo", p.phi.lo);
    read("phi", "hi", p.phi.hi);
    read("tc_minus_tN", "shape", p.tc_minus_tN.shape);
    read("tc_minus_tN", "scale", p.tc_minus_tN.scale);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    return p;
}

Json to_json(const ModelEvidence& e) {
    return Json{{"model", to_string(e.model)},
                {"log_ml_mean", e.mean},
                {"quantile_2_5", e.quantile_2_5},
                {"quantile_97_5", e.quantile_97_5},
                {"log_ml_estimates", e.log_ml_estimates},
                {"mc_samples_per_rep", e.mc_samples_per_rep},
                {"repetitions", e.repetitions},
                {"seed", e.seed},
                {"series_fingerprint", e.series_fingerprint}};
}

Json to_json(const WindowVerdict& v) {
    Json j{{"start_index", v.window.start_index},
           {"length", v.window.length},
           {"start_date", format_date(v.start_date)},
           {"end_date", format_date(v.end_date)},
           {"fit_ok", v.fit_ok},
           {"qualified", v.qualified}};
    if (!v.fit_ok) {
        j["fit_error"] = v.fit_error;
        return j;
    }
    j["params"] = to_json(v.params);
    j["sse"] = v.sse;
    if (!v.df_reject.empty()) {
        Json df = Json::object();
        Json pp = Json::object();
        for (const auto& [level, r] : v.df_reject) df[level_key(level)] = r;
        for (const auto& [level, r] : v.pp_reject) pp[level_key(level)] = r;
        j["df_statistic"] = optional_number(v.df_statistic);
        j["pp_statistic"] = optional_number(v.pp_statistic);
        j["df_reject"] = df;
        j["pp_reject"] = pp;
        j["alpha_hat"] = optional_number(v.alpha_hat);
    }
    return j;
}

Json to_json(const ScanReport& r) {
    Json levels = Json::object();
    for (const auto& [level, s] : r.levels) {
        levels[level_key(level)] = {{"tested", s.tested},
                                    {"not_reject_df", s.not_reject_df},
                                    {"not_reject_pp", s.not_reject_pp},
                                    {"p_stationary_given_lppl",
                                     optional_number(s.p_stationary_given_lppl)}};
    }
    Json groups = Json::array();
    for (const auto& g : r.groups) {
        Json cond = Json::object();
        for (const auto& [level, p] : g.p_stationary_given_lppl) {
            cond[level_key(level)] = optional_number(p);
        }
        groups.push_back({{"start_index", g.start_index},
                          {"start_date", r.mode == "garch-ensemble" ? Json(nullptr)
                                                                   : Json(format_date(g.start_date))},
                          {"windows", g.windows},
                          {"qualified", g.qualified},
                          {"p_lppl", g.p_lppl},
                          {"p_stationary_given_lppl", cond}});
    }
    Json verdicts = Json::array();
    for (const auto& v : r.verdicts) verdicts.push_back(to_json(v));
    Json config{{"significance_levels", r.significance_levels}, {"fit", to_json(r.fit_config)}};
    if (r.mode == "sliding") {
        config["window_length"] = r.window_length;
        config["step"] = r.step;
    } else if (r.mode == "shrinking") {
        config["end_index"] = r.end_index;
        config["start_step"] = r.step;
        config["min_length"] = r.min_length;
    } else {
        config["length_lo"] = r.min_length;
        config["length_hi"] = r.window_length;
        config["seed"] = r.seed;
    }
    return Json{{"mode", r.mode},
                {"windows", r.verdicts.size()},
                {"qualified", r.qualified_count},
                {"p_lppl", r.p_lppl},
                {"levels", levels},
                {"groups", groups},
                {"config", config},
                {"verdicts", verdicts}};
}

void write_scan_csv(const ScanReport& report, std::ostream& out) {
    out << "index,start_index,length,start_date,end_date,fit_ok,qualified,A,B,C,beta,omega,phi,t_c,"
           "sse,df_stat,pp_stat,alpha_hat";
    for (const double level : report.significance_levels) {
        out << ",df_reject_" << level_key(level) << ",pp_reject_" << level_key(level);
    }
    out << '\n';
    for (std::size_t i = 0; i < report.verdicts.size(); ++i) {
        const auto& v = report.verdicts[i];
        out << i << ',' << v.window.start_index << ',' << v.window.length << ','
            << format_date(v.start_date) << ',' << format_date(v.end_date) << ','
            << (v.fit_ok ? 1 : 0) << ',' << (v.qualified ? 1 : 0);
        if (v.fit_ok) {
            const auto& p = v.params;
            out << ',' << num(p.A) << ',' << num(p.B) << ',' << num(p.C) << ',' << num(p.beta)
                << ',' << num(p.omega) << ',' << num(p.phi) << ',' << num(p.t_c) << ','
                << num(v.sse);
        } else {
            out << ",,,,,,,,";
        }
        out << ',' << opt_num(v.df_statistic) << ',' << opt_num(v.pp_statistic) << ','
            << opt_num(v.alpha_hat);
        for (const double level : report.significance_levels) {
            if (v.df_reject.empty()) {
                out << ",,";
            } else {
                out << ',' << (v.df_reject.at(level) ? 1 : 0) << ','
                    << (v.pp_reject.at(level) ? 1 : 0);
            }
        }
        out << '\n';
    }
}

}  // namespace lppl
