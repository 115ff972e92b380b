#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "lpplscan/bayes.hpp"
#include "lpplscan/calibration.hpp"
#include "lpplscan/lppl_model.hpp"
#include "lpplscan/scanner.hpp"
#include "lpplscan/stationarity.hpp"

namespace lppl {

using Json = nlohmann::ordered_json;

// Version of every JSON document this tool writes.
inline constexpr int kSchemaVersion = 1;

std::string level_key(double level);

Json to_json(const LpplParams& p);
Json to_json(const FitConfig& c);
Json to_json(const ConditionReport& r);
Json to_json(const LpplFit& fit, bool include_residuals);
Json to_json(const UnitRootReport& r);
Json to_json(const Ar1Report& r);
Json to_json(const PacfResult& r);
Json to_json(const ArOrderReport& r);
Json to_json(const GarchParams& p);
Json to_json(const OuResidualParams& p);
Json to_json(const PriorSpec& p);
Json to_json(const ModelEvidence& e);
Json to_json(const WindowVerdict& v);
Json to_json(const ScanReport& r);

// Missing keys keep their defaults; unknown keys are rejected.
PriorSpec priors_from_json(const Json& j);

// One verdict per row. Columns:
// index,start_index,length,start_date,end_date,fit_ok,qualified,A,B,C,beta,omega,phi,t_c,sse,
// df_stat,pp_stat,alpha_hat, then df_reject_<level>,pp_reject_<level> for each level.
void write_scan_csv(const ScanReport& report, std::ostream& out);

}  // namespace lppl
