#pragma once

// JSON and CSV forms of a StabilityReport.

#include "stepbound/bounds.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace stepbound {

namespace detail {

inline std::vector<std::pair<std::string, double>> report_numbers(const StabilityReport& r) {
  return {
      {"lambda_exact", r.lambda_exact},
      {"lambda_diag_lower", r.lambda_diag_lower},
      {"lambda_diag_upper", r.lambda_diag_upper},
      {"lambda_geo", r.lambda_geo},
      {"lambda_zhudu_lower", r.lambda_zhudu_lower},
      {"lambda_zhudu_upper", r.lambda_zhudu_upper},
      {"zhudu_c1", r.zhudu_c1},
      {"lambda_shewchuk_lower", r.lambda_shewchuk_lower},
      {"lambda_shewchuk_upper", r.lambda_shewchuk_upper},
      {"lambda_muniform", r.lambda_muniform},
      {"muniform_max_norm", r.muniform_max_norm},
      {"muniform_max_q_m", r.muniform_max_q_m},
      {"lambda_estimate", r.lambda_estimate},
      {"c_star", r.c_star},
      {"c_sharp", r.c_sharp},
      {"tau_max_over_s2", r.tau_max_over_s2},
      {"tau_h_over_s2", r.tau_h_over_s2},
      {"tau_h_geo", r.tau_h_geo},
      {"tau_h_zhudu", r.tau_h_zhudu},
      {"tau_h_shewchuk", r.tau_h_shewchuk},
      {"tau_h_muniform", r.tau_h_muniform},
      {"tau_h_estimate", r.tau_h_estimate},
      {"ratio", r.ratio()},
  };
}

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace detail

inline nlohmann::json to_json(const StabilityReport& r) {
  nlohmann::json j;
  j["dim"] = r.dim;
  j["num_elements"] = r.num_elements;
  j["num_free"] = r.num_free;
  j["lumped"] = r.lumped;
  j["nonobtuse"] = r.nonobtuse;
  j["p_max"] = r.p_max;
  j["exact_method"] = r.exact_method;
  j["argmin_node"] = r.argmin_node;
  if (!r.estimate_method.empty()) {
    j["estimate_method"] = r.estimate_method;
    j["estimate_steps"] = r.estimate_steps;
  }
  for (const auto& [key, value] : detail::report_numbers(r)) {
    if (std::isnan(value)) {
      j[key] = nullptr;
    } else {
      j[key] = value;
    }
  }
  return j;
}

inline std::string report_csv_header() {
  std::string h = "dim,num_elements,num_free,lumped,nonobtuse,p_max,argmin_node";
  for (const auto& [key, value] : detail::report_numbers(StabilityReport{})) h += "," + key;
  return h;
}

inline std::string report_csv_row(const StabilityReport& r) {
  std::ostringstream s;
  s << r.dim << ',' << r.num_elements << ',' << r.num_free << ',' << (r.lumped ? 1 : 0) << ','
    << (r.nonobtuse ? 1 : 0) << ',' << r.p_max << ',' << r.argmin_node;
  for (const auto& [key, value] : detail::report_numbers(r)) s << ',' << detail::csv_number(value);
  return s.str();
}

}  // namespace stepbound
