#ifndef MCAT_IO_HPP
#define MCAT_IO_HPP

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcat/report.hpp"
#include "mcat/simulate.hpp"
#include "mcat/strata.hpp"

namespace mcat {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Files and digests
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  return buffer.str();
}

inline void write_file(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::string fnv1a64_hex(const std::string &bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

// Round to 6 significant digits so serialized reports are byte-stable.
inline double round_sig(double x, int digits = 6) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return std::strtod(buf, nullptr);
}

// Percent with three decimals, the style used by the CSV artifacts.
inline std::string percent3(double fraction) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", 100.0 * fraction);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV parsing helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::vector<std::string> csv_lines(const std::string &text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (trim(line).front() == '#') continue;  // comment lines allowed in fixtures
    lines.push_back(line);
  }
  return lines;
}

inline long long parse_count(const std::string &cell, const std::string &context) {
  if (cell.empty()) throw ParseError(context + ": empty count cell");
  std::size_t pos = 0;
  long long value = 0;
  try {
    value = std::stoll(cell, &pos);
  } catch (const std::exception &) {
    throw ParseError(context + ": '" + cell + "' is not an integer");
  }
  if (pos != cell.size()) throw ParseError(context + ": '" + cell + "' is not an integer");
  return value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Count-matrix CSV (header: state,<readout labels...>; first row = control)
// ---------------------------------------------------------------------------

inline CountMatrix parse_matrix_csv_text(const std::string &text) {
  const auto lines = detail::csv_lines(text);
  if (lines.size() < 3) throw ParseError("matrix csv: need a header, a control row and a case row");
  const auto header = detail::split_csv_line(lines[0]);
  if (header.size() < 3) throw ParseError("matrix csv: need at least two readout columns");

  std::vector<std::string> readouts(header.begin() + 1, header.end());
  std::vector<std::string> states;
  std::vector<std::vector<long long>> counts;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = detail::split_csv_line(lines[i]);
    if (cells.size() != header.size())
      throw ParseError("matrix csv: row " + std::to_string(i + 1) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    states.push_back(cells[0]);
    std::vector<long long> row;
    row.reserve(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c)
      row.push_back(detail::parse_count(cells[c], "matrix csv row " + std::to_string(i + 1)));
    counts.push_back(std::move(row));
  }
  return validate_matrix(counts, states, readouts);
}

inline CountMatrix parse_matrix_csv(const std::string &path) {
  return parse_matrix_csv_text(read_file(path));
}

inline std::string write_matrix_csv(const CountMatrix &m) {
  std::ostringstream out;
  out << "state";
  for (int k = 0; k <= m.n_readouts(); ++k) out << ',' << m.readout_labels[k];
  out << '\n';
  for (int j = 0; j <= m.n_states(); ++j) {
    out << m.state_labels[j];
    for (int k = 0; k <= m.n_readouts(); ++k) out << ',' << m.at(j, k);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Long-format stratified records CSV (state,stratum,readout,count)
// ---------------------------------------------------------------------------

inline StratifiedRecords parse_records_csv_text(const std::string &text) {
  const auto lines = detail::csv_lines(text);
  if (lines.size() < 2) throw ParseError("records csv: no data rows");
  const auto header = detail::split_csv_line(lines[0]);
  if (header.size() != 4 || header[0] != "state" || header[1] != "stratum" ||
      header[2] != "readout" || header[3] != "count")
    throw ParseError("records csv: header must be state,stratum,readout,count");

  std::vector<StratumRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = detail::split_csv_line(lines[i]);
    if (cells.size() != 4)
      throw ParseError("records csv: row " + std::to_string(i + 1) + " must have 4 cells");
    const long long count =
        detail::parse_count(cells[3], "records csv row " + std::to_string(i + 1));
    if (count < 0) throw ParseError("records csv: negative count at row " + std::to_string(i + 1));
    records.push_back({cells[0], cells[1], cells[2], count});
  }
  return partition_by_stratum(records);
}

inline StratifiedRecords parse_records_csv(const std::string &path) {
  return parse_records_csv_text(read_file(path));
}

// ---------------------------------------------------------------------------
// Incidence config JSON
// ---------------------------------------------------------------------------

// {"overall": 0.0133, "mode": "sample"} or
// {"overall": ..., "mode": "registry", "shares": {"<state label>": share, ...}}
struct IncidenceConfig {
  double overall = 0.0;
  IncidenceMode mode = IncidenceMode::sample;
  std::map<std::string, double> shares;

  // Order the labeled shares against a concrete matrix.
  [[nodiscard]] IncidenceSpec resolve(const CountMatrix &m) const {
    IncidenceSpec spec;
    spec.overall = overall;
    spec.mode = mode;
    if (mode == IncidenceMode::registry) {
      spec.registry_shares.reserve(m.n_states());
      for (int j = 1; j <= m.n_states(); ++j) {
        const auto it = shares.find(m.state_labels[j]);
        if (it == shares.end())
          throw ParseError("incidence: no registry share for state '" + m.state_labels[j] + "'");
        spec.registry_shares.push_back(it->second);
      }
    }
    spec.validate(m.n_states());
    return spec;
  }
};

inline IncidenceConfig parse_incidence_json_text(const std::string &text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("incidence json: ") + e.what());
  }
  IncidenceConfig config;
  try {
    config.overall = j.at("overall").get<double>();
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "sample")
      config.mode = IncidenceMode::sample;
    else if (mode == "registry")
      config.mode = IncidenceMode::registry;
    else
      throw ParseError("incidence json: mode must be 'sample' or 'registry'");
    if (j.contains("shares"))
      for (const auto &[key, value] : j.at("shares").items())
        config.shares[key] = value.get<double>();
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("incidence json: ") + e.what());
  }
  return config;
}

inline IncidenceConfig parse_incidence_json(const std::string &path) {
  return parse_incidence_json_text(read_file(path));
}

// ---------------------------------------------------------------------------
// Scenario JSON
// ---------------------------------------------------------------------------

inline ScenarioSpec parse_scenario_json_text(const std::string &text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("scenario json: ") + e.what());
  }
  ScenarioSpec spec;
  try {
    spec.label = j.value("label", std::string{});
    spec.n_controls = j.at("n_controls").get<long long>();
    spec.n_cases = j.at("n_cases").get<long long>();
    spec.overall_incidence = j.at("overall_incidence").get<double>();
    spec.case_shares = j.at("case_shares").get<std::vector<double>>();
    spec.conditional_rows = j.at("conditional_rows").get<std::vector<std::vector<double>>>();
    spec.replicates = j.at("replicates").get<long long>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    const std::string mode = j.value("incidence_mode", std::string("sample"));
    if (mode == "sample")
      spec.incidence_mode = IncidenceMode::sample;
    else if (mode == "registry")
      spec.incidence_mode = IncidenceMode::registry;
    else
      throw ParseError("scenario json: incidence_mode must be 'sample' or 'registry'");
    const std::string policy = j.value("adjust_policy", std::string("off"));
    if (policy == "auto")
      spec.adjust_policy = AdjustPolicy::automatic;
    else if (policy == "on")
      spec.adjust_policy = AdjustPolicy::on;
    else if (policy == "off")
      spec.adjust_policy = AdjustPolicy::off;
    else
      throw ParseError("scenario json: adjust_policy must be auto, on, or off");
    spec.alpha = j.value("alpha", 0.05);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("scenario json: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline ScenarioSpec parse_scenario_json(const std::string &path) {
  return parse_scenario_json_text(read_file(path));
}

inline std::string scenario_to_json_text(const ScenarioSpec &spec) {
  ordered_json j;
  j["label"] = spec.label;
  j["n_controls"] = spec.n_controls;
  j["n_cases"] = spec.n_cases;
  j["overall_incidence"] = spec.overall_incidence;
  j["case_shares"] = spec.case_shares;
  j["conditional_rows"] = spec.conditional_rows;
  j["replicates"] = spec.replicates;
  j["seed"] = spec.seed;
  j["incidence_mode"] = to_string(spec.incidence_mode);
  j["adjust_policy"] = to_string(spec.adjust_policy);
  j["alpha"] = spec.alpha;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace detail {

inline ordered_json interval_to_json(const EstimateInterval &iv) {
  ordered_json j;
  j["point"] = round_sig(iv.point);
  j["lower"] = round_sig(iv.lower);
  j["upper"] = round_sig(iv.upper);
  j["alpha"] = round_sig(iv.alpha);
  switch (iv.method) {
    case IntervalMethod::midp: j["method"] = "midp"; break;
    case IntervalMethod::logit_wald: j["method"] = "logit_wald"; break;
    case IntervalMethod::degenerate: j["method"] = "degenerate"; break;
  }
  j["flags"] = interval_flag_names(iv.flags);
  return j;
}

inline ordered_json accuracy_to_json(const AccuracyEstimate &est) {
  ordered_json j;
  j["tilde"] = round_sig(est.tilde);
  j["point"] = round_sig(est.point);
  j["sigma2"] = round_sig(est.sigma2);
  j["logit_variance"] = std::isfinite(est.logit_variance) ? ordered_json(round_sig(est.logit_variance))
                                                          : ordered_json(nullptr);
  j["interval"] = interval_to_json(est.interval);
  return j;
}

inline ordered_json predictive_to_json(const PredictiveEstimate &est) {
  ordered_json j;
  j["point"] = round_sig(est.point);
  j["logit_variance"] = round_sig(est.logit_variance);
  j["interval"] = interval_to_json(est.interval);
  j["flags"] = interval_flag_names(est.flags);
  return j;
}

}  // namespace detail

inline std::string analysis_report_to_json_text(const AnalysisReport &report) {
  ordered_json j;
  j["tool"] = "mcat";
  j["kind"] = "analysis";
  j["alpha"] = round_sig(report.alpha);
  j["adjust_policy"] = to_string(report.adjust_policy);
  j["adjustment_applied"] = report.adjustment_applied;
  j["incidence"] = {{"overall", round_sig(report.overall_incidence)},
                    {"mode", to_string(report.incidence_mode)}};
  j["inputs"] = {{"matrix_digest", report.matrix_digest},
                 {"incidence_digest", report.incidence_digest}};

  ordered_json control;
  control["specificity"] = detail::interval_to_json(report.control.specificity);
  control["false_positive"] = ordered_json::array();
  for (std::size_t k = 0; k < report.control.false_positive.size(); ++k) {
    ordered_json row;
    row["readout"] = report.readout_labels[k + 1];
    row["interval"] = detail::interval_to_json(report.control.false_positive[k]);
    control["false_positive"].push_back(std::move(row));
  }
  j["control"] = std::move(control);

  j["states"] = ordered_json::array();
  for (const auto &state : report.states) {
    ordered_json row;
    row["state"] = state.label;
    row["n_cases"] = state.n_cases;
    if (!state.error.empty()) {
      row["error"] = state.error;
    } else {
      row["false_negative"] = detail::accuracy_to_json(state.false_negative);
      row["crude_sensitivity"] = detail::interval_to_json(state.crude_sensitivity);
      if (state.intrinsic_accuracy)
        row["intrinsic_accuracy"] = detail::accuracy_to_json(*state.intrinsic_accuracy);
    }
    j["states"].push_back(std::move(row));
  }

  j["predictive"] = ordered_json::array();
  for (const auto &entry : report.predictive) {
    ordered_json row;
    row["readout"] = entry.label;
    if (!entry.error.empty()) {
      row["error"] = entry.error;
    } else {
      if (entry.pvp) row["pvp"] = detail::predictive_to_json(*entry.pvp);
      if (entry.pvn) row["pvn"] = detail::predictive_to_json(*entry.pvn);
    }
    j["predictive"].push_back(std::move(row));
  }

  j["marginal"] = ordered_json::array();
  for (std::size_t k = 0; k < report.marginal.size(); ++k) {
    ordered_json row;
    row["readout"] = report.readout_labels[k];
    row["interval"] = detail::interval_to_json(report.marginal[k]);
    j["marginal"].push_back(std::move(row));
  }

  j["aggregate_accuracy"] = round_sig(report.aggregate_accuracy);
  if (report.overall_pvp_error.empty())
    j["overall_pvp"] = round_sig(report.overall_pvp);
  else
    j["overall_pvp_error"] = report.overall_pvp_error;
  return j.dump(2) + "\n";
}

// Per-state false-negative and intrinsic-accuracy table (percent, 3 decimals).
inline std::string intrinsic_csv_text(const AnalysisReport &report) {
  std::ostringstream out;
  out << "state,false_negative,intrinsic_accuracy,ci_lower,ci_upper\n";
  for (const auto &state : report.states) {
    out << state.label << ',';
    if (state.error.empty()) out << percent3(state.false_negative.point);
    out << ',';
    if (state.error.empty() && state.intrinsic_accuracy) {
      const auto &ia = *state.intrinsic_accuracy;
      out << percent3(ia.point) << ',' << percent3(ia.interval.lower) << ','
          << percent3(ia.interval.upper);
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return out.str();
}

// Marginal distribution and predictive values per readout (percent).
inline std::string predictive_csv_text(const AnalysisReport &report) {
  std::ostringstream out;
  out << "readout,p_t,p_t_ci_lower,p_t_ci_upper,metric,predictive_value,pv_ci_lower,pv_ci_upper\n";
  for (std::size_t k = 0; k < report.readout_labels.size(); ++k) {
    const auto &marginal = report.marginal[k];
    out << report.readout_labels[k] << ',' << percent3(marginal.point) << ','
        << percent3(marginal.lower) << ',' << percent3(marginal.upper) << ',';
    const auto &entry = report.predictive[k];
    const PredictiveEstimate *shown = nullptr;
    if (entry.error.empty()) shown = k == 0 ? (entry.pvn ? &*entry.pvn : nullptr)
                                            : (entry.pvp ? &*entry.pvp : nullptr);
    if (shown) {
      out << (k == 0 ? "pvn" : "pvp") << ',' << percent3(shown->point) << ','
          << percent3(shown->interval.lower) << ',' << percent3(shown->interval.upper);
    } else {
      out << ",,,";
    }
    out << '\n';
  }
  return out.str();
}

inline std::string cost_benefit_csv_text(const std::vector<CostBenefitPoint> &points) {
  std::ostringstream out;
  out << "readout,benefit,cost,in_target_region\n";
  for (const auto &p : points) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", p.benefit, p.cost);
    out << p.readout << ',' << buf << ',' << (p.in_target_region ? "true" : "false") << '\n';
  }
  return out.str();
}

// Extract the cost-benefit points back out of a serialized analysis report.
inline std::vector<CostBenefitPoint> cost_benefit_from_json_text(const std::string &text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("report json: ") + e.what());
  }
  if (j.value("kind", std::string{}) != "analysis")
    throw ParseError("report json: not an analysis report");
  std::map<std::string, double> accuracy;
  try {
    for (const auto &state : j.at("states"))
      if (state.contains("intrinsic_accuracy"))
        accuracy[state.at("state").get<std::string>()] =
            state.at("intrinsic_accuracy").at("point").get<double>();
    std::vector<CostBenefitPoint> points;
    for (const auto &entry : j.at("predictive")) {
      if (!entry.contains("pvp")) continue;
      const std::string readout = entry.at("readout").get<std::string>();
      const auto it = accuracy.find(readout);
      if (it == accuracy.end()) continue;
      CostBenefitPoint p;
      p.readout = readout;
      p.benefit = it->second;
      p.cost = 1.0 - entry.at("pvp").at("point").get<double>();
      p.in_target_region = p.benefit >= 0.5 && p.cost <= 0.5;
      points.push_back(std::move(p));
    }
    return points;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("report json: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Study report serialization
// ---------------------------------------------------------------------------

inline std::string study_report_to_json_text(const StudyReport &report) {
  ordered_json j;
  j["tool"] = "mcat";
  j["kind"] = "simulation";
  j["scenario"] = ordered_json::parse(scenario_to_json_text(report.scenario));
  j["alpha"] = round_sig(report.alpha);
  j["rows"] = ordered_json::array();
  for (const auto &row : report.rows) {
    ordered_json r;
    r["metric"] = row.metric;
    r["value"] = round_sig(row.truth);
    r["bias"] = round_sig(row.bias);
    r["coverage"] = round_sig(row.coverage);
    r["width"] = round_sig(row.width);
    j["rows"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

inline std::string study_report_to_csv_text(const StudyReport &report) {
  std::ostringstream out;
  out << "metric,value,bias,coverage,width\n";
  for (const auto &row : report.rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.3f,%.3f,%.2f,%.3f", row.truth, row.bias, row.coverage,
                  row.width);
    out << row.metric << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace mcat

#endif  // MCAT_IO_HPP
