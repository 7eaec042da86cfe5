// Command-line front end: analyze a count table, run a simulation study, or
// emit the cost-benefit scatter data for an existing analysis report.
//
// Exit codes: 0 success, 2 validation error (bad inputs), 1 I/O error.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mcat/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;

std::string stem_of(const std::string &path) {
  const std::string suffix = ".json";
  if (path.size() > suffix.size() &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return path.substr(0, path.size() - suffix.size());
  return path;
}

int run_analyze(const std::string &matrix_path, const std::string &incidence_path, double alpha,
                const std::string &adjust, const std::string &out_path) {
  mcat::AnalysisOptions options;
  options.alpha = alpha;
  if (adjust == "auto")
    options.adjust_policy = mcat::AdjustPolicy::automatic;
  else if (adjust == "on")
    options.adjust_policy = mcat::AdjustPolicy::on;
  else if (adjust == "off")
    options.adjust_policy = mcat::AdjustPolicy::off;
  else
    throw mcat::ValidationError("--adjust must be auto, on, or off");

  const std::string matrix_text = mcat::read_file(matrix_path);
  const std::string incidence_text = mcat::read_file(incidence_path);
  const mcat::CountMatrix matrix = mcat::parse_matrix_csv_text(matrix_text);
  const mcat::IncidenceSpec incidence =
      mcat::parse_incidence_json_text(incidence_text).resolve(matrix);

  mcat::AnalysisReport report = mcat::analyze(matrix, incidence, options);
  report.matrix_digest = mcat::fnv1a64_hex(matrix_text);
  report.incidence_digest = mcat::fnv1a64_hex(incidence_text);

  mcat::write_file(out_path, mcat::analysis_report_to_json_text(report));
  const std::string stem = stem_of(out_path);
  mcat::write_file(stem + "_intrinsic.csv", mcat::intrinsic_csv_text(report));
  mcat::write_file(stem + "_predictive.csv", mcat::predictive_csv_text(report));
  std::cout << "report: " << out_path << "\n"
            << "tables: " << stem << "_intrinsic.csv, " << stem << "_predictive.csv\n";
  return kExitOk;
}

int run_simulate(const std::string &scenario_path, const std::string &out_path) {
  const mcat::ScenarioSpec spec = mcat::parse_scenario_json(scenario_path);
  const mcat::StudyReport report = mcat::run_study(spec, spec.alpha);
  mcat::write_file(out_path, mcat::study_report_to_json_text(report));
  const std::string csv_path = stem_of(out_path) + ".csv";
  mcat::write_file(csv_path, mcat::study_report_to_csv_text(report));
  std::cout << "report: " << out_path << "\ntable: " << csv_path << "\n";
  return kExitOk;
}

int run_cost_benefit(const std::string &report_path, const std::string &out_path) {
  const auto points = mcat::cost_benefit_from_json_text(mcat::read_file(report_path));
  mcat::write_file(out_path, mcat::cost_benefit_csv_text(points));
  std::cout << "table: " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"estimation and inference for multi-category screening tests"};
  app.require_subcommand(1);

  std::string matrix_path, incidence_path, out_path;
  double alpha = 0.05;
  std::string adjust = "auto";
  auto *analyze = app.add_subcommand("analyze", "analyze a disease-by-readout count table");
  analyze->add_option("--matrix", matrix_path, "count table CSV")->required();
  analyze->add_option("--incidence", incidence_path, "incidence config JSON")->required();
  analyze->add_option("--alpha", alpha, "two-sided interval level");
  analyze->add_option("--adjust", adjust, "control-row half-count policy: auto|on|off");
  analyze->add_option("--out", out_path, "output report JSON path")->required();

  std::string scenario_path, sim_out_path;
  auto *simulate = app.add_subcommand("simulate", "run a Monte Carlo coverage study");
  simulate->add_option("--scenario", scenario_path, "scenario JSON")->required();
  simulate->add_option("--out", sim_out_path, "output report JSON path")->required();

  std::string report_path, cb_out_path;
  auto *cost_benefit = app.add_subcommand("cost-benefit", "emit cost-benefit scatter data");
  cost_benefit->add_option("--report", report_path, "analysis report JSON")->required();
  cost_benefit->add_option("--out", cb_out_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (analyze->parsed()) return run_analyze(matrix_path, incidence_path, alpha, adjust, out_path);
    if (simulate->parsed()) return run_simulate(scenario_path, sim_out_path);
    if (cost_benefit->parsed()) return run_cost_benefit(report_path, cb_out_path);
  } catch (const mcat::IoError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const mcat::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
