#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "fixtures.hpp"
#include "mcat/io.hpp"
#include "mcat/rng.hpp"

using namespace mcat;

namespace {

const std::string data_dir = MCAT_DATA_DIR;
const std::string cli_path = MCAT_CLI_PATH;

std::string temp_path(const std::string &name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

int run_cli(const std::string &args) {
  const int status = std::system((cli_path + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("matrix csv round trip") {
  const CountMatrix m = fixtures::liu_matrix();
  const CountMatrix back = parse_matrix_csv_text(write_matrix_csv(m));
  CHECK(back == m);

  const CountMatrix binary = validate_matrix({{9, 1}, {2, 8}}, {"Control", "D"},
                                             {"Negative", "D"});
  CHECK(parse_matrix_csv_text(write_matrix_csv(binary)) == binary);
}

TEST_CASE("matrix csv round trip holds over random tables") {
  PhiloxRng rng(11, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const int n_readouts = 1 + static_cast<int>(rng.uniform() * 4);
    const int n_states = n_readouts + static_cast<int>(rng.uniform() * 3);
    std::vector<std::string> states{"Control"}, readouts{"Negative"};
    for (int j = 1; j <= n_states; ++j) states.push_back("S" + std::to_string(j));
    for (int k = 1; k <= n_readouts; ++k) readouts.push_back("S" + std::to_string(k));
    std::vector<std::vector<long long>> counts(n_states + 1,
                                               std::vector<long long>(n_readouts + 1, 0));
    for (auto &row : counts)
      for (auto &cell : row) cell = static_cast<long long>(rng.uniform() * 40);
    counts[0][0] += 1;  // keep both groups populated
    counts[1][0] += 1;
    const CountMatrix m = validate_matrix(counts, states, readouts);
    CHECK(parse_matrix_csv_text(write_matrix_csv(m)) == m);
  }
}

TEST_CASE("bundled dataset matches the embedded fixture") {
  const CountMatrix parsed = parse_matrix_csv(data_dir + "/liu2020.csv");
  CHECK(parsed == fixtures::liu_matrix());
  CHECK(parsed.n_total == 1264);
}

TEST_CASE("matrix csv failure modes") {
  CHECK_THROWS_AS(parse_matrix_csv_text("state,Negative,D\nControl,1,2\nD,3\n"), ParseError);
  CHECK_THROWS_AS(parse_matrix_csv_text("state,Negative,D\nControl,1,x\nD,3,4\n"), ParseError);
  CHECK_THROWS_AS(parse_matrix_csv_text("state,Negative,D\nControl,1,2\nD,-3,4\n"),
                  NegativeCountError);
  CHECK_THROWS_AS(parse_matrix_csv_text("state,Negative\n"), ParseError);
  CHECK_THROWS_AS(parse_matrix_csv("/nonexistent/path.csv"), IoError);
}

TEST_CASE("records csv") {
  const std::string text =
      "state,stratum,readout,count\n"
      "Control,all,Negative,95\n"
      "Control,all,D1,5\n"
      "D1,all,Negative,20\n"
      "D1,all,D1,80\n";
  const auto split = parse_records_csv_text(text);
  CHECK(split.strata_labels.size() == 1);
  CHECK(split.pooled == split.per_stratum[0]);
  CHECK(split.pooled.n_cases == 100);

  CHECK_THROWS_AS(parse_records_csv_text("state,stratum,readout,count\nControl,a,Negative,-1\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_records_csv_text("a,b,c\nControl,a,Negative,1\n"), ParseError);
}

TEST_CASE("incidence json") {
  const auto sample = parse_incidence_json_text(R"({"overall": 0.0133, "mode": "sample"})");
  CHECK(sample.overall == 0.0133);
  CHECK(sample.mode == IncidenceMode::sample);

  const CountMatrix binary = validate_matrix({{9, 1}, {2, 8}}, {"Control", "D"},
                                             {"Negative", "D"});
  const auto registry = parse_incidence_json_text(
      R"({"overall": 0.01, "mode": "registry", "shares": {"D": 1.0}})");
  const IncidenceSpec spec = registry.resolve(binary);
  CHECK(spec.mode == IncidenceMode::registry);
  REQUIRE(spec.registry_shares.size() == 1);
  CHECK(spec.registry_shares[0] == 1.0);

  CHECK_THROWS_AS(parse_incidence_json_text(R"({"overall": 0.01, "mode": "bogus"})"), ParseError);
  CHECK_THROWS_AS(parse_incidence_json_text("not json"), ParseError);
  // registry shares must cover every state
  const auto missing = parse_incidence_json_text(
      R"({"overall": 0.01, "mode": "registry", "shares": {"X": 1.0}})");
  CHECK_THROWS_AS(missing.resolve(binary), ParseError);
}

TEST_CASE("scenario json round trip") {
  const auto spec = fixtures::screening_scenario(500, 100);
  const auto back = parse_scenario_json_text(scenario_to_json_text(spec));
  CHECK(back.n_controls == spec.n_controls);
  CHECK(back.case_shares == spec.case_shares);
  CHECK(back.conditional_rows == spec.conditional_rows);
  CHECK(back.seed == spec.seed);
  CHECK(back.adjust_policy == spec.adjust_policy);

  CHECK_THROWS_AS(parse_scenario_json_text(R"({"n_controls": 10})"), ParseError);
  auto broken = spec;
  broken.conditional_rows[0][0] = 0.5;
  CHECK_THROWS_AS(parse_scenario_json_text(scenario_to_json_text(broken)),
                  InvalidScenarioError);
}

TEST_CASE("analysis report json is deterministic") {
  const CountMatrix m = fixtures::liu_matrix();
  const IncidenceSpec inc = fixtures::liu_incidence();
  AnalysisOptions options;
  options.adjust_policy = AdjustPolicy::automatic;
  const std::string a = analysis_report_to_json_text(analyze(m, inc, options));
  const std::string b = analysis_report_to_json_text(analyze(m, inc, options));
  CHECK(a == b);

  const auto report = analyze(m, inc, options);
  CHECK(report.adjustment_applied);
  const auto parsed = ordered_json::parse(a);
  CHECK(parsed["adjustment_applied"] == true);
  CHECK(parsed["incidence"]["mode"] == "sample");
  CHECK(parsed["states"].size() == 10);
  CHECK(parsed["marginal"].size() == 11);
}

TEST_CASE("analysis of a table with more states than readouts") {
  // the extra state carries no matching readout: misclassification mass only
  const CountMatrix m = validate_matrix(
      {{90, 6, 4}, {10, 35, 5}, {15, 5, 30}, {20, 3, 2}},
      {"Control", "D1", "D2", "Extra"}, {"Negative", "D1", "D2"});
  IncidenceSpec inc;
  inc.overall = 0.02;
  const auto report = analyze(m, inc);
  REQUIRE(report.states.size() == 3);
  CHECK(report.states[0].intrinsic_accuracy.has_value());
  CHECK(report.states[1].intrinsic_accuracy.has_value());
  CHECK_FALSE(report.states[2].intrinsic_accuracy.has_value());  // no readout to be right on
  CHECK(report.states[2].false_negative.point == Catch::Approx(20.0 / 25.0));
  CHECK(report.predictive.size() == 3);
  CHECK(report.marginal.size() == 3);
  // the extra state still contributes to every denominator
  const auto csv = intrinsic_csv_text(report);
  CHECK(csv.find("Extra") != std::string::npos);
}

TEST_CASE("alpha monotonicity in the analysis report") {
  const CountMatrix m = fixtures::liu_matrix();
  const IncidenceSpec inc = fixtures::liu_incidence();
  AnalysisOptions narrow, wide;
  narrow.alpha = 0.5;
  wide.alpha = 0.05;
  const auto rn = analyze(m, inc, narrow);
  const auto rw = analyze(m, inc, wide);
  for (std::size_t j = 0; j < rn.states.size(); ++j) {
    if (!rn.states[j].intrinsic_accuracy) continue;
    CHECK(rn.states[j].intrinsic_accuracy->point ==
          Catch::Approx(rw.states[j].intrinsic_accuracy->point).epsilon(1e-12));
    CHECK(rn.states[j].intrinsic_accuracy->interval.width() <
          rw.states[j].intrinsic_accuracy->interval.width());
  }
}

TEST_CASE("cost-benefit extraction") {
  const CountMatrix m = fixtures::liu_matrix();
  const IncidenceSpec inc = fixtures::liu_incidence();
  AnalysisOptions options;
  options.adjust_policy = AdjustPolicy::on;
  const auto report = analyze(m, inc, options);
  const auto points = cost_benefit(report);
  REQUIRE(points.size() == 10);

  const auto lung = *std::find_if(points.begin(), points.end(),
                                  [](const auto &p) { return p.readout == "Lung"; });
  CHECK(lung.benefit == Catch::Approx(0.640).margin(1e-3));
  CHECK(lung.cost == Catch::Approx(1.0 - report.predictive[5].pvp->point).margin(1e-12));
  CHECK(lung.in_target_region);

  const auto kidney = *std::find_if(points.begin(), points.end(),
                                    [](const auto &p) { return p.readout == "Kidney"; });
  CHECK(kidney.benefit == Catch::Approx(0.120).margin(1e-3));
  CHECK(kidney.cost == Catch::Approx(0.930).margin(5e-3));
  CHECK_FALSE(kidney.in_target_region);

  // round trip through the serialized report
  const auto via_json = cost_benefit_from_json_text(analysis_report_to_json_text(report));
  REQUIRE(via_json.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(via_json[i].readout == points[i].readout);
    CHECK(via_json[i].benefit == Catch::Approx(points[i].benefit).margin(1e-6));
    CHECK(via_json[i].in_target_region == points[i].in_target_region);
  }

  const std::string csv = cost_benefit_csv_text(points);
  CHECK(csv.find("readout,benefit,cost,in_target_region") == 0);
  CHECK(csv.find("Lung") != std::string::npos);

  // a single positive readout yields a single-row table
  const CountMatrix binary = validate_matrix({{90, 10}, {20, 80}}, {"Control", "D"},
                                             {"Negative", "D"});
  IncidenceSpec binc;
  binc.overall = 0.02;
  const auto single = cost_benefit(analyze(binary, binc));
  REQUIRE(single.size() == 1);
  CHECK(single[0].readout == "D");
  const std::string single_csv = cost_benefit_csv_text(single);
  CHECK(std::count(single_csv.begin(), single_csv.end(), '\n') == 2);  // header + one row
}

TEST_CASE("cli end to end") {
  const std::string report = temp_path("mcat_report.json");
  const std::string cb = temp_path("mcat_cb.csv");

  CHECK(run_cli("analyze --matrix " + data_dir + "/liu2020.csv --incidence " + data_dir +
                "/liu_incidence.json --adjust auto --out " + report) == 0);
  CHECK(std::filesystem::exists(report));
  CHECK(std::filesystem::exists(temp_path("mcat_report_intrinsic.csv")));
  CHECK(std::filesystem::exists(temp_path("mcat_report_predictive.csv")));

  CHECK(run_cli("cost-benefit --report " + report + " --out " + cb) == 0);
  CHECK(std::filesystem::exists(cb));

  // exit code 1: missing input file
  CHECK(run_cli("analyze --matrix /nonexistent.csv --incidence " + data_dir +
                "/liu_incidence.json --out " + report) == 1);

  // exit code 2: validation failure (negative count)
  const std::string bad = temp_path("mcat_bad.csv");
  write_file(bad, "state,Negative,D\nControl,1,2\nD,-3,4\n");
  CHECK(run_cli("analyze --matrix " + bad + " --incidence " + data_dir +
                "/liu_incidence.json --out " + report) == 2);

  // simulate: tiny deterministic run
  const std::string scenario = temp_path("mcat_scenario.json");
  auto spec = fixtures::screening_scenario(200, 50);
  write_file(scenario, scenario_to_json_text(spec));
  const std::string sim_out = temp_path("mcat_sim.json");
  CHECK(run_cli("simulate --scenario " + scenario + " --out " + sim_out) == 0);
  const std::string first = read_file(sim_out);
  CHECK(run_cli("simulate --scenario " + scenario + " --out " + sim_out) == 0);
  CHECK(read_file(sim_out) == first);
  CHECK(std::filesystem::exists(temp_path("mcat_sim.csv")));
}

TEST_CASE("study report serialization") {
  auto spec = fixtures::screening_scenario(200, 20);
  const StudyReport report = run_study(spec, 0.05, 1);
  const std::string json_text = study_report_to_json_text(report);
  const auto parsed = ordered_json::parse(json_text);
  CHECK(parsed["kind"] == "simulation");
  CHECK(parsed["rows"].size() == 9);
  CHECK(parsed["scenario"]["seed"] == spec.seed);

  const std::string csv = study_report_to_csv_text(report);
  CHECK(csv.find("metric,value,bias,coverage,width") == 0);
  CHECK(csv.find("PVP_1") != std::string::npos);
}

TEST_CASE("number formatting") {
  CHECK(round_sig(0.123456789) == 0.123457);
  CHECK(round_sig(1234567.89) == 1234570.0);
  CHECK(round_sig(0.0) == 0.0);
  CHECK(percent3(0.25) == "25.000");
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("a") != fnv1a64_hex("b"));
}
