#ifndef MCAT_TESTS_FIXTURES_HPP
#define MCAT_TESTS_FIXTURES_HPP

#include <string>
#include <vector>

#include "mcat/count_matrix.hpp"
#include "mcat/simulate.hpp"

namespace fixtures {

// Validation-cohort table of a published blood-based multi-cancer test:
// 610 controls, 654 cases over ten cancer states, eleven readout categories.
// Two reconstruction assumptions are baked in (5 stomach cases with 1 false
// negative inside Upper GI; 1 gallbladder case with none inside Pancreas &
// Gallbladder); the bundled data/liu2020.csv carries the same numbers.
inline mcat::CountMatrix liu_matrix() {
  const std::vector<std::string> states = {
      "Control", "Uterus", "Upper GI", "Prostate", "Pancreas & Gallbladder", "Lung",
      "Head & Neck", "CRC", "Breast", "Kidney", "Others"};
  const std::vector<std::string> readouts = {
      "Negative", "Uterus", "Upper GI", "Prostate", "Pancreas & Gallbladder", "Lung",
      "Head & Neck", "CRC", "Breast", "Kidney", "Others"};
  const std::vector<std::vector<long long>> counts = {
      {606, 0, 0, 0, 0, 0, 0, 0, 0, 0, 4},
      {27, 8, 0, 0, 0, 0, 0, 0, 0, 0, 1},
      {5, 0, 17, 0, 1, 2, 0, 1, 0, 0, 0},
      {74, 0, 0, 10, 0, 0, 0, 0, 0, 0, 0},
      {6, 0, 1, 0, 30, 0, 0, 0, 1, 0, 2},
      {39, 0, 0, 0, 0, 71, 1, 0, 0, 0, 0},
      {8, 0, 0, 0, 0, 1, 15, 0, 1, 0, 0},
      {12, 0, 2, 0, 0, 1, 0, 38, 0, 0, 0},
      {63, 0, 0, 0, 0, 0, 0, 0, 40, 0, 1},
      {22, 0, 0, 0, 0, 0, 0, 0, 0, 3, 0},
      {50, 0, 2, 0, 0, 4, 2, 0, 1, 0, 91}};
  return mcat::validate_matrix(counts, states, readouts);
}

// Incidence derived for the table above: P(D) back-solved from the reported
// adjusted marginal negative rate; conditional shares from the sample.
inline mcat::IncidenceSpec liu_incidence() {
  mcat::IncidenceSpec inc;
  inc.overall = 0.0133;
  inc.mode = mcat::IncidenceMode::sample;
  return inc;
}

// Screening-test scenario: high specificity, moderate per-state accuracy.
inline mcat::ScenarioSpec screening_scenario(long long group_size, long long replicates,
                                             std::uint64_t seed = 20260810ull) {
  mcat::ScenarioSpec spec;
  spec.label = "screening";
  spec.n_controls = group_size;
  spec.n_cases = group_size;
  spec.overall_incidence = 0.016;
  spec.case_shares = {0.5, 0.4};
  spec.conditional_rows = {{0.98, 0.01, 0.01},
                           {0.25, 0.65, 0.10},
                           {0.30, 0.20, 0.50},
                           {0.60, 0.20, 0.20}};
  spec.replicates = replicates;
  spec.seed = seed;
  spec.incidence_mode = mcat::IncidenceMode::sample;
  spec.adjust_policy = mcat::AdjustPolicy::off;
  return spec;
}

// Diagnostic-test scenario: low specificity, very high per-state accuracy.
inline mcat::ScenarioSpec diagnostic_scenario(long long group_size, long long replicates,
                                              std::uint64_t seed = 20260810ull) {
  mcat::ScenarioSpec spec;
  spec.label = "diagnostic";
  spec.n_controls = group_size;
  spec.n_cases = group_size;
  spec.overall_incidence = 0.07;
  spec.case_shares = {0.5, 0.4};
  spec.conditional_rows = {{0.50, 0.25, 0.25},
                           {0.03, 0.95, 0.02},
                           {0.05, 0.03, 0.92},
                           {0.10, 0.40, 0.50}};
  spec.replicates = replicates;
  spec.seed = seed;
  spec.incidence_mode = mcat::IncidenceMode::sample;
  spec.adjust_policy = mcat::AdjustPolicy::off;
  return spec;
}

// Very-high-specificity screening variant with sparse false positives; the
// case states keep the screening rates but the second state is rare.
inline mcat::ScenarioSpec sparse_scenario(long long group_size, long long replicates, bool adjust,
                                          std::uint64_t seed = 20260810ull) {
  mcat::ScenarioSpec spec;
  spec.label = adjust ? "sparse-adjusted" : "sparse-raw";
  spec.n_controls = group_size;
  spec.n_cases = group_size;
  spec.overall_incidence = 0.016;
  spec.case_shares = {0.5, 0.1};
  spec.conditional_rows = {{0.995, 0.0025, 0.0025},
                           {0.25, 0.65, 0.10},
                           {0.30, 0.20, 0.50},
                           {0.60, 0.20, 0.20}};
  spec.replicates = replicates;
  spec.seed = seed;
  spec.incidence_mode = mcat::IncidenceMode::sample;
  spec.adjust_policy = adjust ? mcat::AdjustPolicy::on : mcat::AdjustPolicy::off;
  return spec;
}

}  // namespace fixtures

#endif  // MCAT_TESTS_FIXTURES_HPP
