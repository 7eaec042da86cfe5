#ifndef MCAT_REPORT_HPP
#define MCAT_REPORT_HPP

#include <optional>
#include <string>
#include <vector>

#include "mcat/count_matrix.hpp"
#include "mcat/intrinsic.hpp"
#include "mcat/marginal.hpp"
#include "mcat/predictive.hpp"

namespace mcat {

// ---------------------------------------------------------------------------
// Whole-dataset analysis report
// ---------------------------------------------------------------------------

struct AnalysisOptions {
  double alpha = 0.05;
  AdjustPolicy adjust_policy = AdjustPolicy::automatic;
  long long adjust_threshold = 5;
};

struct StateReport {
  std::string label;
  long long n_cases = 0;
  AccuracyEstimate false_negative;
  EstimateInterval crude_sensitivity;
  std::optional<AccuracyEstimate> intrinsic_accuracy;  // states 1..K only
  std::string error;
};

struct ReadoutPredictive {
  std::string label;
  std::optional<PredictiveEstimate> pvp;  // positive readouts only
  std::optional<PredictiveEstimate> pvn;
  std::string error;
};

struct AnalysisReport {
  double alpha = 0.05;
  AdjustPolicy adjust_policy = AdjustPolicy::automatic;
  bool adjustment_applied = false;
  IncidenceMode incidence_mode = IncidenceMode::sample;
  double overall_incidence = 0.0;
  std::string matrix_digest;
  std::string incidence_digest;

  std::vector<std::string> state_labels;    // J+1
  std::vector<std::string> readout_labels;  // K+1
  ControlRates control;
  std::vector<StateReport> states;            // j = 1..J
  std::vector<ReadoutPredictive> predictive;  // k = 0..K
  std::vector<EstimateInterval> marginal;     // k = 0..K
  double aggregate_accuracy = 0.0;
  double overall_pvp = 0.0;
  std::string overall_pvp_error;
};

// Runs every estimator over one table. Per-metric failures are recorded in
// the corresponding error field and the rest of the report still fills in.
inline AnalysisReport analyze(const CountMatrix &m, const IncidenceSpec &incidence,
                              const AnalysisOptions &options = {}) {
  incidence.validate(m.n_states());
  if (!(options.alpha > 0.0 && options.alpha < 1.0))
    throw DomainError("analyze: alpha must lie in (0, 1)");

  AnalysisReport report;
  report.alpha = options.alpha;
  report.adjust_policy = options.adjust_policy;
  report.incidence_mode = incidence.mode;
  report.overall_incidence = incidence.overall;
  report.state_labels = m.state_labels;
  report.readout_labels = m.readout_labels;

  const auto adjusted = adjust_control_counts(m, options.adjust_policy, options.adjust_threshold);
  report.adjustment_applied = adjusted.applied;
  const auto shares = case_shares(m);
  report.control = control_rates(m, adjusted, options.alpha);

  for (int j = 1; j <= m.n_states(); ++j) {
    StateReport state;
    state.label = m.state_labels[j];
    state.n_cases = m.row_total(j);
    try {
      state.false_negative = false_negative_estimate(m, j, shares, options.alpha);
      state.crude_sensitivity = crude_sensitivity(m, j, shares, options.alpha);
      if (j <= m.n_readouts())
        state.intrinsic_accuracy = accuracy_estimate(m, j, j, shares, options.alpha);
    } catch (const Error &e) {
      state.error = e.what();
    }
    report.states.push_back(std::move(state));
  }

  for (int k = 0; k <= m.n_readouts(); ++k) {
    ReadoutPredictive entry;
    entry.label = m.readout_labels[k];
    try {
      if (k >= 1)
        entry.pvp = predictive_estimate(m, adjusted, shares, incidence, k,
                                        PredictiveMetric::pvp, options.alpha);
      entry.pvn = predictive_estimate(m, adjusted, shares, incidence, k,
                                      PredictiveMetric::pvn, options.alpha);
    } catch (const Error &e) {
      entry.error = e.what();
    }
    report.predictive.push_back(std::move(entry));
  }

  const auto collapsed = collapse_cases(m);
  report.marginal = marginal_table(collapsed, adjusted, incidence.overall, options.alpha);
  report.aggregate_accuracy = aggregate_accuracy(m);
  try {
    report.overall_pvp = overall_pvp_point(m, adjusted, shares, incidence);
  } catch (const Error &e) {
    report.overall_pvp_error = e.what();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Cost-benefit summary (one point per positive readout)
// ---------------------------------------------------------------------------

struct CostBenefitPoint {
  std::string readout;
  double benefit = 0.0;  // intrinsic accuracy of the matching state
  double cost = 0.0;     // 1 - PVP of the readout
  bool in_target_region = false;
};

inline std::vector<CostBenefitPoint> cost_benefit(const AnalysisReport &report) {
  std::vector<CostBenefitPoint> points;
  const std::size_t n_positive = report.readout_labels.size() - 1;
  for (std::size_t k = 1; k <= n_positive; ++k) {
    const auto &state = report.states[k - 1];
    const auto &pred = report.predictive[k];
    if (!state.intrinsic_accuracy || !pred.pvp) continue;
    CostBenefitPoint p;
    p.readout = report.readout_labels[k];
    p.benefit = state.intrinsic_accuracy->point;
    p.cost = 1.0 - pred.pvp->point;
    p.in_target_region = p.benefit >= 0.5 && p.cost <= 0.5;
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace mcat

#endif  // MCAT_REPORT_HPP
