#ifndef MCAT_SIMULATE_HPP
#define MCAT_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "mcat/count_matrix.hpp"
#include "mcat/intrinsic.hpp"
#include "mcat/marginal.hpp"
#include "mcat/predictive.hpp"
#include "mcat/rng.hpp"

namespace mcat {

// ---------------------------------------------------------------------------
// Scenario ground truth
// ---------------------------------------------------------------------------

struct ScenarioSpec {
  std::string label;
  long long n_controls = 0;  // N0
  long long n_cases = 0;     // N1
  double overall_incidence = 0.0;
  std::vector<double> case_shares;                    // p_1..p_{J-1}
  std::vector<std::vector<double>> conditional_rows;  // (J+1) x (K+1), rows sum to 1
  long long replicates = 1;
  std::uint64_t seed = 0;
  IncidenceMode incidence_mode = IncidenceMode::sample;
  AdjustPolicy adjust_policy = AdjustPolicy::off;
  double alpha = 0.05;

  [[nodiscard]] int n_states() const { return static_cast<int>(conditional_rows.size()) - 1; }
  [[nodiscard]] int n_readouts() const {
    return conditional_rows.empty() ? 0 : static_cast<int>(conditional_rows.front().size()) - 1;
  }
  [[nodiscard]] std::vector<double> full_shares() const {
    std::vector<double> p = case_shares;
    double head = 0.0;
    for (double v : p) head += v;
    p.push_back(1.0 - head);
    return p;
  }

  void validate() const {
    if (n_controls < 1 || n_cases < 1)
      throw InvalidScenarioError("scenario: both group sizes must be positive");
    if (!(overall_incidence > 0.0 && overall_incidence < 1.0))
      throw InvalidScenarioError("scenario: overall incidence must lie in (0, 1)");
    if (replicates < 1) throw InvalidScenarioError("scenario: at least one replicate");
    if (conditional_rows.size() < 2)
      throw InvalidScenarioError("scenario: need a control row and at least one case row");
    const std::size_t width = conditional_rows.front().size();
    if (width < 2) throw InvalidScenarioError("scenario: need at least two readout categories");
    if (conditional_rows.size() < width)
      throw InvalidScenarioError("scenario: more readouts than disease states");
    for (const auto &row : conditional_rows) {
      if (row.size() != width) throw InvalidScenarioError("scenario: ragged conditional rows");
      double sum = 0.0;
      for (double v : row) {
        if (v < 0.0 || v > 1.0) throw InvalidScenarioError("scenario: rate outside [0, 1]");
        sum += v;
      }
      if (std::fabs(sum - 1.0) > 1e-12)
        throw InvalidScenarioError("scenario: conditional row does not sum to 1");
    }
    if (static_cast<int>(case_shares.size()) != n_states() - 1)
      throw InvalidScenarioError("scenario: case shares must have J-1 entries");
    double share_sum = 0.0;
    for (double v : case_shares) {
      if (v < 0.0 || v > 1.0) throw InvalidScenarioError("scenario: case share outside [0, 1]");
      share_sum += v;
    }
    if (share_sum > 1.0 + 1e-12)
      throw InvalidScenarioError("scenario: case shares exceed 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidScenarioError("scenario: alpha must lie in (0, 1)");
  }

  [[nodiscard]] IncidenceSpec incidence() const {
    IncidenceSpec inc;
    inc.overall = overall_incidence;
    inc.mode = incidence_mode;
    if (incidence_mode == IncidenceMode::registry) inc.registry_shares = full_shares();
    return inc;
  }
};

// Metric identifiers, in report order: SP_0, A_1..A_K, PVN_0, PVP_1..PVP_K,
// P(T_0)..P(T_K).
inline std::vector<std::string> scenario_metric_names(const ScenarioSpec &spec) {
  std::vector<std::string> names;
  names.push_back("SP_0");
  for (int k = 1; k <= spec.n_readouts(); ++k) names.push_back("A_" + std::to_string(k));
  names.push_back("PVN_0");
  for (int k = 1; k <= spec.n_readouts(); ++k) names.push_back("PVP_" + std::to_string(k));
  for (int k = 0; k <= spec.n_readouts(); ++k) names.push_back("P(T_" + std::to_string(k) + ")");
  return names;
}

// Closed-form true metric values implied by the scenario parameters.
inline std::vector<double> scenario_truth(const ScenarioSpec &spec) {
  spec.validate();
  const int n_readouts = spec.n_readouts();
  const int n_states = spec.n_states();
  const double d = spec.overall_incidence;
  const auto shares = spec.full_shares();

  IncidenceSpec inc;
  inc.overall = d;
  inc.mode = IncidenceMode::sample;  // point formulas are mode-independent

  std::vector<double> truth;
  truth.push_back(spec.conditional_rows[0][0]);
  for (int k = 1; k <= n_readouts; ++k) truth.push_back(spec.conditional_rows[k][k]);

  std::vector<double> column(n_states + 1);
  for (int j = 0; j <= n_states; ++j) column[j] = spec.conditional_rows[j][0];
  truth.push_back(pvn_point(phi_from_rates(column, spec.case_shares, 0), inc, 0));
  for (int k = 1; k <= n_readouts; ++k) {
    for (int j = 0; j <= n_states; ++j) column[j] = spec.conditional_rows[j][k];
    const PhiVector phi = phi_from_rates(column, spec.case_shares, k);
    truth.push_back(pvp_point(phi, inc, k));
  }
  for (int k = 0; k <= n_readouts; ++k) {
    double case_rate = 0.0;
    for (int j = 1; j <= n_states; ++j) case_rate += spec.conditional_rows[j][k] * shares[j - 1];
    truth.push_back(marginal_point_from_rates(spec.conditional_rows[0][k], case_rate, d));
  }
  return truth;
}

// ---------------------------------------------------------------------------
// Replicate generation and evaluation
// ---------------------------------------------------------------------------

// One synthetic study table: case totals are multinomial over the states,
// then every row is multinomial over the readouts. Each replicate index owns
// its own counter-based stream, so draws are reproducible in any order.
inline CountMatrix sample_replicate(const ScenarioSpec &spec, long long replicate_index) {
  const int n_states = spec.n_states();
  const int n_readouts = spec.n_readouts();
  PhiloxRng rng(spec.seed, static_cast<std::uint64_t>(replicate_index));

  const auto shares = spec.full_shares();
  std::vector<long long> case_totals(n_states);
  multinomial_draw(spec.n_cases, shares, case_totals, rng);

  std::vector<std::vector<long long>> counts(n_states + 1,
                                             std::vector<long long>(n_readouts + 1, 0));
  multinomial_draw(spec.n_controls, spec.conditional_rows[0], counts[0], rng);
  for (int j = 1; j <= n_states; ++j)
    multinomial_draw(case_totals[j - 1], spec.conditional_rows[j], counts[j], rng);

  std::vector<std::string> states{"Control"};
  std::vector<std::string> readouts{"Negative"};
  for (int j = 1; j <= n_states; ++j) states.push_back("D" + std::to_string(j));
  for (int k = 1; k <= n_readouts; ++k) readouts.push_back("D" + std::to_string(k));
  return validate_matrix(counts, states, readouts);
}

struct MetricTriple {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Runs the full estimator suite on one replicate. Intervals that degenerate
// keep their zero-width form; coverage later counts them by plain
// containment.
inline std::vector<MetricTriple> evaluate_replicate(const CountMatrix &m, const ScenarioSpec &spec,
                                                    double alpha) {
  const int n_readouts = spec.n_readouts();
  const auto adjusted = adjust_control_counts(m, spec.adjust_policy);
  const auto shares = case_shares(m);
  const IncidenceSpec inc = spec.incidence();
  const auto ctx = detail::CaseContext::make(m, shares, inc);

  std::vector<MetricTriple> out;
  out.reserve(3 * n_readouts + 3);

  {
    EstimateInterval iv = midp_interval(m.at(0, 0), m.n_controls, alpha);
    if (adjusted.applied) iv.point = adjusted.share(0);
    out.push_back({iv.point, iv.lower, iv.upper});
  }
  for (int k = 1; k <= n_readouts; ++k) {
    const auto est = accuracy_estimate(m, k, k, shares, alpha);
    out.push_back({est.point, est.interval.lower, est.interval.upper});
  }
  {
    const auto est = detail::predictive_estimate_impl(m, adjusted, inc, 0,
                                                      PredictiveMetric::pvn, alpha, ctx);
    out.push_back({est.point, est.interval.lower, est.interval.upper});
  }
  for (int k = 1; k <= n_readouts; ++k) {
    const auto est = detail::predictive_estimate_impl(m, adjusted, inc, k,
                                                      PredictiveMetric::pvp, alpha, ctx);
    out.push_back({est.point, est.interval.lower, est.interval.upper});
  }
  const auto collapsed = collapse_cases(m);
  for (int k = 0; k <= n_readouts; ++k) {
    const auto iv = marginal_estimate(collapsed, adjusted, spec.overall_incidence, k, alpha);
    out.push_back({iv.point, iv.lower, iv.upper});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Study aggregation
// ---------------------------------------------------------------------------

struct MetricSummary {
  std::string metric;
  double truth = 0.0;     // percent
  double bias = 0.0;      // percentage points
  double coverage = 0.0;  // percent of replicates whose CI contains truth
  double width = 0.0;     // mean CI width, percentage points
};

struct StudyReport {
  ScenarioSpec scenario;
  double alpha = 0.0;
  std::vector<MetricSummary> rows;
};

// Aggregates bias, coverage, and width over the replicates. Per-replicate
// results land in a preallocated slot array and are reduced in index order,
// so the report does not depend on the number of worker threads.
inline StudyReport run_study(const ScenarioSpec &spec, double alpha, unsigned n_threads = 0) {
  spec.validate();
  const auto truths = scenario_truth(spec);
  const auto names = scenario_metric_names(spec);
  const std::size_t n_metrics = names.size();
  const long long n_reps = spec.replicates;

  std::vector<MetricTriple> slots(static_cast<std::size_t>(n_reps) * n_metrics);
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(
      std::min<long long>(n_reps, static_cast<long long>(n_threads)));

  auto worker = [&](long long begin, long long end) {
    for (long long r = begin; r < end; ++r) {
      const CountMatrix m = sample_replicate(spec, r);
      const auto row = evaluate_replicate(m, spec, alpha);
      std::copy(row.begin(), row.end(), slots.begin() + r * static_cast<long long>(n_metrics));
    }
  };

  if (n_threads <= 1) {
    worker(0, n_reps);
  } else {
    std::vector<std::thread> pool;
    const long long chunk = (n_reps + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
      const long long begin = static_cast<long long>(t) * chunk;
      const long long end = std::min<long long>(begin + chunk, n_reps);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto &th : pool) th.join();
  }

  StudyReport report;
  report.scenario = spec;
  report.alpha = alpha;
  report.rows.resize(n_metrics);
  for (std::size_t i = 0; i < n_metrics; ++i) {
    double bias_sum = 0.0;
    double width_sum = 0.0;
    long long covered = 0;
    for (long long r = 0; r < n_reps; ++r) {
      const MetricTriple &t = slots[r * static_cast<long long>(n_metrics) + i];
      bias_sum += t.estimate - truths[i];
      width_sum += t.upper - t.lower;
      covered += (t.lower <= truths[i] && truths[i] <= t.upper) ? 1 : 0;
    }
    auto &row = report.rows[i];
    row.metric = names[i];
    row.truth = 100.0 * truths[i];
    row.bias = 100.0 * bias_sum / static_cast<double>(n_reps);
    row.coverage = 100.0 * static_cast<double>(covered) / static_cast<double>(n_reps);
    row.width = 100.0 * width_sum / static_cast<double>(n_reps);
  }
  return report;
}

}  // namespace mcat

#endif  // MCAT_SIMULATE_HPP
