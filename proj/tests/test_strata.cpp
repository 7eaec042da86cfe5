#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "fixtures.hpp"
#include "mcat/report.hpp"
#include "mcat/strata.hpp"

using namespace mcat;

namespace {

// Synthetic two-stage cohort, J = K = 3. Controls carry a placeholder
// stratum; stage labels apply to cases only.
std::vector<StratumRecord> two_stage_records() {
  std::vector<StratumRecord> r;
  auto add = [&](const char *state, const char *stage, const char *readout, long long n) {
    r.push_back({state, stage, readout, n});
  };
  add("Control", "-", "Negative", 960);
  add("Control", "-", "D1", 20);
  add("Control", "-", "D2", 12);
  add("Control", "-", "D3", 8);
  // state D1: early stage 40 cases (20 correct), late stage 60 cases (54 correct)
  add("D1", "early", "Negative", 14);
  add("D1", "early", "D1", 20);
  add("D1", "early", "D2", 4);
  add("D1", "early", "D3", 2);
  add("D1", "late", "Negative", 3);
  add("D1", "late", "D1", 54);
  add("D1", "late", "D2", 2);
  add("D1", "late", "D3", 1);
  // state D2
  add("D2", "early", "Negative", 20);
  add("D2", "early", "D1", 5);
  add("D2", "early", "D2", 30);
  add("D2", "early", "D3", 5);
  add("D2", "late", "Negative", 4);
  add("D2", "late", "D1", 2);
  add("D2", "late", "D2", 50);
  add("D2", "late", "D3", 4);
  // state D3
  add("D3", "early", "Negative", 25);
  add("D3", "early", "D1", 5);
  add("D3", "early", "D2", 5);
  add("D3", "early", "D3", 15);
  add("D3", "late", "Negative", 5);
  add("D3", "late", "D1", 2);
  add("D3", "late", "D2", 3);
  add("D3", "late", "D3", 40);
  return r;
}

}  // namespace

TEST_CASE("partition conservation") {
  const auto records = two_stage_records();
  const auto split = partition_by_stratum(records);
  REQUIRE(split.strata_labels.size() == 3);  // "-", early, late

  for (int j = 0; j <= split.pooled.n_states(); ++j)
    for (int k = 0; k <= split.pooled.n_readouts(); ++k) {
      long long sum = 0;
      for (const auto &stratum : split.per_stratum) sum += stratum.at(j, k);
      CHECK(sum == split.pooled.at(j, k));
    }

  // stage shares per state sum to one
  for (int j = 1; j <= split.pooled.n_states(); ++j) {
    double total = 0.0;
    for (std::size_t s = 0; s < split.strata_labels.size(); ++s)
      total += split.stage_share(static_cast<int>(s), j);
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("two identical strata pool to twice the base") {
  std::vector<StratumRecord> records;
  for (const char *stratum : {"a", "b"}) {
    records.push_back({"Control", stratum, "Negative", 45});
    records.push_back({"Control", stratum, "D1", 5});
    records.push_back({"D1", stratum, "Negative", 10});
    records.push_back({"D1", stratum, "D1", 40});
  }
  const auto split = partition_by_stratum(records);
  CHECK(split.pooled.at(0, 0) == 90);
  CHECK(split.pooled.at(1, 1) == 80);
  CHECK(split.per_stratum[0].at(1, 1) == 40);

  std::vector<StratumRecord> single(records.begin(), records.begin() + 4);
  const auto one = partition_by_stratum(single);
  CHECK(one.pooled == one.per_stratum[0]);
}

TEST_CASE("stage estimates telescope to the pooled predictive value") {
  const auto split = partition_by_stratum(two_stage_records());
  const auto adjusted = adjust_control_counts(split.pooled, AdjustPolicy::off);
  const auto shares = case_shares(split.pooled);
  IncidenceSpec inc;
  inc.overall = 0.02;

  for (int k = 1; k <= split.pooled.n_readouts(); ++k) {
    const auto pooled = predictive_estimate(split.pooled, adjusted, shares, inc, k,
                                            PredictiveMetric::pvp, 0.05);
    const auto early = stage_pvp_estimate(split, adjusted, inc, k, "early", 0.05);
    const auto late = stage_pvp_estimate(split, adjusted, inc, k, "late", 0.05);
    CHECK(early.point + late.point == Catch::Approx(pooled.point).margin(1e-12));
    CHECK(early.interval.lower <= early.point);
    CHECK(early.point <= early.interval.upper);
    CHECK(early.interval.width() >= 0.0);
  }
}

TEST_CASE("a stage holding every case reproduces the pooled estimate") {
  std::vector<StratumRecord> records;
  records.push_back({"Control", "only", "Negative", 95});
  records.push_back({"Control", "only", "D1", 3});
  records.push_back({"Control", "only", "D2", 2});
  records.push_back({"D1", "only", "Negative", 10});
  records.push_back({"D1", "only", "D1", 35});
  records.push_back({"D1", "only", "D2", 5});
  records.push_back({"D2", "only", "Negative", 15});
  records.push_back({"D2", "only", "D1", 5});
  records.push_back({"D2", "only", "D2", 30});
  const auto split = partition_by_stratum(records);
  const auto adjusted = adjust_control_counts(split.pooled, AdjustPolicy::off);
  const auto shares = case_shares(split.pooled);
  IncidenceSpec inc;
  inc.overall = 0.03;

  for (int k = 1; k <= 2; ++k) {
    const auto pooled = predictive_estimate(split.pooled, adjusted, shares, inc, k,
                                            PredictiveMetric::pvp, 0.05);
    const auto stage = stage_pvp_estimate(split, adjusted, inc, k, "only", 0.05);
    CHECK(stage.point == Catch::Approx(pooled.point).margin(1e-12));
  }
}

TEST_CASE("stage numerator agrees with a direct joint-count evaluation") {
  const auto split = partition_by_stratum(two_stage_records());
  const auto adjusted = adjust_control_counts(split.pooled, AdjustPolicy::off);
  const auto shares = case_shares(split.pooled);
  IncidenceSpec inc;
  inc.overall = 0.02;
  const int k = 2;
  const int early = split.stratum_index("early");

  // brute force from the joint stage-by-readout counts: the stage numerator
  // is (n_{k, early, k} / n_k+) p_k d / P(n_k+ > 0)
  const double n_k = static_cast<double>(split.pooled.row_total(k));
  const double joint = static_cast<double>(split.per_stratum[early].at(k, k));
  const auto moments = truncated_moments(split.pooled.n_cases, shares[k - 1]);
  const double num = (joint / n_k) / moments.prob_positive * shares[k - 1] * inc.overall;

  const PhiVector phi = build_phi(split.pooled, adjusted, shares, inc, k);
  double den = phi.control_rate() * (1.0 - inc.overall);
  for (int j = 1; j <= phi.n_states; ++j)
    den += inc.overall * phi.accuracy(j) * phi.share(j);

  const auto stage = stage_pvp_estimate(split, adjusted, inc, k, "early", 0.05);
  CHECK(stage.point == Catch::Approx(num / den).margin(1e-12));
}

TEST_CASE("per-stage crude sensitivity from the partitioned tables") {
  const auto split = partition_by_stratum(two_stage_records());
  const int early = split.stratum_index("early");
  const int late = split.stratum_index("late");
  // state D1: early 40 cases with 14 negatives, late 60 with 3
  const auto &m_early = split.per_stratum[early];
  const auto &m_late = split.per_stratum[late];
  CHECK(1.0 - static_cast<double>(m_early.at(1, 0)) / m_early.row_total(1) ==
        Catch::Approx(26.0 / 40.0));
  CHECK(1.0 - static_cast<double>(m_late.at(1, 0)) / m_late.row_total(1) ==
        Catch::Approx(57.0 / 60.0));
}

TEST_CASE("demographic strata feed the full analysis per stratum") {
  // a demographic factor partitions controls and cases alike; each stratum
  // is a complete table that the whole pipeline accepts, paired with its
  // own incidence value
  std::vector<StratumRecord> records;
  for (const char *group : {"under65", "over65"}) {
    const long long scale = std::string(group) == "under65" ? 1 : 2;
    records.push_back({"Control", group, "Negative", 190 * scale});
    records.push_back({"Control", group, "D1", 6 * scale});
    records.push_back({"Control", group, "D2", 4 * scale});
    records.push_back({"D1", group, "Negative", 20 * scale});
    records.push_back({"D1", group, "D1", 70 * scale});
    records.push_back({"D1", group, "D2", 10 * scale});
    records.push_back({"D2", group, "Negative", 15 * scale});
    records.push_back({"D2", group, "D1", 5 * scale});
    records.push_back({"D2", group, "D2", 60 * scale});
  }
  const auto split = partition_by_stratum(records);

  for (std::size_t s = 0; s < split.strata_labels.size(); ++s) {
    const auto &stratum = split.per_stratum[s];
    const CountMatrix revalidated =
        validate_matrix(stratum.counts, stratum.state_labels, stratum.readout_labels);
    IncidenceSpec inc;
    inc.overall = s == 0 ? 0.01 : 0.04;  // stratum-specific incidence
    const auto report = analyze(revalidated, inc);
    CHECK(report.states.size() == 2);
    CHECK(report.predictive[1].pvp.has_value());
    // identical conditional rates, so predictive values differ only
    // through the incidence weighting
    if (s == 1) {
      IncidenceSpec low;
      low.overall = 0.01;
      const auto same_rates = analyze(revalidated, low);
      CHECK(report.predictive[1].pvp->point > same_rates.predictive[1].pvp->point);
    }
  }
}

TEST_CASE("stage errors") {
  const auto split = partition_by_stratum(two_stage_records());
  const auto adjusted = adjust_control_counts(split.pooled, AdjustPolicy::off);
  IncidenceSpec inc;
  inc.overall = 0.02;
  CHECK_THROWS_AS(stage_pvp_estimate(split, adjusted, inc, 1, "nonexistent", 0.05),
                  ValidationError);
  // the placeholder stratum holds controls only: no cases of state 1
  CHECK_THROWS_AS(stage_pvp_estimate(split, adjusted, inc, 1, "-", 0.05), EmptyStratumError);
}
