#ifndef MCAT_STRATA_HPP
#define MCAT_STRATA_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mcat/count_matrix.hpp"
#include "mcat/predictive.hpp"

namespace mcat {

// ---------------------------------------------------------------------------
// Stratified records
// ---------------------------------------------------------------------------

struct StratumRecord {
  std::string state;
  std::string stratum;
  std::string readout;
  long long count = 0;
};

// The pooled table plus one table per stratum. Category order follows first
// appearance in the record list; the control state and the Negative readout
// must appear first. Only the pooled table is required to pass full
// validation: individual strata may lack controls entirely (disease-stage
// strata usually do).
struct StratifiedRecords {
  std::vector<std::string> strata_labels;
  std::vector<CountMatrix> per_stratum;
  CountMatrix pooled;

  [[nodiscard]] int stratum_index(const std::string &label) const {
    for (std::size_t s = 0; s < strata_labels.size(); ++s)
      if (strata_labels[s] == label) return static_cast<int>(s);
    return -1;
  }

  // P(S = s | D_j): stage composition within state j's cases.
  [[nodiscard]] double stage_share(int s, int j) const {
    return static_cast<double>(per_stratum[s].row_total(j)) /
           static_cast<double>(pooled.row_total(j));
  }
};

namespace detail {

inline CountMatrix matrix_unchecked(const std::vector<std::vector<long long>> &counts,
                                    const std::vector<std::string> &state_labels,
                                    const std::vector<std::string> &readout_labels) {
  CountMatrix m;
  m.state_labels = state_labels;
  m.readout_labels = readout_labels;
  m.counts = counts;
  m.row_totals.assign(counts.size(), 0);
  m.col_totals.assign(counts.front().size(), 0);
  for (std::size_t j = 0; j < counts.size(); ++j)
    for (std::size_t k = 0; k < counts[j].size(); ++k) {
      m.row_totals[j] += counts[j][k];
      m.col_totals[k] += counts[j][k];
    }
  m.n_controls = m.row_totals[0];
  for (std::size_t j = 1; j < counts.size(); ++j) m.n_cases += m.row_totals[j];
  m.n_total = m.n_controls + m.n_cases;
  return m;
}

}  // namespace detail

inline StratifiedRecords partition_by_stratum(const std::vector<StratumRecord> &records) {
  if (records.empty()) throw ValidationError("partition_by_stratum: empty record list");

  std::vector<std::string> states, readouts, strata;
  auto index_of = [](std::vector<std::string> &labels, const std::string &raw) {
    const std::string label = trim(raw);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return static_cast<int>(i);
    labels.push_back(label);
    return static_cast<int>(labels.size()) - 1;
  };

  std::vector<std::array<int, 3>> coords;  // (state, stratum, readout)
  coords.reserve(records.size());
  for (const auto &r : records) {
    if (r.count < 0) throw NegativeCountError("partition_by_stratum: negative count");
    coords.push_back({index_of(states, r.state), index_of(strata, r.stratum),
                      index_of(readouts, r.readout)});
  }

  const std::size_t n_rows = states.size();
  const std::size_t n_cols = readouts.size();
  std::vector<std::vector<long long>> pooled(n_rows, std::vector<long long>(n_cols, 0));
  std::vector<std::vector<std::vector<long long>>> split(
      strata.size(), std::vector<std::vector<long long>>(n_rows, std::vector<long long>(n_cols, 0)));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto [j, s, k] = coords[i];
    pooled[j][k] += records[i].count;
    split[s][j][k] += records[i].count;
  }

  StratifiedRecords out;
  out.strata_labels = strata;
  out.pooled = validate_matrix(pooled, states, readouts);
  out.per_stratum.reserve(strata.size());
  for (const auto &grid : split)
    out.per_stratum.push_back(detail::matrix_unchecked(grid, out.pooled.state_labels,
                                                       out.pooled.readout_labels));
  return out;
}

// ---------------------------------------------------------------------------
// Stage-decomposed predictive value positive
// ---------------------------------------------------------------------------
//
// PVP_k restricted to stage s0: the numerator becomes the stage-conditional
// accuracy times the stage share, while the denominator stays the full
// P(T_k) of the unstratified analysis, so the stage parts telescope back to
// PVP_k exactly. Inference runs the delta method over the parameter vector
// [control rate, off-state accuracies, case shares, stage-conditional
// accuracies, stage share]; the pooled accuracy for state k is excluded
// because the stage parts determine it. The gradient is taken by central
// finite differences; the covariance is block-diagonal with binomial blocks
// for the stage terms.

inline PredictiveEstimate stage_pvp_estimate(const StratifiedRecords &records,
                                             const AdjustedControlRow &adjusted,
                                             const IncidenceSpec &incidence, int k,
                                             const std::string &stratum_label, double alpha) {
  const CountMatrix &m = records.pooled;
  const int n_states = m.n_states();
  if (k < 1 || k > m.n_readouts())
    throw DimensionMismatchError("stage_pvp_estimate: readout index out of range");
  const int s0 = records.stratum_index(stratum_label);
  if (s0 < 0) throw ValidationError("stage_pvp_estimate: unknown stratum '" + stratum_label + "'");

  const CaseShareVector shares = case_shares(m);
  const auto ctx = detail::CaseContext::make(m, shares, incidence);
  const double d = incidence.overall;

  const long long n_k = m.row_total(k);
  const long long n_k_s0 = records.per_stratum[s0].row_total(k);
  if (n_k_s0 == 0)
    throw EmptyStratumError("stage_pvp_estimate: state '" + m.state_labels[k] +
                            "' has no cases in stratum '" + stratum_label + "'");

  const double q = static_cast<double>(n_k_s0) / static_cast<double>(n_k);
  const double t_s0 = static_cast<double>(records.per_stratum[s0].at(k, k)) /
                      static_cast<double>(n_k_s0);
  const long long n_oth = n_k - n_k_s0;
  const long long x_oth = m.at(k, k) - records.per_stratum[s0].at(k, k);
  const double t_oth = n_oth > 0 ? static_cast<double>(x_oth) / static_cast<double>(n_oth) : 0.0;
  const double p_fix = ctx.moments[k - 1].prob_positive;  // fixed in variance work

  std::vector<detail::CellEstimate> cells(n_states + 1);
  for (int j = 1; j <= n_states; ++j) cells[j] = detail::cell_estimate(m, j, k, ctx.moments[j - 1]);

  // psi = [c, a_j (j != k), p_1..p_{J-1}, t_s0, t_oth, q]
  const int dim = 2 * n_states + 2;
  std::vector<double> psi;
  psi.reserve(dim);
  psi.push_back(adjusted.share(k));
  for (int j = 1; j <= n_states; ++j)
    if (j != k) psi.push_back(cells[j].point);
  for (int j = 1; j < n_states; ++j) psi.push_back(ctx.mode_shares[j - 1]);
  psi.push_back(t_s0);
  psi.push_back(t_oth);
  psi.push_back(q);

  auto stage_parts = [&](const std::vector<double> &v) {
    // returns {numerator, denominator}
    const double c = v[0];
    const double ts = v[dim - 3];
    const double to = v[dim - 2];
    const double qq = v[dim - 1];
    auto share_at = [&](int j) {
      if (j < n_states) return v[n_states - 1 + j];  // p_j stored after the J-1 accuracies
      double s = 0.0;
      for (int i = 1; i < n_states; ++i) s += v[n_states - 1 + i];
      return 1.0 - s;
    };
    const double a_k = (ts * qq + to * (1.0 - qq)) / p_fix;
    double case_mass = a_k * share_at(k);
    int slot = 1;
    for (int j = 1; j <= n_states; ++j) {
      if (j == k) continue;
      case_mass += v[slot] * share_at(j);
      ++slot;
    }
    const double den = c * (1.0 - d) + d * case_mass;
    const double num = (ts * qq / p_fix) * share_at(k) * d;
    return std::pair<double, double>{num, den};
  };

  const auto [num, den] = stage_parts(psi);
  if (den <= 0.0) throw ZeroDenominatorError("stage_pvp_estimate: estimated P(T_k) is 0");

  PredictiveEstimate est;
  est.readout = k;
  est.metric = PredictiveMetric::pvp;
  est.point = num / den;
  if (adjusted.applied) est.flags |= flag_adjusted_controls;
  if (incidence.mode == IncidenceMode::registry) est.flags |= flag_fixed_incidence;

  if (!(est.point > 0.0 && est.point < 1.0)) {
    const double p = std::clamp(est.point, 0.0, 1.0);
    est.flags |= flag_degenerate_input;
    est.interval = {p, p, p, alpha, IntervalMethod::degenerate, est.flags};
    return est;
  }

  auto z_of = [&](const std::vector<double> &v) {
    const auto [n, dn] = stage_parts(v);
    if (!(n > 0.0) || !(dn - n > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log(n) - std::log(dn - n);
  };

  constexpr double h = 1e-6;
  std::vector<double> grad(dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    std::vector<double> up = psi, down = psi;
    up[i] += h;
    down[i] -= h;
    double z_up = z_of(up), z_down = z_of(down);
    if (std::isnan(z_up) || std::isnan(z_down)) {  // one-sided at a boundary
      const double z0 = z_of(psi);
      if (!std::isnan(z_up))
        grad[i] = (z_up - z0) / h;
      else if (!std::isnan(z_down))
        grad[i] = (z0 - z_down) / h;
      else
        grad[i] = 0.0;
    } else {
      grad[i] = (z_up - z_down) / (2.0 * h);
    }
  }

  // Covariance: phi block (with state k's accuracy row/column dropped) plus
  // independent binomial blocks for the stage terms.
  std::vector<double> sigma2(n_states);
  for (int j = 1; j <= n_states; ++j) sigma2[j - 1] = cells[j].sigma2_raw;
  const PhiCovariance full =
      detail::phi_covariance_impl(m, adjusted, incidence, k, ctx, sigma2);

  std::vector<int> keep;  // phi indices retained, in psi order
  keep.reserve(2 * n_states - 1);
  keep.push_back(0);
  for (int j = 1; j <= n_states; ++j)
    if (j != k) keep.push_back(j);
  for (int j = 1; j < n_states; ++j) keep.push_back(n_states + j);

  PhiCovariance v;
  v.dim = dim;
  v.values.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b)
      v.at(static_cast<int>(a), static_cast<int>(b)) = full.at(keep[a], keep[b]);
  v.at(dim - 3, dim - 3) = t_s0 * (1.0 - t_s0) / static_cast<double>(n_k_s0);
  v.at(dim - 2, dim - 2) = n_oth > 0 ? t_oth * (1.0 - t_oth) / static_cast<double>(n_oth) : 0.0;
  v.at(dim - 1, dim - 1) = q * (1.0 - q) / static_cast<double>(n_k);

  est.logit_variance = v.quadratic_form(grad);
  est.interval = wald_logit_interval(est.point, est.logit_variance, alpha, est.flags);
  return est;
}

}  // namespace mcat

#endif  // MCAT_STRATA_HPP
