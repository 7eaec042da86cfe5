#ifndef MCAT_INTRINSIC_HPP
#define MCAT_INTRINSIC_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "mcat/count_matrix.hpp"
#include "mcat/stat_kernels.hpp"

namespace mcat {

// ---------------------------------------------------------------------------
// Intrinsic accuracy for one (state, readout) cell
// ---------------------------------------------------------------------------
//
// The observed per-row proportion A~ = n_jk / n_j+ is a compound quantity:
// the row total n_j+ is itself Binomial(N1, p_j). The unbiased point estimate
// divides by P(n_j+ > 0); the variance and the logit-scale variance carry the
// extra truncation terms. P(n_j+ > 0) is treated as a fixed constant inside
// all variance formulas.

struct AccuracyEstimate {
  int state_index = 0;
  int readout_index = 0;
  double tilde = 0.0;           // raw conditional proportion, 0/0 == 0
  double point = 0.0;           // tilde / P(n_j+ > 0)
  double sigma2 = 0.0;          // variance of the point estimate
  double logit_variance = 0.0;  // variance of logit(tilde)
  EstimateInterval interval;
};

// sigma^2 of the de-truncated estimate, with the plug-in a for P(T_k | D_j).
inline double accuracy_sigma2(double a, const TruncatedBinomialMoments &m) {
  const double pp = m.prob_positive;
  return (a * a * (1.0 - pp) + a * (1.0 - a) * m.mean_inverse_given_positive) / pp;
}

// Variance of logit(A~): P(n>0) * [a(1-P(n>0)) + (1-a) E(1/n | n>0)] / (a (1-a)^2).
inline double accuracy_logit_variance(double a, const TruncatedBinomialMoments &m) {
  const double pp = m.prob_positive;
  return pp * (a * (1.0 - pp) + (1.0 - a) * m.mean_inverse_given_positive) /
         (a * (1.0 - a) * (1.0 - a));
}

namespace detail {

// One (state, readout) cell with both the raw plug-in and the basis actually
// used for variance/CI work. They differ only at boundary proportions, where
// the logit is undefined and the half-count-adjusted row supplies the
// interval (the point estimate stays raw).
struct CellEstimate {
  double tilde = 0.0;
  double point = 0.0;     // tilde / P(n_j+ > 0)
  double tilde_ci = 0.0;  // interval center
  double a_ci = 0.0;      // plug-in for sigma2 / logit variance
  double sigma2_raw = 0.0;
  double sigma2_ci = 0.0;
  double logit_variance = 0.0;
  bool empty_row = false;
  bool row_adjusted = false;
};

inline CellEstimate cell_estimate(const CountMatrix &m, int j, int k,
                                  const TruncatedBinomialMoments &moments) {
  CellEstimate cell;
  const long long row_total = m.row_total(j);
  if (row_total == 0) {
    cell.empty_row = true;
    return cell;
  }
  cell.tilde = static_cast<double>(m.at(j, k)) / static_cast<double>(row_total);
  cell.point = cell.tilde / moments.prob_positive;
  cell.sigma2_raw = accuracy_sigma2(cell.point, moments);
  if (cell.tilde > 0.0 && cell.tilde < 1.0) {
    cell.tilde_ci = cell.tilde;
    cell.a_ci = cell.point;
    cell.sigma2_ci = cell.sigma2_raw;
  } else {
    cell.row_adjusted = true;
    cell.tilde_ci = (static_cast<double>(m.at(j, k)) + 0.5) /
                    (static_cast<double>(row_total) + 0.5 * (m.n_readouts() + 1));
    cell.a_ci = cell.tilde_ci / moments.prob_positive;
    cell.sigma2_ci = accuracy_sigma2(cell.a_ci, moments);
  }
  cell.logit_variance = accuracy_logit_variance(cell.a_ci, moments);
  return cell;
}

inline AccuracyEstimate accuracy_estimate_impl(const CountMatrix &m, int j, int k,
                                               double binomial_share, double alpha) {
  AccuracyEstimate est;
  est.state_index = j;
  est.readout_index = k;

  if (m.row_total(j) == 0) {
    est.logit_variance = std::numeric_limits<double>::quiet_NaN();
    est.interval = {0.0, 0.0, 1.0, alpha, IntervalMethod::degenerate, flag_empty_row};
    return est;
  }

  const auto moments = truncated_moments(m.n_cases, binomial_share);
  const CellEstimate cell = cell_estimate(m, j, k, moments);
  est.tilde = cell.tilde;
  est.point = cell.point;
  est.sigma2 = cell.sigma2_ci;
  est.logit_variance = cell.logit_variance;
  const IntervalFlags flags =
      cell.row_adjusted ? (flag_row_adjusted_for_ci | flag_degenerate_input) : 0u;
  est.interval = wald_logit_interval(cell.tilde_ci, cell.logit_variance, alpha, flags);
  return est;
}

}  // namespace detail

// A_jk = P(T_k | D_j) with a logit-scale Wald interval. The binomial law of
// n_j+ uses the plug-in share p_j from `shares`.
inline AccuracyEstimate accuracy_estimate(const CountMatrix &m, int j, int k,
                                          const CaseShareVector &shares, double alpha) {
  if (j < 1 || j > m.n_states()) throw DimensionMismatchError("accuracy_estimate: state index out of range");
  if (k < 0 || k > m.n_readouts()) throw DimensionMismatchError("accuracy_estimate: readout index out of range");
  return detail::accuracy_estimate_impl(m, j, k, shares[j - 1], alpha);
}

// False-negative probability for state j: the k = 0 cell.
inline AccuracyEstimate false_negative_estimate(const CountMatrix &m, int j,
                                                const CaseShareVector &shares, double alpha) {
  return accuracy_estimate(m, j, 0, shares, alpha);
}

// 1 - false-negative: probability of any positive readout, right or wrong.
inline EstimateInterval crude_sensitivity(const CountMatrix &m, int j,
                                          const CaseShareVector &shares, double alpha) {
  const AccuracyEstimate fn = false_negative_estimate(m, j, shares, alpha);
  EstimateInterval iv;
  iv.point = 1.0 - fn.point;
  iv.lower = 1.0 - fn.interval.upper;
  iv.upper = 1.0 - fn.interval.lower;
  iv.alpha = alpha;
  iv.method = fn.interval.method;
  iv.flags = fn.interval.flags;
  return iv;
}

// ---------------------------------------------------------------------------
// Control-row rates
// ---------------------------------------------------------------------------

struct ControlRates {
  EstimateInterval specificity;                 // A_0 = n_00 / N0
  std::vector<EstimateInterval> false_positive; // beta_k = n_0k / N0, k = 1..K
};

// Mid-p intervals are always computed on the raw integer counts; when the
// half-count adjustment is in effect the point estimates switch to the
// adjusted shares and the interval is flagged.
inline ControlRates control_rates(const CountMatrix &m, const AdjustedControlRow &adjusted,
                                  double alpha) {
  ControlRates rates;
  const int n_readouts = m.n_readouts();
  for (int k = 0; k <= n_readouts; ++k) {
    EstimateInterval iv = midp_interval(m.at(0, k), m.n_controls, alpha);
    if (adjusted.applied) {
      iv.point = adjusted.share(k);
      iv.flags |= flag_adjusted_controls;
    }
    if (k == 0)
      rates.specificity = iv;
    else
      rates.false_positive.push_back(iv);
  }
  return rates;
}

// ---------------------------------------------------------------------------
// Aggregate accuracy
// ---------------------------------------------------------------------------

// Proportion of correctly classified subjects across the readout-bearing
// states 1..K. Point estimate only; it conditions on the realized case mix,
// so no population-level interval is attached.
inline double aggregate_accuracy(const CountMatrix &m) {
  long long diag = 0;
  long long total = 0;
  for (int j = 1; j <= m.n_readouts(); ++j) {
    diag += m.at(j, j);
    total += m.row_total(j);
  }
  if (total == 0) throw EmptyCaseBlockError("aggregate_accuracy: no cases in readout-bearing states");
  return static_cast<double>(diag) / static_cast<double>(total);
}

}  // namespace mcat

#endif  // MCAT_INTRINSIC_HPP
