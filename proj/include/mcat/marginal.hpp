#ifndef MCAT_MARGINAL_HPP
#define MCAT_MARGINAL_HPP

#include <array>
#include <cmath>
#include <vector>

#include "mcat/count_matrix.hpp"
#include "mcat/stat_kernels.hpp"

namespace mcat {

// ---------------------------------------------------------------------------
// Marginal readout distribution P(T_k)
// ---------------------------------------------------------------------------
//
// Built from the collapsed two-row table: P(T_k) mixes the control rate and
// the pooled case rate with weights 1 - P(D) and P(D). P(D) is treated as
// fixed; the delta-method variance carries the two binomial pieces through
// the logit transform.

struct MarginalParams {
  int readout = 0;
  double control_rate = 0.0;  // P(T_k | D_0), adjusted share when in effect
  double case_rate = 0.0;     // P(T_k | D) from the collapsed case row
  double overall = 0.0;       // P(D)
  double b0 = 0.0;            // P(T_k)
  double b1 = 0.0;            // 1 - P(T_k)
};

inline MarginalParams marginal_params(const CollapsedMatrix &collapsed,
                                      const AdjustedControlRow &adjusted,
                                      double overall_incidence, int k) {
  if (k < 0 || k > collapsed.n_readouts())
    throw DimensionMismatchError("marginal: readout index out of range");
  if (!(overall_incidence > 0.0 && overall_incidence < 1.0))
    throw DomainError("marginal: overall incidence must lie in (0, 1)");
  MarginalParams p;
  p.readout = k;
  p.control_rate = adjusted.share(k);
  p.case_rate = collapsed.case_rate(k);
  p.overall = overall_incidence;
  p.b0 = p.control_rate * (1.0 - p.overall) + p.case_rate * p.overall;
  p.b1 = 1.0 - p.b0;
  return p;
}

// Closed-form marginal point for known rates; shared with the simulation
// ground-truth path.
inline double marginal_point_from_rates(double control_rate, double case_rate, double overall) {
  return control_rate * (1.0 - overall) + case_rate * overall;
}

// Q = logit{P(T_k)} as a function of (control rate, case rate); its gradient
// is ((1 - P(D))/(B0 B1), P(D)/(B0 B1)).
inline std::array<double, 2> gradient_q(double control_rate, double case_rate, double overall) {
  const double b0 = marginal_point_from_rates(control_rate, case_rate, overall);
  const double b1 = 1.0 - b0;
  if (!(b0 > 0.0 && b0 < 1.0)) throw DomainError("gradient_q: P(T_k) at a boundary");
  return {(1.0 - overall) / (b0 * b1), overall / (b0 * b1)};
}

inline EstimateInterval marginal_estimate(const CollapsedMatrix &collapsed,
                                          const AdjustedControlRow &adjusted,
                                          double overall_incidence, int k, double alpha) {
  const MarginalParams p = marginal_params(collapsed, adjusted, overall_incidence, k);
  IntervalFlags flags = adjusted.applied ? flag_adjusted_controls : 0u;
  if (!(p.b0 > 0.0 && p.b0 < 1.0)) {
    EstimateInterval iv;
    const double b = std::clamp(p.b0, 0.0, 1.0);
    iv = {b, b, b, alpha, IntervalMethod::degenerate, flags | flag_degenerate_input};
    return iv;
  }
  const double c = p.control_rate;
  const double r = p.case_rate;
  const auto g = gradient_q(c, r, p.overall);
  const double variance =
      g[0] * g[0] * c * (1.0 - c) / static_cast<double>(collapsed.n_controls) +
      g[1] * g[1] * r * (1.0 - r) / static_cast<double>(collapsed.n_cases);
  return wald_logit_interval(p.b0, variance, alpha, flags);
}

// All K+1 marginal estimates; the points sum to one by construction.
inline std::vector<EstimateInterval> marginal_table(const CollapsedMatrix &collapsed,
                                                    const AdjustedControlRow &adjusted,
                                                    double overall_incidence, double alpha) {
  std::vector<EstimateInterval> table;
  table.reserve(collapsed.n_readouts() + 1);
  for (int k = 0; k <= collapsed.n_readouts(); ++k)
    table.push_back(marginal_estimate(collapsed, adjusted, overall_incidence, k, alpha));
  return table;
}

}  // namespace mcat

#endif  // MCAT_MARGINAL_HPP
