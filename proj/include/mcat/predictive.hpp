#ifndef MCAT_PREDICTIVE_HPP
#define MCAT_PREDICTIVE_HPP

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcat/count_matrix.hpp"
#include "mcat/intrinsic.hpp"
#include "mcat/stat_kernels.hpp"

namespace mcat {

// ---------------------------------------------------------------------------
// Incidence configuration
// ---------------------------------------------------------------------------

enum class IncidenceMode { sample, registry };

inline std::string to_string(IncidenceMode m) {
  return m == IncidenceMode::sample ? "sample" : "registry";
}

// Overall incidence P(D) plus the source of the conditional shares P(D_j|D):
// either estimated from the case block (sample, random) or supplied from an
// external registry (fixed for inferential purposes).
struct IncidenceSpec {
  double overall = 0.0;
  IncidenceMode mode = IncidenceMode::sample;
  std::vector<double> registry_shares;  // length J, present iff mode == registry

  void validate(int n_states) const {
    if (!(overall > 0.0 && overall < 1.0))
      throw DomainError("incidence: overall P(D) must lie in (0, 1)");
    if (mode == IncidenceMode::registry) {
      if (static_cast<int>(registry_shares.size()) != n_states)
        throw DimensionMismatchError("incidence: registry shares must cover every disease state");
      double sum = 0.0;
      for (double s : registry_shares) {
        if (s < 0.0 || s > 1.0) throw DomainError("incidence: registry share outside [0, 1]");
        sum += s;
      }
      if (std::fabs(sum - 1.0) > 1e-9)
        throw DomainError("incidence: registry shares must sum to 1");
    } else if (!registry_shares.empty()) {
      throw DomainError("incidence: shares are only accepted in registry mode");
    }
  }
};

// ---------------------------------------------------------------------------
// The 2J-parameter vector phi_k
// ---------------------------------------------------------------------------
//
// Ordered [P(T_k|D_0), P(T_k|D_1), ..., P(T_k|D_J), P(D_1|D), ..., P(D_{J-1}|D)].
// The last conditional share is dependent: p_J = 1 - sum of the rest.

struct PhiVector {
  int readout = 0;
  int n_states = 0;  // J
  std::vector<double> values;

  [[nodiscard]] double control_rate() const { return values[0]; }
  [[nodiscard]] double accuracy(int j) const { return values[j]; }
  [[nodiscard]] double share(int j) const {
    if (j < n_states) return values[n_states + j];
    double head = 0.0;
    for (int i = 1; i < n_states; ++i) head += values[n_states + i];
    return 1.0 - head;
  }
};

// Assemble a phi vector directly from known rates (simulation ground truth).
// `column_rates` holds P(T_k|D_j) for j = 0..J; `shares_head` holds
// p_1..p_{J-1}.
inline PhiVector phi_from_rates(std::span<const double> column_rates,
                                std::span<const double> shares_head, int k) {
  PhiVector phi;
  phi.readout = k;
  phi.n_states = static_cast<int>(column_rates.size()) - 1;
  if (static_cast<int>(shares_head.size()) != phi.n_states - 1)
    throw DimensionMismatchError("phi_from_rates: share vector must have J-1 entries");
  phi.values.assign(column_rates.begin(), column_rates.end());
  phi.values.insert(phi.values.end(), shares_head.begin(), shares_head.end());
  return phi;
}

// ---------------------------------------------------------------------------
// Per-matrix case context (mode-dependent plug-ins)
// ---------------------------------------------------------------------------

namespace detail {

// Shares and truncated-binomial moments for every case state, under the
// incidence mode's plug-in convention: sample p-hats, or registry shares.
struct CaseContext {
  std::vector<double> mode_shares;                // length J
  std::vector<TruncatedBinomialMoments> moments;  // length J, by state-1

  static CaseContext make(const CountMatrix &m, const CaseShareVector &shares,
                          const IncidenceSpec &incidence) {
    incidence.validate(m.n_states());
    CaseContext ctx;
    ctx.mode_shares = incidence.mode == IncidenceMode::registry ? incidence.registry_shares
                                                                : shares.shares;
    ctx.moments.resize(ctx.mode_shares.size());
    for (int j = 1; j <= m.n_states(); ++j) {
      const double p = ctx.mode_shares[j - 1];
      if (p <= 0.0) {
        if (m.row_total(j) > 0)
          throw DomainError("incidence: share is 0 for state '" + m.state_labels[j] +
                            "' which has observed cases");
        continue;  // moments never consulted for an empty row
      }
      ctx.moments[j - 1] = truncated_moments(m.n_cases, p);
    }
    return ctx;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Point estimates
// ---------------------------------------------------------------------------

// phi entries 1..J are the de-truncated accuracy estimates; entries J+1..2J-1
// are the mode's conditional shares. `adjusted` supplies the control rate.
inline PhiVector build_phi(const CountMatrix &m, const AdjustedControlRow &adjusted,
                           const CaseShareVector &shares, const IncidenceSpec &incidence,
                           int k) {
  if (k < 0 || k > m.n_readouts()) throw DimensionMismatchError("build_phi: readout index out of range");
  const auto ctx = detail::CaseContext::make(m, shares, incidence);
  PhiVector phi;
  phi.readout = k;
  phi.n_states = m.n_states();
  phi.values.resize(2 * phi.n_states);
  phi.values[0] = adjusted.share(k);
  for (int j = 1; j <= phi.n_states; ++j) {
    const auto cell = detail::cell_estimate(m, j, k, ctx.moments[j - 1]);
    phi.values[j] = cell.point;
  }
  for (int j = 1; j < phi.n_states; ++j) phi.values[phi.n_states + j] = ctx.mode_shares[j - 1];
  return phi;
}

namespace detail {

inline double phi_denominator(const PhiVector &phi, double d) {
  double case_mass = 0.0;
  for (int j = 1; j <= phi.n_states; ++j) case_mass += phi.accuracy(j) * phi.share(j);
  return phi.control_rate() * (1.0 - d) + d * case_mass;
}

}  // namespace detail

// PVP_k = A_kk p_k P(D) / [beta_k (1 - P(D)) + P(D) sum_j A_jk p_j].
inline double pvp_point(const PhiVector &phi, const IncidenceSpec &incidence, int k) {
  if (k < 1) throw DimensionMismatchError("pvp_point: readout must be a positive category");
  const double d = incidence.overall;
  const double den = detail::phi_denominator(phi, d);
  if (den <= 0.0) throw ZeroDenominatorError("pvp_point: estimated P(T_k) is 0");
  return phi.accuracy(k) * phi.share(k) * d / den;
}

// PVN_k = beta'_k (1 - P(D)) / P(T_k), same denominator as pvp_point.
inline double pvn_point(const PhiVector &phi, const IncidenceSpec &incidence, int k) {
  if (k < 0) throw DimensionMismatchError("pvn_point: readout index out of range");
  const double d = incidence.overall;
  const double den = detail::phi_denominator(phi, d);
  if (den <= 0.0) throw ZeroDenominatorError("pvn_point: estimated P(T_k) is 0");
  return phi.control_rate() * (1.0 - d) / den;
}

// ---------------------------------------------------------------------------
// Analytic gradients of the logit transforms U and W
// ---------------------------------------------------------------------------
//
// U = log{A_kk p_k P(D) / R_U} with R_U the denominator minus the numerator;
// W = log{beta'_k (1 - P(D)) / R_W} with R_W the full case mass. Both treat
// p_J = 1 - sum_{j<J} p_j as dependent. In registry mode the share entries
// are fixed parameters, so their gradient components are zeroed.

inline std::vector<double> gradient_u(const PhiVector &phi, const IncidenceSpec &incidence,
                                      int k) {
  const int n_states = phi.n_states;
  if (k < 1 || k > n_states) throw DimensionMismatchError("gradient_u: readout index out of range");
  const double d = incidence.overall;
  const double a_k = phi.accuracy(k);
  const double p_k = phi.share(k);
  double r_u = phi.control_rate() * (1.0 - d);
  for (int j = 1; j <= n_states; ++j)
    if (j != k) r_u += d * phi.accuracy(j) * phi.share(j);
  if (a_k <= 0.0 || p_k <= 0.0 || r_u <= 0.0)
    throw DomainError("gradient_u: boundary parameter value");

  std::vector<double> g(2 * n_states, 0.0);
  g[0] = -(1.0 - d) / r_u;
  for (int j = 1; j <= n_states; ++j)
    g[j] = (j == k) ? 1.0 / a_k : -d * phi.share(j) / r_u;

  const double a_last = phi.accuracy(n_states);
  for (int j = 1; j < n_states; ++j) {
    if (k < n_states)
      g[n_states + j] = (j == k) ? 1.0 / p_k + d * a_last / r_u
                                 : -d * (phi.accuracy(j) - a_last) / r_u;
    else
      g[n_states + j] = -1.0 / p_k - d * phi.accuracy(j) / r_u;
  }
  if (incidence.mode == IncidenceMode::registry)
    for (int j = 1; j < n_states; ++j) g[n_states + j] = 0.0;
  return g;
}

inline std::vector<double> gradient_w(const PhiVector &phi, const IncidenceSpec &incidence,
                                      int k) {
  const int n_states = phi.n_states;
  if (k < 0 || k > n_states) throw DimensionMismatchError("gradient_w: readout index out of range");
  const double d = incidence.overall;
  const double c = phi.control_rate();
  double r_w = 0.0;
  for (int j = 1; j <= n_states; ++j) r_w += d * phi.accuracy(j) * phi.share(j);
  if (c <= 0.0 || r_w <= 0.0) throw DomainError("gradient_w: boundary parameter value");

  std::vector<double> g(2 * n_states, 0.0);
  g[0] = 1.0 / c;
  for (int j = 1; j <= n_states; ++j) g[j] = -d * phi.share(j) / r_w;
  const double a_last = phi.accuracy(n_states);
  for (int j = 1; j < n_states; ++j)
    g[n_states + j] = -d * (phi.accuracy(j) - a_last) / r_w;
  if (incidence.mode == IncidenceMode::registry)
    for (int j = 1; j < n_states; ++j) g[n_states + j] = 0.0;
  return g;
}

// ---------------------------------------------------------------------------
// Covariance of phi-hat
// ---------------------------------------------------------------------------

// Symmetric 2J x 2J covariance assembled blockwise: scalar control variance,
// V1 = diag(sigma^2_jk), V2 with eta_jj on its leading diagonal, and the
// multinomial block V3 = {diag(v) - v v^t} / N1. Registry mode zeroes every
// row and column touching the share block.
struct PhiCovariance {
  int dim = 0;
  std::vector<double> values;  // row-major dim x dim

  [[nodiscard]] double at(int i, int j) const { return values[static_cast<std::size_t>(i) * dim + j]; }
  double &at(int i, int j) { return values[static_cast<std::size_t>(i) * dim + j]; }

  [[nodiscard]] double quadratic_form(std::span<const double> g) const {
    double total = 0.0;
    for (int i = 0; i < dim; ++i) {
      if (g[i] == 0.0) continue;
      double row = 0.0;
      for (int j = 0; j < dim; ++j) row += at(i, j) * g[j];
      total += g[i] * row;
    }
    return total;
  }
};

namespace detail {

inline PhiCovariance phi_covariance_impl(const CountMatrix &m, const AdjustedControlRow &adjusted,
                                         const IncidenceSpec &incidence, int k,
                                         const CaseContext &ctx,
                                         std::span<const double> sigma2_by_state) {
  const int n_states = m.n_states();
  if (static_cast<int>(sigma2_by_state.size()) != n_states)
    throw DimensionMismatchError("phi_covariance: need one sigma^2 per disease state");
  PhiCovariance v;
  v.dim = 2 * n_states;
  v.values.assign(static_cast<std::size_t>(v.dim) * v.dim, 0.0);

  const double c = adjusted.share(k);
  v.at(0, 0) = c * (1.0 - c) / static_cast<double>(m.n_controls);
  for (int j = 1; j <= n_states; ++j) v.at(j, j) = sigma2_by_state[j - 1];

  if (incidence.mode == IncidenceMode::sample) {
    const double n1 = static_cast<double>(m.n_cases);
    for (int j = 1; j < n_states; ++j) {
      // eta_jj = A-hat_jk { E(n_j+ | n_j+ > 0)/N1 - p_j }; cross terms vanish
      // under the independence assumption, so only the leading diagonal of V2
      // is populated.
      if (m.row_total(j) == 0) continue;
      const auto &mom = ctx.moments[j - 1];
      const double tilde = static_cast<double>(m.at(j, k)) / static_cast<double>(m.row_total(j));
      const double ahat = tilde / mom.prob_positive;
      const double eta = ahat * (mom.mean_given_positive / n1 - ctx.mode_shares[j - 1]);
      v.at(j, n_states + j) = eta;
      v.at(n_states + j, j) = eta;
    }
    for (int i = 1; i < n_states; ++i) {
      for (int j = 1; j < n_states; ++j) {
        const double pi = ctx.mode_shares[i - 1];
        const double pj = ctx.mode_shares[j - 1];
        v.at(n_states + i, n_states + j) = ((i == j ? pi : 0.0) - pi * pj) / n1;
      }
    }
  }
  return v;
}

}  // namespace detail

inline PhiCovariance phi_covariance(const CountMatrix &m, const AdjustedControlRow &adjusted,
                                    const CaseShareVector &shares, const IncidenceSpec &incidence,
                                    int k, std::span<const double> sigma2_by_state) {
  const auto ctx = detail::CaseContext::make(m, shares, incidence);
  return detail::phi_covariance_impl(m, adjusted, incidence, k, ctx, sigma2_by_state);
}

// ---------------------------------------------------------------------------
// Full predictive estimate with interval
// ---------------------------------------------------------------------------

enum class PredictiveMetric { pvp, pvn };

inline std::string to_string(PredictiveMetric m) {
  return m == PredictiveMetric::pvp ? "pvp" : "pvn";
}

struct PredictiveEstimate {
  int readout = 0;
  PredictiveMetric metric = PredictiveMetric::pvp;
  double point = 0.0;
  double logit_variance = 0.0;
  EstimateInterval interval;
  IntervalFlags flags = 0;
};

namespace detail {

inline PredictiveEstimate predictive_estimate_impl(const CountMatrix &m,
                                                   const AdjustedControlRow &adjusted,
                                                   const IncidenceSpec &incidence, int k,
                                                   PredictiveMetric metric, double alpha,
                                                   const CaseContext &ctx) {
  const int n_states = m.n_states();
  const double d = incidence.overall;

  PredictiveEstimate est;
  est.readout = k;
  est.metric = metric;
  if (adjusted.applied) est.flags |= flag_adjusted_controls;
  if (incidence.mode == IncidenceMode::registry) est.flags |= flag_fixed_incidence;

  std::vector<CellEstimate> cells(n_states + 1);
  for (int j = 1; j <= n_states; ++j) cells[j] = cell_estimate(m, j, k, ctx.moments[j - 1]);

  PhiVector phi;
  phi.readout = k;
  phi.n_states = n_states;
  phi.values.resize(2 * n_states);
  phi.values[0] = adjusted.share(k);
  for (int j = 1; j <= n_states; ++j) phi.values[j] = cells[j].point;
  for (int j = 1; j < n_states; ++j) phi.values[n_states + j] = ctx.mode_shares[j - 1];

  const double den = phi_denominator(phi, d);
  if (den <= 0.0) throw ZeroDenominatorError("predictive_estimate: estimated P(T_k) is 0");
  est.point = metric == PredictiveMetric::pvp ? phi.accuracy(k) * phi.share(k) * d / den
                                              : phi.control_rate() * (1.0 - d) / den;

  // Interval basis. For PVP a boundary numerator proportion switches state
  // k's row to the half-count-adjusted rates (interval only); for PVN a
  // boundary control rate has no such fallback and the interval degenerates.
  PhiVector ci_phi = phi;
  std::vector<double> sigma2(n_states);
  for (int j = 1; j <= n_states; ++j) sigma2[j - 1] = cells[j].sigma2_raw;

  bool degenerate = false;
  if (metric == PredictiveMetric::pvp) {
    if (cells[k].empty_row) {
      est.flags |= flag_empty_row | flag_degenerate_input;
      degenerate = true;
    } else if (cells[k].row_adjusted) {
      est.flags |= flag_row_adjusted_for_ci | flag_degenerate_input;
      ci_phi.values[k] = cells[k].a_ci;
      sigma2[k - 1] = cells[k].sigma2_ci;
    }
  } else {
    const double c = phi.control_rate();
    if (!(c > 0.0 && c < 1.0)) {
      est.flags |= flag_degenerate_input;
      degenerate = true;
    }
  }

  double ci_point = est.point;
  if (!degenerate) {
    const double ci_den = phi_denominator(ci_phi, d);
    ci_point = metric == PredictiveMetric::pvp
                   ? ci_phi.accuracy(k) * ci_phi.share(k) * d / ci_den
                   : ci_phi.control_rate() * (1.0 - d) / ci_den;
    degenerate = !(ci_point > 0.0 && ci_point < 1.0);
  }

  if (degenerate) {
    const double p = std::clamp(est.point, 0.0, 1.0);
    est.interval = {p, p, p, alpha, IntervalMethod::degenerate, est.flags | flag_degenerate_input};
    est.flags = est.interval.flags;
    return est;
  }

  const auto g = metric == PredictiveMetric::pvp ? gradient_u(ci_phi, incidence, k)
                                                 : gradient_w(ci_phi, incidence, k);
  const auto v = phi_covariance_impl(m, adjusted, incidence, k, ctx, sigma2);
  est.logit_variance = v.quadratic_form(g);
  est.interval = wald_logit_interval(ci_point, est.logit_variance, alpha, est.flags);
  return est;
}

}  // namespace detail

inline PredictiveEstimate predictive_estimate(const CountMatrix &m,
                                              const AdjustedControlRow &adjusted,
                                              const CaseShareVector &shares,
                                              const IncidenceSpec &incidence, int k,
                                              PredictiveMetric metric, double alpha) {
  if (k < 0 || k > m.n_readouts())
    throw DimensionMismatchError("predictive_estimate: readout index out of range");
  if (metric == PredictiveMetric::pvp && k < 1)
    throw DimensionMismatchError("predictive_estimate: PVP is defined for positive readouts only");
  const auto ctx = detail::CaseContext::make(m, shares, incidence);
  return detail::predictive_estimate_impl(m, adjusted, incidence, k, metric, alpha, ctx);
}

// Overall PVP across all positive readouts: sum of numerators over sum of
// denominators. Point estimate only; no population-level interval is defined
// for it.
inline double overall_pvp_point(const CountMatrix &m, const AdjustedControlRow &adjusted,
                                const CaseShareVector &shares, const IncidenceSpec &incidence) {
  const auto ctx = detail::CaseContext::make(m, shares, incidence);
  const double d = incidence.overall;
  double num = 0.0;
  double den = 0.0;
  for (int k = 1; k <= m.n_readouts(); ++k) {
    PhiVector phi;
    phi.readout = k;
    phi.n_states = m.n_states();
    phi.values.resize(2 * phi.n_states);
    phi.values[0] = adjusted.share(k);
    for (int j = 1; j <= phi.n_states; ++j)
      phi.values[j] = detail::cell_estimate(m, j, k, ctx.moments[j - 1]).point;
    for (int j = 1; j < phi.n_states; ++j) phi.values[phi.n_states + j] = ctx.mode_shares[j - 1];
    num += phi.accuracy(k) * phi.share(k) * d;
    den += detail::phi_denominator(phi, d);
  }
  if (den <= 0.0) throw ZeroDenominatorError("overall_pvp_point: no positive-readout mass");
  return num / den;
}

}  // namespace mcat

#endif  // MCAT_PREDICTIVE_HPP
