#ifndef MCAT_STAT_KERNELS_HPP
#define MCAT_STAT_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mcat/errors.hpp"

namespace mcat {

// ---------------------------------------------------------------------------
// Confidence-interval value type
// ---------------------------------------------------------------------------

enum class IntervalMethod { midp, logit_wald, degenerate };

// Provenance markers carried by an interval so reports can say how it was made.
enum IntervalFlag : unsigned {
  flag_adjusted_controls = 1u << 0,   // half-count-adjusted control shares used
  flag_fixed_incidence = 1u << 1,     // registry (fixed) conditional incidence
  flag_degenerate_input = 1u << 2,    // a boundary proportion forced a fallback
  flag_empty_row = 1u << 3,           // no observations behind this estimate
  flag_row_adjusted_for_ci = 1u << 4  // case row half-count-adjusted, CI only
};
using IntervalFlags = unsigned;

inline std::vector<std::string> interval_flag_names(IntervalFlags flags) {
  std::vector<std::string> names;
  if (flags & flag_adjusted_controls) names.push_back("adjusted-controls");
  if (flags & flag_fixed_incidence) names.push_back("fixed-incidence");
  if (flags & flag_degenerate_input) names.push_back("degenerate-input");
  if (flags & flag_empty_row) names.push_back("empty-row");
  if (flags & flag_row_adjusted_for_ci) names.push_back("row-adjusted-for-ci");
  return names;
}

struct EstimateInterval {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.0;
  IntervalMethod method = IntervalMethod::degenerate;
  IntervalFlags flags = 0;

  [[nodiscard]] bool contains(double value) const {
    return lower <= value && value <= upper;
  }
  [[nodiscard]] double width() const { return upper - lower; }
};

// ---------------------------------------------------------------------------
// Scalar helpers
// ---------------------------------------------------------------------------

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double anti_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Inverse of the standard normal CDF. Acklam's rational approximation
// polished with one Halley step against erfc; absolute error well below 1e-9.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};

  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement: Phi(x) via erfc is good to machine precision.
  const double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = err * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

// ---------------------------------------------------------------------------
// Binomial pmf and tails
// ---------------------------------------------------------------------------

inline double binomial_log_pmf(long long n, long long x, double p) {
  if (x < 0 || x > n) return -std::numeric_limits<double>::infinity();
  if (p <= 0.0) return x == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return x == n ? 0.0 : -std::numeric_limits<double>::infinity();
  const double nn = static_cast<double>(n);
  const double xx = static_cast<double>(x);
  return std::lgamma(nn + 1.0) - std::lgamma(xx + 1.0) - std::lgamma(nn - xx + 1.0) +
         xx * std::log(p) + (nn - xx) * std::log1p(-p);
}

inline double binomial_pmf(long long n, long long x, double p) {
  return std::exp(binomial_log_pmf(n, x, p));
}

namespace detail {

inline long long binomial_mode(long long n, double p) {
  long long m = static_cast<long long>(std::floor((static_cast<double>(n) + 1.0) * p));
  return std::clamp<long long>(m, 0, n);
}

// sum of pmf over [a, n]; requires a past the mode so the terms only decay
inline double binomial_sum_up(long long n, long long a, double p) {
  const double ratio = p / (1.0 - p);
  double f = binomial_pmf(n, a, p);
  double s = 0.0;
  for (long long t = a; t <= n; ++t) {
    s += f;
    if (f <= s * 1e-17) break;
    f *= static_cast<double>(n - t) / static_cast<double>(t + 1) * ratio;
  }
  return std::min(s, 1.0);
}

// sum of pmf over [0, b]; requires b at or below the mode
inline double binomial_sum_down(long long n, long long b, double p) {
  const double ratio = (1.0 - p) / p;
  double f = binomial_pmf(n, b, p);
  double s = 0.0;
  for (long long t = b; t >= 0; --t) {
    s += f;
    if (f <= s * 1e-17) break;
    f *= static_cast<double>(t) / static_cast<double>(n - t + 1) * ratio;
  }
  return std::min(s, 1.0);
}

}  // namespace detail

// P(X > x) for X ~ Binomial(n, p). The decaying side of the distribution is
// summed by pmf recurrence; when the bulk lies above x the complement is
// taken instead, so a far-from-the-mode starting term can never poison the
// sum by underflowing.
inline double binomial_tail_above(long long n, long long x, double p) {
  if (x >= n) return 0.0;
  if (x < 0) return 1.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  if (x + 1 > detail::binomial_mode(n, p)) return detail::binomial_sum_up(n, x + 1, p);
  return std::clamp(1.0 - detail::binomial_sum_down(n, x, p), 0.0, 1.0);
}

// P(X < x) for X ~ Binomial(n, p).
inline double binomial_tail_below(long long n, long long x, double p) {
  if (x <= 0) return 0.0;
  if (x > n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  if (x - 1 < detail::binomial_mode(n, p)) return detail::binomial_sum_down(n, x - 1, p);
  return std::clamp(1.0 - detail::binomial_sum_up(n, x, p), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Truncated binomial moments
// ---------------------------------------------------------------------------

// Moments of n ~ Binomial(n_trials, p) conditioned on n > 0.
struct TruncatedBinomialMoments {
  long long n_trials = 0;
  double success_prob = 0.0;
  double prob_positive = 0.0;               // P(n > 0)
  double mean_inverse_given_positive = 0.0;  // E(1/n | n > 0)
  double mean_given_positive = 0.0;          // E(n | n > 0)
};

// 1 - (1-p)^n, computed on the log scale so tiny p does not lose precision.
inline double prob_positive(long long n_trials, double p) {
  if (n_trials < 1) throw DomainError("prob_positive: n_trials must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("prob_positive: p must lie in [0, 1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  return -std::expm1(static_cast<double>(n_trials) * std::log1p(-p));
}

// Exact O(n) summation of E(1/n | n > 0) with the pmf recurrence anchored at
// the mode; far-tail terms underflow harmlessly.
inline TruncatedBinomialMoments truncated_moments(long long n_trials, double p) {
  if (n_trials < 1) throw DomainError("truncated_moments: n_trials must be >= 1");
  if (!(p > 0.0 && p <= 1.0))
    throw DomainError("truncated_moments: p must lie in (0, 1]; the conditioning event has probability 0 at p = 0");

  TruncatedBinomialMoments m;
  m.n_trials = n_trials;
  m.success_prob = p;
  m.prob_positive = prob_positive(n_trials, p);
  const double n = static_cast<double>(n_trials);
  m.mean_given_positive = n * p / m.prob_positive;

  if (p == 1.0) {
    m.mean_inverse_given_positive = 1.0 / n;
    return m;
  }

  const double q = 1.0 - p;
  long long mode = static_cast<long long>(std::floor((n + 1.0) * p));
  mode = std::clamp<long long>(mode, 1, n_trials);
  const double f_mode = binomial_pmf(n_trials, mode, p);

  double sum = 0.0;
  double f = f_mode;
  for (long long x = mode; x >= 1; --x) {  // downward sweep: pmf(x-1) from pmf(x)
    sum += f / static_cast<double>(x);
    f *= static_cast<double>(x) * q / (static_cast<double>(n_trials - x + 1) * p);
  }
  f = f_mode;
  for (long long x = mode + 1; x <= n_trials; ++x) {  // upward sweep
    f *= static_cast<double>(n_trials - x + 1) * p / (static_cast<double>(x) * q);
    sum += f / static_cast<double>(x);
  }
  m.mean_inverse_given_positive = sum / m.prob_positive;
  return m;
}

// ---------------------------------------------------------------------------
// Mid-P binomial interval
// ---------------------------------------------------------------------------

namespace detail {

template <typename F>
inline double bisect_increasing(F f, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Two-sided mid-p interval for a binomial proportion. The lower bound solves
// P(X > x; p) + P(X = x; p)/2 = alpha/2 (0 when x = 0) and the upper bound
// solves P(X < x; p) + P(X = x; p)/2 = alpha/2 (1 when x = n). Roots are
// found by bisection to absolute tolerance 1e-10.
inline EstimateInterval midp_interval(long long successes, long long trials, double alpha) {
  if (trials < 1) throw DomainError("midp_interval: trials must be >= 1");
  if (successes < 0 || successes > trials)
    throw DomainError("midp_interval: successes must lie in [0, trials]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("midp_interval: alpha must lie in (0, 1)");

  constexpr double tol = 1e-10;
  const double half_alpha = 0.5 * alpha;

  EstimateInterval iv;
  iv.point = static_cast<double>(successes) / static_cast<double>(trials);
  iv.alpha = alpha;
  iv.method = IntervalMethod::midp;

  if (successes == 0) {
    iv.lower = 0.0;
  } else {
    // increasing in p: larger p pushes more mass above x
    auto f = [&](double p) {
      return binomial_tail_above(trials, successes, p) +
             0.5 * binomial_pmf(trials, successes, p) - half_alpha;
    };
    iv.lower = detail::bisect_increasing(f, 0.0, 1.0, tol);
  }

  if (successes == trials) {
    iv.upper = 1.0;
  } else {
    // decreasing in p, so negate to reuse the increasing-root helper
    auto g = [&](double p) {
      return -(binomial_tail_below(trials, successes, p) +
               0.5 * binomial_pmf(trials, successes, p) - half_alpha);
    };
    iv.upper = detail::bisect_increasing(g, 0.0, 1.0, tol);
  }
  return iv;
}

// ---------------------------------------------------------------------------
// Wald interval on the logit scale
// ---------------------------------------------------------------------------

// Symmetric interval for logit(point) with the given logit-scale variance,
// mapped back through the anti-logit. Boundary points are encoded as a
// degenerate interval rather than thrown; the caller decides the fallback.
inline EstimateInterval wald_logit_interval(double point, double variance_of_logit,
                                            double alpha, IntervalFlags flags = 0) {
  EstimateInterval iv;
  iv.alpha = alpha;
  iv.flags = flags;
  if (!(point > 0.0 && point < 1.0) || !std::isfinite(variance_of_logit)) {
    iv.point = std::clamp(point, 0.0, 1.0);
    iv.lower = iv.upper = iv.point;
    iv.method = IntervalMethod::degenerate;
    iv.flags |= flag_degenerate_input;
    return iv;
  }
  const double z = normal_quantile(1.0 - 0.5 * alpha);
  const double center = logit(point);
  const double half = z * std::sqrt(std::max(variance_of_logit, 0.0));
  iv.point = point;
  iv.lower = anti_logit(center - half);
  iv.upper = anti_logit(center + half);
  iv.method = IntervalMethod::logit_wald;
  return iv;
}

}  // namespace mcat

#endif  // MCAT_STAT_KERNELS_HPP
