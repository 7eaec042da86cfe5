#ifndef MCAT_COUNT_MATRIX_HPP
#define MCAT_COUNT_MATRIX_HPP

#include <algorithm>
#include <cctype>
#include <numeric>
#include <string>
#include <vector>

#include "mcat/errors.hpp"

namespace mcat {

inline std::string trim(const std::string &s) {
  auto begin = s.begin();
  auto end = s.end();
  while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
  return std::string(begin, end);
}

// ---------------------------------------------------------------------------
// CountMatrix: the (J+1) x (K+1) disease-by-readout table
// ---------------------------------------------------------------------------
//
// Row 0 is the control (no-disease) group; rows 1..J are disease states.
// Column 0 is the Negative readout; columns 1..K are the positive readouts,
// in one-to-one correspondence with states 1..K. States K+1..J carry no
// matching readout and contribute only misclassification mass.
// Immutable after construction.

struct CountMatrix {
  std::vector<std::string> state_labels;    // J+1 entries, index 0 = control
  std::vector<std::string> readout_labels;  // K+1 entries, index 0 = Negative
  std::vector<std::vector<long long>> counts;
  std::vector<long long> row_totals;  // n_j+
  std::vector<long long> col_totals;  // n_+k
  long long n_controls = 0;           // N0
  long long n_cases = 0;              // N1
  long long n_total = 0;              // N

  [[nodiscard]] int n_states() const { return static_cast<int>(state_labels.size()) - 1; }
  [[nodiscard]] int n_readouts() const { return static_cast<int>(readout_labels.size()) - 1; }
  [[nodiscard]] long long at(int state, int readout) const { return counts[state][readout]; }
  [[nodiscard]] long long row_total(int state) const { return row_totals[state]; }
  [[nodiscard]] long long col_total(int readout) const { return col_totals[readout]; }

  friend bool operator==(const CountMatrix &, const CountMatrix &) = default;
};

// Validates a raw grid into a CountMatrix, computing totals. Fails closed on
// any invariant breach.
inline CountMatrix validate_matrix(const std::vector<std::vector<long long>> &raw_counts,
                                   const std::vector<std::string> &state_labels,
                                   const std::vector<std::string> &readout_labels) {
  const std::size_t n_rows = raw_counts.size();
  if (n_rows < 2) throw ValidationError("count table needs a control row and at least one case row");
  const std::size_t n_cols = raw_counts.front().size();
  if (n_cols < 2) throw ValidationError("count table needs a Negative column and at least one positive readout");
  for (const auto &row : raw_counts)
    if (row.size() != n_cols) throw ValidationError("count table rows are ragged");
  if (state_labels.size() != n_rows || readout_labels.size() != n_cols)
    throw LabelMismatchError("label lists do not match the table dimensions");
  if (n_rows < n_cols)
    throw ValidationError("more readout categories than disease states: every positive readout must name a state");

  CountMatrix m;
  m.state_labels.reserve(n_rows);
  for (const auto &s : state_labels) m.state_labels.push_back(trim(s));
  m.readout_labels.reserve(n_cols);
  for (const auto &s : readout_labels) m.readout_labels.push_back(trim(s));

  // readout k names the same category as state k for k = 1..K
  for (std::size_t k = 1; k < n_cols; ++k)
    if (m.readout_labels[k] != m.state_labels[k])
      throw LabelMismatchError("readout label '" + m.readout_labels[k] + "' does not match state label '" +
                               m.state_labels[k] + "' at position " + std::to_string(k));

  m.counts = raw_counts;
  m.row_totals.assign(n_rows, 0);
  m.col_totals.assign(n_cols, 0);
  for (std::size_t j = 0; j < n_rows; ++j) {
    for (std::size_t k = 0; k < n_cols; ++k) {
      const long long c = raw_counts[j][k];
      if (c < 0)
        throw NegativeCountError("negative count at state '" + m.state_labels[j] + "', readout '" +
                                 m.readout_labels[k] + "'");
      m.row_totals[j] += c;
      m.col_totals[k] += c;
    }
  }
  m.n_controls = m.row_totals[0];
  m.n_cases = std::accumulate(m.row_totals.begin() + 1, m.row_totals.end(), 0LL);
  m.n_total = m.n_controls + m.n_cases;
  if (m.n_controls == 0) throw EmptyControlRowError("control row is empty (N0 = 0)");
  if (m.n_cases == 0) throw EmptyCaseBlockError("case block is empty (N1 = 0)");
  return m;
}

// ---------------------------------------------------------------------------
// Half-count adjustment of the control row
// ---------------------------------------------------------------------------

enum class AdjustPolicy { automatic, on, off };

inline std::string to_string(AdjustPolicy p) {
  switch (p) {
    case AdjustPolicy::automatic: return "auto";
    case AdjustPolicy::on: return "on";
    case AdjustPolicy::off: return "off";
  }
  return "off";
}

// The control row with the optional half-count adjustment applied:
// n*_0k = n_0k + 1/2 over a denominator of N0 + (K+1)/2. When not applied the
// row is the raw control row. The source matrix is never mutated.
struct AdjustedControlRow {
  std::vector<double> counts;  // K+1 entries
  double total = 0.0;
  bool applied = false;
  AdjustPolicy policy = AdjustPolicy::off;

  [[nodiscard]] double share(int readout) const { return counts[readout] / total; }
};

// Policy on: always adjust. Policy off: never. Policy auto: adjust iff the
// smallest observed false-positive count min_{k>=1} n_0k falls below
// `threshold` (observed-count surrogate for an expected-count rule).
inline AdjustedControlRow adjust_control_counts(const CountMatrix &m, AdjustPolicy policy,
                                                long long threshold = 5) {
  const int n_readouts = m.n_readouts();
  bool apply = false;
  if (policy == AdjustPolicy::on) {
    apply = true;
  } else if (policy == AdjustPolicy::automatic) {
    long long min_fp = m.at(0, 1);
    for (int k = 2; k <= n_readouts; ++k) min_fp = std::min(min_fp, m.at(0, k));
    apply = min_fp < threshold;
  }

  AdjustedControlRow row;
  row.policy = policy;
  row.applied = apply;
  row.counts.resize(n_readouts + 1);
  for (int k = 0; k <= n_readouts; ++k)
    row.counts[k] = static_cast<double>(m.at(0, k)) + (apply ? 0.5 : 0.0);
  row.total = static_cast<double>(m.n_controls) + (apply ? 0.5 * (n_readouts + 1) : 0.0);
  return row;
}

// ---------------------------------------------------------------------------
// Case shares
// ---------------------------------------------------------------------------

// Maximum-likelihood conditional disease-state shares among cases:
// p_j = n_j+ / N1 for j < J, with the last share computed as one minus the
// rest so the vector sums to one.
struct CaseShareVector {
  std::vector<double> shares;  // length J
  long long basis = 0;         // N1

  [[nodiscard]] double operator[](int state_minus_one) const { return shares[state_minus_one]; }
  [[nodiscard]] int n_states() const { return static_cast<int>(shares.size()); }
};

inline CaseShareVector case_shares(const CountMatrix &m) {
  if (m.n_cases == 0) throw EmptyCaseBlockError("case block is empty (N1 = 0)");
  const int n_states = m.n_states();
  CaseShareVector v;
  v.basis = m.n_cases;
  v.shares.resize(n_states);
  double head = 0.0;
  for (int j = 1; j < n_states; ++j) {
    v.shares[j - 1] = static_cast<double>(m.row_total(j)) / static_cast<double>(m.n_cases);
    head += v.shares[j - 1];
  }
  v.shares[n_states - 1] = 1.0 - head;
  return v;
}

// ---------------------------------------------------------------------------
// Collapsed two-row table
// ---------------------------------------------------------------------------

// Control row plus a single pooled case row (column totals minus controls).
struct CollapsedMatrix {
  std::vector<long long> control_counts;  // K+1
  std::vector<long long> case_counts;     // K+1
  long long n_controls = 0;
  long long n_cases = 0;

  [[nodiscard]] int n_readouts() const { return static_cast<int>(control_counts.size()) - 1; }
  [[nodiscard]] double case_rate(int readout) const {
    return static_cast<double>(case_counts[readout]) / static_cast<double>(n_cases);
  }
};

inline CollapsedMatrix collapse_cases(const CountMatrix &m) {
  CollapsedMatrix c;
  c.n_controls = m.n_controls;
  c.n_cases = m.n_cases;
  const int n_readouts = m.n_readouts();
  c.control_counts.resize(n_readouts + 1);
  c.case_counts.resize(n_readouts + 1);
  for (int k = 0; k <= n_readouts; ++k) {
    c.control_counts[k] = m.at(0, k);
    c.case_counts[k] = m.col_total(k) - m.at(0, k);
  }
  return c;
}

}  // namespace mcat

#endif  // MCAT_COUNT_MATRIX_HPP
