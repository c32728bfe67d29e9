#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "fracdim/entropy_bounds.hpp"

namespace fracdim {

/// One tiny parameter interval [beta, beta + delta] with its run settings.
/// beta and delta are exact decimals.
struct SweepCell {
  mpq_class beta;
  mpq_class delta;
  int N = 5;
  int L = 28;
  double gamma = gamma_bernoulli;

  double beta_down() const { return to_double_down(beta); }
  double beta_end_up() const { return to_double_up(beta + delta); }
};

struct SweepRow {
  SweepCell cell;
  double bound = 0.0;            // valid for every beta' in [beta, beta + delta]
  double elapsed_seconds = 0.0;
  std::size_t cells = 0;          // size of the partition D_{N,beta}
  bool failed = false;
  std::string error;
};

// (delta/beta)(1 + 3/beta^4) for beta <= 1.5, else (delta/beta)(1 + 2/beta^3),
// rounded upward. The branch is chosen on the exact value of beta.
double epsilon(double beta, double delta);

// Certified lower bound on dim mu_{beta'} for all beta' in the cell.
SweepRow uniform_lower_bound(const SweepCell& cell, std::size_t node_cap = default_node_cap);

// log 2 / (k log beta) rounded down; requires beta^k >= 2 exactly.
double power_trick_bound(double beta, int k);

// Largest root of x^n - x^(n-1) - ... - 1 as a bracket [lo, hi] with
// hi - lo <= 1e-15, the sign of the polynomial decided exactly.
struct RootBracket {
  double lo = 0.0;
  double hi = 0.0;
};
RootBracket multinacci_root(int n);

// (2^n - 2)/(2^n - 1) * log 2 / log beta_{n+1}, rounded down; valid on [beta_n, beta_{n+1}].
double multinacci_bound(int n);

// mu_{beta_n}([0, beta_n - 1]) from the exact solver over Z[beta_n].
mpq_class multinacci_mass(int n);

/// Row of a schedule file: cells beta_start, beta_start + delta, ...,
/// beta_end (the last cell's left endpoint).
struct ScheduleRange {
  mpq_class beta_start;
  mpq_class beta_end;
  int N = 5;
  int L = 28;
  mpq_class delta;
};

// CSV with header beta_start,beta_end,N,L,delta. Every range must be an
// integral number of steps, and consecutive ranges must tile:
// beta_end + delta == next beta_start, compared exactly.
std::vector<ScheduleRange> parse_schedule(std::istream& in);
std::vector<ScheduleRange> load_schedule(const std::string& path);
void write_schedule(std::ostream& out, const std::vector<ScheduleRange>& ranges);

std::size_t count_cells(const std::vector<ScheduleRange>& ranges);

// The cells of the schedule, optionally only those with lo <= beta and
// beta + delta <= hi.
std::vector<SweepCell> expand_schedule(const std::vector<ScheduleRange>& ranges,
                                       std::optional<mpq_class> lo = {}, std::optional<mpq_class> hi = {},
                                       double gamma = gamma_bernoulli);

struct ExceptionalInterval {
  mpq_class lo, hi;
};

struct SweepSummary {
  std::vector<SweepRow> rows;
  bool vacuous = true;
  bool certified = false;  // no row failed
  double minimum = 0.0;
  std::size_t argmin = 0;
  double threshold = 0.9804094;
  std::vector<ExceptionalInterval> exceptional;  // merged runs of rows below threshold
};

inline constexpr double default_threshold = 0.9804094;

std::vector<SweepRow> run_cells_serial(const std::vector<SweepCell>& cells);
std::vector<SweepRow> run_cells(const std::vector<SweepCell>& cells, int jobs);

SweepSummary summarize(std::vector<SweepRow> rows, double threshold = default_threshold);
SweepSummary run_schedule(const std::vector<SweepCell>& cells, int jobs = 1, double threshold = default_threshold);

// Shortest exact decimal expansion of a rational with a power-of-ten
// denominator (falls back to 20 digits otherwise).
std::string decimal_string(const mpq_class& q);

std::string sweep_csv_header(bool timings);
std::string sweep_csv_row(const SweepRow& row, bool timings);
std::string plot_csv_row(const SweepRow& row);

}  // namespace fracdim
