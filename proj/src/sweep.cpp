#include "fracdim/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fracdim/exact_field.hpp"

#ifdef FRACDIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace fracdim {

double epsilon(double beta, double delta) {
  if (!(beta >= std::sqrt(2.0) && beta < 2.0)) throw DomainError("epsilon: beta must lie in [sqrt 2, 2)");
  if (!(delta > 0.0)) throw DomainError("epsilon: delta must be positive");
  const double b2 = beta * beta;
  // Each rounded operation is followed by an upward step on the quantity
  // that should be large and a downward step on the one that should be small.
  double tail;
  if (beta <= 1.5) {
    const double b4 = step_down(step_down(b2) * step_down(b2));
    tail = step_up(3.0 / b4);
  } else {
    const double b3 = step_down(step_down(b2) * beta);
    tail = step_up(2.0 / b3);
  }
  return step_up(step_up(delta / beta) * step_up(1.0 + tail));
}

SweepRow uniform_lower_bound(const SweepCell& cell, std::size_t node_cap) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepRow row;
  row.cell = cell;
  try {
    const double beta = cell.beta_down();
    const double beta_end = cell.beta_end_up();
    if (!(beta_end <= 2.0)) throw DomainError("cell must end at or before 2");
    const double delta = step_up(beta_end - beta);
    const double eps = epsilon(beta, delta);

    const IFS1D ifs = bernoulli_ifs(beta);
    UBConfig cfg = make_ub_config(ifs, cell.L, cell.gamma);
    cfg.node_cap = node_cap;
    const Partition p = generate_partition(ifs, cell.N);
    std::vector<Interval> padded;
    padded.reserve(p.cells());
    for (std::size_t j = 0; j < p.cells(); ++j) {
      const Interval c = p.cell(j);
      padded.push_back(Interval{step_down(c.lo - eps), step_up(c.hi + eps), false});
    }
    const CellBounds bounds = cell_bounds_serial(ifs, padded, cfg);
    const ConditionalSum t = sum_conditional(bounds);
    // numerator log 2 - t rounded down, denominator log(beta + delta) rounded up
    const double num = step_down(log_down(2.0) - t.upper());
    row.bound = num > 0.0 ? step_down(num / log_up(beta_end)) : 0.0;
    row.cells = p.cells();
    if (bounds.cap_hit) row.error = "region cap hit; bound remains valid but loose";
  } catch (const std::exception& e) {
    row.failed = true;
    row.bound = 0.0;
    row.error = e.what();
  }
  row.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

double power_trick_bound(double beta, int k) {
  if (!(beta > 1.0) || k < 1) throw DomainError("power trick needs beta > 1 and k >= 1");
  mpq_class power = 1;
  const mpq_class b(beta);
  for (int i = 0; i < k; ++i) power *= b;
  if (power < 2) throw PreconditionError("beta^k < 2: the power bound does not apply");
  const double denom = step_up(static_cast<double>(k) * log_up(beta));
  return step_down(log_down(2.0) / denom);
}

namespace {

// Sign of x^n - x^(n-1) - ... - 1 at a binary64 point, exactly.
int multinacci_sign(int n, double x) {
  const mpq_class q(x);
  mpq_class acc = 1;  // Horner on coefficients 1, -1, ..., -1
  for (int j = 0; j < n; ++j) acc = acc * q - 1;
  return sgn(acc);
}

std::vector<std::int64_t> multinacci_poly(int n) {
  std::vector<std::int64_t> p(static_cast<std::size_t>(n) + 1, -1);
  p[0] = 1;
  return p;
}

}  // namespace

RootBracket multinacci_root(int n) {
  if (n < 2) throw DomainError("multinacci index must be >= 2");
  // The polynomial is negative on (1, beta_n) and positive beyond; beta_n in (1, 2).
  double lo = 1.0, hi = 2.0;
  while (hi - lo > 1e-15) {
    const double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    (multinacci_sign(n, mid) < 0 ? lo : hi) = mid;
  }
  return {lo, hi};
}

double multinacci_bound(int n) {
  if (n < 2) throw DomainError("multinacci bound needs n >= 2");
  if (n > 60) throw DomainError("multinacci bound supports n <= 60");
  const RootBracket r = multinacci_root(n + 1);
  const double two_n = std::ldexp(1.0, n);
  const double mass = step_down((two_n - 2.0) / (two_n - 1.0));
  const double ratio = step_down(log_down(2.0) / log_up(r.hi));
  return step_down(mass * ratio);
}

mpq_class multinacci_mass(int n) {
  if (n < 2) throw DomainError("multinacci index must be >= 2");
  const NumberField field(multinacci_poly(n));
  const auto ifs = exact_bernoulli_ifs(field);
  ExactMeasureSolver<AlgebraicInteger> solver(ifs);
  const AlgebraicInteger beta = AlgebraicInteger::generator(&field);
  return solver.measure(AlgebraicInteger(&field, 0), beta - AlgebraicInteger(&field, 1));
}

// ---------------------------------------------------------------------------
// Schedules

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? std::string() : field.substr(a, b - a + 1));
  }
  return out;
}

int parse_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw ParseError("bad integer: " + s);
  }
  if (used != s.size()) throw ParseError("bad integer: " + s);
  return v;
}

mpz_class steps_of(const ScheduleRange& r) {
  const mpq_class steps = (r.beta_end - r.beta_start) / r.delta;
  if (steps.get_den() != 1 || steps < 0) throw ParseError("range " + decimal_string(r.beta_start) +
                                                          " is not an integral number of steps");
  return steps.get_num() + 1;
}

}  // namespace

std::vector<ScheduleRange> parse_schedule(std::istream& in) {
  std::vector<ScheduleRange> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto fields = split_csv(line);
    if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
    if (fields[0] == "beta_start") continue;
    if (fields.size() != 5) throw ParseError("line " + std::to_string(lineno) + ": expected 5 columns");
    try {
      ScheduleRange r{parse_rational(fields[0]), parse_rational(fields[1]), parse_int(fields[2]),
                      parse_int(fields[3]), parse_rational(fields[4])};
      if (r.delta <= 0) throw ParseError("delta must be positive");
      if (r.beta_end < r.beta_start) throw ParseError("beta_end precedes beta_start");
      if (r.N < 1 || r.L < 1) throw ParseError("N and L must be positive");
      steps_of(r);
      if (!out.empty() && out.back().beta_end + out.back().delta != r.beta_start)
        throw ParseError("gap or overlap before " + decimal_string(r.beta_start));
      out.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ScheduleRange> load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open schedule file: " + path);
  return parse_schedule(in);
}

void write_schedule(std::ostream& out, const std::vector<ScheduleRange>& ranges) {
  out << "beta_start,beta_end,N,L,delta\n";
  for (const auto& r : ranges)
    out << decimal_string(r.beta_start) << ',' << decimal_string(r.beta_end) << ',' << r.N << ',' << r.L << ','
        << decimal_string(r.delta) << '\n';
}

std::size_t count_cells(const std::vector<ScheduleRange>& ranges) {
  mpz_class total = 0;
  for (const auto& r : ranges) total += steps_of(r);
  return static_cast<std::size_t>(total.get_ui());
}

std::vector<SweepCell> expand_schedule(const std::vector<ScheduleRange>& ranges, std::optional<mpq_class> lo,
                                       std::optional<mpq_class> hi, double gamma) {
  std::vector<SweepCell> cells;
  for (const auto& r : ranges) {
    const mpz_class steps = steps_of(r);
    mpz_class first = 0, last = steps - 1;
    // Clip the index range so large schedules are not walked cell by cell.
    if (lo) {
      const mpq_class k = (*lo - r.beta_start) / r.delta;
      mpz_class c;
      mpz_cdiv_q(c.get_mpz_t(), k.get_num_mpz_t(), k.get_den_mpz_t());
      first = std::max(first, c);
    }
    if (hi) {
      const mpq_class k = (*hi - r.beta_start) / r.delta - 1;
      mpz_class f;
      mpz_fdiv_q(f.get_mpz_t(), k.get_num_mpz_t(), k.get_den_mpz_t());
      last = std::min(last, f);
    }
    for (mpz_class k = first; k <= last; ++k)
      cells.push_back(SweepCell{r.beta_start + mpq_class(k) * r.delta, r.delta, r.N, r.L, gamma});
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Runner

std::vector<SweepRow> run_cells_serial(const std::vector<SweepCell>& cells) {
  std::vector<SweepRow> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) rows.push_back(uniform_lower_bound(c));
  return rows;
}

std::vector<SweepRow> run_cells(const std::vector<SweepCell>& cells, int jobs) {
  if (jobs <= 1) return run_cells_serial(cells);
#ifdef FRACDIM_HAVE_OPENMP
  std::vector<SweepRow> rows(cells.size());
  const auto n = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::int64_t k = 0; k < n; ++k) rows[k] = uniform_lower_bound(cells[k]);
  return rows;
#else
  return run_cells_serial(cells);
#endif
}

SweepSummary summarize(std::vector<SweepRow> rows, double threshold) {
  SweepSummary s;
  s.threshold = threshold;
  s.rows = std::move(rows);
  s.vacuous = s.rows.empty();
  s.certified = !s.vacuous;
  for (std::size_t k = 0; k < s.rows.size(); ++k) {
    const auto& r = s.rows[k];
    if (r.failed) s.certified = false;
    if (k == 0 || r.bound < s.minimum) {
      s.minimum = r.bound;
      s.argmin = k;
    }
    if (r.failed || r.bound < threshold) {
      const mpq_class lo = r.cell.beta, hi = r.cell.beta + r.cell.delta;
      if (!s.exceptional.empty() && s.exceptional.back().hi == lo) s.exceptional.back().hi = hi;
      else s.exceptional.push_back({lo, hi});
    }
  }
  return s;
}

SweepSummary run_schedule(const std::vector<SweepCell>& cells, int jobs, double threshold) {
  return summarize(run_cells(cells, jobs), threshold);
}

std::string decimal_string(const mpq_class& value) {
  mpq_class q = value;
  q.canonicalize();
  mpz_class den = q.get_den();
  int k = 0;
  mpz_class scale = 1;
  while (k < 40) {
    if (mpz_divisible_p(scale.get_mpz_t(), den.get_mpz_t())) break;
    scale *= 10;
    ++k;
  }
  if (k == 40) return format15(to_double_nearest(q));
  const mpz_class n = q.get_num() * (scale / den);
  mpz_class a = abs(n);
  std::string digits = a.get_str();
  if (static_cast<int>(digits.size()) <= k) digits.insert(0, static_cast<std::size_t>(k) + 1 - digits.size(), '0');
  std::string out = n < 0 ? "-" : "";
  out += digits.substr(0, digits.size() - static_cast<std::size_t>(k));
  if (k > 0) out += "." + digits.substr(digits.size() - static_cast<std::size_t>(k));
  return out;
}

std::string sweep_csv_header(bool timings) {
  return timings ? "beta,bound,N,L,delta,elapsed_seconds" : "beta,bound,N,L,delta";
}

std::string sweep_csv_row(const SweepRow& row, bool timings) {
  std::string s = decimal_string(row.cell.beta) + "," + (row.failed ? std::string("failed") : format15(row.bound)) +
                  "," + std::to_string(row.cell.N) + "," + std::to_string(row.cell.L) + "," +
                  decimal_string(row.cell.delta);
  if (timings) s += "," + format15(row.elapsed_seconds);
  return s;
}

std::string plot_csv_row(const SweepRow& row) {
  return format15(to_double_nearest(row.cell.beta + row.cell.delta / 2)) + "," + format15(row.bound);
}

}  // namespace fracdim
