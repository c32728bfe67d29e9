#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fracdim/sweep.hpp"
#include "oracle.hpp"

using namespace fracdim;

namespace {

std::vector<ScheduleRange> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_schedule(in);
}

SweepRow fake_row(const char* beta, double bound) {
  SweepRow r;
  r.cell.beta = parse_rational(beta);
  r.cell.delta = parse_rational("0.0000000001");
  r.bound = bound;
  return r;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("epsilon is an upward rounding of its closed form") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> betas(std::sqrt(2.0), 1.999);
  for (int k = 0; k < 2000; ++k) {
    const double beta = betas(rng);
    const double delta = std::ldexp(1.0, -static_cast<int>(10 + rng() % 30));
    const oracle::Real ref = oracle::epsilon(beta, delta);
    const double got = epsilon(beta, delta);
    CHECK(got >= ref.up());
    CHECK(got <= ref.up() * (1.0 + 16.0 * unit_roundoff));
  }
  // branch point: beta = 1.5 uses 3/beta^4
  CHECK(epsilon(1.5, 1e-5) >= oracle::epsilon(1.5, 1e-5).up());
  CHECK(epsilon(1.5, 1e-5) > epsilon(std::nextafter(1.5, 2.0), 1e-5));
  CHECK_THROWS_AS(epsilon(1.3, 1e-5), DomainError);
  CHECK_THROWS_AS(epsilon(1.5, 0.0), DomainError);
}

TEST_CASE("power trick") {
  CHECK(std::abs(power_trick_bound(1.424041, 2) - 0.980410065731842) < 1e-12);
  CHECK(power_trick_bound(1.424041, 2) <= oracle::power_trick(1.424041, 2).down());
  CHECK(power_trick_bound(2.0, 1) <= 1.0);
  CHECK(power_trick_bound(2.0, 1) > 1.0 - 1e-15);
  const double r2 = std::sqrt(2.0);
  CHECK(power_trick_bound(r2, 2) <= oracle::power_trick(r2, 2).down());
  CHECK(power_trick_bound(r2, 2) > 1.0 - 1e-15);
  CHECK_THROWS_AS(power_trick_bound(1.3, 2), PreconditionError);
}

TEST_CASE("multinacci roots and closed-form bounds") {
  for (int n = 2; n <= 10; ++n) {
    const RootBracket b = multinacci_root(n);
    const oracle::Real root = oracle::multinacci_root(n);
    CHECK(b.lo <= root.down());
    CHECK(b.hi >= root.up());
    CHECK(b.hi - b.lo <= 1e-15);
  }
  for (int n = 2; n <= 12; ++n) {
    const oracle::Real ref = oracle::multinacci_bound(n);
    CHECK(multinacci_bound(n) <= ref.down());
    CHECK(std::abs(multinacci_bound(n) - ref.nearest()) < 1e-12);
  }
  for (int n = 2; n <= 6; ++n) {
    const mpq_class two_n(std::int64_t{1} << n);
    CHECK(multinacci_mass(n) == (two_n - 2) / (two_n - 1));
  }
  CHECK_THROWS_AS(multinacci_root(1), DomainError);
}

TEST_CASE("the production schedule has 132530 cells") {
  const auto ranges = load_schedule(FRACDIM_DATA_DIR "/table7.csv");
  CHECK(ranges.size() == 18);
  CHECK(count_cells(ranges) == 132530);
  std::ostringstream out;
  write_schedule(out, ranges);
  const auto again = parse(out.str());
  REQUIRE(again.size() == ranges.size());
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    CHECK(again[i].beta_start == ranges[i].beta_start);
    CHECK(again[i].beta_end == ranges[i].beta_end);
    CHECK(again[i].delta == ranges[i].delta);
    CHECK(again[i].N == ranges[i].N);
    CHECK(again[i].L == ranges[i].L);
  }
}

TEST_CASE("schedule restriction keeps whole cells") {
  const auto ranges = load_schedule(FRACDIM_DATA_DIR "/table7.csv");
  const auto cells = expand_schedule(ranges, parse_rational("1.8392867"), parse_rational("1.8392868"));
  REQUIRE(cells.size() == 1000);
  CHECK(cells.front().beta == parse_rational("1.8392867"));
  CHECK(cells.back().beta == parse_rational("1.8392867999"));
  CHECK(cells.front().N == 13);
  CHECK(cells.front().L == 40);
  CHECK(expand_schedule(ranges, parse_rational("1.5"), parse_rational("1.5")).empty());
}

TEST_CASE("malformed schedules are rejected") {
  const std::string header = "beta_start,beta_end,N,L,delta\n";
  CHECK_THROWS_AS(parse("beta,end\n"), ParseError);
  CHECK_THROWS_AS(parse(header + "1.5,1.6\n"), ParseError);
  // not an integral number of steps
  CHECK_THROWS_AS(parse(header + "1.5,1.500015,5,30,1e-5\n"), ParseError);
  // gap between ranges
  CHECK_THROWS_AS(parse(header + "1.5,1.59999,5,30,1e-5\n1.7,1.79999,5,30,1e-5\n"), ParseError);
  CHECK_THROWS_AS(parse(header + "1.5,1.4,5,30,1e-5\n"), ParseError);
  CHECK_THROWS_AS(parse(header + "1.5,1.59999,0,30,1e-5\n"), ParseError);
  CHECK_THROWS_AS(parse(header + "1.5,1.59999,5,30,0\n"), ParseError);
  CHECK_THROWS_AS(load_schedule("/nonexistent.csv"), ParseError);
  CHECK(parse(header + "1.5,1.59999,5,30,1e-5\n1.6,1.69999,5,30,1e-5\n").size() == 2);
}

TEST_CASE("decimal strings are exact") {
  CHECK(decimal_string(parse_rational("1.8392867553")) == "1.8392867553");
  CHECK(decimal_string(parse_rational("2e-5")) == "0.00002");
  CHECK(decimal_string(mpq_class(3, 2)) == "1.5");
  CHECK(decimal_string(mpq_class(2)) == "2");
}

TEST_CASE("summary finds the minimum and merges exceptional runs") {
  std::vector<SweepRow> rows{fake_row("1.8392867489", 0.9804100), fake_row("1.8392867490", 0.9804093),
                             fake_row("1.8392867491", 0.9804090), fake_row("1.8392867492", 0.9804095),
                             fake_row("1.8392867493", 0.9804092)};
  const SweepSummary s = summarize(rows);
  CHECK(!s.vacuous);
  CHECK(s.certified);
  CHECK(s.minimum == 0.9804090);
  CHECK(s.argmin == 2);
  REQUIRE(s.exceptional.size() == 2);
  CHECK(s.exceptional[0].lo == parse_rational("1.839286749"));
  CHECK(s.exceptional[0].hi == parse_rational("1.8392867492"));
  CHECK(s.exceptional[1].lo == parse_rational("1.8392867493"));
  CHECK(s.exceptional[1].hi == parse_rational("1.8392867494"));

  CHECK(summarize({}).vacuous);
  rows[1].failed = true;
  CHECK(!summarize(rows).certified);
}

TEST_CASE("uniform bounds are monotone in the cell width") {
  SweepCell narrow;
  narrow.beta = parse_rational("1.6");
  narrow.delta = parse_rational("1e-7");
  narrow.N = 3;
  narrow.L = 16;
  SweepCell wide = narrow;
  wide.delta = parse_rational("1e-4");
  const SweepRow a = uniform_lower_bound(narrow), b = uniform_lower_bound(wide);
  CHECK(!a.failed);
  CHECK(b.bound <= a.bound);
  CHECK(a.bound > 0.9);
  CHECK(a.bound <= 1.0);
  CHECK(a.cells > 0);
}

TEST_CASE("parallel sweep rows equal the serial reference") {
  std::vector<SweepCell> cells;
  for (int k = 0; k < 6; ++k) {
    SweepCell c;
    c.beta = parse_rational("1.7") + mpq_class(k, 1000);
    c.delta = parse_rational("1e-6");
    c.N = 3;
    c.L = 14;
    cells.push_back(c);
  }
  const auto ref = run_cells_serial(cells);
  for (int jobs : {2, 8}) {
    const auto par = run_cells(cells, jobs);
    REQUIRE(par.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(par[i].bound == ref[i].bound);
      CHECK(sweep_csv_row(par[i], false) == sweep_csv_row(ref[i], false));
    }
  }
  CHECK(sweep_csv_header(false) == "beta,bound,N,L,delta");
  CHECK(sweep_csv_row(ref[0], false).rfind("1.7,", 0) == 0);
}

}  // TEST_SUITE
