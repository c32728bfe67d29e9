#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fracdim/entropy_bounds.hpp"
#include "fracdim/exact_field.hpp"
#include "oracle.hpp"

using namespace fracdim;

namespace {

IFS1D ex41() { return load_ifs(FRACDIM_DATA_DIR "/ex41.ifs"); }

std::vector<Interval> cells_of(const Partition& p) {
  std::vector<Interval> out;
  for (std::size_t j = 0; j < p.cells(); ++j) out.push_back(p.cell(j));
  return out;
}

}  // namespace

TEST_SUITE("entropy_bounds") {

TEST_CASE("parallel cell bounds are bit-identical to the serial reference") {
  const IFS1D ifs = ex41();
  const auto cells = cells_of(generate_partition(ifs, 5));
  const UBConfig cfg = make_ub_config(ifs, 40, gamma_example_41);
  const CellBounds ref = cell_bounds_serial(ifs, cells, cfg);
  for (int jobs : {1, 2, 3, 8}) {
    const CellBounds par = cell_bounds_parallel(ifs, cells, cfg, jobs);
    CHECK(par.y == ref.y);
    CHECK(par.regions_processed == ref.regions_processed);
    CHECK(par.max_depth == ref.max_depth);
  }

  const IFS1D tri = load_ifs(FRACDIM_DATA_DIR "/tribonacci.ifs");
  const auto tcells = cells_of(generate_partition(tri, 8));
  const UBConfig tcfg = make_ub_config(tri, 40, gamma_bernoulli);
  CHECK(cell_bounds(tri, tcells, tcfg, 8).y == cell_bounds_serial(tri, tcells, tcfg).y);
}

TEST_CASE("refined bounds dominate the exact preimage masses") {
  const IFS1D ifs = ex41();
  const auto ex = exact_rational_ifs(ifs);
  const int level = 4;
  const auto pts = exact_partition_points(ex, level);
  const CellBounds exact = exact_cell_bounds(ex, pts);
  // Same cells in binary64; exact points are distinct, rounded ones must be too.
  std::vector<Interval> cells;
  for (std::size_t j = 0; j + 1 < pts.size(); ++j)
    cells.push_back(Interval{to_double_down(pts[j]), to_double_up(pts[j + 1]), false});
  const CellBounds up = cell_bounds_serial(ifs, cells, make_ub_config(ifs, 40, gamma_example_41));
  REQUIRE(up.y.size() == exact.y.size());
  for (std::size_t k = 0; k < up.y.size(); ++k) CHECK(up.y[k] >= exact.y[k]);
}

TEST_CASE("level-1 bound equals an independent evaluation of the exact masses") {
  // y_i(D) = mu(S_i^-1 D) / 3 over the five cells
  const std::vector<std::vector<double>> rows{{2.0 / 3, 0, 0}, {1.0 / 3, 0.5, 0}, {0, 0.5, 0}, {0, 0, 0}, {0, 0, 1}};
  oracle::Real cond;
  for (const auto& r : rows) {
    std::vector<double> y;
    for (double v : r) y.push_back(v);
    // f is homogeneous of degree one, so f(y/3) = f(y)/3
    cond = cond + oracle::f(y) / oracle::Real(3.0);
  }
  const oracle::Real h = oracle::log(oracle::Real(3.0));
  const oracle::Real lambda = oracle::log(oracle::Real(24.0)) / oracle::Real(3.0);
  // 2/3 and 1/3 are not exact in binary64; the oracle error from that is ~1e-16.
  const double want = ((h - cond) / lambda).nearest();

  const IFS1D ifs = ex41();
  const BoundReport r = dimension_lower_bound(ifs, 1, MeasureMode::exact, make_ub_config(ifs, 40, gamma_example_41));
  CHECK(r.partition_cells == 5);
  CHECK(std::abs(r.dim_estimate - want) < 1e-14);
  CHECK(r.dim_lower <= want + 1e-15);
  CHECK(r.dim_lower > want - 1e-12);
  CHECK(std::abs(r.dim_estimate - 0.86058762883316) < 1e-9);
}

TEST_CASE("certified quotient never exceeds the plain estimate") {
  const IFS1D ifs = ex41();
  const UBConfig cfg = make_ub_config(ifs, 40, gamma_example_41);
  for (int n = 1; n <= 5; ++n) {
    for (MeasureMode mode : {MeasureMode::exact, MeasureMode::algorithm38}) {
      const BoundReport r = dimension_lower_bound(ifs, n, mode, cfg);
      CHECK(r.dim_lower <= r.dim_estimate);
      CHECK(r.dim_lower >= 0.0);
      CHECK(r.dim_lower <= 1.0);
      CHECK(r.level == n);
      CHECK(r.measure_mode == mode);
    }
  }
}

TEST_CASE("exact mode dominates refinement mode level by level") {
  const IFS1D ifs = ex41();
  const UBConfig cfg = make_ub_config(ifs, 40, gamma_example_41);
  for (int n = 1; n <= 4; ++n) {
    const double e = dimension_lower_bound(ifs, n, MeasureMode::exact, cfg).dim_estimate;
    const double a = dimension_lower_bound(ifs, n, MeasureMode::algorithm38, cfg).dim_estimate;
    CHECK(a <= e + 1e-15);
    CHECK(e - a < 1e-8);
  }
}

TEST_CASE("certified_quotient clips to the ceiling") {
  const EntropyValue h{std::log(2.0), 1e-16};
  const EntropyValue lam{std::log(1.5), 1e-16};
  ConditionalSum none;
  CHECK(certified_quotient(h, none, lam) == 1.0);
  ConditionalSum all;
  all.value = EntropyValue{std::log(2.0), 0.0};
  CHECK(certified_quotient(h, all, lam) == 0.0);
}

TEST_CASE("conditional sums carry a summation ledger") {
  CellBounds b;
  b.maps = 2;
  b.y = {0.25, 0.25, 0.5, 0.0, 0.0, 0.0};
  const ConditionalSum s = sum_conditional(b);
  CHECK(s.cells == 3);
  const double want = (oracle::Real(0.5) * oracle::log(oracle::Real(2.0))).nearest();
  CHECK(s.value.lower() <= want);
  CHECK(s.upper() >= want);
  CHECK(s.summation_error > 0.0);
}

TEST_CASE("report serialization") {
  const IFS1D ifs = ex41();
  const BoundReport r = dimension_lower_bound(ifs, 2, MeasureMode::algorithm38, make_ub_config(ifs, 40, gamma_example_41));
  const auto j = to_json(r);
  CHECK(j["level"] == 2);
  CHECK(j["measure_mode"] == "alg38");
  CHECK(j["dim_lower"].get<double>() == r.dim_lower);
  CHECK(j.contains("gamma_ulps"));
  const std::string row = csv_row(r);
  const std::string header = csv_header_lower();
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
  CHECK(row.rfind("2,alg38,", 0) == 0);
  CHECK(format15(0.1) == "0.1");
  CHECK(format15(0.915681937458243) == "0.915681937458243");
  CHECK(parse_measure_mode("algorithm38") == MeasureMode::algorithm38);
  CHECK_THROWS_AS(parse_measure_mode("fast"), ParseError);
}

TEST_CASE("exact mode needs exact maps") {
  const IFS1D ifs = bernoulli_ifs(1.5);
  CHECK_THROWS(dimension_lower_bound(ifs, 2, MeasureMode::exact, make_ub_config(ifs, 40, gamma_bernoulli)));
}

}  // TEST_SUITE
