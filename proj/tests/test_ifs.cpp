#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

#include "fracdim/exact_field.hpp"
#include "fracdim/exact_measure.hpp"
#include "fracdim/ifs.hpp"
#include "oracle.hpp"

using namespace fracdim;

namespace {

IFS1D ex41() { return load_ifs(FRACDIM_DATA_DIR "/ex41.ifs"); }

IFS1D parse(const std::string& text) {
  std::istringstream in(text);
  return parse_ifs(in);
}

}  // namespace

TEST_SUITE("ifs") {

TEST_CASE("rational similarities round-trip through their inverse") {
  const Similarity1D m = Similarity1D::from_rational(mpq_class(1, 3), mpq_class(1, 3));
  CHECK(m.exact_ratio.has_value());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = unit(rng);
    CHECK(std::abs(m.apply_inverse(m.apply(x)) - x) <= 4e-16);
  }
  CHECK(m.fixed_point() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(Similarity1D::from_rational(mpq_class(1), mpq_class(0)), DomainError);
  CHECK_THROWS_AS(Similarity1D::from_inverse(1.0, 0.0), DomainError);
}

TEST_CASE("three-map file parses to exact maps on [0, 1]") {
  const IFS1D ifs = ex41();
  REQUIRE(ifs.size() == 3);
  CHECK(ifs.has_exact_maps());
  CHECK(ifs.hull() == Interval{0.0, 1.0, false});
  CHECK(*ifs.map(2).exact_offset == mpq_class(3, 4));
  CHECK(ifs.weights().is_uniform());
  const double lyap = (oracle::log(oracle::Real(24.0)) / oracle::Real(3.0)).nearest();
  CHECK(ifs.lyapunov().lower() <= lyap);
  CHECK(ifs.lyapunov().upper() >= lyap);
}

TEST_CASE("level-1 partition of the three-map IFS") {
  const IFS1D ifs = ex41();
  const auto exact = exact_partition_points(exact_rational_ifs(ifs), 1);
  const std::vector<mpq_class> want{0, mpq_class(1, 3), mpq_class(1, 2), mpq_class(2, 3), mpq_class(3, 4), 1};
  CHECK(exact == want);
  const Partition p = generate_partition(ifs, 1);
  REQUIRE(p.breakpoints.size() == want.size());
  for (std::size_t j = 0; j < want.size(); ++j)
    CHECK(std::abs(p.breakpoints[j] - want[j].get_d()) <= 1.2e-16);
}

TEST_CASE("partitions are sorted, deduplicated and capped") {
  const IFS1D ifs = ex41();
  for (int n = 1; n <= 6; ++n) {
    const Partition p = generate_partition(ifs, n);
    CHECK(p.breakpoints.front() == 0.0);
    CHECK(p.breakpoints.back() == 1.0);
    for (std::size_t j = 1; j < p.breakpoints.size(); ++j) CHECK(p.breakpoints[j - 1] < p.breakpoints[j]);
    CHECK(p.breakpoints.size() <= 2 * static_cast<std::size_t>(std::pow(3, n)));
    // Exact points may coincide where binary64 ones do not, never the reverse.
    CHECK(exact_partition_points(exact_rational_ifs(ifs), n).size() <= p.breakpoints.size());
  }
  CHECK_THROWS_AS(generate_partition(ifs, 10, 1000), ResourceError);
  CHECK_THROWS_AS(generate_partition(ifs, 0), DomainError);
}

TEST_CASE("FRACDIM_CELL_CAP overrides the endpoint cap") {
  ::unsetenv("FRACDIM_CELL_CAP");
  CHECK(configured_endpoint_cap(123) == 123);
  ::setenv("FRACDIM_CELL_CAP", "4096", 1);
  CHECK(configured_endpoint_cap(123) == 4096);
  ::setenv("FRACDIM_CELL_CAP", "junk", 1);
  CHECK(configured_endpoint_cap(123) == 123);
  ::unsetenv("FRACDIM_CELL_CAP");
}

TEST_CASE("Bernoulli IFS") {
  const double beta = 1.5;
  const IFS1D ifs = bernoulli_ifs(beta);
  REQUIRE(ifs.size() == 2);
  CHECK(ifs.map(0).inv_slope == beta);
  CHECK(ifs.map(1).apply(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ifs.hull().lo == 0.0);
  CHECK(ifs.hull().hi == 1.0);
  const double lb = oracle::log(oracle::Real(beta)).nearest();
  CHECK(ifs.lyapunov().lower() <= lb);
  CHECK(ifs.lyapunov().upper() >= lb);
  CHECK_THROWS_AS(bernoulli_ifs(1.0), DomainError);
  CHECK_THROWS_AS(bernoulli_ifs(2.5), DomainError);
}

TEST_CASE("minimal polynomial descriptions select the largest root") {
  const IFS1D tri = load_ifs(FRACDIM_DATA_DIR "/tribonacci.ifs");
  CHECK(tri.minimal_polynomial() == std::vector<std::int64_t>{1, -1, -1, -1});
  const double ref = oracle::multinacci_root(3).nearest();
  CHECK(std::abs(tri.map(0).inv_slope - ref) <= 2.3e-16);
  const IFS1D dec = load_ifs(FRACDIM_DATA_DIR "/tribonacci_decimal.ifs");
  CHECK(dec.map(0).inv_slope == 1.83928675521416);
}

TEST_CASE("malformed IFS files are rejected") {
  CHECK_THROWS_AS(parse("1/2 0 1/2\n"), ParseError);
  CHECK_THROWS_AS(parse("1/2 0\n1/2 1/2 1/2\n"), ParseError);
  CHECK_THROWS_AS(parse("1/2 0 1/2\n1/2 1/2 1/3\n"), ParseError);
  CHECK_THROWS_AS(parse("bernoulli\n"), ParseError);
  CHECK_THROWS_AS(parse("bernoulli 1.5\n1/2 0 1/2\n1/2 1/2 1/2\n"), ParseError);
  CHECK_THROWS_AS(parse("minpoly 1 x -1\n"), ParseError);
  CHECK_THROWS_AS(load_ifs("/nonexistent/file.ifs"), ParseError);
  const IFS1D ok = parse("# comment\n1/2 0 1/2  # left\n1/2 1/2 1/2\nhull 0 1\n");
  CHECK(ok.size() == 2);
}

TEST_CASE("Z[beta] arithmetic for the tribonacci unit") {
  const NumberField field({1, -1, -1, -1});
  CHECK(field.degree() == 3);
  CHECK(std::abs(field.root() - oracle::multinacci_root(3).nearest()) <= 2.3e-16);
  const auto b = AlgebraicInteger::generator(&field);
  const auto binv = AlgebraicInteger::generator_inverse(&field);
  const AlgebraicInteger one(&field, 1);
  CHECK(b * binv == one);
  // beta^3 = beta^2 + beta + 1
  CHECK(b * b * b == b * b + b + one);
  CHECK((b - one).sign() > 0);
  CHECK((one - b).sign() < 0);
  CHECK((b * b - b - one - binv).is_zero());
  CHECK(binv < one);
  CHECK(std::abs((b * b).approx() - field.root() * field.root()) <= 1e-15);
}

TEST_CASE("largest_real_root matches a bisection oracle") {
  for (int n = 2; n <= 6; ++n) {
    std::vector<std::int64_t> p(n + 1, -1);
    p[0] = 1;
    CHECK(std::abs(largest_real_root(p) - oracle::multinacci_root(n).nearest()) <= 4.5e-16);
  }
  CHECK_THROWS_AS(NumberField({2, -1}), DomainError);
}

TEST_CASE("planar diagonal IFS has the product hull") {
  const IFS1D x = bernoulli_ifs(1.2), y = bernoulli_ifs(1.4);
  const DiagonalIFS2D ifs(x.maps(), y.maps(), WeightVector::uniform(2));
  CHECK(ifs.size() == 2);
  CHECK(ifs.hull.x.lo == 0.0);
  CHECK(ifs.hull.x.hi == 1.0);
  CHECK(ifs.hull.y.hi == 1.0);
  CHECK_THROWS_AS(DiagonalIFS2D(x.maps(), y.maps(), WeightVector::uniform(3)), DomainError);
}

}  // TEST_SUITE
