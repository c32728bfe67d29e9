#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fracdim/pisot.hpp"
#include "oracle.hpp"

using namespace fracdim;

namespace {

MatrixFamily family(const char* name) { return load_family(std::string(FRACDIM_DATA_DIR "/") + name); }

// k random nonnegative d x d matrices with entries n/8, H strictly positive.
std::vector<SparseMatrix> random_matrices(std::mt19937_64& rng, std::size_t d, std::size_t k) {
  std::vector<SparseMatrix> out;
  for (std::size_t m = 0; m < k; ++m) {
    std::vector<MatrixEntry> e;
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c)
        if (m == 0 || rng() % 3 == 0) e.push_back({r, c, mpq_class(1 + static_cast<long>(rng() % 8), 8)});
    out.emplace_back(d, e);
  }
  return out;
}

// Perron data of H = sum A_i by repeated squaring of a dense copy.
struct DensePerron {
  double lambda;
  std::vector<double> right;
};

DensePerron squaring_oracle(std::size_t d, const std::vector<SparseMatrix>& mats) {
  std::vector<double> H(d * d, 0.0);
  for (const auto& m : mats) m.for_each([&](std::size_t r, std::size_t c, double v) { H[r * d + c] += v; });
  std::vector<double> P = H;
  for (int it = 0; it < 60; ++it) {
    std::vector<double> Q(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < d; ++j) Q[i * d + j] += P[i * d + k] * P[k * d + j];
    double mx = 0.0;
    for (double v : Q) mx = std::max(mx, v);
    for (double& v : Q) v /= mx;
    P = Q;
  }
  // columns of the normalized limit are multiples of the right eigenvector
  std::vector<double> v(d);
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += v[i] = P[i * d];
  for (double& x : v) x /= s;
  double lambda = 0.0;
  for (std::size_t j = 0; j < d; ++j) lambda += H[0 * d + j] * v[j];
  return {lambda / v[0], v};
}

}  // namespace

TEST_SUITE("pisot") {

TEST_CASE("Perron vector of the 2-cycle") {
  const MatrixFamily f = family("permutation.family");
  const PerronData& p = f.perron();
  CHECK(std::abs(p.lambda - 1.0) < 1e-12);
  REQUIRE(p.v_right.size() == 2);
  CHECK(std::abs(p.v_right[0] - p.v_right[1]) < 1e-12);
  CHECK(std::abs(p.v_left[0] * p.v_right[0] + p.v_left[1] * p.v_right[1] - 1.0) < 1e-12);
}

TEST_CASE("shifted power iteration matches repeated squaring") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 5; ++trial) {
    const auto mats = random_matrices(rng, 5, 3);
    const PerronData p = perron(5, mats);
    const DensePerron ref = squaring_oracle(5, mats);
    CHECK(std::abs(p.lambda - ref.lambda) < 1e-10 * ref.lambda);
    double s = 0.0;
    for (double x : p.v_right) s += x;
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(p.v_right[i] / s - ref.right[i]) < 1e-10);
    const MatrixFamily fam(5, mats);
    CHECK(fam.rescaled());
    CHECK(std::abs(fam.original_radius() - ref.lambda) < 1e-10 * ref.lambda);
    CHECK(std::abs(fam.perron().lambda - 1.0) < 1e-12);
  }
}

TEST_CASE("irreducibility") {
  CHECK(is_irreducible(2, {SparseMatrix(2, {{0, 1, 1}, {1, 0, 1}})}));
  CHECK(!is_irreducible(2, {SparseMatrix(2, {{0, 0, 1}, {0, 1, 1}, {1, 1, 1}})}));
  CHECK_THROWS_AS(family("reducible.family"), ReducibleFamily);
}

TEST_CASE("family files round-trip") {
  std::mt19937_64 rng(59);
  const MatrixFamily f(4, random_matrices(rng, 4, 2));
  std::ostringstream out;
  write_family(out, f);
  std::istringstream in(out.str());
  const MatrixFamily g = parse_family(in);
  CHECK(g.k() == f.k());
  CHECK(g.d() == f.d());
  for (std::size_t i = 0; i < f.k(); ++i) {
    std::vector<double> a, b;
    f.matrix(i).for_each([&](std::size_t, std::size_t, double v) { a.push_back(v); });
    g.matrix(i).for_each([&](std::size_t, std::size_t, double v) { b.push_back(v); });
    REQUIRE(a.size() == b.size());
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-15 * a[j]);
  }
  std::istringstream bad("2 2\n3 1 1 1\n");
  CHECK_THROWS_AS(parse_family(bad), ParseError);
  std::istringstream neg("1 1\n1 1 1 -1\n");
  CHECK_THROWS(parse_family(neg));
}

TEST_CASE("cylinder masses are additive") {
  std::mt19937_64 rng(61);
  const MatrixFamily f(4, random_matrices(rng, 4, 3));
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> w(1 + rng() % 5);
    for (auto& s : w) s = rng() % f.k();
    double children = 0.0;
    for (std::size_t i = 0; i < f.k(); ++i) {
      auto wi = w;
      wi.push_back(i);
      children += eta_cylinder(f, wi);
    }
    CHECK(std::abs(children - eta_cylinder(f, w)) < 1e-13);
  }
  for (int n = 1; n <= 6; ++n) CHECK(std::abs(cylinder_sums(f, n).mass - 1.0) < 1e-12);
}

TEST_CASE("entropy sequence is nonincreasing and below the averaged entropy") {
  std::mt19937_64 rng(67);
  const MatrixFamily f(3, random_matrices(rng, 3, 3));
  const auto seq = entropy_upper_sequence(f, 7);
  REQUIRE(seq.size() == 8);
  for (std::size_t i = 0; i < seq.size(); ++i) CHECK(seq[i].n == static_cast<int>(i));
  for (std::size_t i = 1; i < seq.size(); ++i) CHECK(seq[i].u.value <= seq[i - 1].u.value + 1e-12);
  for (const auto& s : seq) {
    if (s.n == 0) continue;
    const double hn = cylinder_sums(f, s.n).entropy;
    CHECK(s.u.value <= hn / s.n + 1e-12);
    // u_n = H_{n+1} - H_n
    CHECK(std::abs(s.u.value - (cylinder_sums(f, s.n + 1).entropy - hn)) < 1e-11);
  }
  // single-shot value agrees with the sequence, and jobs do not matter
  CHECK(entropy_upper_seq(f, 5).u.value == seq[5].u.value);
  CHECK(entropy_upper_seq(f, 5, 8).u.value == seq[5].u.value);
}

TEST_CASE("fair coin and permutation families") {
  const MatrixFamily coin = family("fair_coin.family");
  const MatrixFamily perm = family("permutation.family");
  const double ln2 = oracle::log(oracle::Real(2.0)).nearest();
  for (const auto& s : entropy_upper_sequence(coin, 10)) CHECK(std::abs(s.u.value - ln2) < 1e-12);
  for (const auto& s : entropy_upper_sequence(perm, 10))
    if (s.n >= 1) CHECK(std::abs(s.u.value) < 1e-12);
  for (int n = 1; n <= 10; ++n) {
    CHECK(std::abs(cylinder_sums(coin, n).mass - 1.0) < 1e-12);
    CHECK(std::abs(cylinder_sums(perm, n).mass - 1.0) < 1e-12);
    CHECK(std::abs(pressure_estimate(coin, 1.0, n)) < 1e-12);
  }
  CHECK(std::abs(pisot_dim_upper(coin, 2.0, 6) - 1.0) < 1e-12);
  CHECK(pisot_dim_upper(coin, 2.0, 6) >= 1.0);
}

TEST_CASE("Pisot test") {
  CHECK(is_pisot({1, -1, -1}));
  CHECK(is_pisot({1, -1, -1, -1}));
  CHECK(is_pisot({1, -1, 0, -1}));
  CHECK(is_pisot({1, 0, -1, -1}));
  CHECK(!is_pisot({1, 0, -2}));        // sqrt 2 has conjugate -sqrt 2
  CHECK(is_pisot({1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1}));
  CHECK(is_pisot({1, -1, -2, 0, 1}));
}

}  // TEST_SUITE
