#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "fracdim/core_math.hpp"

namespace fracdim {

class ReducibleFamily : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

struct MatrixEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  mpq_class value;
};

/// Sparse nonnegative d x d matrix in compressed rows, with the exact
/// rational entries kept alongside the binary64 values.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t d, std::vector<MatrixEntry> entries);

  std::size_t dim() const { return d_; }
  std::size_t nonzeros() const { return values_.size(); }
  const std::vector<MatrixEntry>& entries() const { return exact_; }

  // out = x A (row vector times matrix); out must have size d.
  void left_multiply(std::span<const double> x, std::span<double> out) const;
  // out = A x
  void right_multiply(std::span<const double> x, std::span<double> out) const;
  void scale(double s);

  // f(row, col, value) over the binary64 entries in row order.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t r = 0; r < d_; ++r)
      for (std::size_t j = row_start_[r]; j < row_start_[r + 1]; ++j) f(r, cols_[j], values_[j]);
  }

 private:
  std::size_t d_ = 0;
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
  std::vector<MatrixEntry> exact_;
};

struct PerronData {
  double lambda = 0.0;
  std::vector<double> v_left;
  std::vector<double> v_right;
  double residual = 0.0;
  std::size_t iterations = 0;
};

/// Family A_1..A_k of nonnegative d x d matrices with H = sum A_i irreducible.
/// If the spectral radius of H is not 1 the matrices are rescaled by it.
class MatrixFamily {
 public:
  MatrixFamily(std::size_t d, std::vector<SparseMatrix> matrices, double radius_tol = 1e-12);

  std::size_t k() const { return mats_.size(); }
  std::size_t d() const { return d_; }
  const SparseMatrix& matrix(std::size_t i) const { return mats_[i]; }
  const PerronData& perron() const { return perron_; }
  bool rescaled() const { return rescaled_; }
  // Spectral radius of H before rescaling.
  double original_radius() const { return original_radius_; }

 private:
  std::size_t d_;
  std::vector<SparseMatrix> mats_;
  PerronData perron_;
  bool rescaled_ = false;
  double original_radius_ = 1.0;
};

// Boolean reachability on the support of H in both directions.
bool is_irreducible(std::size_t d, const std::vector<SparseMatrix>& matrices);

// Shifted power iteration x <- (H x + x) on H and H^T until the relative
// residual is below tol; v_L . v_R = 1.
PerronData perron(std::size_t d, const std::vector<SparseMatrix>& matrices, double tol = 1e-14,
                  std::size_t max_iterations = 1'000'000);

// Family file: header `k d`, then `matrix row col num/den` per nonzero entry,
// all indices 1-based; `#` starts a comment.
MatrixFamily parse_family(std::istream& in);
MatrixFamily load_family(const std::string& path);
void write_family(std::ostream& out, const MatrixFamily& family);

// v_L A_{i_1} ... A_{i_n} v_R; symbols are 0-based.
double eta_cylinder(const MatrixFamily& family, std::span<const std::size_t> word);

inline constexpr std::uint64_t default_cylinder_cap = 200'000'000;

struct EntropySequenceValue {
  int n = 0;
  EntropyValue u;           // u_n with an evaluation error radius
  std::uint64_t cylinders = 0;  // nonzero cylinders of length n
};

// u_n = sum_{|J| = n} f(eta(J1), ..., eta(Jk)), which equals
// sum_{|I|=n+1} phi(eta I) - sum_{|J|=n} phi(eta J) since the children of J
// sum to eta(J). Zero-mass prefixes are pruned. Enumeration is split by first
// symbol and reduced in symbol order.
EntropySequenceValue entropy_upper_seq(const MatrixFamily& family, int n, int jobs = 1,
                                       std::uint64_t cylinder_cap = default_cylinder_cap);

// u_1 .. u_n from one enumeration.
std::vector<EntropySequenceValue> entropy_upper_sequence(const MatrixFamily& family, int n, int jobs = 1,
                                                         std::uint64_t cylinder_cap = default_cylinder_cap);

// sum_{|I| = n} eta(I) and sum phi(eta I), for normalization checks.
struct CylinderSums {
  double mass = 0.0;
  double entropy = 0.0;
};
CylinderSums cylinder_sums(const MatrixFamily& family, int n);

// (1/n) log sum_{|I| = n} ||A_I||^q with the max-row-sum norm.
double pressure_estimate(const MatrixFamily& family, double q, int n,
                         std::uint64_t cylinder_cap = default_cylinder_cap);

// upper(u_n) / log beta, rounded up.
double pisot_dim_upper(const MatrixFamily& family, double beta, int n, int jobs = 1);
double pisot_dim_upper(const EntropySequenceValue& u, double beta);

// Pisot test for the largest root of a monic integer polynomial: every other
// root has modulus < 1 (roots by Durand-Kerner on the companion polynomial).
bool is_pisot(const std::vector<std::int64_t>& monic_high_to_low);

}  // namespace fracdim
