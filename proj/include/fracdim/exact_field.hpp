#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <mpfr.h>

namespace fracdim {

/// The ring Z[beta] for a real algebraic unit beta > 1, given by its monic
/// integer minimal polynomial. Elements are integer coordinate vectors in the
/// power basis 1, beta, ..., beta^(d-1).
class NumberField {
 public:
  static constexpr std::size_t max_degree = 12;

  // Coefficients from the leading term down: {1, -1, -1, -1} is x^3 - x^2 - x - 1.
  // The selected root is the largest real root.
  explicit NumberField(std::vector<std::int64_t> monic_high_to_low);
  ~NumberField();
  NumberField(const NumberField&) = delete;
  NumberField& operator=(const NumberField&) = delete;

  std::size_t degree() const { return degree_; }
  double root() const { return root_; }
  const std::vector<std::int64_t>& polynomial() const { return poly_; }
  std::string polynomial_string() const;

  // beta^d = sum_{j<d} reduction_[j] beta^j
  const std::array<std::int64_t, max_degree>& reduction() const { return reduction_; }
  const std::array<std::int64_t, max_degree>& inverse_root() const { return inverse_; }

  // Sign of sum c_j beta^j, decided with a double filter and an MPFR fallback.
  int sign(const std::array<std::int64_t, max_degree>& coeffs) const;
  double approx(const std::array<std::int64_t, max_degree>& coeffs) const;

 private:
  std::vector<std::int64_t> poly_;
  std::size_t degree_ = 0;
  double root_ = 0.0;
  std::array<double, max_degree> powers_{};
  std::array<std::int64_t, max_degree> reduction_{};
  std::array<std::int64_t, max_degree> inverse_{};
  std::vector<__mpfr_struct> hp_powers_;  // mpfr_t storage, cleared in the destructor
};

double largest_real_root(const std::vector<std::int64_t>& monic_high_to_low);

/// Element of Z[beta]; value semantics, field held by non-owning pointer.
class AlgebraicInteger {
 public:
  using Coeffs = std::array<std::int64_t, NumberField::max_degree>;

  AlgebraicInteger() = default;
  AlgebraicInteger(const NumberField* field, std::int64_t integer);
  AlgebraicInteger(const NumberField* field, const Coeffs& coeffs);

  static AlgebraicInteger generator(const NumberField* field);
  static AlgebraicInteger generator_inverse(const NumberField* field);

  const NumberField* field() const { return field_; }
  const Coeffs& coeffs() const { return c_; }

  AlgebraicInteger operator+(const AlgebraicInteger& o) const;
  AlgebraicInteger operator-(const AlgebraicInteger& o) const;
  AlgebraicInteger operator-() const;
  AlgebraicInteger operator*(const AlgebraicInteger& o) const;

  int sign() const;
  bool is_zero() const;
  double approx() const;
  std::string str() const;

  friend bool operator==(const AlgebraicInteger& a, const AlgebraicInteger& b) { return a.c_ == b.c_; }
  friend bool operator<(const AlgebraicInteger& a, const AlgebraicInteger& b) { return (a - b).sign() < 0; }
  friend bool operator>(const AlgebraicInteger& a, const AlgebraicInteger& b) { return b < a; }
  friend bool operator<=(const AlgebraicInteger& a, const AlgebraicInteger& b) { return !(b < a); }
  friend bool operator>=(const AlgebraicInteger& a, const AlgebraicInteger& b) { return !(a < b); }

 private:
  const NumberField* field_ = nullptr;
  Coeffs c_{};
};

// Uniform scalar interface used by the exact solver templates.
inline double approx_double(const AlgebraicInteger& x) { return x.approx(); }
double approx_double(const mpq_class& x);
std::size_t hash_value(const AlgebraicInteger& x);
std::size_t hash_value(const mpq_class& x);
inline std::string to_string(const AlgebraicInteger& x) { return x.str(); }
std::string to_string(const mpq_class& x);

}  // namespace fracdim
