#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace fracdim {

// Unit roundoff of IEEE-754 binary64 (round to nearest).
inline constexpr double unit_roundoff = 0x1p-53;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised when an enumeration or region cap is exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A real quantity in nats together with an absolute error radius.
/// The exact value lies in [value - abs_error, value + abs_error].
struct EntropyValue {
  double value = 0.0;
  double abs_error = 0.0;

  double lower() const;
  double upper() const;
};

// phi(x) = -x log x, extended by phi(0) = 0.
double phi(double x);

// f(x_1..x_l) = s * sum phi(x_i / s) with s = sum x_i; zero when s == 0.
double f_ell(std::span<const double> xs);

// Directed stepping by whole ulps. Used to turn a round-to-nearest result
// with a known ulp error into a one-sided bound.
double step_up(double x, int ulps = 1);
double step_down(double x, int ulps = 1);

// log with a one-sided guarantee (glibc log is accurate to < 1 ulp).
double log_up(double x);
double log_down(double x);

double to_double_nearest(const mpq_class& q);
double to_double_up(const mpq_class& q);
double to_double_down(const mpq_class& q);

// Exact decimal or fraction literal ("0.125", "1e-5", "3/4", "-2") to a rational.
mpq_class parse_rational(const std::string& text);

/// Probability vector with exact rational entries summing to one.
class WeightVector {
 public:
  explicit WeightVector(std::vector<mpq_class> weights);
  static WeightVector uniform(std::size_t count);

  std::size_t size() const { return weights_.size(); }
  const mpq_class& operator[](std::size_t i) const { return weights_[i]; }
  bool is_uniform() const { return uniform_; }

  double nearest(std::size_t i) const { return nearest_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }

  // H(p) = sum -p_i log p_i in nats.
  EntropyValue entropy() const;

 private:
  std::vector<mpq_class> weights_;
  std::vector<double> nearest_;
  std::vector<double> upper_;
  bool uniform_ = false;
};

/// Left-to-right binary64 summation carrying the classical a priori bound
/// |E| <= (n - 1) u sum|x_i| + 0.01 u for the accumulated rounding error.
class Summation {
 public:
  void add(double x);
  double sum() const { return sum_; }
  double abs_sum() const { return abs_sum_; }
  std::size_t terms() const { return terms_; }
  double error_bound() const;

 private:
  double sum_ = 0.0;
  double abs_sum_ = 0.0;
  std::size_t terms_ = 0;
};

}  // namespace fracdim
