#include "fracdim/exact_field.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>

#include "fracdim/core_math.hpp"

namespace fracdim {

namespace {

constexpr mpfr_prec_t kHighPrecision = 448;

std::int64_t checked(__int128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw ResourceError("Z[beta] coefficient overflow");
  return static_cast<std::int64_t>(v);
}

double eval_poly(const std::vector<std::int64_t>& p, double x) {
  double acc = 0.0;
  for (auto c : p) acc = acc * x + static_cast<double>(c);
  return acc;
}

void eval_poly_mpfr(mpfr_t out, const std::vector<std::int64_t>& p, const mpfr_t x) {
  mpfr_set_ui(out, 0, MPFR_RNDN);
  for (auto c : p) {
    mpfr_mul(out, out, x, MPFR_RNDN);
    mpfr_add_si(out, out, static_cast<long>(c), MPFR_RNDN);
  }
}

}  // namespace

double largest_real_root(const std::vector<std::int64_t>& p) {
  if (p.size() < 2 || p.front() != 1) throw DomainError("polynomial must be monic of degree >= 1");
  double bound = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) bound = std::max(bound, std::abs(static_cast<double>(p[i])));
  bound += 1.0;
  // Scan downward from the Cauchy bound for the first sign change.
  constexpr int samples = 200000;
  const double step = 2.0 * bound / samples;
  double hi = bound;
  double f_hi = eval_poly(p, hi);
  for (int k = 1; k <= samples; ++k) {
    const double lo = bound - k * step;
    const double f_lo = eval_poly(p, lo);
    if (f_lo == 0.0) return lo;
    if ((f_lo < 0) != (f_hi < 0)) {
      double a = lo, b = hi;
      for (int it = 0; it < 200 && b - a > 0; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double fm = eval_poly(p, m);
        if ((fm < 0) == (f_lo < 0)) a = m;
        else b = m;
      }
      return 0.5 * (a + b);
    }
    hi = lo;
    f_hi = f_lo;
  }
  throw DomainError("polynomial has no real root");
}

NumberField::NumberField(std::vector<std::int64_t> p) : poly_(std::move(p)) {
  if (poly_.size() < 2 || poly_.front() != 1) throw DomainError("minimal polynomial must be monic");
  degree_ = poly_.size() - 1;
  if (degree_ > max_degree) throw DomainError("field degree exceeds supported maximum");
  const std::int64_t a0 = poly_.back();
  if (a0 != 1 && a0 != -1) throw DomainError("generator must be a unit (constant term +-1)");

  // Refine the root in high precision by bisection around the double estimate.
  const double approx_root = largest_real_root(poly_);
  mpfr_t lo, hi, mid, val_lo, val_mid;
  mpfr_inits2(kHighPrecision, lo, hi, mid, val_lo, val_mid, static_cast<mpfr_ptr>(nullptr));
  double width = 1e-9 * std::max(1.0, std::abs(approx_root));
  while (true) {
    mpfr_set_d(lo, approx_root - width, MPFR_RNDN);
    mpfr_set_d(hi, approx_root + width, MPFR_RNDN);
    eval_poly_mpfr(val_lo, poly_, lo);
    eval_poly_mpfr(val_mid, poly_, hi);
    if (mpfr_sgn(val_lo) != mpfr_sgn(val_mid)) break;
    width *= 2;
    if (width > 1.0) throw DomainError("failed to bracket the root");
  }
  eval_poly_mpfr(val_lo, poly_, lo);
  const int sign_lo = mpfr_sgn(val_lo);
  for (int it = 0; it < static_cast<int>(kHighPrecision) + 8; ++it) {
    mpfr_add(mid, lo, hi, MPFR_RNDN);
    mpfr_div_2ui(mid, mid, 1, MPFR_RNDN);
    eval_poly_mpfr(val_mid, poly_, mid);
    if (mpfr_sgn(val_mid) == 0) {
      mpfr_set(lo, mid, MPFR_RNDN);
      mpfr_set(hi, mid, MPFR_RNDN);
      break;
    }
    if (mpfr_sgn(val_mid) == sign_lo) mpfr_set(lo, mid, MPFR_RNDN);
    else mpfr_set(hi, mid, MPFR_RNDN);
  }
  root_ = mpfr_get_d(lo, MPFR_RNDN);

  hp_powers_.resize(degree_);
  for (std::size_t j = 0; j < degree_; ++j) {
    mpfr_init2(&hp_powers_[j], kHighPrecision);
    if (j == 0) mpfr_set_ui(&hp_powers_[j], 1, MPFR_RNDN);
    else mpfr_mul(&hp_powers_[j], &hp_powers_[j - 1], lo, MPFR_RNDN);
    powers_[j] = mpfr_get_d(&hp_powers_[j], MPFR_RNDN);
  }
  mpfr_clears(lo, hi, mid, val_lo, val_mid, static_cast<mpfr_ptr>(nullptr));

  // a_j denotes the coefficient of x^j.
  auto a = [&](std::size_t j) { return poly_[degree_ - j]; };
  for (std::size_t j = 0; j < degree_; ++j) reduction_[j] = -a(j);
  for (std::size_t j = 0; j < degree_; ++j) {
    const std::int64_t coeff = (j + 1 == degree_) ? 1 : a(j + 1);
    inverse_[j] = -a0 * coeff;
  }
}

NumberField::~NumberField() {
  for (auto& p : hp_powers_) mpfr_clear(&p);
}

std::string NumberField::polynomial_string() const {
  std::ostringstream os;
  for (std::size_t k = 0; k < poly_.size(); ++k) {
    if (k) os << ' ';
    os << poly_[k];
  }
  return os.str();
}

double NumberField::approx(const std::array<std::int64_t, max_degree>& c) const {
  double v = 0.0;
  for (std::size_t j = 0; j < degree_; ++j) v += static_cast<double>(c[j]) * powers_[j];
  return v;
}

int NumberField::sign(const std::array<std::int64_t, max_degree>& c) const {
  bool all_zero = true;
  bool filter_exact = true;
  double v = 0.0;
  double mag = 0.0;
  for (std::size_t j = 0; j < degree_; ++j) {
    if (c[j] == 0) continue;
    all_zero = false;
    if (std::llabs(c[j]) > (std::int64_t{1} << 52)) filter_exact = false;
    const double term = static_cast<double>(c[j]) * powers_[j];
    v += term;
    mag += std::abs(term);
  }
  if (all_zero) return 0;
  const double err = mag * static_cast<double>(2 * degree_ + 8) * unit_roundoff * 4.0;
  if (filter_exact && std::abs(v) > err) return v > 0 ? 1 : -1;

  mpfr_t acc, term;
  mpfr_inits2(kHighPrecision, acc, term, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_ui(acc, 0, MPFR_RNDN);
  for (std::size_t j = 0; j < degree_; ++j) {
    mpfr_mul_si(term, &hp_powers_[j], static_cast<long>(c[j]), MPFR_RNDN);
    mpfr_add(acc, acc, term, MPFR_RNDN);
  }
  const double hp_err = std::ldexp(mag + 1.0, -static_cast<int>(kHighPrecision) + 24);
  const double value = mpfr_get_d(acc, MPFR_RNDN);
  const int s = mpfr_sgn(acc);
  mpfr_clears(acc, term, static_cast<mpfr_ptr>(nullptr));
  if (std::abs(value) <= hp_err) throw ResourceError("Z[beta] sign undecidable at working precision");
  return s;
}

AlgebraicInteger::AlgebraicInteger(const NumberField* field, std::int64_t integer) : field_(field) {
  c_[0] = integer;
}

AlgebraicInteger::AlgebraicInteger(const NumberField* field, const Coeffs& coeffs)
    : field_(field), c_(coeffs) {}

AlgebraicInteger AlgebraicInteger::generator(const NumberField* field) {
  Coeffs c{};
  if (field->degree() == 1) c[0] = field->reduction()[0];
  else c[1] = 1;
  return AlgebraicInteger(field, c);
}

AlgebraicInteger AlgebraicInteger::generator_inverse(const NumberField* field) {
  return AlgebraicInteger(field, field->inverse_root());
}

AlgebraicInteger AlgebraicInteger::operator+(const AlgebraicInteger& o) const {
  const NumberField* f = field_ ? field_ : o.field_;
  Coeffs r{};
  for (std::size_t j = 0; j < NumberField::max_degree; ++j)
    r[j] = checked(static_cast<__int128>(c_[j]) + o.c_[j]);
  return AlgebraicInteger(f, r);
}

AlgebraicInteger AlgebraicInteger::operator-(const AlgebraicInteger& o) const {
  const NumberField* f = field_ ? field_ : o.field_;
  Coeffs r{};
  for (std::size_t j = 0; j < NumberField::max_degree; ++j)
    r[j] = checked(static_cast<__int128>(c_[j]) - o.c_[j]);
  return AlgebraicInteger(f, r);
}

AlgebraicInteger AlgebraicInteger::operator-() const {
  Coeffs r{};
  for (std::size_t j = 0; j < NumberField::max_degree; ++j) r[j] = checked(-static_cast<__int128>(c_[j]));
  return AlgebraicInteger(field_, r);
}

AlgebraicInteger AlgebraicInteger::operator*(const AlgebraicInteger& o) const {
  const NumberField* f = field_ ? field_ : o.field_;
  const std::size_t d = f->degree();
  std::array<__int128, 2 * NumberField::max_degree> prod{};
  for (std::size_t i = 0; i < d; ++i) {
    if (c_[i] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) prod[i + j] += static_cast<__int128>(c_[i]) * o.c_[j];
  }
  const auto& red = f->reduction();
  for (std::size_t k = 2 * d - 2; k >= d; --k) {
    const __int128 t = prod[k];
    if (t == 0) continue;
    prod[k] = 0;
    for (std::size_t j = 0; j < d; ++j) prod[k - d + j] += t * red[j];
    if (k == d) break;
  }
  Coeffs r{};
  for (std::size_t j = 0; j < d; ++j) r[j] = checked(prod[j]);
  return AlgebraicInteger(f, r);
}

int AlgebraicInteger::sign() const {
  if (!field_) return c_[0] > 0 ? 1 : (c_[0] < 0 ? -1 : 0);
  return field_->sign(c_);
}

bool AlgebraicInteger::is_zero() const {
  for (auto v : c_)
    if (v != 0) return false;
  return true;
}

double AlgebraicInteger::approx() const {
  if (!field_) return static_cast<double>(c_[0]);
  return field_->approx(c_);
}

std::string AlgebraicInteger::str() const {
  std::ostringstream os;
  const std::size_t d = field_ ? field_->degree() : 1;
  os << '(';
  for (std::size_t j = 0; j < d; ++j) {
    if (j) os << ',';
    os << c_[j];
  }
  os << ')';
  return os.str();
}

double approx_double(const mpq_class& x) { return to_double_nearest(x); }

std::size_t hash_value(const AlgebraicInteger& x) {
  std::size_t h = 0x9e3779b97f4a7c15ull;
  for (auto v : x.coeffs()) h ^= std::hash<std::int64_t>{}(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

std::size_t hash_value(const mpq_class& x) {
  std::size_t h = 0;
  const auto mix = [&h](const mpz_class& z) {
    const std::size_t limbs = mpz_size(z.get_mpz_t());
    for (std::size_t i = 0; i < limbs; ++i)
      h ^= std::hash<mp_limb_t>{}(mpz_getlimbn(z.get_mpz_t(), i)) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= static_cast<std::size_t>(mpz_sgn(z.get_mpz_t()) + 2);
  };
  mix(x.get_num());
  mix(x.get_den());
  return h;
}

std::string to_string(const mpq_class& x) { return x.get_str(); }

}  // namespace fracdim
