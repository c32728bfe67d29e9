#include "fracdim/core_math.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace fracdim {

double EntropyValue::lower() const { return step_down(value - abs_error); }
double EntropyValue::upper() const { return step_up(value + abs_error); }

double phi(double x) {
  if (!(x >= 0.0)) throw DomainError("phi: argument must be nonnegative");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log(x);
}

double f_ell(std::span<const double> xs) {
  if (xs.size() < 2) throw DomainError("f_ell: need at least two entries");
  double s = 0.0;
  for (double x : xs) {
    if (!(x >= 0.0)) throw DomainError("f_ell: entries must be nonnegative");
    s += x;
  }
  if (s == 0.0) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += phi(std::min(x / s, 1.0));
  return s * acc;
}

double step_up(double x, int ulps) {
  for (int i = 0; i < ulps; ++i) x = std::nextafter(x, std::numeric_limits<double>::infinity());
  return x;
}

double step_down(double x, int ulps) {
  for (int i = 0; i < ulps; ++i) x = std::nextafter(x, -std::numeric_limits<double>::infinity());
  return x;
}

double log_up(double x) { return step_up(std::log(x)); }
double log_down(double x) { return step_down(std::log(x)); }

double to_double_nearest(const mpq_class& q) {
  const double d = to_double_down(q);
  const double u = std::nextafter(d, std::numeric_limits<double>::infinity());
  if (mpq_class(d) == q) return d;
  // Compare distances exactly.
  const mpq_class below = q - mpq_class(d);
  const mpq_class above = mpq_class(u) - q;
  return above < below ? u : d;
}

double to_double_down(const mpq_class& q) {
  double d = mpq_get_d(q.get_mpq_t());  // truncates toward zero
  if (mpq_class(d) > q) d = std::nextafter(d, -std::numeric_limits<double>::infinity());
  return d;
}

double to_double_up(const mpq_class& q) {
  double d = mpq_get_d(q.get_mpq_t());
  if (mpq_class(d) < q) d = std::nextafter(d, std::numeric_limits<double>::infinity());
  return d;
}

mpq_class parse_rational(const std::string& raw) {
  std::string text;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
  if (text.empty()) throw ParseError("empty numeric literal");

  if (const auto slash = text.find('/'); slash != std::string::npos) {
    mpq_class q;
    if (q.set_str(text, 10) != 0) throw ParseError("bad fraction literal: " + raw);
    if (q.get_den() == 0) throw ParseError("zero denominator: " + raw);
    q.canonicalize();
    return q;
  }

  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') negative = text[pos++] == '-';
  std::string digits;
  long exponent = 0;
  bool seen_digit = false;
  bool seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) --exponent;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw ParseError("bad numeric literal: " + raw);
  if (pos < text.size()) {
    if (text[pos] != 'e' && text[pos] != 'E') throw ParseError("bad numeric literal: " + raw);
    ++pos;
    std::size_t used = 0;
    long e = 0;
    try {
      e = std::stol(text.substr(pos), &used);
    } catch (const std::exception&) {
      throw ParseError("bad exponent: " + raw);
    }
    if (pos + used != text.size()) throw ParseError("bad numeric literal: " + raw);
    exponent += e;
  }
  mpz_class mantissa(digits, 10);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
  mpq_class q = exponent >= 0 ? mpq_class(mantissa * scale) : mpq_class(mantissa, scale);
  q.canonicalize();
  return negative ? mpq_class(-q) : q;
}

WeightVector::WeightVector(std::vector<mpq_class> weights) : weights_(std::move(weights)) {
  if (weights_.size() < 2) throw DomainError("weight vector needs at least two entries");
  mpq_class total = 0;
  for (auto& w : weights_) {
    w.canonicalize();
    if (w <= 0 || w > 1) throw DomainError("weights must lie in (0, 1]");
    total += w;
  }
  if (total != 1) throw DomainError("weights must sum to exactly 1");
  uniform_ = std::all_of(weights_.begin(), weights_.end(),
                         [&](const mpq_class& w) { return w == weights_.front(); });
  for (const auto& w : weights_) {
    nearest_.push_back(to_double_nearest(w));
    upper_.push_back(to_double_up(w));
  }
}

WeightVector WeightVector::uniform(std::size_t count) {
  return WeightVector(std::vector<mpq_class>(count, mpq_class(1, static_cast<unsigned long>(count))));
}

EntropyValue WeightVector::entropy() const {
  // One log per distinct weight; each term carries <= 2 ulps.
  std::vector<std::pair<mpq_class, std::size_t>> distinct;
  for (const auto& w : weights_) {
    auto it = std::find_if(distinct.begin(), distinct.end(), [&](const auto& d) { return d.first == w; });
    if (it == distinct.end()) distinct.emplace_back(w, 1);
    else ++it->second;
  }
  EntropyValue out;
  for (const auto& [w, count] : distinct) {
    const mpq_class mass = w * static_cast<unsigned long>(count);
    const double log_inv = -std::log(to_double_nearest(w));
    const double term = to_double_nearest(mass) * log_inv;
    out.value += term;
    // The rounded weight perturbs the log by about one relative ulp.
    out.abs_error += 4.0 * unit_roundoff * std::abs(term) + 2.0 * unit_roundoff * to_double_nearest(mass);
  }
  out.abs_error += static_cast<double>(distinct.size()) * unit_roundoff * std::abs(out.value);
  return out;
}

void Summation::add(double x) {
  sum_ += x;
  abs_sum_ += std::abs(x);
  ++terms_;
}

double Summation::error_bound() const {
  const double n = terms_ > 0 ? static_cast<double>(terms_ - 1) : 0.0;
  return step_up(n * unit_roundoff * abs_sum_ + 0.01 * unit_roundoff, 2);
}

}  // namespace fracdim
