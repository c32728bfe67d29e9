#include "fracdim/exact_measure.hpp"

namespace fracdim {

ExactIFS<mpq_class> exact_rational_ifs(const IFS1D& ifs) {
  if (!ifs.has_exact_maps()) throw PreconditionError("exact mode needs rational map coefficients");
  ExactIFS<mpq_class> out;
  mpq_class lo = 0, hi = 0;
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    const auto& m = ifs.map(i);
    const mpq_class r = *m.exact_ratio, b = *m.exact_offset;
    out.ratio.push_back(r);
    out.offset.push_back(b);
    out.inv_slope.push_back(1 / r);
    out.inv_offset.push_back(-b / r);
    out.weights.push_back(ifs.weights()[i]);
    const mpq_class fp = b / (1 - r);
    if (i == 0 || fp < lo) lo = fp;
    if (i == 0 || fp > hi) hi = fp;
  }
  out.hull_lo = lo;
  out.hull_hi = hi;
  return out;
}

ExactIFS<AlgebraicInteger> exact_bernoulli_ifs(const NumberField& field) {
  ExactIFS<AlgebraicInteger> out;
  const AlgebraicInteger beta = AlgebraicInteger::generator(&field);
  const AlgebraicInteger inv = AlgebraicInteger::generator_inverse(&field);
  const AlgebraicInteger zero(&field, 0), one(&field, 1);
  out.ratio = {inv, inv};
  out.offset = {zero, one - inv};
  out.inv_slope = {beta, beta};
  out.inv_offset = {zero, one - beta};
  out.weights = {mpq_class(1, 2), mpq_class(1, 2)};
  out.hull_lo = zero;
  out.hull_hi = one;
  return out;
}

}  // namespace fracdim
