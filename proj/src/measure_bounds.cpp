#include "fracdim/measure_bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace fracdim {
namespace {

using u128 = unsigned __int128;

std::array<double, 2> region_key(const Interval& r) { return {r.lo, r.hi}; }
std::array<double, 4> region_key(const Box2D& r) { return {r.x.lo, r.x.hi, r.y.lo, r.y.hi}; }

bool region_empty(const Interval& r) { return r.is_empty; }
bool region_empty(const Box2D& r) { return r.is_empty(); }

mpz_class to_mpz(u128 v) {
  mpz_class hi = static_cast<unsigned long>(static_cast<std::uint64_t>(v >> 64));
  mpz_class lo = static_cast<unsigned long>(static_cast<std::uint64_t>(v));
  return (hi << 64) + lo;
}

// sum_d hits[d] * ell^-d as an exact rational.
mpq_class ell_adic(std::size_t ell, int L, const std::vector<u128>& hits) {
  mpz_class acc = 0;
  for (int d = 0; d <= L; ++d) acc = acc * static_cast<unsigned long>(ell) + to_mpz(hits[d]);
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), static_cast<unsigned long>(ell), static_cast<unsigned long>(L));
  mpq_class q(acc, den);
  q.canonicalize();
  return q;
}

void finish_depth(UBResult& res, int maxlive, int L) {
  res.terminated_early = !res.cap_hit && maxlive < L;
  res.depth_reached = res.terminated_early ? maxlive + 1 : L;
}

// Equal weights 1/ell: a region alive at depth d weighs ell^-d, so the bound
// is determined by how many regions were absorbed (or survive, or are left
// over at the cap) at each depth. hits[d] counts them.
template <class Region, class Children>
UBResult refine_equal(const Region& A, const Region& B, std::size_t ell, int L, std::uint64_t cap,
                      Children&& children) {
  struct Node {
    Region region;
    int depth;
  };
  std::vector<u128> hits(L + 1, 0);
  std::vector<Node> stack{{A, 0}};
  std::vector<Region> kids(ell);
  UBResult res;
  int maxlive = 0;
  while (!stack.empty()) {
    if (res.regions_processed >= cap) {
      res.cap_hit = true;
      for (const auto& nd : stack) ++hits[nd.depth];
      break;
    }
    const Node nd = stack.back();
    stack.pop_back();
    ++res.regions_processed;
    const int d = nd.depth + 1;
    children(nd.region, kids.data());
    // Push in reverse so the first map is explored first.
    for (std::size_t i = ell; i-- > 0;) {
      const Region& k = kids[i];
      if (region_empty(k)) continue;
      if (k == B) {
        ++hits[d];
        continue;
      }
      maxlive = std::max(maxlive, d);
      if (d == L) ++hits[L];
      else stack.push_back({k, d});
    }
  }
  res.exact = true;
  res.exact_bound = ell_adic(ell, L, hits);
  res.upper_bound = to_double_up(res.exact_bound);
  finish_depth(res, maxlive, L);
  return res;
}

// Same bound computed level by level with identical regions merged; the
// multiplicities keep every weight, so the result is identical.
template <class Region, class Children>
UBResult refine_equal_coalesced(const Region& A, const Region& B, std::size_t ell, int L, std::uint64_t cap,
                                Children&& children) {
  if (static_cast<double>(L) * std::log2(static_cast<double>(ell)) > 126.0)
    throw PreconditionError("coalesce mode needs ell^L < 2^126");
  std::vector<u128> hits(L + 1, 0);
  std::vector<std::pair<Region, u128>> level{{A, 1}}, next;
  std::vector<Region> kids(ell);
  UBResult res;
  int maxlive = 0;
  for (int n = 0; n < L && !level.empty(); ++n) {
    next.clear();
    std::size_t consumed = 0;
    for (; consumed < level.size(); ++consumed) {
      if (res.regions_processed >= cap) break;
      const auto& [region, mult] = level[consumed];
      ++res.regions_processed;
      children(region, kids.data());
      for (std::size_t i = 0; i < ell; ++i) {
        if (region_empty(kids[i])) continue;
        if (kids[i] == B) hits[n + 1] += mult;
        else next.emplace_back(kids[i], mult);
      }
    }
    if (consumed < level.size()) {
      res.cap_hit = true;
      for (std::size_t j = consumed; j < level.size(); ++j) hits[n] += level[j].second;
      for (const auto& [r, m] : next) hits[n + 1] += m;
      level.clear();
      break;
    }
    std::sort(next.begin(), next.end(),
              [](const auto& a, const auto& b) { return region_key(a.first) < region_key(b.first); });
    level.clear();
    for (auto& e : next) {
      if (!level.empty() && level.back().first == e.first) level.back().second += e.second;
      else level.push_back(std::move(e));
    }
    if (!level.empty()) maxlive = n + 1;
  }
  for (const auto& [r, m] : level) hits[L] += m;
  res.exact = true;
  res.exact_bound = ell_adic(ell, L, hits);
  res.upper_bound = to_double_up(res.exact_bound);
  finish_depth(res, maxlive, L);
  return res;
}

// General weights: t_child = fl(fl(t * p_i) * (1 + gamma)) stays above the
// exact weight, and the accumulated sum carries the a priori summation bound.
template <class Region, class Children>
UBResult refine_weighted(const Region& A, const Region& B, const WeightVector& w, double gamma, int L,
                         std::uint64_t cap, Children&& children) {
  const std::size_t ell = w.size();
  struct Node {
    Region region;
    int depth;
    double weight;
  };
  // fl(t p)(1+g) must absorb two roundings; keep at least 4u of margin.
  const double grow = std::max(1.0 + gamma, 1.0 + 4 * unit_roundoff);
  std::vector<double> pu(ell);
  for (std::size_t i = 0; i < ell; ++i) pu[i] = w.upper(i);
  Summation acc;
  std::vector<Node> stack{{A, 0, 1.0}};
  std::vector<Region> kids(ell);
  UBResult res;
  int maxlive = 0;
  while (!stack.empty()) {
    if (res.regions_processed >= cap) {
      res.cap_hit = true;
      for (const auto& nd : stack) acc.add(nd.weight);
      break;
    }
    const Node nd = stack.back();
    stack.pop_back();
    ++res.regions_processed;
    const int d = nd.depth + 1;
    children(nd.region, kids.data());
    for (std::size_t i = ell; i-- > 0;) {
      const Region& k = kids[i];
      if (region_empty(k)) continue;
      const double t = (nd.weight * pu[i]) * grow;
      if (k == B) {
        acc.add(t);
        continue;
      }
      maxlive = std::max(maxlive, d);
      if (d == L) acc.add(t);
      else stack.push_back({k, d, t});
    }
  }
  res.upper_bound = acc.terms() == 0 ? 0.0 : step_up(acc.sum() + acc.error_bound());
  finish_depth(res, maxlive, L);
  return res;
}

template <class Region, class Children>
UBResult dispatch(const Region& A, const Region& B, const WeightVector& w, double gamma, int L, bool coalesce,
                  std::uint64_t cap, Children&& children) {
  if (L < 1) throw PreconditionError("iteration time L must be positive");
  if (cap == 0) throw PreconditionError("node cap must be positive");
  if (w.is_uniform()) {
    if (coalesce) return refine_equal_coalesced(A, B, w.size(), L, cap, children);
    return refine_equal(A, B, w.size(), L, cap, children);
  }
  return refine_weighted(A, B, w, gamma, L, cap, children);
}

bool maps_into(const Similarity1D& m, const Interval& B) {
  if (m.exact_ratio) {
    const mpq_class lo(B.lo), hi(B.hi);
    const mpq_class a = *m.exact_ratio * lo + *m.exact_offset;
    const mpq_class b = *m.exact_ratio * hi + *m.exact_offset;
    return a >= lo && b <= hi && a <= hi && b >= lo;
  }
  // Float-specified maps: the inverse y -> s y + c is exact by construction,
  // so S(B) in B is equivalent to B in S^-1(B); check that with a few ulps.
  const double slack = 8 * unit_roundoff * (std::abs(B.lo) + std::abs(B.hi) + 1.0);
  double a = m.apply_inverse(B.lo), b = m.apply_inverse(B.hi);
  if (a > b) std::swap(a, b);
  return a <= B.lo + slack && b >= B.hi - slack;
}

// Worst-case error of fl(fl(a y) + c) over y in B, relative expansion.
double preimage_error(const Similarity1D& m, const Interval& B) {
  const double M = std::max(std::abs(B.lo), std::abs(B.hi));
  const double a = std::abs(m.inv_slope), c = std::abs(m.inv_offset);
  const double Y = std::max(std::abs(m.inv_slope * B.lo + m.inv_offset), std::abs(m.inv_slope * B.hi + m.inv_offset));
  double err = a * M * unit_roundoff + (Y + a * M * unit_roundoff) * unit_roundoff;
  if (m.exact_ratio) {
    // The binary64 inverse coefficients may themselves be rounded.
    const mpq_class inv = 1 / *m.exact_ratio;
    if (mpq_class(m.inv_slope) != inv) err += a * M * unit_roundoff;
    if (mpq_class(m.inv_offset) != -*m.exact_offset * inv) err += c * unit_roundoff;
  }
  // fl(s - gamma) < s - err needs gamma (1 - u) > err + |s| u.
  return (err + (Y + err) * unit_roundoff) / (1.0 - unit_roundoff);
}

}  // namespace

UBConfig make_ub_config(const IFS1D& ifs, int L, double gamma, std::optional<Interval> B) {
  UBConfig cfg;
  cfg.B = B ? *B : ifs.hull();
  cfg.L = L;
  cfg.gamma = gamma;
  if (cfg.B.is_empty) throw PreconditionError("bounding interval is empty");
  if (L < 1) throw PreconditionError("iteration time L must be positive");
  if (!(gamma > 0.0)) throw PreconditionError("padding gamma must be positive");
  if (gamma < unit_roundoff) throw PreconditionError("padding gamma must be at least 2^-53");
  for (const auto& m : ifs.maps())
    if (!maps_into(m, cfg.B)) throw PreconditionError("S_i(B) is not contained in B");
  return cfg;
}

UBConfig2D make_ub_config(const DiagonalIFS2D& ifs, int L, double gamma_x, double gamma_y) {
  UBConfig2D cfg;
  cfg.B = ifs.hull;
  cfg.L = L;
  cfg.gamma_x = gamma_x;
  cfg.gamma_y = gamma_y;
  if (L < 1) throw PreconditionError("iteration time L must be positive");
  if (!(gamma_x >= unit_roundoff && gamma_y >= unit_roundoff))
    throw PreconditionError("padding gamma must be at least 2^-53");
  for (std::size_t i = 0; i < ifs.size(); ++i)
    if (!maps_into(ifs.x_maps[i], cfg.B.x) || !maps_into(ifs.y_maps[i], cfg.B.y))
      throw PreconditionError("S_i(B) is not contained in B");
  return cfg;
}

Interval padded_preimage(const Similarity1D& map, const Interval& E, double gamma, const Interval& B) {
  if (E.is_empty) return Interval::empty();
  double lo = map.inv_slope * E.lo + map.inv_offset;
  double hi = map.inv_slope * E.hi + map.inv_offset;
  if (lo > hi) std::swap(lo, hi);
  lo = lo - gamma;
  hi = hi + gamma;
  if (lo > B.hi || hi < B.lo) return Interval::empty();
  return Interval{std::max(lo, B.lo), std::min(hi, B.hi), false};
}

UBResult measure_upper_bound(const IFS1D& ifs, const Interval& A, const UBConfig& cfg) {
  if (!cfg.B.contains(A)) throw PreconditionError("query interval is not contained in B");
  const auto& maps = ifs.maps();
  const double g = cfg.gamma;
  const Interval B = cfg.B;
  auto children = [&](const Interval& E, Interval* out) {
    for (std::size_t i = 0; i < maps.size(); ++i) out[i] = padded_preimage(maps[i], E, g, B);
  };
  return dispatch(A, B, ifs.weights(), g, cfg.L, cfg.coalesce, cfg.node_cap, children);
}

UBResult measure_upper_bound_2d(const DiagonalIFS2D& ifs, const Box2D& A, const UBConfig2D& cfg) {
  if (!A.is_empty() && !(cfg.B.x.contains(A.x) && cfg.B.y.contains(A.y)))
    throw PreconditionError("query box is not contained in B");
  const Box2D B = cfg.B;
  auto children = [&](const Box2D& E, Box2D* out) {
    for (std::size_t i = 0; i < ifs.size(); ++i) {
      const Interval x = padded_preimage(ifs.x_maps[i], E.x, cfg.gamma_x, B.x);
      const Interval y = x.is_empty ? Interval::empty() : padded_preimage(ifs.y_maps[i], E.y, cfg.gamma_y, B.y);
      out[i] = y.is_empty ? Box2D::empty() : Box2D{x, y};
    }
  };
  const Box2D start = A.is_empty() ? Box2D::empty() : A;
  return dispatch(start, B, ifs.weights, std::max(cfg.gamma_x, cfg.gamma_y), cfg.L, cfg.coalesce, cfg.node_cap,
                  children);
}

double auto_gamma(const std::vector<Similarity1D>& maps, const Interval& B) {
  double worst = 0.0;
  for (const auto& m : maps) worst = std::max(worst, preimage_error(m, B));
  return step_up(1.01 * worst + unit_roundoff * unit_roundoff, 2);
}

double parse_gamma(const std::string& text, const std::vector<Similarity1D>& maps, const Interval& B) {
  if (text == "auto") return auto_gamma(maps, B);
  if (!text.empty() && (text.back() == 'u' || text.back() == 'U')) {
    const mpq_class k = parse_rational(text.substr(0, text.size() - 1));
    return to_double_nearest(k) * unit_roundoff;
  }
  return to_double_nearest(parse_rational(text));
}

}  // namespace fracdim
