#include "fracdim/ifs.hpp"

#include "fracdim/exact_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fracdim {

Interval intersect(const Interval& a, const Interval& b) {
  if (a.is_empty || b.is_empty) return Interval::empty();
  const double lo = std::max(a.lo, b.lo);
  const double hi = std::min(a.hi, b.hi);
  if (lo > hi) return Interval::empty();
  return Interval{lo, hi, false};
}

Similarity1D Similarity1D::from_rational(const mpq_class& ratio, const mpq_class& offset) {
  if (ratio <= 0 || ratio >= 1) throw DomainError("similarity ratio must lie in (0, 1)");
  Similarity1D s;
  s.exact_ratio = ratio;
  s.exact_offset = offset;
  s.ratio = to_double_nearest(ratio);
  s.offset = to_double_nearest(offset);
  const mpq_class inv = 1 / ratio;
  s.inv_slope = to_double_nearest(inv);
  s.inv_offset = to_double_nearest(-offset * inv);
  // (x + offset / ratio) / (1 / ratio), e.g. (x + 1) / 3.
  s.fwd_shift = to_double_nearest(offset * inv);
  return s;
}

Similarity1D Similarity1D::from_inverse(double slope, double intercept) {
  if (!(slope > 1.0)) throw DomainError("inverse slope must exceed 1");
  Similarity1D s;
  s.inv_slope = slope;
  s.inv_offset = intercept;
  s.ratio = 1.0 / slope;
  s.offset = -intercept / slope;
  s.fwd_shift = -intercept;
  return s;
}

IFS1D::IFS1D(std::vector<Similarity1D> maps, WeightVector weights, std::optional<Interval> hull_override)
    : maps_(std::move(maps)), weights_(std::move(weights)) {
  if (maps_.size() < 2) throw DomainError("IFS needs at least two maps");
  if (maps_.size() != weights_.size()) throw DomainError("map and weight counts differ");
  for (const auto& m : maps_)
    if (!(m.ratio > 0.0 && m.ratio < 1.0)) throw DomainError("similarity ratio must lie in (0, 1)");
  hull_ = hull_override ? *hull_override : attractor_hull(maps_);
  for (const auto& m : maps_) {
    const double a = m.apply(hull_.lo), b = m.apply(hull_.hi);
    const double slack = 8 * unit_roundoff * (std::abs(hull_.lo) + std::abs(hull_.hi) + 1.0);
    if (a < hull_.lo - slack || b > hull_.hi + slack) throw DomainError("hull is not invariant under the maps");
  }
}

bool IFS1D::has_exact_maps() const {
  return std::all_of(maps_.begin(), maps_.end(), [](const Similarity1D& m) { return m.exact_ratio.has_value(); });
}

EntropyValue IFS1D::lyapunov() const {
  EntropyValue out;
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    const double log_ratio = std::log(maps_[i].inv_slope);
    const double term = weights_.nearest(i) * log_ratio;
    out.value += term;
    out.abs_error += 4 * unit_roundoff * std::abs(term);
  }
  out.abs_error += static_cast<double>(maps_.size()) * unit_roundoff * std::abs(out.value);
  // from_rational keeps inv_slope as the nearest double to 1/ratio.
  for (const auto& m : maps_)
    if (m.exact_ratio) out.abs_error += unit_roundoff;
  return out;
}

void IFS1D::attach_minimal_polynomial(std::vector<std::int64_t> monic_high_to_low) {
  if (maps_.size() != 2) throw DomainError("a minimal polynomial applies to Bernoulli IFSs only");
  const double root = largest_real_root(monic_high_to_low);
  if (!(root > 1.0 && root <= 2.0)) throw DomainError("largest root must lie in (1, 2]");
  const double slack = 64 * unit_roundoff * root;
  if (std::abs(root - maps_[0].inv_slope) > std::max(slack, 1e-12))
    throw DomainError("minimal polynomial root disagrees with the IFS parameter");
  minpoly_ = std::move(monic_high_to_low);
}

Interval attractor_hull(const std::vector<Similarity1D>& maps) {
  bool exact = std::all_of(maps.begin(), maps.end(), [](const Similarity1D& m) { return m.exact_ratio.has_value(); });
  if (exact) {
    mpq_class lo = 0, hi = 0;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const mpq_class fp = *maps[i].exact_offset / (1 - *maps[i].exact_ratio);
      if (i == 0 || fp < lo) lo = fp;
      if (i == 0 || fp > hi) hi = fp;
    }
    return Interval{to_double_nearest(lo), to_double_nearest(hi), false};
  }
  double lo = 0, hi = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    // Fixed point of y -> (y - c)/a is c / (1 - a).
    const double fp = maps[i].inv_offset / (1.0 - maps[i].inv_slope);
    if (i == 0 || fp < lo) lo = fp;
    if (i == 0 || fp > hi) hi = fp;
  }
  return Interval{lo, hi, false};
}

Interval attractor_hull(const IFS1D& ifs) { return ifs.hull(); }

Interval preimage(const Similarity1D& map, const Interval& iv) {
  if (iv.is_empty) return Interval::empty();
  return Interval{map.apply_inverse(iv.lo), map.apply_inverse(iv.hi), false};
}

IFS1D bernoulli_ifs(double beta) {
  if (!(beta > 1.0 && beta < 2.0) && beta != 2.0) throw DomainError("Bernoulli parameter must lie in (1, 2]");
  std::vector<Similarity1D> maps{Similarity1D::from_inverse(beta, 0.0), Similarity1D::from_inverse(beta, 1.0 - beta)};
  // The second map is evaluated around its fixed point: (x - 1) / beta + 1.
  maps[1].offset = 1.0 - 1.0 / beta;
  maps[1].fwd_shift = -1.0;
  maps[1].fwd_post = 1.0;
  return IFS1D(std::move(maps), WeightVector::uniform(2), Interval{0.0, 1.0, false});
}

IFS1D bernoulli_ifs(std::vector<std::int64_t> monic_high_to_low) {
  IFS1D ifs = bernoulli_ifs(largest_real_root(monic_high_to_low));
  ifs.attach_minimal_polynomial(std::move(monic_high_to_low));
  return ifs;
}

std::size_t configured_endpoint_cap(std::size_t fallback) {
  if (const char* env = std::getenv("FRACDIM_CELL_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return fallback;
}

Partition partition_from_points(std::vector<double> points) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return Partition{std::move(points)};
}

Partition generate_partition(const IFS1D& ifs, int level, std::size_t endpoint_cap) {
  if (level < 1) throw DomainError("partition level must be >= 1");
  const double words = std::pow(static_cast<double>(ifs.size()), level);
  if (2.0 * words > static_cast<double>(endpoint_cap))
    throw ResourceError("partition level exceeds the endpoint cap");
  // Level-n points are images of level-(n-1) points; deduplicating between
  // levels leaves the point set unchanged.
  std::vector<double> points{ifs.hull().lo, ifs.hull().hi};
  std::vector<double> next;
  for (int n = 0; n < level; ++n) {
    next.clear();
    next.reserve(points.size() * ifs.size());
    for (const auto& m : ifs.maps())
      for (double x : points) next.push_back(m.apply(x));
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    points.swap(next);
  }
  // The hull endpoints are fixed points of the extreme maps; keep them exact.
  points.front() = std::min(points.front(), ifs.hull().lo);
  points.back() = std::max(points.back(), ifs.hull().hi);
  std::vector<double> clipped;
  clipped.reserve(points.size());
  for (double x : points)
    if (x >= ifs.hull().lo && x <= ifs.hull().hi) clipped.push_back(x);
  if (clipped.front() != ifs.hull().lo) clipped.insert(clipped.begin(), ifs.hull().lo);
  if (clipped.back() != ifs.hull().hi) clipped.push_back(ifs.hull().hi);
  return Partition{std::move(clipped)};
}

DiagonalIFS2D::DiagonalIFS2D(std::vector<Similarity1D> xs, std::vector<Similarity1D> ys, WeightVector w)
    : x_maps(std::move(xs)), y_maps(std::move(ys)), weights(std::move(w)) {
  if (x_maps.size() != y_maps.size() || x_maps.size() != weights.size())
    throw DomainError("planar IFS: map and weight counts differ");
  if (x_maps.size() < 2) throw DomainError("planar IFS needs at least two maps");
  hull = Box2D{attractor_hull(x_maps), attractor_hull(y_maps)};
}

IFS1D parse_ifs(std::istream& in) {
  std::vector<Similarity1D> maps;
  std::vector<mpq_class> weights;
  std::optional<Interval> hull;
  std::optional<double> bernoulli;
  std::vector<std::int64_t> minpoly;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    try {
      if (tok[0] == "hull") {
        if (tok.size() != 3) throw ParseError("hull line needs two numbers");
        hull = Interval{to_double_nearest(parse_rational(tok[1])), to_double_nearest(parse_rational(tok[2])), false};
        continue;
      }
      if (tok[0] == "bernoulli") {
        if (tok.size() != 2) throw ParseError("bernoulli line needs one number");
        bernoulli = to_double_nearest(parse_rational(tok[1]));
        continue;
      }
      if (tok[0] == "minpoly") {
        if (tok.size() < 3) throw ParseError("minpoly needs at least two coefficients");
        for (std::size_t k = 1; k < tok.size(); ++k) {
          std::size_t used = 0;
          minpoly.push_back(std::stoll(tok[k], &used));
          if (used != tok[k].size()) throw ParseError("bad polynomial coefficient: " + tok[k]);
        }
        continue;
      }
      if (tok.size() != 3) throw ParseError("expected `ratio offset weight`");
      maps.push_back(Similarity1D::from_rational(parse_rational(tok[0]), parse_rational(tok[1])));
      weights.push_back(parse_rational(tok[2]));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const DomainError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::logic_error&) {
      throw ParseError("line " + std::to_string(lineno) + ": bad integer");
    }
  }
  if (bernoulli || !minpoly.empty()) {
    if (!maps.empty() || hull) throw ParseError("a Bernoulli description cannot also list maps");
    try {
      IFS1D ifs = bernoulli_ifs(bernoulli ? *bernoulli : largest_real_root(minpoly));
      if (!minpoly.empty()) ifs.attach_minimal_polynomial(std::move(minpoly));
      return ifs;
    } catch (const DomainError& e) {
      throw ParseError(e.what());
    }
  }
  if (maps.size() < 2) throw ParseError("IFS file must define at least two maps");
  try {
    return IFS1D(std::move(maps), WeightVector(std::move(weights)), hull);
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
}

IFS1D load_ifs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open IFS file: " + path);
  return parse_ifs(in);
}

}  // namespace fracdim
