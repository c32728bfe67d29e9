#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "fracdim/core_math.hpp"

namespace fracdim {

/// Closed interval [lo, hi], or the empty set.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool is_empty = false;

  static Interval empty() { return Interval{0.0, 0.0, true}; }
  double width() const { return is_empty ? 0.0 : hi - lo; }
  bool contains(const Interval& o) const { return o.is_empty || (!is_empty && lo <= o.lo && o.hi <= hi); }
  bool operator==(const Interval& o) const {
    return is_empty == o.is_empty && (is_empty || (lo == o.lo && hi == o.hi));
  }
};

Interval intersect(const Interval& a, const Interval& b);

/// x -> ratio * x + offset with 0 < ratio < 1. The inverse is kept as its
/// own pair of binary64 coefficients, evaluated as fl(fl(inv_slope * y) + inv_offset);
/// the forward map is evaluated as (x + fwd_shift) / inv_slope + fwd_post.
struct Similarity1D {
  double ratio = 0.5;
  double offset = 0.0;
  double inv_slope = 2.0;
  double inv_offset = 0.0;
  double fwd_shift = 0.0;
  double fwd_post = 0.0;
  // Present when the map was specified by exact rationals.
  std::optional<mpq_class> exact_ratio;
  std::optional<mpq_class> exact_offset;

  static Similarity1D from_rational(const mpq_class& ratio, const mpq_class& offset);
  // Map whose inverse is y -> slope * y + intercept, both exact in binary64.
  static Similarity1D from_inverse(double slope, double intercept);

  double apply(double x) const { return (x + fwd_shift) / inv_slope + fwd_post; }
  double apply_inverse(double y) const { return inv_slope * y + inv_offset; }
  double fixed_point() const { return offset / (1.0 - ratio); }
};

/// Finite IFS of similarities on the line with a probability vector.
class IFS1D {
 public:
  IFS1D(std::vector<Similarity1D> maps, WeightVector weights, std::optional<Interval> hull_override = {});

  std::size_t size() const { return maps_.size(); }
  const Similarity1D& map(std::size_t i) const { return maps_[i]; }
  const std::vector<Similarity1D>& maps() const { return maps_; }
  const WeightVector& weights() const { return weights_; }
  const Interval& hull() const { return hull_; }
  bool has_exact_maps() const;

  // Lyapunov exponent -sum p_i log ratio_i in nats, with an error radius.
  EntropyValue lyapunov() const;

  // Set on a Bernoulli IFS whose parameter is the largest root of this monic
  // polynomial (high to low); enables exact arithmetic in Z[beta].
  const std::vector<std::int64_t>& minimal_polynomial() const { return minpoly_; }
  void attach_minimal_polynomial(std::vector<std::int64_t> monic_high_to_low);

 private:
  std::vector<Similarity1D> maps_;
  WeightVector weights_;
  Interval hull_;
  std::vector<std::int64_t> minpoly_;
};

// Smallest interval [c, d] with S_i([c, d]) contained in [c, d] for every map.
Interval attractor_hull(const IFS1D& ifs);
Interval attractor_hull(const std::vector<Similarity1D>& maps);

// Affine preimage of a nonempty interval, round to nearest.
Interval preimage(const Similarity1D& map, const Interval& iv);

// The Bernoulli convolution IFS {x/beta, x/beta + 1 - 1/beta}, weights (1/2, 1/2).
IFS1D bernoulli_ifs(double beta);
// Same, with beta the largest root of the polynomial (rounded to nearest for
// the binary64 maps).
IFS1D bernoulli_ifs(std::vector<std::int64_t> monic_high_to_low);

/// Sorted breakpoints a_0 < ... < a_M; cells are [a_j, a_{j+1}].
struct Partition {
  std::vector<double> breakpoints;

  std::size_t cells() const { return breakpoints.size() < 2 ? 0 : breakpoints.size() - 1; }
  Interval cell(std::size_t j) const { return Interval{breakpoints[j], breakpoints[j + 1], false}; }
};

inline constexpr std::size_t default_endpoint_cap = std::size_t{1} << 24;

// Reads FRACDIM_CELL_CAP when set, otherwise returns the default.
std::size_t configured_endpoint_cap(std::size_t fallback = default_endpoint_cap);

// Breakpoints {S_I(c), S_I(d) : |I| = N} over the hull [c, d], sorted and
// deduplicated by exact binary64 equality.
Partition generate_partition(const IFS1D& ifs, int level, std::size_t endpoint_cap = default_endpoint_cap);

// Partition built from an externally supplied sorted point set (used when
// breakpoints come from exact arithmetic).
Partition partition_from_points(std::vector<double> points);


/// Axis-aligned closed box, empty when either side is.
struct Box2D {
  Interval x;
  Interval y;

  static Box2D empty() { return Box2D{Interval::empty(), Interval::empty()}; }
  bool is_empty() const { return x.is_empty || y.is_empty; }
  bool operator==(const Box2D& o) const {
    return (is_empty() && o.is_empty()) || (!is_empty() && x == o.x && y == o.y);
  }
};

/// Planar IFS of coordinate-diagonal affine maps S_i(x, y) = (X_i(x), Y_i(y)).
struct DiagonalIFS2D {
  std::vector<Similarity1D> x_maps;
  std::vector<Similarity1D> y_maps;
  WeightVector weights;
  Box2D hull;

  DiagonalIFS2D(std::vector<Similarity1D> xs, std::vector<Similarity1D> ys, WeightVector w);
  std::size_t size() const { return x_maps.size(); }
};

// IFS description file: one `ratio offset weight` line per map, `#` comments,
// optional `hull lo hi` line. Numbers are exact decimals or fractions.
// Alternatively `bernoulli <beta>` and/or `minpoly c_d ... c_0` describe a
// Bernoulli convolution; with only `minpoly`, beta is its largest root.
IFS1D parse_ifs(std::istream& in);
IFS1D load_ifs(const std::string& path);

}  // namespace fracdim
