#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "fracdim/ifs.hpp"

namespace fracdim {

inline constexpr std::uint64_t default_node_cap = 100'000'000;

/// Parameters of the region-refinement upper bound.
struct UBConfig {
  Interval B;            // S_i(B) is contained in B for every map
  int L = 40;            // iteration time
  double gamma = 0.0;    // padding added to every preimage endpoint
  bool coalesce = false; // merge identical regions level by level
  std::uint64_t node_cap = default_node_cap;
};

// Builds a config for `ifs` and checks S_i(B) inside B in exact or
// directed arithmetic. A default B is the hull.
UBConfig make_ub_config(const IFS1D& ifs, int L, double gamma, std::optional<Interval> B = {});

struct UBConfig2D {
  Box2D B;
  int L = 40;
  double gamma_x = 0.0;
  double gamma_y = 0.0;
  bool coalesce = false;
  std::uint64_t node_cap = default_node_cap;
};

UBConfig2D make_ub_config(const DiagonalIFS2D& ifs, int L, double gamma_x, double gamma_y);

struct UBResult {
  double upper_bound = 0.0;  // rounded up, always >= the measure
  int depth_reached = 0;     // L*
  bool terminated_early = false;
  std::uint64_t regions_processed = 0;
  bool cap_hit = false;
  // Equal-weights branch only: the bound as an exact l-adic rational.
  bool exact = false;
  mpq_class exact_bound;
};

// fl(fl(inv_slope * y) + inv_offset) -/+ gamma on both endpoints, then
// intersected with B. Decreasing inverses swap the endpoints.
Interval padded_preimage(const Similarity1D& map, const Interval& E, double gamma, const Interval& B);

UBResult measure_upper_bound(const IFS1D& ifs, const Interval& A, const UBConfig& cfg);
UBResult measure_upper_bound_2d(const DiagonalIFS2D& ifs, const Box2D& A, const UBConfig2D& cfg);

// Smallest padding (with a 1% margin) for which the padded float preimage of
// every point of B encloses the true preimage, following the relative-error
// expansion of fl(fl(a y) + c).
double auto_gamma(const std::vector<Similarity1D>& maps, const Interval& B);

// Padding literal: "auto", "<k>u" meaning k * 2^-53, or a plain number.
double parse_gamma(const std::string& text, const std::vector<Similarity1D>& maps, const Interval& B);

inline constexpr double gamma_example_41 = 12.2 * unit_roundoff;
inline constexpr double gamma_bernoulli = 10.2 * unit_roundoff;

}  // namespace fracdim
