#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fracdim/entropy_bounds.hpp"

namespace fracdim {

/// S_1(x, y) = (x/alpha, y/beta), S_2(x, y) = (x/alpha + 1 - 1/alpha, y/beta + 1 - 1/beta).
DiagonalIFS2D selfaffine_ifs(double alpha, double beta);

struct SelfAffineConfig {
  int N = 7;            // level of the alpha-axis partition
  int L = 35;
  int grid_level = -1;  // level of both axes of the planar grid; -1 means N
  int L2 = -1;          // iteration time of the planar queries; -1 means L
  double gamma = gamma_bernoulli;
  std::size_t grid_cap = std::size_t{1} << 24;
  int jobs = 1;
};

struct SelfAffineReport {
  double alpha = 0.0, beta = 0.0;
  ConditionalSum axis;    // bound on H(P | pi_1^-1 B(R))
  ConditionalSum planar;  // bound on H(P | pi^-1 B(R^2))
  double dim_lower = 0.0;
  double dim_estimate = 0.0;
  std::size_t grid_cells = 0;
  double elapsed_seconds = 0.0;
};

// Upper bounds y_i(D) for the boxes of the product grid, row-major in x.
CellBounds planar_cell_bounds(const DiagonalIFS2D& ifs, const Partition& xs, const Partition& ys,
                              const UBConfig2D& cfg, int jobs = 1);

// (1/log a - 1/log b)(log 2 - h1) + (log 2 - h2)/log b with h1, h2 upper
// bounds; rounded down.
double selfaffine_combination(double alpha, double beta, double h1_upper, double h2_upper);

SelfAffineReport selfaffine_lower_bound(double alpha, double beta, const SelfAffineConfig& cfg);

struct SelfAffineRow {
  double alpha = 0.0, beta = 0.0;
  SelfAffineConfig cfg;
};

// CSV with header alpha,beta,N,L,grid_level,grid_depth; `#` starts a comment.
std::vector<SelfAffineRow> parse_selfaffine_rows(std::istream& in);
std::vector<SelfAffineRow> load_selfaffine_rows(const std::string& path);

std::string selfaffine_csv_header();
std::string selfaffine_csv_row(const SelfAffineReport& r);

}  // namespace fracdim
