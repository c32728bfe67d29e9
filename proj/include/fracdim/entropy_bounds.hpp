#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracdim/core_math.hpp"
#include "fracdim/exact_measure.hpp"
#include "fracdim/ifs.hpp"
#include "fracdim/measure_bounds.hpp"

namespace fracdim {

enum class MeasureMode { exact, algorithm38 };

std::string to_string(MeasureMode mode);
MeasureMode parse_measure_mode(const std::string& text);

/// Upper bounds y_i(D) >= p_i mu(S_i^-1 D), stored row-major (cell, map).
struct CellBounds {
  std::size_t maps = 0;
  std::vector<double> y;
  std::uint64_t regions_processed = 0;
  int max_depth = 0;
  bool cap_hit = false;

  std::size_t cells() const { return maps == 0 ? 0 : y.size() / maps; }
  std::span<const double> row(std::size_t j) const { return {y.data() + j * maps, maps}; }
};

// Algorithm 3.8 queries on padded_preimage(S_i, cell, gamma, B), scaled by p_i
// and rounded up. The serial version is the reference; the parallel one
// fills the same slots and is bit-identical for any job count.
CellBounds cell_bounds_serial(const IFS1D& ifs, std::span<const Interval> cells, const UBConfig& cfg);
CellBounds cell_bounds_parallel(const IFS1D& ifs, std::span<const Interval> cells, const UBConfig& cfg, int jobs);
CellBounds cell_bounds(const IFS1D& ifs, std::span<const Interval> cells, const UBConfig& cfg, int jobs = 1);

// Exact p_i mu(S_i^-1 D) for the cells between consecutive exact points,
// rounded up to binary64.
template <class S>
CellBounds exact_cell_bounds(const ExactIFS<S>& ifs, const std::vector<S>& points,
                             std::size_t node_cap = 4'000'000) {
  CellBounds out;
  out.maps = ifs.size();
  if (points.size() < 2) return out;
  ExactMeasureSolver<S> solver(ifs, node_cap);
  out.y.reserve((points.size() - 1) * ifs.size());
  for (std::size_t j = 0; j + 1 < points.size(); ++j)
    for (std::size_t i = 0; i < ifs.size(); ++i)
      out.y.push_back(to_double_up(ifs.weights[i] * solver.preimage_measure(i, points[j], points[j + 1])));
  out.regions_processed = solver.nodes();
  out.max_depth = static_cast<int>(solver.largest_component());
  return out;
}

// Rigorous radius for the binary64 evaluation of f at y.
double f_error_bound(std::span<const double> y);

/// sum_D f(y(D)) in canonical cell order with its error ledger.
struct ConditionalSum {
  EntropyValue value;             // abs_error covers the per-cell evaluations
  double summation_error = 0.0;   // |E_n| for the left-to-right sum
  double abs_sum = 0.0;
  std::size_t cells = 0;

  double upper() const;
};

ConditionalSum sum_conditional(const CellBounds& bounds);

ConditionalSum conditional_entropy_upper(const IFS1D& ifs, const Partition& partition, const UBConfig& cfg,
                                         int jobs = 1);

struct BoundReport {
  double dim_lower = 0.0;     // certified
  double dim_estimate = 0.0;  // (H - sum f) / lambda in plain binary64
  EntropyValue numerator_entropy;
  EntropyValue conditional_upper;
  EntropyValue lyapunov;
  double summation_error = 0.0;
  std::size_t partition_cells = 0;
  MeasureMode measure_mode = MeasureMode::algorithm38;
  int level = 0;
  int depth = 0;
  double gamma = 0.0;
  std::uint64_t regions_processed = 0;
  int max_depth = 0;
  bool cap_hit = false;
  double elapsed_seconds = 0.0;
};

// (H - upper(conditional) - |E_n|) / upper(lambda), rounded down and clipped
// to [0, dim_ceiling].
double certified_quotient(const EntropyValue& numerator, const ConditionalSum& conditional,
                          const EntropyValue& lyapunov, double dim_ceiling = 1.0);

BoundReport assemble_report(const EntropyValue& numerator, const ConditionalSum& conditional,
                            const EntropyValue& lyapunov, MeasureMode mode);

struct LowerBoundOptions {
  int jobs = 1;
  std::size_t endpoint_cap = default_endpoint_cap;
  std::size_t exact_node_cap = 4'000'000;
};

// Exact mode needs rational maps or a Bernoulli IFS carrying its minimal
// polynomial; cfg is used only in Algorithm 3.8 mode.
BoundReport dimension_lower_bound(const IFS1D& ifs, int level, MeasureMode mode, const UBConfig& cfg,
                                  const LowerBoundOptions& opts = {});

nlohmann::ordered_json to_json(const EntropyValue& v);
nlohmann::ordered_json to_json(const BoundReport& r);

std::string csv_header_lower();
std::string csv_row(const BoundReport& r);

// %.15g, keeping the precision of the published tables.
std::string format15(double x);

}  // namespace fracdim
