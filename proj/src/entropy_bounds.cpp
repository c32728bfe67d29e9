#include "fracdim/entropy_bounds.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <memory>

#ifdef FRACDIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace fracdim {

std::string to_string(MeasureMode mode) { return mode == MeasureMode::exact ? "exact" : "alg38"; }

MeasureMode parse_measure_mode(const std::string& text) {
  if (text == "exact") return MeasureMode::exact;
  if (text == "alg38" || text == "algorithm38") return MeasureMode::algorithm38;
  throw ParseError("unknown measure mode: " + text);
}

namespace {

struct CellResult {
  std::uint64_t regions = 0;
  int depth = 0;
  bool cap_hit = false;
};

// Fills y[j*l .. j*l + l) for one cell.
CellResult bound_one_cell(const IFS1D& ifs, const Interval& cell, const UBConfig& cfg, double* y) {
  CellResult r;
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    const Interval q = padded_preimage(ifs.map(i), cell, cfg.gamma, cfg.B);
    if (q.is_empty) {
      y[i] = 0.0;
      continue;
    }
    const UBResult ub = measure_upper_bound(ifs, q, cfg);
    r.regions += ub.regions_processed;
    r.depth = std::max(r.depth, ub.depth_reached);
    r.cap_hit = r.cap_hit || ub.cap_hit;
    const double m = std::min(ub.upper_bound, 1.0);
    y[i] = m == 0.0 ? 0.0 : step_up(ifs.weights().upper(i) * m);
  }
  return r;
}

}  // namespace

CellBounds cell_bounds_serial(const IFS1D& ifs, std::span<const Interval> cells, const UBConfig& cfg) {
  CellBounds out;
  out.maps = ifs.size();
  out.y.assign(cells.size() * out.maps, 0.0);
  for (std::size_t j = 0; j < cells.size(); ++j) {
    const CellResult r = bound_one_cell(ifs, cells[j], cfg, out.y.data() + j * out.maps);
    out.regions_processed += r.regions;
    out.max_depth = std::max(out.max_depth, r.depth);
    out.cap_hit = out.cap_hit || r.cap_hit;
  }
  return out;
}

CellBounds cell_bounds_parallel(const IFS1D& ifs, std::span<const Interval> cells, const UBConfig& cfg, int jobs) {
#ifdef FRACDIM_HAVE_OPENMP
  CellBounds out;
  out.maps = ifs.size();
  out.y.assign(cells.size() * out.maps, 0.0);
  std::vector<CellResult> per_cell(cells.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(std::max(jobs, 1))
  for (std::int64_t j = 0; j < n; ++j) {
    try {
      per_cell[j] = bound_one_cell(ifs, cells[j], cfg, out.y.data() + j * out.maps);
    } catch (...) {
#pragma omp critical(fracdim_cell_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& r : per_cell) {
    out.regions_processed += r.regions;
    out.max_depth = std::max(out.max_depth, r.depth);
    out.cap_hit = out.cap_hit || r.cap_hit;
  }
  return out;
#else
  (void)jobs;
  return cell_bounds_serial(ifs, cells, cfg);
#endif
}

CellBounds cell_bounds(const IFS1D& ifs, std::span<const Interval> cells, const UBConfig& cfg, int jobs) {
  return jobs > 1 ? cell_bounds_parallel(ifs, cells, cfg, jobs) : cell_bounds_serial(ifs, cells, cfg);
}

double f_error_bound(std::span<const double> y) {
  double s = 0.0;
  for (double v : y) s += v;
  if (s == 0.0) return 0.0;
  const double l = static_cast<double>(y.size());
  // x_i = y_i / s carries relative error <= l u; d phi = -(1 + log x) dx.
  double phis = 0.0, slopes = 0.0;
  for (double v : y) {
    if (v == 0.0) continue;
    const double x = std::min(v / s, 1.0);
    phis += phi(x);
    slopes += x * (1.0 + std::abs(std::log(x)));
  }
  const double err = s * ((l + 3.0) * unit_roundoff * phis + (l + 1.0) * unit_roundoff * slopes);
  return step_up(2.0 * err + 0x1p-1022);
}

double ConditionalSum::upper() const { return step_up(value.upper() + summation_error); }

ConditionalSum sum_conditional(const CellBounds& bounds) {
  ConditionalSum out;
  Summation sum;
  double eval_err = 0.0;
  for (std::size_t j = 0; j < bounds.cells(); ++j) {
    const auto row = bounds.row(j);
    sum.add(f_ell(row));
    eval_err += f_error_bound(row);
  }
  out.cells = bounds.cells();
  out.value = EntropyValue{sum.sum(), step_up(eval_err * (1.0 + 4.0 * static_cast<double>(out.cells) * unit_roundoff))};
  out.summation_error = sum.error_bound();
  out.abs_sum = sum.abs_sum();
  return out;
}

namespace {

std::vector<Interval> partition_cells(const Partition& p) {
  std::vector<Interval> cells;
  cells.reserve(p.cells());
  for (std::size_t j = 0; j < p.cells(); ++j) cells.push_back(p.cell(j));
  return cells;
}

}  // namespace

ConditionalSum conditional_entropy_upper(const IFS1D& ifs, const Partition& partition, const UBConfig& cfg,
                                         int jobs) {
  const auto cells = partition_cells(partition);
  return sum_conditional(cell_bounds(ifs, cells, cfg, jobs));
}

double certified_quotient(const EntropyValue& numerator, const ConditionalSum& conditional,
                          const EntropyValue& lyapunov, double dim_ceiling) {
  const double num = step_down(numerator.lower() - conditional.upper(), 1);
  if (!(num > 0.0)) return 0.0;
  const double q = step_down(num / lyapunov.upper(), 1);
  return std::min(q, dim_ceiling);
}

BoundReport assemble_report(const EntropyValue& numerator, const ConditionalSum& conditional,
                            const EntropyValue& lyapunov, MeasureMode mode) {
  BoundReport r;
  r.numerator_entropy = numerator;
  r.conditional_upper = conditional.value;
  r.lyapunov = lyapunov;
  r.summation_error = conditional.summation_error;
  r.partition_cells = conditional.cells;
  r.measure_mode = mode;
  const double ceiling = std::min(1.0, step_up(numerator.upper() / lyapunov.lower(), 1));
  r.dim_lower = certified_quotient(numerator, conditional, lyapunov, ceiling);
  r.dim_estimate = (numerator.value - conditional.value.value) / lyapunov.value;
  return r;
}

BoundReport dimension_lower_bound(const IFS1D& ifs, int level, MeasureMode mode, const UBConfig& cfg,
                                  const LowerBoundOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  CellBounds bounds;
  if (mode == MeasureMode::algorithm38) {
    const Partition p = generate_partition(ifs, level, opts.endpoint_cap);
    const auto cells = partition_cells(p);
    bounds = cell_bounds(ifs, cells, cfg, opts.jobs);
  } else if (ifs.has_exact_maps()) {
    const auto ex = exact_rational_ifs(ifs);
    bounds = exact_cell_bounds(ex, exact_partition_points(ex, level, opts.endpoint_cap), opts.exact_node_cap);
  } else if (!ifs.minimal_polynomial().empty()) {
    const NumberField field(ifs.minimal_polynomial());
    const auto ex = exact_bernoulli_ifs(field);
    bounds = exact_cell_bounds(ex, exact_partition_points(ex, level, opts.endpoint_cap), opts.exact_node_cap);
  } else {
    throw PreconditionError("exact mode needs rational maps or a minimal polynomial");
  }
  const ConditionalSum cond = sum_conditional(bounds);
  BoundReport r = assemble_report(ifs.weights().entropy(), cond, ifs.lyapunov(), mode);
  r.level = level;
  if (mode == MeasureMode::algorithm38) {
    r.depth = cfg.L;
    r.gamma = cfg.gamma;
  }
  r.regions_processed = bounds.regions_processed;
  r.max_depth = bounds.max_depth;
  r.cap_hit = bounds.cap_hit;
  r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string format15(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

nlohmann::ordered_json to_json(const EntropyValue& v) {
  return {{"value", v.value}, {"abs_error", v.abs_error}};
}

nlohmann::ordered_json to_json(const BoundReport& r) {
  nlohmann::ordered_json j;
  j["dim_lower"] = r.dim_lower;
  j["dim_estimate"] = r.dim_estimate;
  j["numerator_entropy"] = to_json(r.numerator_entropy);
  j["conditional_upper"] = to_json(r.conditional_upper);
  j["lyapunov"] = to_json(r.lyapunov);
  j["summation_error"] = r.summation_error;
  j["partition_cells"] = r.partition_cells;
  j["measure_mode"] = to_string(r.measure_mode);
  j["level"] = r.level;
  if (r.measure_mode == MeasureMode::algorithm38) {
    j["depth"] = r.depth;
    j["gamma"] = r.gamma;
    j["gamma_ulps"] = r.gamma / unit_roundoff;
    j["regions_processed"] = r.regions_processed;
    j["max_depth_reached"] = r.max_depth;
    j["cap_hit"] = r.cap_hit;
  } else {
    j["exact_intervals"] = r.regions_processed;
    j["largest_linear_block"] = r.max_depth;
  }
  return j;
}

std::string csv_header_lower() { return "level,mode,cells,dim_lower,dim_estimate,conditional_upper,summation_error"; }

std::string csv_row(const BoundReport& r) {
  return std::to_string(r.level) + "," + to_string(r.measure_mode) + "," + std::to_string(r.partition_cells) + "," +
         format15(r.dim_lower) + "," + format15(r.dim_estimate) + "," + format15(r.conditional_upper.value) + "," +
         format15(r.summation_error);
}

}  // namespace fracdim
