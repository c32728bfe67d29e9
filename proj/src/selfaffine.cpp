#include "fracdim/selfaffine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

#ifdef FRACDIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace fracdim {

DiagonalIFS2D selfaffine_ifs(double alpha, double beta) {
  if (!(1.0 < alpha && alpha < beta && beta < 2.0)) throw DomainError("need 1 < alpha < beta < 2");
  const IFS1D x = bernoulli_ifs(alpha), y = bernoulli_ifs(beta);
  return DiagonalIFS2D(x.maps(), y.maps(), WeightVector::uniform(2));
}

namespace {

void bound_box(const DiagonalIFS2D& ifs, const Box2D& box, const UBConfig2D& cfg, double* y, CellBounds& stats) {
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    const Interval qx = padded_preimage(ifs.x_maps[i], box.x, cfg.gamma_x, cfg.B.x);
    const Interval qy = qx.is_empty ? Interval::empty() : padded_preimage(ifs.y_maps[i], box.y, cfg.gamma_y, cfg.B.y);
    if (qy.is_empty) {
      y[i] = 0.0;
      continue;
    }
    const UBResult r = measure_upper_bound_2d(ifs, Box2D{qx, qy}, cfg);
    stats.regions_processed += r.regions_processed;
    stats.max_depth = std::max(stats.max_depth, r.depth_reached);
    stats.cap_hit = stats.cap_hit || r.cap_hit;
    const double m = std::min(r.upper_bound, 1.0);
    y[i] = m == 0.0 ? 0.0 : step_up(ifs.weights.upper(i) * m);
  }
}

}  // namespace

CellBounds planar_cell_bounds(const DiagonalIFS2D& ifs, const Partition& xs, const Partition& ys,
                              const UBConfig2D& cfg, int jobs) {
  const std::size_t nx = xs.cells(), ny = ys.cells();
  CellBounds out;
  out.maps = ifs.size();
  out.y.assign(nx * ny * out.maps, 0.0);
  std::vector<CellBounds> stats(nx);
  std::exception_ptr failure;
  auto column = [&](std::size_t a) {
    for (std::size_t b = 0; b < ny; ++b)
      bound_box(ifs, Box2D{xs.cell(a), ys.cell(b)}, cfg, out.y.data() + (a * ny + b) * out.maps, stats[a]);
  };
#ifdef FRACDIM_HAVE_OPENMP
  if (jobs > 1) {
    const auto n = static_cast<std::int64_t>(nx);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
    for (std::int64_t a = 0; a < n; ++a) {
      try {
        column(static_cast<std::size_t>(a));
      } catch (...) {
#pragma omp critical(fracdim_planar_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  } else
#endif
  {
    (void)jobs;
    for (std::size_t a = 0; a < nx; ++a) column(a);
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& s : stats) {
    out.regions_processed += s.regions_processed;
    out.max_depth = std::max(out.max_depth, s.max_depth);
    out.cap_hit = out.cap_hit || s.cap_hit;
  }
  return out;
}

double selfaffine_combination(double alpha, double beta, double h1_upper, double h2_upper) {
  const double la_up = log_up(alpha), lb_down = log_down(beta), lb_up = log_up(beta);
  const double l2 = log_down(2.0);
  // 1/log a - 1/log b > 0 because a < b
  const double coef = step_down(step_down(1.0 / la_up) - step_up(1.0 / lb_down));
  const double h1 = std::max(0.0, step_down(l2 - h1_upper));
  const double h2 = std::max(0.0, step_down(l2 - h2_upper));
  const double first = coef > 0.0 ? step_down(coef * h1) : 0.0;
  const double second = step_down(h2 / lb_up);
  return std::clamp(step_down(first + second), 0.0, 2.0);
}

SelfAffineReport selfaffine_lower_bound(double alpha, double beta, const SelfAffineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  SelfAffineReport r;
  r.alpha = alpha;
  r.beta = beta;
  const IFS1D xa = bernoulli_ifs(alpha);
  const IFS1D yb = bernoulli_ifs(beta);
  const DiagonalIFS2D ifs = selfaffine_ifs(alpha, beta);

  r.axis = conditional_entropy_upper(xa, generate_partition(xa, cfg.N), make_ub_config(xa, cfg.L, cfg.gamma),
                                     cfg.jobs);

  const int level = cfg.grid_level < 0 ? cfg.N : cfg.grid_level;
  const Partition gx = generate_partition(xa, level);
  const Partition gy = generate_partition(yb, level);
  r.grid_cells = gx.cells() * gy.cells();
  if (r.grid_cells > cfg.grid_cap) throw ResourceError("planar grid exceeds the cell cap");
  const UBConfig2D cfg2 = make_ub_config(ifs, cfg.L2 < 0 ? cfg.L : cfg.L2, cfg.gamma, cfg.gamma);
  r.planar = sum_conditional(planar_cell_bounds(ifs, gx, gy, cfg2, cfg.jobs));

  r.dim_lower = selfaffine_combination(alpha, beta, r.axis.upper(), r.planar.upper());
  const double la = std::log(alpha), lb = std::log(beta), l2 = std::log(2.0);
  r.dim_estimate = (1.0 / la - 1.0 / lb) * (l2 - r.axis.value.value) + (l2 - r.planar.value.value) / lb;
  r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<SelfAffineRow> parse_selfaffine_rows(std::istream& in) {
  std::vector<SelfAffineRow> rows;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) {
      const auto b = f.find_first_not_of(" \t\r"), e = f.find_last_not_of(" \t\r");
      fields.push_back(b == std::string::npos ? "" : f.substr(b, e - b + 1));
    }
    if (!header) {
      if (fields != std::vector<std::string>{"alpha", "beta", "N", "L", "grid_level", "grid_depth"})
        throw ParseError("line " + std::to_string(lineno) + ": expected header alpha,beta,N,L,grid_level,grid_depth");
      header = true;
      continue;
    }
    if (fields.size() != 6) throw ParseError("line " + std::to_string(lineno) + ": expected 6 fields");
    SelfAffineRow r;
    try {
      r.alpha = std::stod(fields[0]);
      r.beta = std::stod(fields[1]);
      r.cfg.N = std::stoi(fields[2]);
      r.cfg.L = std::stoi(fields[3]);
      r.cfg.grid_level = std::stoi(fields[4]);
      r.cfg.L2 = std::stoi(fields[5]);
    } catch (const std::logic_error&) {
      throw ParseError("line " + std::to_string(lineno) + ": bad number");
    }
    if (!(1.0 < r.alpha && r.alpha < r.beta && r.beta < 2.0))
      throw ParseError("line " + std::to_string(lineno) + ": need 1 < alpha < beta < 2");
    rows.push_back(r);
  }
  if (!header) throw ParseError("missing header");
  return rows;
}

std::vector<SelfAffineRow> load_selfaffine_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_selfaffine_rows(in);
}

std::string selfaffine_csv_header() { return "alpha,beta,axis_conditional,planar_conditional,dim_lower,dim_estimate"; }

std::string selfaffine_csv_row(const SelfAffineReport& r) {
  return format15(r.alpha) + "," + format15(r.beta) + "," + format15(r.axis.value.value) + "," +
         format15(r.planar.value.value) + "," + format15(r.dim_lower) + "," + format15(r.dim_estimate);
}

}  // namespace fracdim
