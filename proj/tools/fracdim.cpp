// fracdim: certified dimension bounds for self-similar and diagonal
// self-affine measures.
//
// Exit codes: 0 success, 1 usage or input error, 2 resource or precondition
// error, 3 a bound could not be certified.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "fracdim/entropy_bounds.hpp"
#include "fracdim/pisot.hpp"
#include "fracdim/selfaffine.hpp"
#include "fracdim/sweep.hpp"

#ifndef FRACDIM_VERSION
#define FRACDIM_VERSION "0.0.0"
#endif

namespace {

using namespace fracdim;
using json = nlohmann::ordered_json;

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_resource = 2;
constexpr int exit_uncertified = 3;

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

/// Collects the parameters and outputs of one invocation.
class Manifest {
 public:
  explicit Manifest(std::string command) { j_["command"] = std::move(command); }

  json& parameters() { return j_["parameters"]; }

  // Writes `text` to `path`, or to stdout when path is empty, and records its checksum.
  void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
      std::cout << text;
      outputs_.push_back({{"path", "-"}, {"sha256", sha256_hex(text)}});
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    out << text;
    outputs_.push_back({{"path", path}, {"sha256", sha256_hex(text)}});
  }

  void finish(const std::string& path, double elapsed) {
    if (path.empty()) return;
    j_["version"] = FRACDIM_VERSION;
    j_["elapsed_seconds"] = elapsed;
    j_["outputs"] = outputs_;
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << j_.dump(2) << "\n";
  }

 private:
  json j_;
  json outputs_ = json::array();
};

// "7" or "1-6".
std::pair<int, int> parse_level_range(const std::string& text) {
  int a = 0, b = 0;
  char dash = 0;
  std::istringstream in(text);
  if (!(in >> a)) throw CLI::ValidationError("--level", "expected an integer or a range a-b");
  if (in >> dash) {
    if (dash != '-' || !(in >> b)) throw CLI::ValidationError("--level", "expected an integer or a range a-b");
  } else {
    b = a;
  }
  if (a < 0 || b < a) throw CLI::ValidationError("--level", "empty level range");
  return {a, b};
}

std::size_t cell_cap() { return configured_endpoint_cap(); }

struct LowerArgs {
  std::string ifs_file;
  std::string level = "1";
  int depth = 40;
  std::string gamma = "auto";
  std::string mode = "alg38";
  int jobs = 1;
  std::string out;
  std::string csv_out;
};

int cmd_lower(const LowerArgs& a, Manifest& m) {
  const IFS1D ifs = load_ifs(a.ifs_file);
  const auto [n0, n1] = parse_level_range(a.level);
  const MeasureMode mode = parse_measure_mode(a.mode);
  const double gamma = parse_gamma(a.gamma, ifs.maps(), ifs.hull());
  const UBConfig cfg = make_ub_config(ifs, a.depth, gamma);
  m.parameters() = {{"ifs", a.ifs_file}, {"level", a.level},       {"depth", std::to_string(a.depth)},
                    {"gamma", a.gamma},  {"gamma_value", gamma},   {"mode", to_string(mode)},
                    {"jobs", a.jobs}};
  LowerBoundOptions opts;
  opts.jobs = a.jobs;
  opts.endpoint_cap = cell_cap();

  std::string csv = csv_header_lower() + "\n";
  std::string text;
  json reports = json::array();
  for (int n = n0; n <= n1; ++n) {
    const BoundReport r = dimension_lower_bound(ifs, n, mode, cfg, opts);
    csv += csv_row(r) + "\n";
    char line[256];
    std::snprintf(line, sizeof line, "level %d: dim >= %s (estimate %s), |E_n| <= %.4e, %zu cells\n", n,
                  format15(r.dim_lower).c_str(), format15(r.dim_estimate).c_str(), r.summation_error,
                  r.partition_cells);
    text += line;
    reports.push_back(to_json(r));
  }
  m.emit(a.csv_out, csv);
  std::cout << text;
  if (!a.out.empty()) m.emit(a.out, reports.dump(2) + "\n");
  return exit_ok;
}

struct SweepArgs {
  std::string schedule;
  int jobs = 1;
  std::string out;
  std::string plot_out;
  double threshold = default_threshold;
  std::string from, to;
  std::string gamma = "10.2u";
  bool timings = false;
};

int cmd_sweep(const SweepArgs& a, Manifest& m) {
  const auto ranges = load_schedule(a.schedule);
  std::optional<mpq_class> lo, hi;
  if (!a.from.empty()) lo = parse_rational(a.from);
  if (!a.to.empty()) hi = parse_rational(a.to);
  const double gamma = parse_gamma(a.gamma, {}, Interval{0.0, 1.0, false});
  const auto cells = expand_schedule(ranges, lo, hi, gamma);
  m.parameters() = {{"schedule", a.schedule}, {"from", a.from},   {"to", a.to},        {"gamma", a.gamma},
                    {"threshold", a.threshold}, {"jobs", a.jobs}, {"cells", cells.size()}};

  const SweepSummary s = run_schedule(cells, a.jobs, a.threshold);
  std::string csv = sweep_csv_header(a.timings) + "\n";
  std::string plot = "beta,bound\n";
  for (const auto& row : s.rows) {
    csv += sweep_csv_row(row, a.timings) + "\n";
    if (!row.failed) plot += plot_csv_row(row) + "\n";
  }
  m.emit(a.out, csv);
  if (!a.plot_out.empty()) m.emit(a.plot_out, plot);

  if (s.vacuous) {
    std::cout << "vacuous: no cells in range\n";
    return exit_ok;
  }
  const SweepRow& best = s.rows[s.argmin];
  std::cout << "cells: " << s.rows.size() << "\n"
            << "minimum: " << format15(s.minimum) << " on [" << decimal_string(best.cell.beta) << ", "
            << decimal_string(best.cell.beta + best.cell.delta) << "]\n"
            << "threshold: " << format15(s.threshold) << "\n";
  if (s.exceptional.empty()) std::cout << "below threshold: none\n";
  for (const auto& e : s.exceptional)
    std::cout << "below threshold: [" << decimal_string(e.lo) << ", " << decimal_string(e.hi) << "]\n";
  std::size_t failed = 0;
  for (const auto& row : s.rows) {
    if (!row.failed) continue;
    ++failed;
    std::cerr << "uncertified cell at beta = " << decimal_string(row.cell.beta) << ": " << row.error << "\n";
  }
  return failed == 0 ? exit_ok : exit_uncertified;
}

struct PisotArgs {
  std::string family;
  std::string beta;
  std::vector<std::int64_t> minpoly;
  int level = 6;
  int from = 1;
  int jobs = 1;
  std::string out;
};

int cmd_pisot(const PisotArgs& a, Manifest& m) {
  const MatrixFamily fam = load_family(a.family);
  double beta = 0.0;
  if (!a.minpoly.empty()) {
    if (!is_pisot(a.minpoly)) throw PreconditionError("largest root of the polynomial is not a Pisot number");
    beta = bernoulli_ifs(a.minpoly).map(0).inv_slope;
  } else {
    beta = parse_rational(a.beta).get_d();
  }
  if (!(beta > 1.0)) throw PreconditionError("beta must exceed 1");
  if (a.from < 0 || a.level < a.from) throw CLI::ValidationError("--level", "empty level range");
  json mp = json::array();
  for (auto c : a.minpoly) mp.push_back(c);
  m.parameters() = {{"family", a.family}, {"beta", a.beta}, {"minpoly", mp},     {"beta_value", beta},
                    {"from", a.from},     {"level", a.level}, {"jobs", a.jobs}};
  if (fam.rescaled())
    std::cerr << "warning: spectral radius " << format15(fam.original_radius()) << ", matrices rescaled\n";

  const auto seq = entropy_upper_sequence(fam, a.level, a.jobs);
  std::string csv = "n,u_n,dim_upper,cylinders\n";
  for (const auto& v : seq) {
    if (v.n < a.from) continue;
    csv += std::to_string(v.n) + "," + format15(v.u.value) + "," + format15(pisot_dim_upper(v, beta)) + "," +
           std::to_string(v.cylinders) + "\n";
  }
  m.emit(a.out, csv);
  return exit_ok;
}

struct SelfAffineArgs {
  std::string alpha, beta;
  std::string rows;
  int level = 7;
  int depth = 35;
  int grid_level = -1;
  int grid_depth = -1;
  std::string gamma = "10.2u";
  int jobs = 1;
  std::string out;
};

int cmd_selfaffine(const SelfAffineArgs& a, Manifest& m) {
  std::vector<SelfAffineRow> rows;
  if (!a.rows.empty()) {
    rows = load_selfaffine_rows(a.rows);
  } else {
    if (a.alpha.empty() || a.beta.empty()) throw CLI::ValidationError("selfaffine", "need --alpha and --beta, or --rows");
    SelfAffineRow r;
    r.alpha = parse_rational(a.alpha).get_d();
    r.beta = parse_rational(a.beta).get_d();
    r.cfg.N = a.level;
    r.cfg.L = a.depth;
    r.cfg.grid_level = a.grid_level;
    r.cfg.L2 = a.grid_depth;
    rows.push_back(r);
  }
  const double gamma = parse_gamma(a.gamma, {}, Interval{0.0, 1.0, false});
  m.parameters() = {{"rows", a.rows}, {"alpha", a.alpha}, {"beta", a.beta}, {"level", a.level},
                    {"depth", a.depth}, {"grid_level", a.grid_level}, {"grid_depth", a.grid_depth},
                    {"gamma", a.gamma}, {"jobs", a.jobs}};
  std::string csv = selfaffine_csv_header() + "\n";
  for (auto& r : rows) {
    r.cfg.gamma = gamma;
    r.cfg.jobs = a.jobs;
    r.cfg.grid_cap = cell_cap();
    csv += selfaffine_csv_row(selfaffine_lower_bound(r.alpha, r.beta, r.cfg)) + "\n";
  }
  m.emit(a.out, csv);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified dimension bounds for self-similar measures with overlaps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FRACDIM_VERSION);
  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "Write a JSON run manifest here");

  LowerArgs la;
  auto* lower = app.add_subcommand("lower", "Lower bound on the dimension of a self-similar measure");
  lower->add_option("ifs", la.ifs_file, "IFS description file")->required()->check(CLI::ExistingFile);
  lower->add_option("-N,--level", la.level, "Partition level, or a range a-b");
  lower->add_option("-L,--depth", la.depth, "Iteration time of the region refinement")->check(CLI::Range(1, 200));
  lower->add_option("--gamma", la.gamma, "Padding: auto, <k>u, or a decimal");
  lower->add_option("--mode", la.mode, "exact or alg38")->check(CLI::IsMember({"exact", "alg38", "algorithm38"}));
  lower->add_option("--jobs", la.jobs, "Worker threads")->check(CLI::PositiveNumber);
  lower->add_option("--out", la.out, "JSON report path");
  lower->add_option("--csv-out", la.csv_out, "CSV path (default stdout)");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Uniform lower bounds for Bernoulli convolutions over a schedule");
  sweep->add_option("schedule", sa.schedule, "Schedule CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--jobs", sa.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sa.out, "Row CSV path (default stdout)");
  sweep->add_option("--plot-out", sa.plot_out, "Plot CSV of (beta midpoint, bound)");
  sweep->add_option("--threshold", sa.threshold, "Report cells whose bound is below this");
  sweep->add_option("--from", sa.from, "Keep cells with beta >= this decimal");
  sweep->add_option("--to", sa.to, "Keep cells with beta + delta <= this decimal");
  sweep->add_option("--gamma", sa.gamma, "Padding: <k>u or a decimal");
  sweep->add_flag("--timings", sa.timings, "Add an elapsed_seconds column");

  PisotArgs pa;
  auto* pisot = app.add_subcommand("pisot", "Upper bounds from a matrix family");
  pisot->add_option("family", pa.family, "Family file")->required()->check(CLI::ExistingFile);
  auto* beta_opt = pisot->add_option("--beta", pa.beta, "Parameter as a decimal");
  auto* poly_opt = pisot->add_option("--minpoly", pa.minpoly, "Monic minimal polynomial, highest degree first");
  beta_opt->excludes(poly_opt);
  pisot->add_option("-N,--level", pa.level, "Largest n")->check(CLI::Range(0, 64));
  pisot->add_option("--from", pa.from, "Smallest n printed");
  pisot->add_option("--jobs", pa.jobs, "Worker threads")->check(CLI::PositiveNumber);
  pisot->add_option("--out", pa.out, "CSV path (default stdout)");

  SelfAffineArgs fa;
  auto* affine = app.add_subcommand("selfaffine", "Lower bound for a diagonal planar self-affine measure");
  affine->add_option("--alpha", fa.alpha, "Horizontal parameter");
  affine->add_option("--beta", fa.beta, "Vertical parameter");
  affine->add_option("--rows", fa.rows, "CSV of rows alpha,beta,N,L,grid_level,grid_depth")->check(CLI::ExistingFile);
  affine->add_option("-N,--level", fa.level, "Level of the horizontal partition");
  affine->add_option("-L,--depth", fa.depth, "Iteration time");
  affine->add_option("--grid-level", fa.grid_level, "Level of the planar grid (default: --level)");
  affine->add_option("--grid-depth", fa.grid_depth, "Iteration time of planar queries (default: --depth)");
  affine->add_option("--gamma", fa.gamma, "Padding: <k>u or a decimal");
  affine->add_option("--jobs", fa.jobs, "Worker threads")->check(CLI::PositiveNumber);
  affine->add_option("--out", fa.out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_usage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const std::string name = app.get_subcommands().front()->get_name();
  Manifest manifest(name);
  int code = exit_ok;
  try {
    if (*lower)
      code = cmd_lower(la, manifest);
    else if (*sweep)
      code = cmd_sweep(sa, manifest);
    else if (*pisot) {
      if (pa.beta.empty() && pa.minpoly.empty()) throw CLI::ValidationError("pisot", "need --beta or --minpoly");
      code = cmd_pisot(pa, manifest);
    } else
      code = cmd_selfaffine(fa, manifest);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return exit_resource;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_resource;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_resource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_uncertified;
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.finish(manifest_path, elapsed);
  return code;
}
