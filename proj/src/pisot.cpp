#include "fracdim/pisot.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include "fracdim/entropy_bounds.hpp"

#ifdef FRACDIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace fracdim {

SparseMatrix::SparseMatrix(std::size_t d, std::vector<MatrixEntry> entries) : d_(d), exact_(std::move(entries)) {
  std::sort(exact_.begin(), exact_.end(),
            [](const MatrixEntry& a, const MatrixEntry& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
  for (std::size_t j = 0; j < exact_.size(); ++j) {
    const auto& e = exact_[j];
    if (e.row >= d || e.col >= d) throw DomainError("matrix entry index out of range");
    if (e.value < 0) throw DomainError("matrix entries must be nonnegative");
    if (j > 0 && exact_[j - 1].row == e.row && exact_[j - 1].col == e.col)
      throw DomainError("duplicate matrix entry");
  }
  std::erase_if(exact_, [](const MatrixEntry& e) { return e.value == 0; });
  row_start_.assign(d + 1, 0);
  for (const auto& e : exact_) ++row_start_[e.row + 1];
  std::partial_sum(row_start_.begin(), row_start_.end(), row_start_.begin());
  for (const auto& e : exact_) {
    cols_.push_back(e.col);
    values_.push_back(to_double_nearest(e.value));
  }
}

void SparseMatrix::left_multiply(std::span<const double> x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < d_; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t j = row_start_[r]; j < row_start_[r + 1]; ++j) out[cols_[j]] += xr * values_[j];
  }
}

void SparseMatrix::right_multiply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t r = 0; r < d_; ++r) {
    double acc = 0.0;
    for (std::size_t j = row_start_[r]; j < row_start_[r + 1]; ++j) acc += values_[j] * x[cols_[j]];
    out[r] = acc;
  }
}

void SparseMatrix::scale(double s) {
  for (auto& v : values_) v *= s;
}

namespace {

// Binary64 compressed-row matrix used for H = sum A_i and its transpose.
struct Csr {
  std::size_t d = 0;
  std::vector<std::size_t> start;
  std::vector<std::size_t> cols;
  std::vector<double> vals;

  void right_multiply(std::span<const double> x, std::span<double> out) const {
    for (std::size_t r = 0; r < d; ++r) {
      double acc = 0.0;
      for (std::size_t j = start[r]; j < start[r + 1]; ++j) acc += vals[j] * x[cols[j]];
      out[r] = acc;
    }
  }
};

Csr sum_matrix(std::size_t d, const std::vector<SparseMatrix>& mats, bool transposed) {
  std::map<std::pair<std::size_t, std::size_t>, double> acc;
  for (const auto& m : mats)
    m.for_each([&](std::size_t r, std::size_t c, double v) {
      acc[transposed ? std::make_pair(c, r) : std::make_pair(r, c)] += v;
    });
  Csr h;
  h.d = d;
  h.start.assign(d + 1, 0);
  for (const auto& [rc, v] : acc) {
    ++h.start[rc.first + 1];
    h.cols.push_back(rc.second);
    h.vals.push_back(v);
  }
  std::partial_sum(h.start.begin(), h.start.end(), h.start.begin());
  return h;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct PowerResult {
  std::vector<double> v;
  double lambda = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
};

PowerResult power_iteration(const Csr& H, double tol, std::size_t max_iterations) {
  const std::size_t d = H.d;
  std::vector<double> x(d, 1.0), hx(d);
  PowerResult best;
  best.residual = INFINITY;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    H.right_multiply(x, hx);
    const double lambda = dot(x, hx) / dot(x, x);
    double res = 0.0;
    for (std::size_t i = 0; i < d; ++i) res = std::max(res, std::abs(hx[i] - lambda * x[i]));
    res /= max_abs(x) * std::max(1.0, std::abs(lambda));
    if (res < best.residual) best = PowerResult{x, lambda, res, it};
    if (res < tol) break;
    // The unit shift makes a periodic irreducible H converge.
    for (std::size_t i = 0; i < d; ++i) x[i] += hx[i];
    const double m = max_abs(x);
    if (!(m > 0.0)) throw DomainError("power iteration collapsed to zero");
    for (auto& v : x) v /= m;
  }
  if (!(best.residual < tol))
    throw ResourceError("Perron iteration did not reach residual " + format15(tol) + "; best " +
                        format15(best.residual) + ", retry with a looser tolerance");
  return best;
}

}  // namespace

bool is_irreducible(std::size_t d, const std::vector<SparseMatrix>& matrices) {
  if (d == 0) return false;
  auto reach_all = [&](bool transposed) {
    const Csr m = sum_matrix(d, matrices, transposed);
    std::vector<std::vector<std::size_t>> adj(d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t j = m.start[r]; j < m.start[r + 1]; ++j) adj[r].push_back(m.cols[j]);
    std::vector<char> seen(d, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach_all(false) && reach_all(true);
}

PerronData perron(std::size_t d, const std::vector<SparseMatrix>& matrices, double tol, std::size_t max_iterations) {
  const PowerResult right = power_iteration(sum_matrix(d, matrices, false), tol, max_iterations);
  const PowerResult left = power_iteration(sum_matrix(d, matrices, true), tol, max_iterations);
  PerronData p;
  p.lambda = right.lambda;
  p.v_right = right.v;
  p.v_left = left.v;
  for (double v : p.v_right)
    if (!(v > 0.0)) throw DomainError("Perron vector is not strictly positive");
  for (double v : p.v_left)
    if (!(v > 0.0)) throw DomainError("Perron vector is not strictly positive");
  const double s = dot(p.v_left, p.v_right);
  for (auto& v : p.v_left) v /= s;
  p.residual = std::max(right.residual, left.residual);
  p.iterations = right.iterations + left.iterations;
  return p;
}

MatrixFamily::MatrixFamily(std::size_t d, std::vector<SparseMatrix> matrices, double radius_tol)
    : d_(d), mats_(std::move(matrices)) {
  if (mats_.size() < 1 || d_ < 1) throw DomainError("family needs k >= 1 and d >= 1");
  for (const auto& m : mats_)
    if (m.dim() != d_) throw DomainError("matrix dimensions disagree");
  if (!is_irreducible(d_, mats_)) throw ReducibleFamily("reducible H: the Gibbs measure is not defined");
  perron_ = fracdim::perron(d_, mats_);
  original_radius_ = perron_.lambda;
  if (std::abs(perron_.lambda - 1.0) > radius_tol) {
    for (auto& m : mats_) m.scale(1.0 / perron_.lambda);
    rescaled_ = true;
    perron_ = fracdim::perron(d_, mats_);
  }
}

MatrixFamily parse_family(std::istream& in) {
  std::string line;
  int lineno = 0;
  std::size_t k = 0, d = 0;
  bool header = false;
  std::vector<std::vector<MatrixEntry>> entries;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    auto index = [&](const std::string& s, std::size_t hi) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(s, &used);
      } catch (const std::exception&) {
        throw ParseError(where + "bad index " + s);
      }
      if (used != s.size() || v < 1 || v > hi) throw ParseError(where + "index out of range: " + s);
      return static_cast<std::size_t>(v - 1);
    };
    if (!header) {
      if (tok.size() != 2) throw ParseError(where + "expected header `k d`");
      k = index(tok[0], 1u << 20) + 1;
      d = index(tok[1], 1u << 24) + 1;
      entries.resize(k);
      header = true;
      continue;
    }
    if (tok.size() != 4) throw ParseError(where + "expected `matrix row col value`");
    const std::size_t m = index(tok[0], k), r = index(tok[1], d), c = index(tok[2], d);
    mpq_class v;
    try {
      v = parse_rational(tok[3]);
    } catch (const ParseError& e) {
      throw ParseError(where + e.what());
    }
    if (v < 0) throw ParseError(where + "negative entry");
    entries[m].push_back({r, c, v});
  }
  if (!header) throw ParseError("empty family file");
  std::vector<SparseMatrix> mats;
  try {
    for (auto& e : entries) mats.emplace_back(d, std::move(e));
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
  return MatrixFamily(d, std::move(mats));
}

MatrixFamily load_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open family file: " + path);
  return parse_family(in);
}

void write_family(std::ostream& out, const MatrixFamily& family) {
  out << family.k() << ' ' << family.d() << '\n';
  for (std::size_t m = 0; m < family.k(); ++m)
    for (const auto& e : family.matrix(m).entries())
      out << m + 1 << ' ' << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value.get_str() << '\n';
}

double eta_cylinder(const MatrixFamily& family, std::span<const std::size_t> word) {
  const std::size_t d = family.d();
  std::vector<double> w = family.perron().v_left, next(d);
  for (std::size_t s : word) {
    if (s >= family.k()) throw DomainError("cylinder symbol out of range");
    family.matrix(s).left_multiply(w, next);
    w.swap(next);
  }
  return dot(w, family.perron().v_right);
}

namespace {

struct DepthSums {
  std::vector<Summation> sums;   // index m: terms f(children of |J| = m)
  std::vector<double> eval_err;
  std::vector<std::uint64_t> nodes;  // nonzero cylinders of length m
  std::uint64_t visited = 0;
};

// Depth-first over prefixes below a fixed first symbol. Buffers hold the
// k children row vectors for every depth.
class CylinderWalker {
 public:
  CylinderWalker(const MatrixFamily& f, int n, std::uint64_t cap)
      : f_(f), n_(n), cap_(cap), d_(f.d()), k_(f.k()),
        buf_(static_cast<std::size_t>(n + 1) * f.k() * f.d()), mass_(static_cast<std::size_t>(n + 1) * f.k()) {
    const double r = f.perron().residual;
    rel_.resize(static_cast<std::size_t>(n) + 2);
    for (int m = 0; m <= n + 1; ++m)
      rel_[m] = (m + 2.0) * (static_cast<double>(d_) + 2.0) * unit_roundoff + 2.0 * (m + 1.0) * r;
  }

  // Processes the node with row vector w at depth m (|J| = m).
  void visit(std::span<const double> w, int m, DepthSums& out) {
    if (++out.visited > cap_) throw ResourceError("cylinder enumeration cap exceeded");
    ++out.nodes[m];
    double* kids = buf_.data() + static_cast<std::size_t>(m) * k_ * d_;
    double* masses = mass_.data() + static_cast<std::size_t>(m) * k_;
    for (std::size_t j = 0; j < k_; ++j) {
      std::span<double> kid(kids + j * d_, d_);
      f_.matrix(j).left_multiply(w, kid);
      masses[j] = dot(kid, f_.perron().v_right);
    }
    record(std::span<const double>(masses, k_), m, out);
    if (m < n_)
      for (std::size_t j = 0; j < k_; ++j)
        if (masses[j] > 0.0) visit(std::span<const double>(kids + j * d_, d_), m + 1, out);
  }

  void record(std::span<const double> masses, int m, DepthSums& out) const {
    if (k_ == 1) {
      out.sums[m].add(0.0);
      return;
    }
    const double fv = f_ell(masses);
    out.sums[m].add(fv);
    out.eval_err[m] += f_error_bound(masses) + rel_[m + 1] * fv;
  }

  // Root-level children (first symbols).
  std::vector<double> first_masses(std::vector<std::vector<double>>& rows) const {
    std::vector<double> masses(k_);
    rows.assign(k_, std::vector<double>(d_));
    for (std::size_t j = 0; j < k_; ++j) {
      f_.matrix(j).left_multiply(f_.perron().v_left, rows[j]);
      masses[j] = dot(rows[j], f_.perron().v_right);
    }
    return masses;
  }

 private:
  const MatrixFamily& f_;
  int n_;
  std::uint64_t cap_;
  std::size_t d_, k_;
  std::vector<double> buf_, mass_, rel_;
};

double f_error_from(std::span<const double> masses) {
  double s = 0.0;
  for (double v : masses) s += v;
  return s == 0.0 ? 0.0 : step_up(2.0 * static_cast<double>(masses.size()) * unit_roundoff * s);
}

}  // namespace

std::vector<EntropySequenceValue> entropy_upper_sequence(const MatrixFamily& family, int n, int jobs,
                                                         std::uint64_t cylinder_cap) {
  if (n < 0) throw DomainError("sequence length must be nonnegative");
  const std::size_t k = family.k();
  const std::size_t levels = static_cast<std::size_t>(n) + 1;
  std::vector<std::vector<double>> rows;
  CylinderWalker root(family, std::max(n, 0), cylinder_cap);
  const std::vector<double> masses = root.first_masses(rows);

  // Subtree of first symbol j covers prefixes of length 1..n starting with j.
  std::vector<DepthSums> parts(k);
  for (auto& p : parts) {
    p.sums.resize(levels);
    p.eval_err.assign(levels, 0.0);
    p.nodes.assign(levels, 0);
  }
  std::exception_ptr failure;
  const std::uint64_t per_cap = cylinder_cap;
  auto run = [&](std::size_t j) {
    if (n < 1 || !(masses[j] > 0.0)) return;
    CylinderWalker walker(family, n, per_cap);
    walker.visit(rows[j], 1, parts[j]);
  };
#ifdef FRACDIM_HAVE_OPENMP
  if (jobs > 1) {
    const auto kk = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
    for (std::int64_t j = 0; j < kk; ++j) {
      try {
        run(static_cast<std::size_t>(j));
      } catch (...) {
#pragma omp critical(fracdim_pisot_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  } else
#endif
  {
    (void)jobs;
    for (std::size_t j = 0; j < k; ++j) run(j);
  }
  if (failure) std::rethrow_exception(failure);

  std::uint64_t total = 0;
  for (const auto& p : parts) total += p.visited;
  if (total > cylinder_cap) throw ResourceError("cylinder enumeration cap exceeded");

  std::vector<EntropySequenceValue> out;
  // m = 0: u_0 = H of the first-symbol distribution.
  {
    EntropySequenceValue v;
    v.n = 0;
    v.u.value = k == 1 ? 0.0 : f_ell(masses);
    v.u.abs_error = k == 1 ? 0.0 : step_up(f_error_bound(masses) + f_error_from(masses));
    v.cylinders = 1;
    out.push_back(v);
  }
  for (int m = 1; m <= n; ++m) {
    Summation outer;
    double err = 0.0;
    std::uint64_t nodes = 0;
    for (const auto& p : parts) {
      outer.add(p.sums[m].sum());
      err += p.sums[m].error_bound() + p.eval_err[m];
      nodes += p.nodes[m];
    }
    EntropySequenceValue v;
    v.n = m;
    v.u.value = outer.sum();
    v.u.abs_error = step_up(err + outer.error_bound(), 2);
    v.cylinders = nodes;
    out.push_back(v);
  }
  return out;
}

EntropySequenceValue entropy_upper_seq(const MatrixFamily& family, int n, int jobs, std::uint64_t cylinder_cap) {
  return entropy_upper_sequence(family, n, jobs, cylinder_cap).back();
}

CylinderSums cylinder_sums(const MatrixFamily& family, int n) {
  const std::size_t d = family.d(), k = family.k();
  CylinderSums out;
  struct Frame {
    std::vector<double> w;
    int depth;
  };
  std::vector<Frame> stack{{family.perron().v_left, 0}};
  std::vector<double> next(d);
  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    if (fr.depth == n) {
      const double m = dot(fr.w, family.perron().v_right);
      out.mass += m;
      out.entropy += phi(std::min(m, 1.0));
      continue;
    }
    for (std::size_t j = k; j-- > 0;) {
      family.matrix(j).left_multiply(fr.w, next);
      if (max_abs(next) == 0.0) continue;
      stack.push_back({next, fr.depth + 1});
    }
  }
  return out;
}

double pressure_estimate(const MatrixFamily& family, double q, int n, std::uint64_t cylinder_cap) {
  if (n < 1) throw DomainError("pressure needs n >= 1");
  if (!(q > 0.0)) throw DomainError("pressure needs q > 0");
  const std::size_t d = family.d(), k = family.k();
  // x_I = A_I 1; prepending a symbol multiplies on the left, and the
  // max-row-sum norm of A_I is the largest entry of x_I.
  struct Frame {
    std::vector<double> x;
    int depth;
  };
  std::vector<Frame> stack{{std::vector<double>(d, 1.0), 0}};
  std::vector<double> next(d);
  double total = 0.0;
  std::uint64_t visited = 0;
  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    if (++visited > cylinder_cap) throw ResourceError("pressure enumeration cap exceeded");
    if (fr.depth == n) {
      total += std::pow(max_abs(fr.x), q);
      continue;
    }
    for (std::size_t j = k; j-- > 0;) {
      family.matrix(j).right_multiply(fr.x, next);
      if (max_abs(next) == 0.0) continue;
      stack.push_back({next, fr.depth + 1});
    }
  }
  if (!(total > 0.0)) throw DomainError("all products of this length vanish");
  return std::log(total) / n;
}

double pisot_dim_upper(const EntropySequenceValue& u, double beta) {
  if (!(beta > 1.0)) throw DomainError("beta must exceed 1");
  return step_up(u.u.upper() / log_down(beta));
}

double pisot_dim_upper(const MatrixFamily& family, double beta, int n, int jobs) {
  return pisot_dim_upper(entropy_upper_seq(family, n, jobs), beta);
}

bool is_pisot(const std::vector<std::int64_t>& p) {
  if (p.size() < 2 || p[0] != 1) throw DomainError("expected a monic polynomial");
  const std::size_t deg = p.size() - 1;
  using C = std::complex<double>;
  auto eval = [&](C z) {
    C acc = 1.0;
    for (std::size_t j = 1; j <= deg; ++j) acc = acc * z + static_cast<double>(p[j]);
    return acc;
  };
  std::vector<C> roots(deg);
  const C seed(0.4, 0.9);
  for (std::size_t i = 0; i < deg; ++i) roots[i] = std::pow(seed, static_cast<double>(i));
  for (int it = 0; it < 2000; ++it) {
    double move = 0.0;
    for (std::size_t i = 0; i < deg; ++i) {
      C den = 1.0;
      for (std::size_t j = 0; j < deg; ++j)
        if (j != i) den *= roots[i] - roots[j];
      const C step = eval(roots[i]) / den;
      roots[i] -= step;
      move = std::max(move, std::abs(step));
    }
    if (move < 1e-15) break;
  }
  std::sort(roots.begin(), roots.end(), [](C a, C b) { return std::abs(a) > std::abs(b); });
  const C top = roots.front();
  if (!(std::abs(top.imag()) < 1e-9 && top.real() > 1.0)) return false;
  for (std::size_t i = 1; i < deg; ++i)
    if (!(std::abs(roots[i]) < 1.0 - 1e-9)) return false;
  return true;
}

}  // namespace fracdim
