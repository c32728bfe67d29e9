#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "fracdim/core_math.hpp"
#include "fracdim/exact_field.hpp"
#include "fracdim/ifs.hpp"

namespace fracdim {

class NotFinitelyResolvable : public ResourceError {
 public:
  using ResourceError::ResourceError;
};

class SingularSystem : public DomainError {
 public:
  using DomainError::DomainError;
};

/// IFS with exact coefficients in a scalar ring S (mpq_class, or
/// AlgebraicInteger for a Pisot unit). S_i(x) = ratio_i x + offset_i.
template <class S>
struct ExactIFS {
  std::vector<S> ratio, offset;
  std::vector<S> inv_slope, inv_offset;
  std::vector<mpq_class> weights;
  S hull_lo, hull_hi;

  std::size_t size() const { return ratio.size(); }
  S apply(std::size_t i, const S& x) const { return ratio[i] * x + offset[i]; }
  S apply_inverse(std::size_t i, const S& y) const { return inv_slope[i] * y + inv_offset[i]; }
};

// Requires every map to carry its exact rational form.
ExactIFS<mpq_class> exact_rational_ifs(const IFS1D& ifs);

// {x/beta, x/beta + 1 - 1/beta} with weights (1/2, 1/2) over Z[beta]. The
// field must outlive the result.
ExactIFS<AlgebraicInteger> exact_bernoulli_ifs(const NumberField& field);

template <class S>
struct ExactInterval {
  S lo, hi;
  friend bool operator==(const ExactInterval& a, const ExactInterval& b) { return a.lo == b.lo && a.hi == b.hi; }
};

/// Solves mu(J) = sum_i p_i mu(S_i^-1 J cap hull) with mu(hull) = 1 and
/// mu(empty) = mu(point) = 0 (the measure has no atoms) over the finite
/// family reachable from a query. Reachable intervals are explored lazily,
/// split into strongly connected components and each component is solved by
/// exact sparse elimination once all components it depends on are known.
/// Results are memoized across queries.
template <class S>
class ExactMeasureSolver {
 public:
  explicit ExactMeasureSolver(ExactIFS<S> ifs, std::size_t node_cap = 4'000'000)
      : ifs_(std::move(ifs)), node_cap_(node_cap) {}

  const ExactIFS<S>& ifs() const { return ifs_; }

  // mu(J cap hull) for J = [lo, hi].
  mpq_class measure(const S& lo, const S& hi);
  // mu(S_i^-1 J cap hull).
  mpq_class preimage_measure(std::size_t i, const S& lo, const S& hi) {
    S a = ifs_.apply_inverse(i, lo), b = ifs_.apply_inverse(i, hi);
    if (b < a) std::swap(a, b);
    return measure(a, b);
  }

  std::size_t nodes() const { return nodes_.size(); }
  std::size_t largest_component() const { return largest_scc_; }
  // Every interval of the explored closure with its measure, led by the hull.
  std::vector<std::pair<ExactInterval<S>, mpq_class>> closure() const;

 private:
  static constexpr std::int64_t kZero = -1;
  static constexpr std::int64_t kOne = -2;

  struct Node {
    ExactInterval<S> iv;
    std::vector<std::int64_t> kids;
    mpq_class value;
    bool solved = false;
    bool expanded = false;
    std::int64_t index = -1;
    std::int64_t low = -1;
    bool on_stack = false;
  };

  struct KeyHash {
    std::size_t operator()(const ExactInterval<S>& k) const {
      const std::size_t a = hash_value(k.lo), b = hash_value(k.hi);
      return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    }
  };

  std::int64_t canonical(S lo, S hi);
  void expand(std::int64_t id);
  void solve_component(const std::vector<std::int64_t>& comp);
  const mpq_class& value_of(std::int64_t ref) const;
  void rollback(std::size_t keep);

  ExactIFS<S> ifs_;
  std::size_t node_cap_;
  std::vector<Node> nodes_;
  std::unordered_map<ExactInterval<S>, std::int64_t, KeyHash> ids_;
  std::size_t largest_scc_ = 0;
  mpq_class zero_ = 0, one_ = 1;
};

template <class S>
std::int64_t ExactMeasureSolver<S>::canonical(S lo, S hi) {
  if (lo < ifs_.hull_lo) lo = ifs_.hull_lo;
  if (hi > ifs_.hull_hi) hi = ifs_.hull_hi;
  if (!(lo < hi)) return kZero;  // empty or a single point
  if (lo == ifs_.hull_lo && hi == ifs_.hull_hi) return kOne;
  ExactInterval<S> key{lo, hi};
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  if (nodes_.size() >= node_cap_) throw NotFinitelyResolvable("interval family did not close within the node cap");
  const auto id = static_cast<std::int64_t>(nodes_.size());
  nodes_.push_back(Node{key, {}, 0, false, false, -1, -1, false});
  ids_.emplace(std::move(key), id);
  return id;
}

template <class S>
void ExactMeasureSolver<S>::expand(std::int64_t id) {
  std::vector<std::int64_t> kids;
  kids.reserve(ifs_.size());
  for (std::size_t i = 0; i < ifs_.size(); ++i) {
    const ExactInterval<S> iv = nodes_[id].iv;  // copy: canonical may reallocate
    S a = ifs_.apply_inverse(i, iv.lo), b = ifs_.apply_inverse(i, iv.hi);
    if (b < a) std::swap(a, b);
    kids.push_back(canonical(std::move(a), std::move(b)));
  }
  nodes_[id].kids = std::move(kids);
  nodes_[id].expanded = true;
}

template <class S>
const mpq_class& ExactMeasureSolver<S>::value_of(std::int64_t ref) const {
  if (ref == kZero) return zero_;
  if (ref == kOne) return one_;
  return nodes_[ref].value;
}

template <class S>
void ExactMeasureSolver<S>::rollback(std::size_t keep) {
  for (std::size_t j = keep; j < nodes_.size(); ++j) ids_.erase(nodes_[j].iv);
  nodes_.resize(keep);
}

template <class S>
mpq_class ExactMeasureSolver<S>::measure(const S& lo, const S& hi) {
  const std::size_t keep = nodes_.size();
  try {
    const std::int64_t root = canonical(lo, hi);
    if (root < 0 || nodes_[root].solved) return value_of(root);

    // Iterative Tarjan over unsolved nodes; solved nodes act as constants.
    std::int64_t counter = 0;
    std::vector<std::pair<std::int64_t, std::size_t>> call{{root, 0}};
    std::vector<std::int64_t> stack;
    nodes_[root].index = nodes_[root].low = counter++;
    nodes_[root].on_stack = true;
    stack.push_back(root);
    while (!call.empty()) {
      auto& [v, next] = call.back();
      if (!nodes_[v].expanded) expand(v);
      if (next < nodes_[v].kids.size()) {
        const std::int64_t w = nodes_[v].kids[next++];
        if (w < 0 || nodes_[w].solved) continue;
        if (nodes_[w].index < 0) {
          nodes_[w].index = nodes_[w].low = counter++;
          nodes_[w].on_stack = true;
          stack.push_back(w);
          call.emplace_back(w, 0);
        } else if (nodes_[w].on_stack) {
          nodes_[v].low = std::min(nodes_[v].low, nodes_[w].index);
        }
        continue;
      }
      const std::int64_t done = v;
      call.pop_back();
      if (!call.empty()) {
        const std::int64_t parent = call.back().first;
        nodes_[parent].low = std::min(nodes_[parent].low, nodes_[done].low);
      }
      if (nodes_[done].low == nodes_[done].index) {
        std::vector<std::int64_t> comp;
        std::int64_t w;
        do {
          w = stack.back();
          stack.pop_back();
          nodes_[w].on_stack = false;
          comp.push_back(w);
        } while (w != done);
        solve_component(comp);
      }
    }
    return nodes_[root].value;
  } catch (...) {
    rollback(keep);
    throw;
  }
}

template <class S>
void ExactMeasureSolver<S>::solve_component(const std::vector<std::int64_t>& comp) {
  largest_scc_ = std::max(largest_scc_, comp.size());
  const auto& p = ifs_.weights;
  if (comp.size() == 1) {
    Node& nd = nodes_[comp[0]];
    mpq_class self = 0, rhs = 0;
    for (std::size_t i = 0; i < nd.kids.size(); ++i) {
      if (nd.kids[i] == comp[0]) self += p[i];
      else rhs += p[i] * value_of(nd.kids[i]);
    }
    const mpq_class diag = 1 - self;
    if (diag == 0) throw SingularSystem("self-similarity system is singular");
    nd.value = rhs / diag;
    nd.solved = true;
    return;
  }
  // Sparse rows: x_v - sum_{w in comp} p_i x_w = sum_{w outside} p_i mu(w).
  std::unordered_map<std::int64_t, std::size_t> local;
  for (std::size_t k = 0; k < comp.size(); ++k) local.emplace(comp[k], k);
  const std::size_t n = comp.size();
  std::vector<std::map<std::size_t, mpq_class>> rows(n);
  std::vector<mpq_class> rhs(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const Node& nd = nodes_[comp[k]];
    rows[k][k] += 1;
    for (std::size_t i = 0; i < nd.kids.size(); ++i) {
      const std::int64_t w = nd.kids[i];
      if (auto it = (w >= 0 ? local.find(w) : local.end()); it != local.end()) rows[k][it->second] -= p[i];
      else rhs[k] += p[i] * value_of(w);
    }
    for (auto it = rows[k].begin(); it != rows[k].end();) it = it->second == 0 ? rows[k].erase(it) : std::next(it);
  }
  // Column occupancy for elimination.
  std::vector<std::vector<std::size_t>> col_rows(n);
  for (std::size_t r = 0; r < n; ++r)
    for (const auto& [c, v] : rows[r]) col_rows[c].push_back(r);
  std::vector<bool> used(n, false);
  std::vector<std::size_t> pivot_row(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t best = n;
    for (std::size_t r : col_rows[c]) {
      if (used[r]) continue;
      auto it = rows[r].find(c);
      if (it == rows[r].end()) continue;
      if (best == n || rows[r].size() < rows[best].size()) best = r;
    }
    if (best == n) throw SingularSystem("self-similarity system is singular");
    used[best] = true;
    pivot_row[c] = best;
    const mpq_class piv = rows[best][c];
    for (auto& [cc, v] : rows[best]) v /= piv;
    rhs[best] /= piv;
    for (std::size_t r : col_rows[c]) {
      if (r == best) continue;
      auto it = rows[r].find(c);
      if (it == rows[r].end()) continue;
      const mpq_class factor = it->second;
      for (const auto& [cc, v] : rows[best]) {
        auto [slot, inserted] = rows[r].try_emplace(cc, 0);
        slot->second -= factor * v;
        if (inserted) col_rows[cc].push_back(r);
        if (slot->second == 0) rows[r].erase(slot);
      }
      rhs[r] -= factor * rhs[best];
    }
  }
  // Full Gauss-Jordan: each pivot row now holds only its own column.
  for (std::size_t c = 0; c < n; ++c) {
    Node& nd = nodes_[comp[c]];
    nd.value = rhs[pivot_row[c]];
    nd.solved = true;
  }
}

template <class S>
std::vector<std::pair<ExactInterval<S>, mpq_class>> ExactMeasureSolver<S>::closure() const {
  std::vector<std::pair<ExactInterval<S>, mpq_class>> out;
  out.reserve(nodes_.size() + 1);
  out.emplace_back(ExactInterval<S>{ifs_.hull_lo, ifs_.hull_hi}, mpq_class(1));
  for (const auto& nd : nodes_)
    if (nd.solved) out.emplace_back(nd.iv, nd.value);
  return out;
}

// Exact measures of the seeds' closure; throws NotFinitelyResolvable when the
// reachable family exceeds the cap.
template <class S>
std::vector<std::pair<ExactInterval<S>, mpq_class>> exact_cylinder_measures(
    const ExactIFS<S>& ifs, const std::vector<ExactInterval<S>>& seeds, std::size_t node_cap = 4'000'000) {
  ExactMeasureSolver<S> solver(ifs, node_cap);
  for (const auto& s : seeds) solver.measure(s.lo, s.hi);
  return solver.closure();
}

// Sorted, deduplicated breakpoints {S_I(c), S_I(d) : |I| = level}.
template <class S>
std::vector<S> exact_partition_points(const ExactIFS<S>& ifs, int level,
                                      std::size_t endpoint_cap = default_endpoint_cap) {
  if (level < 1) throw DomainError("partition level must be >= 1");
  const double words = std::pow(static_cast<double>(ifs.size()), level);
  if (2.0 * words > static_cast<double>(endpoint_cap))
    throw ResourceError("partition level exceeds the endpoint cap");
  std::vector<S> points{ifs.hull_lo, ifs.hull_hi}, next;
  for (int n = 0; n < level; ++n) {
    next.clear();
    for (std::size_t i = 0; i < ifs.size(); ++i)
      for (const auto& x : points) next.push_back(ifs.apply(i, x));
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    points.swap(next);
  }
  return points;
}

}  // namespace fracdim
