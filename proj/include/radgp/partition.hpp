#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "radgp/error.hpp"
#include "radgp/geometry.hpp"
#include "radgp/rng.hpp"

namespace radgp {

// Disjoint grouping D_1..D_M of location indices so that any two members of
// the same subset are at least rho apart. Subsets store ascending indices.
struct AlternatingPartition {
  std::vector<std::vector<int>> subsets;
  std::vector<int> subset_of;  // subset index per location, -1 if unassigned
  std::vector<int> call_of;    // which extension call assigned each location
  double rho = 0.0;
  std::uint64_t seed = 0;
  // per extension call: [first candidate subset, M after] — subsets below the
  // first candidate index are never touched by later extensions
  std::vector<std::pair<int, int>> source_boundaries;

  int M() const { return static_cast<int>(subsets.size()); }

  std::size_t assigned_count() const {
    std::size_t n = 0;
    for (const auto& s : subsets) n += s.size();
    return n;
  }
};

struct PartitionReport {
  // pairs (i, j) sharing a subset with distance < rho; empty for a valid partition
  std::vector<std::pair<int, int>> violations;
  int M = 0;
  std::int64_t subset_count_bound = 0;  // sum over extension calls of sup_s |U(s,rho) ∩ T_k|
  bool subset_count_ok = false;
  bool valid() const { return violations.empty(); }
};

namespace detail {

// lowest-indexed candidate subset not disqualified by an assigned neighbor
// within rho; creates a new subset when all candidates are blocked
inline void assign_point(int x, int candidate_start, const std::vector<int>& neighbors,
                         AlternatingPartition& p) {
  std::vector<char> blocked(p.subsets.size() - candidate_start, 0);
  for (int j : neighbors) {
    int s = p.subset_of[j];
    if (s >= candidate_start) blocked[s - candidate_start] = 1;
  }
  int chosen = -1;
  for (std::size_t k = 0; k < blocked.size(); ++k) {
    if (!blocked[k]) {
      chosen = candidate_start + static_cast<int>(k);
      break;
    }
  }
  if (chosen < 0) {
    chosen = p.M();
    p.subsets.emplace_back();
  }
  p.subsets[chosen].push_back(x);
  p.subset_of[x] = chosen;
  p.call_of[x] = static_cast<int>(p.source_boundaries.size()) - 1;
}

}  // namespace detail

/// Extend an alternating partition with the locations `new_indices` (indices
/// into `locations`, which holds every previously partitioned point as well).
/// Existing subsets below the entry count are never modified; the result is
/// deterministic given the seed. An empty new set is a no-op.
inline AlternatingPartition extend_partition(const AlternatingPartition& existing,
                                             const LocationSet& locations,
                                             const std::vector<int>& new_indices, double rho,
                                             std::uint64_t seed) {
  if (!(rho > 0.0)) throw Error("partition", "rho must be positive");
  AlternatingPartition p = existing;
  p.rho = rho;
  p.seed = seed;
  p.subset_of.resize(locations.size(), -1);
  p.call_of.resize(locations.size(), -1);
  if (new_indices.empty()) return p;
  for (int x : new_indices) {
    if (x < 0 || x >= locations.size()) throw Error("partition", "index out of range");
    if (p.subset_of[x] >= 0)
      throw Error("partition", "locations already partitioned (index " + std::to_string(x) + ")");
  }

  const int entry_M = p.M();
  const int candidate_start = entry_M == 0 ? 0 : entry_M - 1;
  p.source_boundaries.emplace_back(candidate_start, 0);

  RadiusIndex index(locations, rho);
  Rng rng(seed);

  enum : char { WAITING, QUEUED, DONE };
  std::vector<char> state(locations.size(), DONE);
  for (int x : new_indices) state[x] = WAITING;

  std::vector<int> a1(new_indices);  // random draws via swap-remove
  std::deque<int> a2;                // FIFO with membership flags in `state`

  auto enqueue_ball = [&](int s, const std::vector<int>& nbrs) {
    for (int j : nbrs)
      if (state[j] == WAITING) {
        state[j] = QUEUED;
        a2.push_back(j);
      }
    (void)s;
  };

  auto draw_from_a1 = [&]() -> int {
    while (!a1.empty()) {
      std::size_t k = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(a1.size())));
      int s = a1[k];
      a1[k] = a1.back();
      a1.pop_back();
      if (state[s] == WAITING) return s;
    }
    return -1;
  };

  while (true) {
    int s = draw_from_a1();
    if (s < 0) break;
    auto nbrs = index.query(s);
    enqueue_ball(s, nbrs);
    state[s] = DONE;
    detail::assign_point(s, candidate_start, nbrs, p);

    while (!a2.empty()) {
      int t = a2.front();
      a2.pop_front();
      if (state[t] == DONE) continue;
      auto tn = index.query(t);
      enqueue_ball(t, tn);
      // assign every unassigned new-set point in the ball, t first then
      // neighbors in ascending index order
      state[t] = DONE;
      detail::assign_point(t, candidate_start, tn, p);
      for (int u : tn) {
        if (state[u] == DONE) continue;
        state[u] = DONE;
        detail::assign_point(u, candidate_start, index.query(u), p);
      }
    }
  }

  for (int k = candidate_start; k < p.M(); ++k) std::sort(p.subsets[k].begin(), p.subsets[k].end());
  p.source_boundaries.back().second = p.M();
  return p;
}

inline AlternatingPartition make_partition(const LocationSet& locations, double rho,
                                           std::uint64_t seed) {
  std::vector<int> all(locations.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return extend_partition(AlternatingPartition{}, locations, all, rho, seed);
}

/// Check the within-subset separation invariant and the subset-count bound
/// M <= sum_k sup_s |U(s,rho) ∩ T_k| (linear scan, independent of the
/// spatial index used during construction).
inline PartitionReport validate_partition(const AlternatingPartition& p,
                                          const LocationSet& locations) {
  PartitionReport rep;
  rep.M = p.M();
  for (const auto& subset : p.subsets) {
    for (std::size_t a = 0; a < subset.size(); ++a) {
      if (subset[a] < 0 || subset[a] >= locations.size())
        throw Error("partition", "dangling index " + std::to_string(subset[a]));
      for (std::size_t b = a + 1; b < subset.size(); ++b) {
        if (locations.distance(subset[a], subset[b]) < p.rho)
          rep.violations.emplace_back(subset[a], subset[b]);
      }
    }
  }
  const auto& calls = p.source_boundaries;
  if (calls.empty()) {
    rep.subset_count_bound = 0;
    rep.subset_count_ok = rep.M == 0;
    return rep;
  }
  std::vector<std::vector<int>> call_points(calls.size());
  for (Eigen::Index x = 0; x < locations.size(); ++x)
    if (p.call_of.size() > static_cast<std::size_t>(x) && p.call_of[x] >= 0)
      call_points[p.call_of[x]].push_back(static_cast<int>(x));

  std::int64_t bound = 0;
  for (const auto& pts : call_points) {
    std::int64_t sup = 0;
    for (int a : pts) {
      std::int64_t c = 1;  // |U(s,rho) ∩ T_k| counts s itself
      for (int b : pts)
        if (b != a && locations.distance(a, b) < p.rho) ++c;
      sup = std::max(sup, c);
    }
    bound += sup;
  }
  rep.subset_count_bound = bound;
  rep.subset_count_ok = rep.M <= bound;
  return rep;
}

}  // namespace radgp
