#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "radgp/error.hpp"
#include "radgp/geometry.hpp"
#include "radgp/partition.hpp"

namespace radgp {

// Radial neighbors graph over a partitioned location set. Nodes are ordered
// partition-block first (D_1 before D_2, ...; ascending original index within
// a block), so parents always precede children. Parent lists are stored in
// compressed adjacency form for cache-friendly row-wise factor construction.
struct RadialDag {
  std::vector<int> order;           // order[pos] = location index
  std::vector<int> position_of;     // inverse permutation
  std::vector<int> parent_offsets;  // size n+1
  std::vector<int> parent_index;    // ascending positions, per node
  double rho = 0.0;

  int size() const { return static_cast<int>(order.size()); }

  std::pair<const int*, const int*> parents(int pos) const {
    return {parent_index.data() + parent_offsets[pos],
            parent_index.data() + parent_offsets[pos + 1]};
  }

  int n_parents(int pos) const { return parent_offsets[pos + 1] - parent_offsets[pos]; }

  static RadialDag from_parent_lists(std::vector<int> order_in,
                                     const std::vector<std::vector<int>>& parents_in, double rho) {
    RadialDag g;
    g.rho = rho;
    g.order = std::move(order_in);
    const int n = g.size();
    g.position_of.assign(n, -1);
    for (int i = 0; i < n; ++i) g.position_of[g.order[i]] = i;
    g.parent_offsets.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) g.parent_offsets[i + 1] = g.parent_offsets[i] + static_cast<int>(parents_in[i].size());
    g.parent_index.reserve(g.parent_offsets[n]);
    for (int i = 0; i < n; ++i)
      g.parent_index.insert(g.parent_index.end(), parents_in[i].begin(), parents_in[i].end());
    return g;
  }
};

/// Build the radial neighbors DAG for a valid alternating partition:
/// for i_d < j_d there is an edge w_i -> w_j iff ||w_i - w_j|| < rho, and
/// every node of D_1 beyond the first additionally gets an edge from its
/// closest earlier-ordered location (ties broken by smallest index). That
/// fallback is the one within-subset exception; it keeps D_1 connected.
inline RadialDag build_dag(const AlternatingPartition& p, const LocationSet& locations) {
  if (p.M() == 0) return RadialDag{{}, {}, {0}, {}, p.rho};
  if (p.assigned_count() == 0 || !(p.rho > 0.0)) throw Error("dag", "invalid partition");

  std::vector<int> order;
  order.reserve(p.assigned_count());
  for (const auto& subset : p.subsets) order.insert(order.end(), subset.begin(), subset.end());
  const int n = static_cast<int>(order.size());

  std::vector<int> position_of(locations.size(), -1);
  for (int i = 0; i < n; ++i) {
    if (order[i] < 0 || order[i] >= locations.size()) throw Error("dag", "invalid partition");
    position_of[order[i]] = i;
  }

  RadiusIndex index(locations, p.rho);
  std::vector<std::vector<int>> parents(n);

  const int first_block = static_cast<int>(p.subsets.front().size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64)
#endif
  for (int i = 0; i < n; ++i) {
    const int loc = order[i];
    auto& pa = parents[i];
    for (int j : index.query(loc)) {
      int pos = position_of[j];
      if (pos >= 0 && pos < i) pa.push_back(pos);
    }
    std::sort(pa.begin(), pa.end());
    if (i >= 1 && i < first_block) {
      // D_1 node: all earlier nodes share its subset, so the radial rule gave
      // it nothing; connect to the nearest earlier location
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < i; ++j) {
        double dd = locations.distance(order[i], order[j]);
        if (dd < best_d) {
          best_d = dd;
          best = j;
        }
      }
      if (pa.empty() || !std::binary_search(pa.begin(), pa.end(), best)) {
        pa.insert(std::lower_bound(pa.begin(), pa.end(), best), best);
      }
    }
  }

  RadialDag g = RadialDag::from_parent_lists(std::move(order), parents, p.rho);
  g.position_of.assign(locations.size(), -1);
  for (int i = 0; i < n; ++i) g.position_of[g.order[i]] = i;
  return g;
}

/// Parents of an out-of-sample location: training indices strictly within rho
/// of s (possibly none). s must not coincide with a training location.
inline std::vector<int> prediction_parents(const RadialDag& dag, const LocationSet& training,
                                           const Eigen::RowVectorXd& s) {
  for (Eigen::Index j = 0; j < training.size(); ++j)
    if ((training.point(j) - s).squaredNorm() == 0.0)
      throw Error("dag", "location already observed (training index " + std::to_string(j) + ")");
  return radius_neighbors(training, s, dag.rho);
}

}  // namespace radgp
