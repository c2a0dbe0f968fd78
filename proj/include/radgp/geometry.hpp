#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "radgp/error.hpp"

namespace radgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// An ordered set of d-dimensional coordinates, one row per location.
// Coordinates must be finite and exactly-duplicated rows are rejected:
// a zero minimal separation makes every covariance matrix singular.
class LocationSet {
public:
  LocationSet() = default;

  explicit LocationSet(Matrix coords) : coords_(std::move(coords)) {
    if (coords_.cols() < 1) throw Error("geometry", "dimension must be >= 1");
    if (!coords_.allFinite()) throw Error("geometry", "coordinates must be finite");
    check_duplicates();
  }

  Eigen::Index size() const { return coords_.rows(); }
  Eigen::Index dim() const { return coords_.cols(); }
  const Matrix& coords() const { return coords_; }
  Eigen::RowVectorXd point(Eigen::Index i) const { return coords_.row(i); }

  double distance(Eigen::Index i, Eigen::Index j) const {
    return (coords_.row(i) - coords_.row(j)).norm();
  }

  // largest pairwise distance; 0 for fewer than 2 points
  double diameter() const {
    double dmax = 0.0;
    for (Eigen::Index i = 0; i < size(); ++i)
      for (Eigen::Index j = i + 1; j < size(); ++j) dmax = std::max(dmax, distance(i, j));
    return dmax;
  }

private:
  void check_duplicates() const {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(static_cast<std::size_t>(coords_.rows()) * 2);
    std::vector<Eigen::Index> bucket_hits;
    std::unordered_map<std::uint64_t, std::vector<Eigen::Index>> buckets;
    for (Eigen::Index i = 0; i < coords_.rows(); ++i) {
      std::uint64_t h = 1469598103934665603ULL;
      for (Eigen::Index k = 0; k < coords_.cols(); ++k) {
        std::uint64_t bits;
        double v = coords_(i, k);
        std::memcpy(&bits, &v, sizeof(bits));
        h = (h ^ bits) * 1099511628211ULL;
      }
      auto& b = buckets[h];
      for (Eigen::Index j : b) {
        if ((coords_.row(i).array() == coords_.row(j).array()).all())
          throw Error("geometry", "duplicate locations at rows " + std::to_string(j) + " and " +
                                      std::to_string(i));
      }
      b.push_back(i);
    }
  }

  Matrix coords_;
};

// minimum over all unordered pairs of the Euclidean distance
inline double min_separation(const LocationSet& set) {
  const Eigen::Index n = set.size();
  if (n < 2) throw Error("geometry", "insufficient points: min_separation needs at least 2");
  double best = std::numeric_limits<double>::infinity();
  const Matrix& c = set.coords();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    // squared distances from i to all later rows in one vectorized sweep
    auto diff = c.bottomRows(n - i - 1).rowwise() - c.row(i);
    double m = diff.rowwise().squaredNorm().minCoeff();
    best = std::min(best, m);
  }
  return std::sqrt(best);
}

// Fixed-radius index over a LocationSet: uniform cell grid with cell width
// rho, so a query visits only the 3^d neighboring cells. Immutable after
// construction; concurrent read-only queries are safe.
class RadiusIndex {
public:
  RadiusIndex(const LocationSet& set, double rho) : set_(&set), rho_(rho) {
    if (!(rho > 0.0)) throw Error("geometry", "radius must be positive");
    const Eigen::Index n = set.size();
    linear_ = n < 256;
    if (linear_) return;
    const Matrix& c = set.coords();
    origin_ = c.colwise().minCoeff();
    cells_.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) cells_[cell_key(c.row(i))].push_back(static_cast<int>(i));
  }

  double rho() const { return rho_; }

  // indices j with 0 < ||w_j - s||_2 < rho, ascending; the open ball excludes
  // both s itself and any point at exactly rho
  std::vector<int> query(const Eigen::RowVectorXd& s) const {
    std::vector<int> out;
    const Matrix& c = set_->coords();
    const double r2 = rho_ * rho_;
    if (linear_) {
      for (Eigen::Index j = 0; j < c.rows(); ++j) {
        double d2 = (c.row(j) - s).squaredNorm();
        if (d2 > 0.0 && d2 < r2) out.push_back(static_cast<int>(j));
      }
      return out;
    }
    const Eigen::Index d = c.cols();
    std::vector<std::int64_t> lo(d), hi(d), it(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      lo[k] = static_cast<std::int64_t>(std::floor((s[k] - rho_ - origin_[k]) / rho_));
      hi[k] = static_cast<std::int64_t>(std::floor((s[k] + rho_ - origin_[k]) / rho_));
      it[k] = lo[k];
    }
    while (true) {
      auto found = cells_.find(hash_cell(it));
      if (found != cells_.end()) {
        for (int j : found->second) {
          double d2 = (c.row(j) - s).squaredNorm();
          if (d2 > 0.0 && d2 < r2) out.push_back(j);
        }
      }
      Eigen::Index k = 0;
      for (; k < d; ++k) {
        if (++it[k] <= hi[k]) break;
        it[k] = lo[k];
      }
      if (k == d) break;
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<int> query(Eigen::Index i) const { return query(set_->point(i)); }

private:
  std::uint64_t cell_key(const Eigen::RowVectorXd& p) const {
    const Eigen::Index d = p.size();
    std::vector<std::int64_t> cc(d);
    for (Eigen::Index k = 0; k < d; ++k)
      cc[k] = static_cast<std::int64_t>(std::floor((p[k] - origin_[k]) / rho_));
    return hash_cell(cc);
  }

  static std::uint64_t hash_cell(const std::vector<std::int64_t>& cc) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::int64_t v : cc) {
      h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ULL;
      h ^= h >> 29;
    }
    return h;
  }

  const LocationSet* set_ = nullptr;
  double rho_ = 0.0;
  bool linear_ = true;
  Eigen::RowVectorXd origin_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

// one-shot radius query; build a RadiusIndex instead when querying in a loop
inline std::vector<int> radius_neighbors(const LocationSet& set, const Eigen::RowVectorXd& s,
                                         double rho) {
  if (!(rho > 0.0)) throw Error("geometry", "radius must be positive");
  std::vector<int> out;
  const double r2 = rho * rho;
  for (Eigen::Index j = 0; j < set.size(); ++j) {
    double d2 = (set.point(j) - s).squaredNorm();
    if (d2 > 0.0 && d2 < r2) out.push_back(static_cast<int>(j));
  }
  return out;
}

}  // namespace radgp
