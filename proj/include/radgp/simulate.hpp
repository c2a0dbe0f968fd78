#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstdint>

#include "radgp/error.hpp"
#include "radgp/geometry.hpp"
#include "radgp/kernels.hpp"
#include "radgp/rng.hpp"

namespace radgp {

inline LocationSet grid_locations(int side, int d = 2) {
  if (side < 1 || d < 1) throw Error("simulate", "grid side and dimension must be positive");
  int n = 1;
  for (int k = 0; k < d; ++k) n *= side;
  Matrix m(n, d);
  for (int i = 0; i < n; ++i) {
    int rem = i;
    for (int k = 0; k < d; ++k) {
      int idx = rem % side;
      rem /= side;
      m(i, k) = side == 1 ? 0.5 : static_cast<double>(idx) / (side - 1);
    }
  }
  return LocationSet(m);
}

inline LocationSet uniform_locations(int n, int d, Rng& rng) {
  Matrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) m(i, k) = rng.uniform();
  return LocationSet(m);
}

struct SimulatedField {
  Vector z;  // latent field
  Vector y;  // z + nugget noise
};

/// One joint draw of the exact zero-mean GP over the set, plus iid N(0,
/// sigma2) noise. Dense Cholesky, so a cap guards memory; raise it through
/// `max_dense_n` for larger exact simulations.
inline SimulatedField simulate_gp(const LocationSet& locations, const KernelSpec& k, double sigma2,
                                  Rng& rng, int max_dense_n = 4096) {
  const int n = static_cast<int>(locations.size());
  if (n > max_dense_n)
    throw Error("simulate", "n=" + std::to_string(n) + " above the dense-simulation cap " +
                                std::to_string(max_dense_n) +
                                "; raise simulate.max_dense_n to force the dense path");
  Matrix sigma = cov_matrix(k, locations);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    llt.compute(sigma + 1e-10 * k.variance() * Matrix::Identity(n, n));
    if (llt.info() != Eigen::Success)
      throw Error("simulate", "covariance not positive definite; check for near-duplicate points");
  }
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.normal();
  SimulatedField out;
  out.z = Matrix(llt.matrixL()) * w;
  out.y = out.z;
  if (sigma2 > 0.0) {
    const double s = std::sqrt(sigma2);
    for (int i = 0; i < n; ++i) out.y[i] += s * rng.normal();
  }
  return out;
}

}  // namespace radgp
