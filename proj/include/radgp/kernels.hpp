#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "radgp/error.hpp"
#include "radgp/geometry.hpp"

namespace radgp {

enum class KernelFamily { exponential, matern, gaussian, generalized_cauchy };

inline std::string family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::exponential: return "exponential";
    case KernelFamily::matern: return "matern";
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::generalized_cauchy: return "generalized_cauchy";
  }
  return "?";
}

inline KernelFamily family_from_name(const std::string& s) {
  if (s == "exponential") return KernelFamily::exponential;
  if (s == "matern") return KernelFamily::matern;
  if (s == "gaussian") return KernelFamily::gaussian;
  if (s == "generalized_cauchy") return KernelFamily::generalized_cauchy;
  throw Error("kernels", "unknown kernel family '" + s + "'");
}

/// Isotropic covariance function spec. Parameters by family:
///   exponential         tau2 * exp(-phi r)                params = (tau2, phi)
///   matern              sigma2 * 2^{1-nu}/Gamma(nu) (alpha r)^nu K_nu(alpha r)
///                                                         params = (sigma2, alpha, nu)
///   gaussian            sigma2 * exp(-a r^2)              params = (sigma2, a)
///   generalized_cauchy  sigma2 * (1+(r/alpha)^delta)^{-lambda/delta}
///                                                         params = (sigma2, alpha, delta, lambda)
struct KernelSpec {
  KernelFamily family = KernelFamily::exponential;
  std::vector<double> params;

  static KernelSpec exponential(double tau2, double phi) {
    return validated({KernelFamily::exponential, {tau2, phi}});
  }
  static KernelSpec matern(double sigma2, double alpha, double nu) {
    return validated({KernelFamily::matern, {sigma2, alpha, nu}});
  }
  static KernelSpec gaussian(double sigma2, double a) {
    return validated({KernelFamily::gaussian, {sigma2, a}});
  }
  static KernelSpec generalized_cauchy(double sigma2, double alpha, double delta, double lambda) {
    return validated({KernelFamily::generalized_cauchy, {sigma2, alpha, delta, lambda}});
  }

  double variance() const { return params.at(0); }

  std::size_t n_params() const { return params.size(); }

  std::vector<std::string> param_names() const {
    switch (family) {
      case KernelFamily::exponential: return {"tau2", "phi"};
      case KernelFamily::matern: return {"sigma2", "alpha", "nu"};
      case KernelFamily::gaussian: return {"sigma2", "a"};
      case KernelFamily::generalized_cauchy: return {"sigma2", "alpha", "delta", "lambda"};
    }
    return {};
  }

  KernelSpec with_params(const std::vector<double>& p) const {
    return validated({family, p});
  }

  static KernelSpec validated(KernelSpec k) {
    std::size_t want = 0;
    switch (k.family) {
      case KernelFamily::exponential: want = 2; break;
      case KernelFamily::matern: want = 3; break;
      case KernelFamily::gaussian: want = 2; break;
      case KernelFamily::generalized_cauchy: want = 4; break;
    }
    if (k.params.size() != want)
      throw Error("kernels", family_name(k.family) + " expects " + std::to_string(want) +
                                 " parameters, got " + std::to_string(k.params.size()));
    for (double p : k.params)
      if (!(p > 0.0) || !std::isfinite(p))
        throw Error("kernels", "kernel parameters must be positive and finite");
    return k;
  }
};

namespace detail {

// Matern with half-integer smoothness has closed forms; elsewhere fall back
// to the modified Bessel function of the second kind.
inline double matern_value(double sigma2, double alpha, double nu, double r) {
  if (r == 0.0) return sigma2;
  const double x = alpha * r;
  if (nu == 0.5) return sigma2 * std::exp(-x);
  if (nu == 1.5) return sigma2 * (1.0 + x) * std::exp(-x);
  if (nu == 2.5) return sigma2 * (1.0 + x + x * x / 3.0) * std::exp(-x);
  const double c = sigma2 * std::pow(2.0, 1.0 - nu) / std::tgamma(nu);
  return c * std::pow(x, nu) * std::cyl_bessel_k(nu, x);
}

}  // namespace detail

/// K0(r) for the given spec; K0(0) equals the variance parameter and K0 is
/// nonincreasing in r for all four families.
inline double kernel_value(const KernelSpec& k, double r) {
  if (r < 0.0) throw Error("kernels", "distance must be nonnegative");
  switch (k.family) {
    case KernelFamily::exponential: return k.params[0] * std::exp(-k.params[1] * r);
    case KernelFamily::matern: return detail::matern_value(k.params[0], k.params[1], k.params[2], r);
    case KernelFamily::gaussian: return k.params[0] * std::exp(-k.params[1] * r * r);
    case KernelFamily::generalized_cauchy: {
      const double alpha = k.params[1], delta = k.params[2], lambda = k.params[3];
      return k.params[0] * std::pow(1.0 + std::pow(r / alpha, delta), -lambda / delta);
    }
  }
  return 0.0;
}

/// Dense covariance matrix between two location sets; entry (i,j) is
/// K0(||a_i - b_j||). When A and B are the same object only the lower
/// triangle is evaluated.
inline Matrix cov_matrix(const KernelSpec& k, const LocationSet& A, const LocationSet& B) {
  const Eigen::Index na = A.size(), nb = B.size();
  Matrix out(na, nb);
  if (&A == &B) {
    for (Eigen::Index i = 0; i < na; ++i) {
      out(i, i) = k.variance();
      for (Eigen::Index j = 0; j < i; ++j) {
        double v = kernel_value(k, (A.point(i) - A.point(j)).norm());
        out(i, j) = v;
        out(j, i) = v;
      }
    }
    return out;
  }
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j)
      out(i, j) = kernel_value(k, (A.point(i) - B.point(j)).norm());
  return out;
}

inline Matrix cov_matrix(const KernelSpec& k, const LocationSet& A) { return cov_matrix(k, A, A); }

namespace detail {

struct RadiusConstants {
  double c1, c2, c3;
};

// c2 = 12 {pi Gamma^2(d/2+1)/9}^{1/(d+1)}
// c1 = 2 Gamma(d/2+1) (2^{3/2}/c2)^d
// c3 = c1 d^2 2^d (1+d+q/2) (1+q/2)^{d-1}
inline RadiusConstants radius_constants(int d, double q) {
  RadiusConstants c;
  const double g = std::tgamma(d / 2.0 + 1.0);
  c.c2 = 12.0 * std::pow(M_PI * g * g / 9.0, 1.0 / (d + 1.0));
  c.c1 = 2.0 * g * std::pow(std::pow(2.0, 1.5) / c.c2, d);
  c.c3 = c.c1 * d * d * std::pow(2.0, d) * (1.0 + d + q / 2.0) * std::pow(1.0 + q / 2.0, d - 1.0);
  return c;
}

}  // namespace detail

/// Smallest approximation radius guaranteeing a vanishing Wasserstein-2
/// approximation error for the given family, minimal separation q, sample
/// size n and dimension d. Returns the bound verbatim, no safety factor.
///
/// The exponential family is the Matern case with nu = 1/2, alpha = phi.
/// For the generalized Cauchy family the published exponent carries an "n"
/// inside the q exponent; it is evaluated as displayed (with unit leading
/// constant), so treat that case as indicative only.
inline double recommend_radius(const KernelSpec& k, double q, std::int64_t n, int d) {
  if (!(q > 0.0)) throw Error("kernels", "minimal separation q must be positive");
  if (n < 1 || d < 1) throw Error("kernels", "n and d must be positive");
  const auto c = detail::radius_constants(d, q);

  double sigma2, alpha, nu;
  switch (k.family) {
    case KernelFamily::exponential:
      sigma2 = k.params[0];
      alpha = k.params[1];
      nu = 0.5;
      break;
    case KernelFamily::matern:
      sigma2 = k.params[0];
      alpha = k.params[1];
      nu = k.params[2];
      break;
    case KernelFamily::gaussian: {
      const double a = k.params[1];
      sigma2 = k.params[0];
      if (!(q < 1.0 / std::sqrt(a)))
        throw Error("kernels", "gaussian advisor requires q < a^{-1/2}");
      const double e = c.c3 / sigma2 * std::exp(c.c2 * c.c2 / (a * q * q)) +
                       std::log(static_cast<double>(n) * std::pow(q, -d) * std::pow(sigma2, -5.0)) +
                       5.0 * c.c2 * c.c2 / (a * q * q);
      return std::sqrt(static_cast<double>(d) / a) * e * e * e;
    }
    case KernelFamily::generalized_cauchy: {
      const double delta = k.params[2], lambda = k.params[3];
      if (!(lambda > d + 1.0))
        throw Error("kernels", "generalized_cauchy advisor requires lambda > d+1");
      if (!(q < k.params[1])) throw Error("kernels", "generalized_cauchy advisor requires q < alpha");
      const double denom = lambda - (d + 1.0);
      const double qexp = (12.5 * d + delta * (lambda + 4.5) * static_cast<double>(n)) / denom;
      return std::pow(q, -qexp) * std::pow(static_cast<double>(n), 1.0 / denom);
    }
  }

  // matern / exponential path
  if (!(q < 1.0 / alpha)) throw Error("kernels", "matern advisor requires q < 1/alpha");
  const double cm1 =
      std::tgamma(nu) / (sigma2 * std::pow(2.0, d) * std::pow(M_PI, d / 2.0) * std::tgamma(nu + d / 2.0));
  const double base = 1.0 + 4.0 * c.c2 * c.c2 / (alpha * alpha * q * q);
  const double e = c.c3 * cm1 * std::pow(base, nu + d / 2.0) +
                   std::log(cm1 * static_cast<double>(n) * std::pow(q, -d) *
                            std::pow(base, 5.0 * (nu + d / 2.0)));
  return std::sqrt(static_cast<double>(d)) / alpha * e * e * e;
}

}  // namespace radgp
