#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "eulerlim/detail/feasibility.hpp"
#include "eulerlim/errors.hpp"
#include "eulerlim/model.hpp"

namespace eulerlim {

/// Minimal barycentric weight a density must keep on every state.
inline constexpr double kDefaultDomainMargin = 1e-9;

/// Tilted single-site measure pi_theta and its first two moments.
struct CanonicalPoint {
  Vector theta;
  double g_value = 0.0;
  Vector densities;
  Matrix covariance;
  std::vector<double> single_site_weights;
};

/// Density-side view: chemical potentials, entropy and entropy Hessian.
struct DensityPoint {
  Vector u;
  Vector theta;
  double entropy = 0.0;
  Matrix hessian;
};

inline std::string format_vector(const Vector& v) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v(i));
  }
  return out + ")";
}

/// Log-partition function and moments by exact summation over S.
inline CanonicalPoint canonical_point(const SpinModel& model,
                                      const Vector& theta) {
  const std::size_t s = model.size();
  const std::size_t n = model.n_cons();
  std::vector<double> logw(s);
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < s; ++w) {
    double e = std::log(model.base_measure()[w]);
    for (std::size_t k = 0; k < n; ++k) e += theta(k) * model.xi(w, k);
    logw[w] = e;
    shift = std::max(shift, e);
  }
  double z = 0.0;
  for (double e : logw) z += std::exp(e - shift);

  CanonicalPoint cp;
  cp.theta = theta;
  cp.g_value = shift + std::log(z);
  cp.single_site_weights.resize(s);
  cp.densities = Vector::Zero(n);
  for (std::size_t w = 0; w < s; ++w) {
    const double p = std::exp(logw[w] - cp.g_value);
    cp.single_site_weights[w] = p;
    for (std::size_t k = 0; k < n; ++k) cp.densities(k) += p * model.xi(w, k);
  }
  cp.covariance = Matrix::Zero(n, n);
  Vector d(n);
  for (std::size_t w = 0; w < s; ++w) {
    for (std::size_t k = 0; k < n; ++k) d(k) = model.xi(w, k) - cp.densities(k);
    cp.covariance.noalias() += cp.single_site_weights[w] * d * d.transpose();
  }
  return cp;
}

/// True iff u = sum_w lambda_w xi(w) with sum lambda = 1 and every
/// lambda_w >= margin.
inline bool in_admissible_domain(const SpinModel& model, const Vector& u,
                                 double margin = kDefaultDomainMargin) {
  const std::size_t s = model.size();
  const std::size_t n = model.n_cons();
  if (static_cast<std::size_t>(u.size()) != n || !u.allFinite()) return false;
  const double free_mass = 1.0 - margin * static_cast<double>(s);
  if (free_mass < 0.0) return false;
  Matrix a(n + 1, s);
  Vector b(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    double offset = 0.0;
    for (std::size_t w = 0; w < s; ++w) {
      a(k, w) = model.xi(w, k);
      offset += model.xi(w, k);
    }
    b(k) = u(k) - margin * offset;
  }
  a.row(n).setOnes();
  b(n) = free_mass;
  return detail::nonnegative_feasible(std::move(a), std::move(b));
}

struct InversionOptions {
  double margin = kDefaultDomainMargin;
  /// Starting chemical potentials; empty means theta = 0.
  Vector start;
  bool check_domain = true;
  double tolerance = 1e-12;
  int max_iterations = 100;
};

/// Solves densities(theta) = u_target by Newton's method with the covariance
/// as Jacobian and step halving whenever the residual norm fails to drop.
inline DensityPoint invert_densities(const SpinModel& model,
                                     const Vector& u_target,
                                     const InversionOptions& opts = {}) {
  const std::size_t n = model.n_cons();
  if (opts.check_domain && !in_admissible_domain(model, u_target, opts.margin)) {
    throw OutsideDomain("density " + format_vector(u_target) +
                        " is outside the admissible domain");
  }
  Vector theta = opts.start.size() == static_cast<Eigen::Index>(n)
                     ? opts.start
                     : Vector::Zero(n);
  CanonicalPoint cp = canonical_point(model, theta);
  Vector residual = cp.densities - u_target;
  for (int iter = 0;; ++iter) {
    if (residual.lpNorm<Eigen::Infinity>() < opts.tolerance) break;
    if (iter >= opts.max_iterations) {
      throw NoConvergence("density inversion did not converge at " +
                          format_vector(u_target));
    }
    const Vector step = cp.covariance.llt().solve(residual);
    double scale = 1.0;
    CanonicalPoint next;
    Vector next_residual;
    for (int halving = 0; halving < 60; ++halving) {
      next = canonical_point(model, theta - scale * step);
      next_residual = next.densities - u_target;
      if (next_residual.norm() < residual.norm()) break;
      scale *= 0.5;
    }
    if (!(next_residual.norm() < residual.norm())) {
      throw NoConvergence("density inversion stalled at " +
                          format_vector(u_target));
    }
    theta = next.theta;
    cp = std::move(next);
    residual = std::move(next_residual);
  }
  // Polish to round-off: full Newton steps while the residual still drops.
  for (int polish = 0; polish < 3 && residual.lpNorm<Eigen::Infinity>() > 0.0; ++polish) {
    CanonicalPoint next = canonical_point(model, theta - cp.covariance.llt().solve(residual));
    Vector next_residual = next.densities - u_target;
    if (!(next_residual.norm() < residual.norm())) break;
    theta = next.theta;
    cp = std::move(next);
    residual = std::move(next_residual);
  }
  DensityPoint dp;
  dp.u = u_target;
  dp.theta = theta;
  dp.entropy = theta.dot(u_target) - cp.g_value;
  dp.hessian = cp.covariance.llt().solve(Matrix::Identity(n, n));
  return dp;
}

inline DensityPoint invert_densities(const SpinModel& model,
                                     const Vector& u_target, double margin) {
  InversionOptions opts;
  opts.margin = margin;
  return invert_densities(model, u_target, opts);
}

/// S''(u) = G''(theta(u))^{-1}.
inline Matrix entropy_hessian(const SpinModel& model, const Vector& u) {
  return invert_densities(model, u).hessian;
}

}  // namespace eulerlim
