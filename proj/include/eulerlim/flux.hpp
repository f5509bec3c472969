#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "eulerlim/errors.hpp"
#include "eulerlim/model.hpp"
#include "eulerlim/thermo.hpp"

namespace eulerlim {

/// Flux, its derivatives and the structural residuals at one density point.
struct FluxReport {
  Vector u;
  Vector theta;
  Vector phi;
  Matrix jacobian_u;      // dPhi/du
  Matrix jacobian_theta;  // dPhi/dtheta
  Matrix entropy_hessian;
  double onsager_residual = 0.0;
  double sym_residual = 0.0;
  double lax_residual = 0.0;
  /// Characteristic speeds in ascending order.
  Vector speeds;
  /// Largest |Im| among the eigenvalues of jacobian_u from a general solver.
  double speeds_imag = 0.0;
};

/// Expected current phi(w1, w2) across a bond: sum of rate times the gain of
/// the right site. The left-site form is evaluated alongside and must agree.
inline Vector micro_flux(const SpinModel& model, std::size_t w1,
                         std::size_t w2) {
  const std::size_t n = model.n_cons();
  Vector right = Vector::Zero(n), left = Vector::Zero(n);
  for (const auto& t : model.transitions(w1, w2)) {
    for (std::size_t k = 0; k < n; ++k) {
      right(k) += t.rate * (model.xi(t.to_second, k) - model.xi(w2, k));
      left(k) += t.rate * (model.xi(w1, k) - model.xi(t.to_first, k));
    }
  }
  if ((right - left).lpNorm<Eigen::Infinity>() >
      1e-12 * (1.0 + right.lpNorm<Eigen::Infinity>())) {
    throw ConservationBroken("bond current forms disagree on pair (" +
                             model.label(w1) + "," + model.label(w2) + ")");
  }
  return right;
}

/// phi for every ordered pair, row index w1 * |S| + w2.
class MicroFluxTable {
 public:
  explicit MicroFluxTable(const SpinModel& model)
      : states_(model.size()), table_(model.size() * model.size(), model.n_cons()) {
    for (std::size_t w1 = 0; w1 < states_; ++w1)
      for (std::size_t w2 = 0; w2 < states_; ++w2)
        table_.row(w1 * states_ + w2) = micro_flux(model, w1, w2).transpose();
  }
  auto row(std::size_t w1, std::size_t w2) const {
    return table_.row(w1 * states_ + w2);
  }
  std::size_t states() const noexcept { return states_; }

 private:
  std::size_t states_;
  Matrix table_;
};

/// Phi(theta) and dPhi/dtheta under the product measure pi_theta x pi_theta.
inline void flux_at_canonical(const SpinModel& model, const MicroFluxTable& table,
                              const CanonicalPoint& cp, Vector& phi,
                              Matrix* jacobian_theta) {
  const std::size_t s = model.size();
  const std::size_t n = model.n_cons();
  phi = Vector::Zero(n);
  if (jacobian_theta) *jacobian_theta = Matrix::Zero(n, n);
  Vector centred(n);
  for (std::size_t w1 = 0; w1 < s; ++w1) {
    for (std::size_t w2 = 0; w2 < s; ++w2) {
      const double p = cp.single_site_weights[w1] * cp.single_site_weights[w2];
      const auto f = table.row(w1, w2);
      phi.noalias() += p * f.transpose();
      if (jacobian_theta) {
        for (std::size_t k = 0; k < n; ++k) {
          centred(k) = model.xi(w1, k) + model.xi(w2, k) - 2.0 * cp.densities(k);
        }
        jacobian_theta->noalias() += p * f.transpose() * centred.transpose();
      }
    }
  }
}

inline Vector macro_flux_at_theta(const SpinModel& model,
                                  const MicroFluxTable& table,
                                  const Vector& theta) {
  Vector phi;
  flux_at_canonical(model, table, canonical_point(model, theta), phi, nullptr);
  return phi;
}

inline Vector macro_flux_at_theta(const SpinModel& model, const Vector& theta) {
  return macro_flux_at_theta(model, MicroFluxTable(model), theta);
}

inline double max_antisymmetry(const Matrix& m) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
  return worst;
}

/// Speeds of D via the symmetric similarity H^{-1/2} (H D) H^{-1/2}, with
/// H the (positive definite) entropy Hessian.
inline Vector symmetrized_speeds(const Matrix& hessian, const Matrix& jacobian_u) {
  Eigen::SelfAdjointEigenSolver<Matrix> h(hessian);
  const Matrix inv_sqrt = h.eigenvectors() *
                          h.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          h.eigenvectors().transpose();
  Matrix m = inv_sqrt * (hessian * jacobian_u) * inv_sqrt;
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> sym(m, Eigen::EigenvaluesOnly);
  return sym.eigenvalues();
}

/// Eigenvalues of a general real matrix, sorted by real part.
inline std::vector<std::complex<double>> general_eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  std::vector<std::complex<double>> ev(es.eigenvalues().data(),
                                       es.eigenvalues().data() + m.rows());
  std::sort(ev.begin(), ev.end(),
            [](auto a, auto b) { return a.real() < b.real(); });
  return ev;
}

/// Fills a FluxReport from a known density point.
inline FluxReport flux_report(const SpinModel& model, const MicroFluxTable& table,
                              const DensityPoint& dp) {
  FluxReport rep;
  rep.u = dp.u;
  rep.theta = dp.theta;
  rep.entropy_hessian = dp.hessian;
  const CanonicalPoint cp = canonical_point(model, dp.theta);
  flux_at_canonical(model, table, cp, rep.phi, &rep.jacobian_theta);
  rep.jacobian_u = rep.jacobian_theta * dp.hessian;
  rep.onsager_residual = max_antisymmetry(rep.jacobian_theta);
  const Matrix hd = dp.hessian * rep.jacobian_u;
  rep.sym_residual = max_antisymmetry(hd);
  rep.lax_residual = rep.sym_residual;
  rep.speeds = symmetrized_speeds(dp.hessian, rep.jacobian_u);
  for (const auto& ev : general_eigenvalues(rep.jacobian_u)) {
    rep.speeds_imag = std::max(rep.speeds_imag, std::abs(ev.imag()));
  }
  return rep;
}

/// Macroscopic flux Phi(u) = E_u[phi] with its u- and theta-Jacobians.
inline FluxReport macro_flux(const SpinModel& model, const Vector& u) {
  return flux_report(model, MicroFluxTable(model), invert_densities(model, u));
}

/// Characteristic speeds and the symmetry defect |S''D - (S''D)^T|_max.
struct Hyperbolicity {
  Vector speeds;
  double sym_residual = 0.0;
  double speeds_imag = 0.0;
};

inline Hyperbolicity hyperbolicity_report(const SpinModel& model, const Vector& u) {
  const auto rep = macro_flux(model, u);
  return {rep.speeds, rep.sym_residual, rep.speeds_imag};
}

/// max_{i<j} |sum_k (S''_ik dPhi_k/du_j - S''_jk dPhi_k/du_i)|; zero for n = 1.
inline double lax_entropy_residual(const SpinModel& model, const Vector& u) {
  const auto rep = macro_flux(model, u);
  const Matrix& h = rep.entropy_hessian;
  const Matrix& d = rep.jacobian_u;
  const auto n = static_cast<Eigen::Index>(model.n_cons());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double defect = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) defect += h(i, k) * d(k, j) - h(j, k) * d(k, i);
      worst = std::max(worst, std::abs(defect));
    }
  }
  return worst;
}

inline double speed_gap(const Vector& sorted_speeds) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 1; i < sorted_speeds.size(); ++i)
    gap = std::min(gap, sorted_speeds(i) - sorted_speeds(i - 1));
  return gap;
}

/// Cell-centred tensor lattice over the bounding box of the xi rows,
/// intersected with the admissible domain at the given margin.
inline std::vector<Vector> admissible_grid(const SpinModel& model,
                                           std::size_t points_per_axis,
                                           double margin = 0.02) {
  const std::size_t n = model.n_cons();
  Vector lo(n), hi(n);
  for (std::size_t k = 0; k < n; ++k) {
    lo(k) = hi(k) = model.xi(0, k);
    for (std::size_t w = 1; w < model.size(); ++w) {
      lo(k) = std::min<double>(lo(k), model.xi(w, k));
      hi(k) = std::max<double>(hi(k), model.xi(w, k));
    }
  }
  std::vector<Vector> grid;
  std::vector<std::size_t> idx(n, 0);
  Vector u(n);
  while (true) {
    for (std::size_t k = 0; k < n; ++k) {
      u(k) = lo(k) + (hi(k) - lo(k)) * (static_cast<double>(idx[k]) + 0.5) /
                         static_cast<double>(points_per_axis);
    }
    if (in_admissible_domain(model, u, margin)) grid.push_back(u);
    std::size_t k = 0;
    while (k < n && ++idx[k] == points_per_axis) idx[k++] = 0;
    if (k == n) break;
  }
  return grid;
}

inline double certify_onsager(const SpinModel& model, const std::vector<Vector>& grid) {
  const MicroFluxTable table(model);
  double worst = 0.0;
  for (const auto& u : grid) {
    const auto rep = flux_report(model, table, invert_densities(model, u));
    worst = std::max(worst, rep.onsager_residual);
  }
  return worst;
}

/// Aggregated structural residuals over a grid.
struct FluxCertificate {
  double onsager_residual = 0.0;
  double sym_residual_max = 0.0;
  double lax_residual_max = 0.0;
  double inverse_residual_max = 0.0;
  double speeds_imag_max = 0.0;
  double hessian_eigmin = std::numeric_limits<double>::infinity();
  double speeds_min_gap = std::numeric_limits<double>::infinity();
  std::size_t grid_size = 0;
};

inline FluxCertificate certify_grid(const SpinModel& model,
                                    const std::vector<Vector>& grid) {
  const MicroFluxTable table(model);
  const auto n = static_cast<Eigen::Index>(model.n_cons());
  FluxCertificate cert;
  cert.grid_size = grid.size();
  for (const auto& u : grid) {
    const DensityPoint dp = invert_densities(model, u);
    const auto rep = flux_report(model, table, dp);
    const Matrix cov = canonical_point(model, dp.theta).covariance;
    cert.onsager_residual = std::max(cert.onsager_residual, rep.onsager_residual);
    cert.sym_residual_max = std::max(cert.sym_residual_max, rep.sym_residual);
    cert.lax_residual_max = std::max(cert.lax_residual_max, rep.lax_residual);
    cert.inverse_residual_max =
        std::max(cert.inverse_residual_max,
                 (cov * dp.hessian - Matrix::Identity(n, n)).lpNorm<Eigen::Infinity>());
    cert.speeds_imag_max = std::max(cert.speeds_imag_max, rep.speeds_imag);
    Eigen::SelfAdjointEigenSolver<Matrix> h(dp.hessian, Eigen::EigenvaluesOnly);
    cert.hessian_eigmin = std::min(cert.hessian_eigmin, h.eigenvalues()(0));
    cert.speeds_min_gap = std::min(cert.speeds_min_gap, speed_gap(rep.speeds));
  }
  return cert;
}

namespace detail {

struct GaussLegendre {
  static constexpr int kOrder = 10;
  std::array<double, kOrder> nodes{};
  std::array<double, kOrder> weights{};

  GaussLegendre() {
    for (int i = 0; i < kOrder; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (kOrder + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= kOrder; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  double integrate(const std::function<double(double)>& f, double a, double b) const {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < kOrder; ++i) sum += weights[i] * f(mid + half * nodes[i]);
    return half * sum;
  }
};

inline double adaptive_gauss_legendre(const std::function<double(double)>& f,
                                      double a, double b, double tol,
                                      double whole, int depth) {
  static const GaussLegendre rule;
  const double mid = 0.5 * (a + b);
  const double left = rule.integrate(f, a, mid);
  const double right = rule.integrate(f, mid, b);
  const double error = std::abs(left + right - whole);
  if (error <= tol) return left + right;
  if (depth >= 40) {
    throw QuadratureFailure("adaptive quadrature could not reach the tolerance");
  }
  return adaptive_gauss_legendre(f, a, mid, 0.5 * tol, left, depth + 1) +
         adaptive_gauss_legendre(f, mid, b, 0.5 * tol, right, depth + 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  static const GaussLegendre rule;
  return adaptive_gauss_legendre(f, a, b, tol, rule.integrate(f, a, b), 0);
}

}  // namespace detail

/// Line integral of Phi(theta) . dtheta along a polyline of chemical
/// potentials.
inline double flux_potential_along(const SpinModel& model,
                                   const std::vector<Vector>& waypoints,
                                   double tol = 1e-10) {
  const MicroFluxTable table(model);
  double total = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Vector a = waypoints[i - 1];
    const Vector delta = waypoints[i] - a;
    if (delta.lpNorm<Eigen::Infinity>() == 0.0) continue;
    total += detail::integrate(
        [&](double t) {
          return macro_flux_at_theta(model, table, a + t * delta).dot(delta);
        },
        0.0, 1.0, tol);
  }
  return total;
}

/// Flux potential U with U(0) = 0 and grad U = Phi, integrated along the
/// straight segment from the origin.
inline double flux_potential(const SpinModel& model, const Vector& theta,
                             double tol = 1e-10) {
  return flux_potential_along(
      model, {Vector::Zero(static_cast<Eigen::Index>(model.n_cons())), theta}, tol);
}

}  // namespace eulerlim
