#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "eulerlim/errors.hpp"
#include "eulerlim/flux.hpp"
#include "eulerlim/model.hpp"
#include "eulerlim/profile.hpp"
#include "eulerlim/thermo.hpp"

namespace eulerlim {

/// Per-cell evaluation result. `hint` is evaluator-private warm-start state
/// carried between steps for the same cell.
struct CellFlux {
  Vector flux;
  double max_speed = 0.0;
  Vector hint;
};

/// Source of Phi(u) and the local wave-speed bound for the solver.
class FluxEvaluator {
 public:
  virtual ~FluxEvaluator() = default;
  virtual std::size_t components() const = 0;
  /// Fills `out` for an admissible state; returns false if `u` is outside the
  /// admissible domain.
  virtual bool evaluate(const Vector& u, CellFlux& out) const = 0;
};

/// Exact-summation fluxes of a lattice model; speeds from the symmetrized
/// Jacobian.
class ModelFluxEvaluator final : public FluxEvaluator {
 public:
  explicit ModelFluxEvaluator(SpinModel model, double margin = kDefaultDomainMargin)
      : model_(std::move(model)), table_(model_), margin_(margin) {}

  std::size_t components() const override { return model_.n_cons(); }
  const SpinModel& model() const { return model_; }

  bool evaluate(const Vector& u, CellFlux& out) const override {
    InversionOptions opts;
    opts.margin = margin_;
    opts.check_domain = false;
    opts.start = out.hint;
    DensityPoint dp;
    bool inverted = false;
    if (u.allFinite()) {
      try {
        dp = invert_densities(model_, u, opts);
        inverted = true;
      } catch (const NoConvergence&) {
      }
    }
    if (inverted) {
      // pi_theta is itself a barycentric representation of u.
      const CanonicalPoint cp = canonical_point(model_, dp.theta);
      const double min_weight = *std::min_element(cp.single_site_weights.begin(),
                                                  cp.single_site_weights.end());
      if (min_weight < margin_ && !in_admissible_domain(model_, u, margin_)) {
        return false;
      }
      Matrix jac_theta;
      flux_at_canonical(model_, table_, cp, out.flux, &jac_theta);
      const Vector speeds = symmetrized_speeds(dp.hessian, jac_theta * dp.hessian);
      out.max_speed = speeds.cwiseAbs().maxCoeff();
      out.hint = dp.theta;
      return true;
    }
    if (!in_admissible_domain(model_, u, margin_)) return false;
    throw NoConvergence("density inversion failed inside the domain at " +
                        format_vector(u));
  }

 private:
  SpinModel model_;
  MicroFluxTable table_;
  double margin_;
};

/// Closed-form Leroux fluxes in (u, rho) order: (rho + u^2, rho u).
class LerouxFluxEvaluator final : public FluxEvaluator {
 public:
  explicit LerouxFluxEvaluator(double margin = kDefaultDomainMargin) : margin_(margin) {}
  std::size_t components() const override { return 2; }
  bool evaluate(const Vector& s, CellFlux& out) const override {
    const double u = s(0), rho = s(1);
    if (!(rho >= margin_ && 0.5 * (1 - rho + u) >= margin_ &&
          0.5 * (1 - rho - u) >= margin_)) {
      return false;
    }
    out.flux.resize(2);
    out.flux << rho + u * u, rho * u;
    const double root = std::sqrt(u * u + 4 * rho);
    out.max_speed = std::max(std::abs(1.5 * u + 0.5 * root), std::abs(1.5 * u - 0.5 * root));
    return true;
  }

 private:
  double margin_;
};

/// Closed-form bricklayer fluxes in (u, rho) order with p - q = 1:
/// ((rho - gamma)(1 - u^2), rho (1 - rho) u).
class BricklayerFluxEvaluator final : public FluxEvaluator {
 public:
  explicit BricklayerFluxEvaluator(double gamma, double margin = kDefaultDomainMargin)
      : gamma_(gamma), margin_(margin) {}
  std::size_t components() const override { return 2; }
  bool evaluate(const Vector& s, CellFlux& out) const override {
    const double u = s(0), rho = s(1);
    // Product-form weights; sufficient for membership in the shrunk square.
    const double lo = std::min(rho, 1 - rho) * 0.5 * (1 - std::abs(u));
    if (!(lo >= margin_)) return false;
    out.flux.resize(2);
    out.flux << (rho - gamma_) * (1 - u * u), rho * (1 - rho) * u;
    const double a = -2 * u * (rho - gamma_), b = 1 - u * u;
    const double c = rho * (1 - rho), d = (1 - 2 * rho) * u;
    const double half_trace = 0.5 * (a + d);
    const double disc = std::max(0.0, half_trace * half_trace - (a * d - b * c));
    out.max_speed = std::abs(half_trace) + std::sqrt(disc);
    return true;
  }

 private:
  double gamma_;
  double margin_;
};

struct Trajectory {
  std::vector<Profile> snapshots;
  /// (time, integral of S(u) - S(reference)) at each snapshot when a model
  /// was supplied.
  std::vector<std::pair<double, double>> entropy_series;
  std::size_t steps = 0;
  /// Largest componentwise drift of the cell means over the whole run.
  double mean_drift = 0.0;
};

struct SolveOptions {
  /// Output times in (0, t_end]; empty means ten evenly spaced times.
  std::vector<double> snapshot_times;
  /// When set, entropy_series is filled relative to the initial mean.
  const SpinModel* entropy_model = nullptr;
};

inline double entropy_functional(const SpinModel& model, const Profile& p,
                                 const Vector& reference_u) {
  const double ref = invert_densities(model, reference_u).entropy;
  InversionOptions opts;
  double sum = 0.0;
  for (std::size_t j = 0; j < p.n_cells(); ++j) {
    const auto dp = invert_densities(model, p.cell(j), opts);
    opts.start = dp.theta;
    sum += dp.entropy - ref;
  }
  return p.dx() * sum;
}

/// First-order Rusanov finite volumes for u_t + Phi(u)_x = 0 on the torus.
inline Trajectory solve(const FluxEvaluator& flux, const Profile& initial,
                        double t_end, double cfl, SolveOptions opts = {}) {
  if (!(cfl > 0.0 && cfl < 1.0)) throw Error("cfl must lie in (0, 1)");
  if (initial.n_cells() < 8) throw Error("profile needs at least 8 cells");
  if (initial.components() != flux.components()) {
    throw Error("profile and flux disagree on the number of components");
  }
  if (opts.snapshot_times.empty()) {
    for (int k = 1; k <= 10; ++k) opts.snapshot_times.push_back(t_end * k / 10.0);
  }
  std::sort(opts.snapshot_times.begin(), opts.snapshot_times.end());

  const std::size_t m = initial.n_cells();
  const auto n = static_cast<Eigen::Index>(initial.components());
  const double dx = initial.dx();
  Profile cur = initial;
  std::vector<CellFlux> cells(m);
  Matrix face(static_cast<Eigen::Index>(m), n);  // face j is between j and j+1

  auto evaluate_all = [&](double time) {
    double alpha = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!flux.evaluate(cur.cell(j), cells[j])) {
        throw InadmissibleState(j, time, "cell left the admissible domain");
      }
      if (!cells[j].flux.allFinite() || !std::isfinite(cells[j].max_speed)) {
        throw NonFiniteFlux("non-finite flux in cell " + std::to_string(j));
      }
      alpha = std::max(alpha, cells[j].max_speed);
    }
    return alpha;
  };

  Trajectory traj;
  const Vector mean0 = initial.mean();
  auto record = [&]() {
    traj.snapshots.push_back(cur);
    if (opts.entropy_model) {
      traj.entropy_series.emplace_back(
          cur.time, entropy_functional(*opts.entropy_model, cur, mean0));
    }
  };
  record();

  std::size_t next_snap = 0;
  while (next_snap < opts.snapshot_times.size() &&
         opts.snapshot_times[next_snap] <= 0.0)
    ++next_snap;
  while (next_snap < opts.snapshot_times.size()) {
    const double alpha = evaluate_all(cur.time);
    double dt = alpha > 0.0 ? cfl * dx / alpha : opts.snapshot_times.back() - cur.time;
    const double target = opts.snapshot_times[next_snap];
    bool hit = false;
    if (cur.time + dt >= target) {
      dt = target - cur.time;
      hit = true;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t r = (j + 1) % m;
      const double a = std::max(cells[j].max_speed, cells[r].max_speed);
      face.row(static_cast<Eigen::Index>(j)) =
          (0.5 * (cells[j].flux + cells[r].flux) -
           0.5 * a * (cur.cell(r) - cur.cell(j)))
              .transpose();
    }
    const double ratio = dt / dx;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t l = (j + m - 1) % m;
      cur.values.row(static_cast<Eigen::Index>(j)) -=
          ratio * (face.row(static_cast<Eigen::Index>(j)) -
                   face.row(static_cast<Eigen::Index>(l)));
    }
    cur.time = hit ? target : cur.time + dt;
    ++traj.steps;
    traj.mean_drift = std::max(
        traj.mean_drift, (cur.mean() - mean0).lpNorm<Eigen::Infinity>());
    if (hit) {
      for (std::size_t j = 0; j < m; ++j) {
        if (!flux.evaluate(cur.cell(j), cells[j])) {
          throw InadmissibleState(j, cur.time, "cell left the admissible domain");
        }
      }
      record();
      ++next_snap;
    }
  }
  return traj;
}

/// Max-norm defect of d_t theta + D(u)^T d_x theta = 0 evaluated with central
/// differences on interior snapshots.
inline double dual_field_consistency(const SpinModel& model, const Trajectory& traj) {
  const auto& snaps = traj.snapshots;
  if (snaps.size() < 3) throw Error("dual-field check needs at least 3 snapshots");
  const MicroFluxTable table(model);
  const std::size_t m = snaps.front().n_cells();
  const auto n = static_cast<Eigen::Index>(model.n_cons());

  std::vector<Matrix> theta(snaps.size(), Matrix(static_cast<Eigen::Index>(m), n));
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    InversionOptions opts;
    for (std::size_t j = 0; j < m; ++j) {
      const auto dp = invert_densities(model, snaps[k].cell(j), opts);
      opts.start = dp.theta;
      theta[k].row(static_cast<Eigen::Index>(j)) = dp.theta.transpose();
    }
  }
  const double dx = snaps.front().dx();
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < snaps.size(); ++k) {
    const double dt = snaps[k + 1].time - snaps[k - 1].time;
    InversionOptions opts;
    for (std::size_t j = 0; j < m; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const auto r = static_cast<Eigen::Index>((j + 1) % m);
      const auto l = static_cast<Eigen::Index>((j + m - 1) % m);
      const Vector dtheta_dt = (theta[k + 1].row(jj) - theta[k - 1].row(jj)).transpose() / dt;
      const Vector dtheta_dx = (theta[k].row(r) - theta[k].row(l)).transpose() / (2 * dx);
      const auto dp = invert_densities(model, snaps[k].cell(j), opts);
      opts.start = dp.theta;
      const auto rep = flux_report(model, table, dp);
      const Vector defect = dtheta_dt + rep.jacobian_u.transpose() * dtheta_dx;
      worst = std::max(worst, defect.lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

/// Largest |d_x theta| over the snapshots, by central differences.
inline double max_theta_gradient(const SpinModel& model, const Trajectory& traj) {
  double worst = 0.0;
  for (const auto& p : traj.snapshots) {
    const std::size_t m = p.n_cells();
    std::vector<Vector> theta(m);
    InversionOptions opts;
    for (std::size_t j = 0; j < m; ++j) {
      theta[j] = invert_densities(model, p.cell(j), opts).theta;
      opts.start = theta[j];
    }
    for (std::size_t j = 0; j < m; ++j) {
      const Vector g = (theta[(j + 1) % m] - theta[(j + m - 1) % m]) / (2 * p.dx());
      worst = std::max(worst, g.lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

}  // namespace eulerlim
