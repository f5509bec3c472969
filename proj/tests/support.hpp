#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "eulerlim/builtins.hpp"
#include "eulerlim/model.hpp"

namespace testing_support {

using eulerlim::Matrix;
using eulerlim::RateEntry;
using eulerlim::SpinModel;
using eulerlim::Vector;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline std::vector<std::vector<int>> xi_rows(const SpinModel& m) {
  std::vector<std::vector<int>> rows;
  for (std::size_t w = 0; w < m.size(); ++w) {
    auto r = m.xi(w);
    rows.emplace_back(r.begin(), r.end());
  }
  return rows;
}

/// Copy of `m` with extra transitions appended (labels resolved by name).
inline SpinModel with_extra(const SpinModel& m, std::vector<std::array<const char*, 4>> jumps,
                            double rate) {
  auto rates = m.rate_entries();
  for (const auto& j : jumps)
    rates.push_back({m.index_of(j[0]), m.index_of(j[1]), m.index_of(j[2]), m.index_of(j[3]), rate});
  return SpinModel(m.states(), m.n_cons(), xi_rows(m), m.base_measure(), rates);
}

/// Same model with the local states relabelled in the order `perm`.
inline SpinModel permuted(const SpinModel& m, const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  std::vector<std::string> states;
  std::vector<std::vector<int>> xi;
  std::vector<double> pi;
  const auto rows = xi_rows(m);
  for (auto p : perm) {
    states.push_back(m.label(p));
    xi.push_back(rows[p]);
    pi.push_back(m.base_measure()[p]);
  }
  std::vector<RateEntry> rates;
  for (const auto& e : m.rate_entries())
    rates.push_back({inv[e.from_first], inv[e.from_second], inv[e.to_first], inv[e.to_second], e.rate});
  return SpinModel(states, m.n_cons(), xi, pi, rates);
}

/// Leroux points (u, rho) with rho in [0.05, 0.9] and |u| <= 1 - rho - 0.05.
inline std::vector<Vector> leroux_triangle(int steps) {
  std::vector<Vector> pts;
  for (int i = 0; i <= steps; ++i) {
    const double rho = 0.05 + 0.85 * i / steps;
    const double umax = 1.0 - rho - 0.05;
    if (umax < 0) continue;
    for (int k = 0; k <= steps; ++k) pts.push_back(vec({-umax + 2 * umax * k / steps, rho}));
  }
  return pts;
}

}  // namespace testing_support
