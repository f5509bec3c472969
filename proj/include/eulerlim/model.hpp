#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eulerlim/errors.hpp"

namespace eulerlim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative tolerance used by every exact-arithmetic identity check.
inline constexpr double kIdentityRelTol = 1e-12;
inline constexpr double kIdentityAbsTol = 1e-14;

inline bool identity_close(double lhs, double rhs) {
  return std::abs(lhs - rhs) <=
         kIdentityRelTol * std::max(std::abs(lhs), std::abs(rhs)) +
             kIdentityAbsTol;
}

/// One elementary jump (w1, w2) -> (to_first, to_second) of a neighbour pair.
struct RateEntry {
  std::size_t from_first = 0;
  std::size_t from_second = 0;
  std::size_t to_first = 0;
  std::size_t to_second = 0;
  double rate = 0.0;

  friend bool operator==(const RateEntry&, const RateEntry&) = default;
};

struct Transition {
  std::size_t to_first = 0;
  std::size_t to_second = 0;
  double rate = 0.0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Finite-spin lattice model with n conserved integer quantities and
/// nearest-neighbour pair jump rates. Immutable after construction.
///
/// Only strictly positive rates are stored; they are indexed by the ordered
/// pair of source states.
class SpinModel {
 public:
  SpinModel(std::vector<std::string> states, std::size_t n_cons,
            std::vector<std::vector<int>> xi, std::vector<double> base_measure,
            const std::vector<RateEntry>& rates)
      : states_(std::move(states)),
        n_cons_(n_cons),
        base_measure_(std::move(base_measure)) {
    const std::size_t s = states_.size();
    if (s < 3) {
      throw SchemaError("states", "at least three local states are required");
    }
    for (std::size_t i = 0; i < s; ++i) {
      if (!index_.emplace(states_[i], i).second) {
        throw SchemaError("states", "duplicate label '" + states_[i] + "'");
      }
    }
    if (n_cons_ < 1) {
      throw SchemaError("n_cons", "must be at least 1");
    }
    if (xi.size() != s) {
      throw SchemaError("xi", "expected one row per state");
    }
    xi_.resize(s * n_cons_);
    for (std::size_t w = 0; w < s; ++w) {
      if (xi[w].size() != n_cons_) {
        throw SchemaError("xi", "row for state '" + states_[w] +
                                    "' must have n_cons entries");
      }
      std::copy(xi[w].begin(), xi[w].end(), xi_.begin() + w * n_cons_);
    }
    check_independence();

    if (base_measure_.size() != s) {
      throw SchemaError("base_measure", "expected one weight per state");
    }
    double total = 0.0;
    for (double p : base_measure_) {
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw SchemaError("base_measure", "weights must be positive and finite");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw SchemaError("base_measure",
                        "weights sum to " + std::to_string(total) + ", not 1");
    }

    pairs_.assign(s * s, {});
    pair_totals_.assign(s * s, 0.0);
    for (const auto& e : rates) {
      if (e.from_first >= s || e.from_second >= s || e.to_first >= s ||
          e.to_second >= s) {
        throw SchemaError("rates", "state index out of range");
      }
      if (!std::isfinite(e.rate) || e.rate < 0.0) {
        throw SchemaError("rates", "rates must be finite and nonnegative");
      }
      auto& list = pairs_[pair_index(e.from_first, e.from_second)];
      for (const auto& t : list) {
        if (t.to_first == e.to_first && t.to_second == e.to_second) {
          throw SchemaError("rates", "duplicate transition " +
                                         describe(e.from_first, e.from_second,
                                                  e.to_first, e.to_second));
        }
      }
      if (e.rate > 0.0) list.push_back({e.to_first, e.to_second, e.rate});
    }
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      auto& list = pairs_[p];
      std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
        return std::tie(a.to_first, a.to_second) <
               std::tie(b.to_first, b.to_second);
      });
      for (const auto& t : list) pair_totals_[p] += t.rate;
    }
  }

  std::size_t size() const noexcept { return states_.size(); }
  std::size_t n_cons() const noexcept { return n_cons_; }
  const std::vector<std::string>& states() const noexcept { return states_; }
  const std::string& label(std::size_t w) const { return states_.at(w); }

  std::size_t index_of(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) {
      throw SchemaError("states", "unknown state '" + std::string(label) + "'");
    }
    return it->second;
  }

  std::span<const int> xi(std::size_t w) const {
    return {xi_.data() + w * n_cons_, n_cons_};
  }
  int xi(std::size_t w, std::size_t k) const { return xi_[w * n_cons_ + k]; }

  /// |S| x n matrix of conserved-quantity values.
  Matrix xi_matrix() const {
    Matrix m(size(), n_cons_);
    for (std::size_t w = 0; w < size(); ++w)
      for (std::size_t k = 0; k < n_cons_; ++k) m(w, k) = xi(w, k);
    return m;
  }

  const std::vector<double>& base_measure() const noexcept {
    return base_measure_;
  }

  std::span<const Transition> transitions(std::size_t w1,
                                          std::size_t w2) const {
    return pairs_[pair_index(w1, w2)];
  }

  /// Total jump rate R(w1, w2) of a neighbour pair.
  double total_rate(std::size_t w1, std::size_t w2) const {
    return pair_totals_[pair_index(w1, w2)];
  }

  double rate(std::size_t w1, std::size_t w2, std::size_t w1p,
              std::size_t w2p) const {
    for (const auto& t : transitions(w1, w2)) {
      if (t.to_first == w1p && t.to_second == w2p) return t.rate;
    }
    return 0.0;
  }

  /// All positive rates in (from, to) lexicographic order.
  std::vector<RateEntry> rate_entries() const {
    std::vector<RateEntry> out;
    for (std::size_t w1 = 0; w1 < size(); ++w1)
      for (std::size_t w2 = 0; w2 < size(); ++w2)
        for (const auto& t : transitions(w1, w2))
          out.push_back({w1, w2, t.to_first, t.to_second, t.rate});
    return out;
  }

  std::string describe(std::size_t w1, std::size_t w2, std::size_t w1p,
                       std::size_t w2p) const {
    return "(" + states_[w1] + "," + states_[w2] + ")->(" + states_[w1p] +
           "," + states_[w2p] + ")";
  }

  friend bool operator==(const SpinModel& a, const SpinModel& b) {
    return a.states_ == b.states_ && a.n_cons_ == b.n_cons_ &&
           a.xi_ == b.xi_ && a.base_measure_ == b.base_measure_ &&
           a.pairs_ == b.pairs_;
  }

 private:
  std::size_t pair_index(std::size_t w1, std::size_t w2) const {
    return w1 * states_.size() + w2;
  }

  // xi rows together with the constant function must span n+1 dimensions.
  void check_independence() const {
    Matrix m(size(), n_cons_ + 1);
    for (std::size_t w = 0; w < size(); ++w) {
      for (std::size_t k = 0; k < n_cons_; ++k) m(w, k) = xi(w, k);
      m(w, n_cons_) = 1.0;
    }
    Eigen::FullPivLU<Matrix> lu(m);
    if (static_cast<std::size_t>(lu.rank()) != n_cons_ + 1) {
      throw SchemaError("xi",
                        "conserved quantities and the constant function are "
                        "linearly dependent");
    }
  }

  std::vector<std::string> states_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t n_cons_;
  std::vector<int> xi_;
  std::vector<double> base_measure_;
  std::vector<std::vector<Transition>> pairs_;
  std::vector<double> pair_totals_;
};

}  // namespace eulerlim
