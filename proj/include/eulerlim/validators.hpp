#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "eulerlim/model.hpp"

namespace eulerlim {

enum class Condition { A, B, C, D };

inline const char* to_string(Condition c) {
  switch (c) {
    case Condition::A: return "A";
    case Condition::B: return "B";
    case Condition::C: return "C";
    case Condition::D: return "D";
  }
  return "?";
}

/// A counterexample: the states involved and the size of the mismatch.
struct Witness {
  std::vector<std::string> states;
  double mismatch = 0.0;
};

struct ValidationReport {
  Condition condition;
  std::vector<Witness> witnesses;

  bool passed() const noexcept { return witnesses.empty(); }
};

/// Every positive-rate jump preserves xi(w1) + xi(w2) componentwise.
inline ValidationReport validate_conservation(const SpinModel& model) {
  ValidationReport report{Condition::A, {}};
  for (const auto& e : model.rate_entries()) {
    double worst = 0.0;
    for (std::size_t k = 0; k < model.n_cons(); ++k) {
      const int before = model.xi(e.from_first, k) + model.xi(e.from_second, k);
      const int after = model.xi(e.to_first, k) + model.xi(e.to_second, k);
      worst = std::max(worst, std::abs(double(before - after)));
    }
    if (worst > 0.0) {
      report.witnesses.push_back(
          {{model.label(e.from_first), model.label(e.from_second),
            model.label(e.to_first), model.label(e.to_second)},
           worst});
    }
  }
  return report;
}

/// pi(w1) pi(w2) r(w1,w2;w1',w2') == pi(w2') pi(w1') r(w2',w1';w2,w1).
///
/// The map between the two sides is an involution on quadruples, so visiting
/// every positive entry covers every quadruple with a nonzero side.
inline ValidationReport validate_stationarity(const SpinModel& model) {
  ValidationReport report{Condition::C, {}};
  const auto& pi = model.base_measure();
  for (const auto& e : model.rate_entries()) {
    const double lhs = pi[e.from_first] * pi[e.from_second] * e.rate;
    const double rhs =
        pi[e.to_second] * pi[e.to_first] *
        model.rate(e.to_second, e.to_first, e.from_second, e.from_first);
    if (!identity_close(lhs, rhs)) {
      report.witnesses.push_back(
          {{model.label(e.from_first), model.label(e.from_second),
            model.label(e.to_first), model.label(e.to_second)},
           std::abs(lhs - rhs)});
    }
  }
  return report;
}

/// R(1,2)+R(2,3)+R(3,1) == R(1,3)+R(3,2)+R(2,1) for every triple.
inline ValidationReport validate_rate_cycle(const SpinModel& model) {
  ValidationReport report{Condition::D, {}};
  const std::size_t s = model.size();
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = 0; b < s; ++b) {
      for (std::size_t c = 0; c < s; ++c) {
        const double forward = model.total_rate(a, b) + model.total_rate(b, c) +
                               model.total_rate(c, a);
        const double backward = model.total_rate(a, c) +
                                model.total_rate(c, b) + model.total_rate(b, a);
        if (!identity_close(forward, backward)) {
          report.witnesses.push_back(
              {{model.label(a), model.label(b), model.label(c)},
               std::abs(forward - backward)});
        }
      }
    }
  }
  return report;
}

}  // namespace eulerlim
