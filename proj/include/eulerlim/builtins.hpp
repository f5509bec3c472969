#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "eulerlim/errors.hpp"
#include "eulerlim/model.hpp"

namespace eulerlim {

/// Three-state exchange model on S = {-1, 0, 1} with xi = w and
/// eta = 1 - |w|. `c` sets the time scale of the asymmetric part.
inline SpinModel leroux_model(double a, double b, double c) {
  if (!(a >= 0.0) || !(b >= 0.0) || !(c >= 0.0)) {
    throw NegativeRate("Leroux parameters must be nonnegative");
  }
  // Index 0 = -1, 1 = 0, 2 = +1.
  constexpr std::size_t M = 0, Z = 1, P = 2;
  std::vector<RateEntry> rates = {
      {P, M, M, P, a},     {M, P, P, M, 2 * c + a},
      {Z, M, M, Z, b},     {M, Z, Z, M, c + b},
      {P, Z, Z, P, b},     {Z, P, P, Z, c + b},
  };
  const double third = 1.0 / 3.0;
  return SpinModel({"-1", "0", "1"}, 2, {{-1, 0}, {0, 1}, {1, 0}},
                   {third, third, 1.0 - 2.0 * third}, rates);
}

inline SpinModel leroux_model(double a, double b) {
  return leroux_model(a, b, 1.0);
}

/// Free parameters of the four-state bricklayer family. The rate `s` is tied
/// to `r` by stationarity and therefore has no field of its own.
struct BricklayerParams {
  double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;
  double p = 0, q = 0, r = 0, x = 0, y = 0;
};

/// Parameter set used throughout the tests and the CLI: p - q = 1 and
/// gamma = (a - b) / 2 = 1/2, with enough cross rates for irreducibility.
inline BricklayerParams canonical_bricklayer_params() {
  BricklayerParams prm;
  prm.a = 1;
  prm.d = 1;
  prm.p = 1;
  prm.e = prm.f = prm.r = prm.x = prm.y = 1;
  return prm;
}

namespace detail {
inline void require_nonnegative(const BricklayerParams& prm) {
  for (double v : {prm.a, prm.b, prm.c, prm.d, prm.e, prm.f, prm.p, prm.q,
                   prm.r, prm.x, prm.y}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw NegativeRate("bricklayer parameters must be nonnegative");
    }
  }
}
}  // namespace detail

/// Builds the model without checking the rate-cycle identities. Used to
/// construct counterexamples; prefer `bricklayer_model`.
inline SpinModel bricklayer_model_unchecked(const BricklayerParams& prm) {
  detail::require_nonnegative(prm);
  // States (n, z): index 0 = (0,-), 1 = (0,+), 2 = (1,-), 3 = (1,+).
  constexpr std::size_t A = 0, B = 1, C = 2, D = 3;
  const double s = prm.r;
  std::vector<RateEntry> rates = {
      {A, B, B, A, prm.a}, {B, A, A, B, prm.b},
      {C, D, D, C, prm.c}, {D, C, C, D, prm.d},
      {A, D, B, C, prm.e}, {C, B, D, A, prm.e},
      {B, C, A, D, prm.f}, {D, A, C, B, prm.f},
      {A, C, C, A, prm.p}, {D, B, B, D, prm.p},
      {B, D, D, B, prm.q}, {C, A, A, C, prm.q},
      {B, C, D, A, prm.r}, {D, A, B, C, prm.r},
      {A, D, C, B, s},     {C, B, A, D, s},
      {A, D, D, A, prm.x}, {C, B, B, C, prm.x},
      {B, C, C, B, prm.y}, {D, A, A, D, prm.y},
  };
  return SpinModel({"0-", "0+", "1-", "1+"}, 2,
                   {{-1, 0}, {1, 0}, {-1, 1}, {1, 1}},
                   {0.25, 0.25, 0.25, 0.25}, rates);
}

/// Four-state model on S = {0,1} x {-1,1} with xi = z and eta = n.
inline SpinModel bricklayer_model(const BricklayerParams& prm) {
  detail::require_nonnegative(prm);
  auto check = [](const char* identity, double lhs, double rhs) {
    if (!identity_close(lhs, rhs)) {
      throw ConstraintViolated(identity, std::to_string(lhs) +
                                             " != " + std::to_string(rhs));
    }
  };
  check("c+f+p+y = d+e+q+x", prm.c + prm.f + prm.p + prm.y,
        prm.d + prm.e + prm.q + prm.x);
  check("a+f+q+y = b+e+p+x", prm.a + prm.f + prm.q + prm.y,
        prm.b + prm.e + prm.p + prm.x);
  return bricklayer_model_unchecked(prm);
}

}  // namespace eulerlim
