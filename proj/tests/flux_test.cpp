#include <gtest/gtest.h>

#include <cmath>

#include "eulerlim/builtins.hpp"
#include "eulerlim/flux.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

using namespace eulerlim;
using testing_support::leroux_triangle;
using testing_support::vec;

namespace {

const SpinModel& leroux() {
  static const SpinModel m = leroux_model(1, 1);
  return m;
}
const SpinModel& brick() {
  static const SpinModel m = bricklayer_model(canonical_bricklayer_params());
  return m;
}
SpinModel broken_brick() {
  BricklayerParams p;
  p.p = 1;
  return bricklayer_model_unchecked(p);
}

/// One conserved quantity on three states, totally asymmetric exchange.
SpinModel single_law_model() {
  return SpinModel({"a", "b", "c"}, 1, {{0}, {1}, {2}}, {0.25, 0.5, 0.25},
                   {{0, 1, 1, 0, 1.0}, {1, 2, 2, 1, 1.0}, {0, 2, 2, 0, 1.0}});
}

double leroux_phi_closed_form(double a, double b, int w1, int w2) {
  return 0.5 * (w1 - w2) * (-(w1 - 1) * (1 + w2) - 2 * a * w1 * w2 + 2 * b * (1 + w1 * w2));
}
double leroux_psi_closed_form(double b, int w1, int w2) {
  return b * (w2 * w2 - w1 * w1) + 0.5 * (1 - w1) * (1 + w2) * (w1 + w2);
}

}  // namespace

TEST(MicroFlux, SingleExchange) {
  const auto m = leroux_model(0, 0);
  const Vector f = micro_flux(m, m.index_of("0"), m.index_of("1"));
  EXPECT_DOUBLE_EQ(f(0), -1.0);
  EXPECT_DOUBLE_EQ(f(1), 1.0);
}

TEST(MicroFlux, PairWithoutMovesIsZero) {
  const auto m = leroux_model(1, 1);
  for (const char* s : {"-1", "0", "1"}) {
    const auto w = m.index_of(s);
    EXPECT_EQ(micro_flux(m, w, w), Vector::Zero(2));
  }
}

TEST(MicroFlux, LerouxClosedFormOnAllPairs) {
  for (double a : {0.0, 1.0, 2.0}) {
    for (double b : {0.0, 1.0, 2.0}) {
      const auto m = leroux_model(a, b);
      for (int w1 = -1; w1 <= 1; ++w1) {
        for (int w2 = -1; w2 <= 1; ++w2) {
          const Vector f = micro_flux(m, m.index_of(std::to_string(w1)), m.index_of(std::to_string(w2)));
          EXPECT_NEAR(f(0), leroux_phi_closed_form(a, b, w1, w2), 1e-14);
          EXPECT_NEAR(f(1), leroux_psi_closed_form(b, w1, w2), 1e-14);
        }
      }
    }
  }
}

TEST(MicroFlux, BothFormsMustAgree) {
  const auto m = testing_support::with_extra(leroux_model(1, 1), {{"1", "-1", "0", "-1"}}, 1.0);
  EXPECT_THROW(micro_flux(m, m.index_of("1"), m.index_of("-1")), ConservationBroken);
}

TEST(MacroFlux, LerouxAtReferencePoint) {
  const double phi_xi[3][3] = {
      {oracle::kLerouxPhiXi_a0_b0, oracle::kLerouxPhiXi_a0_b1, oracle::kLerouxPhiXi_a0_b2},
      {oracle::kLerouxPhiXi_a1_b0, oracle::kLerouxPhiXi_a1_b1, oracle::kLerouxPhiXi_a1_b2},
      {oracle::kLerouxPhiXi_a2_b0, oracle::kLerouxPhiXi_a2_b1, oracle::kLerouxPhiXi_a2_b2}};
  const double phi_eta[3][3] = {
      {oracle::kLerouxPhiEta_a0_b0, oracle::kLerouxPhiEta_a0_b1, oracle::kLerouxPhiEta_a0_b2},
      {oracle::kLerouxPhiEta_a1_b0, oracle::kLerouxPhiEta_a1_b1, oracle::kLerouxPhiEta_a1_b2},
      {oracle::kLerouxPhiEta_a2_b0, oracle::kLerouxPhiEta_a2_b1, oracle::kLerouxPhiEta_a2_b2}};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const auto rep = macro_flux(leroux_model(a, b), vec({0.2, 0.5}));
      EXPECT_NEAR(rep.phi(0), phi_xi[a][b], 1e-12);
      EXPECT_NEAR(rep.phi(1), phi_eta[a][b], 1e-12);
      EXPECT_NEAR(rep.phi(0), -0.46, 1e-12);
      EXPECT_NEAR(rep.phi(1), 0.10, 1e-12);
    }
  }
}

TEST(MacroFlux, LerouxEtaComponentIsRhoU) {
  for (const auto& u : leroux_triangle(15)) {
    const auto rep = macro_flux(leroux(), u);
    EXPECT_NEAR(rep.phi(1), u(1) * u(0), 1e-12);
    EXPECT_NEAR(rep.phi(0), u(1) + u(0) * u(0) - 1.0, 1e-12);
  }
}

TEST(MacroFlux, BricklayerClosedForm) {
  for (const auto& m : {brick(), bricklayer_model([] {
                          BricklayerParams p;
                          p.a = 1;
                          p.d = 1;
                          p.p = 1;
                          return p;
                        }())}) {
    const auto r = macro_flux(m, vec({0.5, 0.5}));
    EXPECT_NEAR(r.phi(0), oracle::kBrickPhiZAt05_05, 1e-12);
    EXPECT_NEAR(r.phi(1), oracle::kBrickPhiNAt05_05, 1e-12);
    for (double u = -0.9; u <= 0.9; u += 0.15) {
      for (double rho = 0.05; rho <= 0.95; rho += 0.1) {
        const auto rep = macro_flux(m, vec({u, rho}));
        EXPECT_NEAR(rep.phi(0), (rho - 0.5) * (1 - u * u), 1e-12);
        EXPECT_NEAR(rep.phi(1), rho * (1 - rho) * u, 1e-12);
      }
    }
  }
  const auto r = macro_flux(brick(), vec({0.3, 0.7}));
  EXPECT_NEAR(r.phi(0), oracle::kBrickPhiZAt03_07, 1e-12);
  EXPECT_NEAR(r.phi(1), oracle::kBrickPhiNAt03_07, 1e-12);
}

TEST(MacroFlux, ThetaJacobianMatchesFiniteDifferences) {
  const double h = 1e-5;
  for (const auto* m : {&leroux(), &brick()}) {
    const MicroFluxTable table(*m);
    for (const auto& u : admissible_grid(*m, 6, 0.05)) {
      const auto rep = macro_flux(*m, u);
      for (int i = 0; i < 2; ++i) {
        Vector e = Vector::Zero(2);
        e(i) = h;
        const Vector fd = (macro_flux_at_theta(*m, table, rep.theta + e) -
                           macro_flux_at_theta(*m, table, rep.theta - e)) / (2 * h);
        for (int k = 0; k < 2; ++k) EXPECT_NEAR(fd(k), rep.jacobian_theta(k, i), 1e-7);
      }
    }
  }
}

TEST(MacroFlux, DensityJacobianMatchesFiniteDifferences) {
  const double h = 1e-5;
  for (const auto* m : {&leroux(), &brick()}) {
    for (const auto& u : admissible_grid(*m, 6, 0.05)) {
      const auto rep = macro_flux(*m, u);
      for (int i = 0; i < 2; ++i) {
        Vector e = Vector::Zero(2);
        e(i) = h;
        const Vector fd = (macro_flux(*m, u + e).phi - macro_flux(*m, u - e).phi) / (2 * h);
        for (int k = 0; k < 2; ++k) EXPECT_NEAR(fd(k), rep.jacobian_u(k, i), 1e-6);
      }
    }
  }
}

TEST(MacroFlux, ReflectionSymmetry) {
  for (const auto* m : {&leroux(), &brick()}) {
    for (const auto& u : admissible_grid(*m, 12, 0.02)) {
      const auto a = macro_flux(*m, u);
      const auto b = macro_flux(*m, vec({-u(0), u(1)}));
      EXPECT_NEAR(a.phi(0), b.phi(0), 1e-12);
      EXPECT_NEAR(a.phi(1), -b.phi(1), 1e-12);
    }
  }
}

TEST(Onsager, BuiltinsCertifyOnGrid) {
  EXPECT_LT(certify_onsager(leroux(), admissible_grid(leroux(), 20)), 1e-10);
  EXPECT_LT(certify_onsager(brick(), admissible_grid(brick(), 20)), 1e-10);
}

TEST(Onsager, BrokenRateCycleIsDetected) {
  const auto m = broken_brick();
  EXPECT_GT(certify_onsager(m, admissible_grid(m, 20)), 1e-3);
}

TEST(Hyperbolicity, LerouxSpeedsAtReferencePoint) {
  const auto h = hyperbolicity_report(leroux(), vec({0.0, 0.25}));
  EXPECT_NEAR(h.speeds(0), -0.5, 1e-10);
  EXPECT_NEAR(h.speeds(1), 0.5, 1e-10);
}

TEST(Hyperbolicity, LerouxSpeedsMatchAnalyticJacobian) {
  for (const auto& u : leroux_triangle(10)) {
    const auto h = hyperbolicity_report(leroux(), u);
    const double root = std::sqrt(u(0) * u(0) + 4 * u(1));
    EXPECT_NEAR(h.speeds(0), 0.5 * (3 * u(0) - root), 1e-9);
    EXPECT_NEAR(h.speeds(1), 0.5 * (3 * u(0) + root), 1e-9);
  }
}

TEST(Hyperbolicity, BricklayerSpeedsSymmetricAtCentre) {
  const auto h = hyperbolicity_report(brick(), vec({0.0, 0.5}));
  // Jacobian [[0, 1], [1/4, 0]] of the closed-form fluxes.
  EXPECT_NEAR(h.speeds(0), -0.5, 1e-10);
  EXPECT_NEAR(h.speeds(1), 0.5, 1e-10);
  EXPECT_NEAR(h.speeds(0), -h.speeds(1), 1e-12);
}

TEST(Hyperbolicity, RealSpeedsAndSymmetryOnGrid) {
  for (const auto* m : {&leroux(), &brick()}) {
    for (const auto& u : admissible_grid(*m, 30)) {
      const auto rep = macro_flux(*m, u);
      EXPECT_LT(rep.speeds_imag, 1e-10);
      EXPECT_LT(rep.sym_residual, 1e-10);
      const auto ev = general_eigenvalues(rep.jacobian_u);
      ASSERT_EQ(ev.size(), 2u);
      for (std::size_t k = 0; k < 2; ++k)
        EXPECT_NEAR(ev[k].real(), rep.speeds(static_cast<Eigen::Index>(k)), 1e-8);
    }
  }
}

TEST(LaxEntropy, ResidualVanishesOnGrids) {
  for (const auto* m : {&leroux(), &brick()})
    for (const auto& u : admissible_grid(*m, 20)) EXPECT_LT(lax_entropy_residual(*m, u), 1e-10);
}

TEST(LaxEntropy, SingleLawHasNoPairs) {
  const auto m = single_law_model();
  EXPECT_EQ(lax_entropy_residual(m, vec({1.0})), 0.0);
  EXPECT_EQ(lax_entropy_residual(m, vec({0.4})), 0.0);
}

TEST(Certificate, IdentitiesHoldOnGrid) {
  for (const auto* m : {&leroux(), &brick()}) {
    const auto c = certify_grid(*m, admissible_grid(*m, 30));
    EXPECT_GT(c.grid_size, 300u);
    EXPECT_LT(c.inverse_residual_max, 1e-10);
    EXPECT_LT(c.sym_residual_max, 1e-10);
    EXPECT_LT(c.lax_residual_max, 1e-10);
    EXPECT_LT(c.speeds_imag_max, 1e-10);
    EXPECT_GT(c.hessian_eigmin, 0.0);
    EXPECT_GT(c.speeds_min_gap, 0.0);
  }
}

TEST(Certificate, GridStaysInsideShrunkDomain) {
  for (const auto& u : admissible_grid(leroux(), 30)) {
    EXPECT_GE(u(1), 0.02 - 1e-12);
    EXPECT_LE(std::abs(u(0)), 1 - u(1) - 0.04 + 1e-12);
  }
}

TEST(FluxPotential, VanishesAtOrigin) {
  EXPECT_EQ(flux_potential(leroux(), Vector::Zero(2)), 0.0);
}

TEST(FluxPotential, MatchesReferenceQuadrature) {
  EXPECT_NEAR(flux_potential(leroux(), vec({0.3, -0.2})), oracle::kLerouxPotentialA1B1At03_m02, 1e-10);
  EXPECT_NEAR(flux_potential(leroux_model(0, 2), vec({0.3, -0.2})),
              oracle::kLerouxPotentialA0B2At03_m02, 1e-10);
}

TEST(FluxPotential, PathIndependence) {
  const Vector target = vec({0.3, -0.2});
  const double straight = flux_potential(leroux(), target);
  const double legs = flux_potential_along(leroux(), {Vector::Zero(2), vec({0.3, 0.0}), target});
  const double other = flux_potential_along(leroux(), {Vector::Zero(2), vec({0.0, -0.2}), target});
  EXPECT_NEAR(straight, legs, 1e-8);
  EXPECT_NEAR(straight, other, 1e-8);
  const Vector bt = vec({-0.4, 0.7});
  EXPECT_NEAR(flux_potential(brick(), bt),
              flux_potential_along(brick(), {Vector::Zero(2), vec({-0.4, 0.0}), bt}), 1e-8);
}

TEST(FluxPotential, GradientIsFlux) {
  const double h = 1e-4;
  for (const auto* m : {&leroux(), &brick()}) {
    for (const Vector& th : {vec({0.3, -0.2}), vec({-0.5, 0.4}), vec({1.0, 1.0})}) {
      const Vector phi = macro_flux_at_theta(*m, th);
      for (int i = 0; i < 2; ++i) {
        Vector e = Vector::Zero(2);
        e(i) = h;
        const double fd = (flux_potential(*m, th + e, 1e-13) - flux_potential(*m, th - e, 1e-13)) / (2 * h);
        EXPECT_NEAR(fd, phi(i), 1e-6);
      }
    }
  }
}

TEST(FluxPotential, BrokenModelIsPathDependent) {
  const auto m = broken_brick();
  const Vector t = vec({1.0, 1.0});
  const double straight = flux_potential(m, t);
  const double legs = flux_potential_along(m, {Vector::Zero(2), vec({1.0, 0.0}), t});
  EXPECT_GT(std::abs(straight - legs), 1e-4);
}
