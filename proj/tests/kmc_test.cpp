#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "eulerlim/builtins.hpp"
#include "eulerlim/kmc.hpp"
#include "support.hpp"

using namespace eulerlim;
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

std::function<Vector(double)> constant(const Vector& u) {
  return [u](double) { return u; };
}

std::vector<double> frequencies(const SpinModel& m, const LatticeConfig& cfg) {
  std::vector<double> f(m.size(), 0.0);
  for (auto w : cfg.omega) f[w] += 1.0;
  for (auto& x : f) x /= static_cast<double>(cfg.sites());
  return f;
}

void expect_marginals(const SpinModel& m, const LatticeConfig& cfg, const std::vector<double>& p) {
  const auto f = frequencies(m, cfg);
  const double n = static_cast<double>(cfg.sites());
  for (std::size_t w = 0; w < m.size(); ++w)
    EXPECT_LT(std::abs(f[w] - p[w]), 4 * std::sqrt(p[w] * (1 - p[w]) / n)) << m.label(w);
}

double expected_pair_rate(const SpinModel& m, const std::vector<double>& p) {
  double r = 0.0;
  for (std::size_t a = 0; a < m.size(); ++a)
    for (std::size_t b = 0; b < m.size(); ++b) r += p[a] * p[b] * m.total_rate(a, b);
  return r;
}

}  // namespace

TEST(EventTree, FindMatchesLinearScan) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> d(0, 2);
  for (std::size_t n : {1u, 2u, 15u, 16u, 17u, 100u, 1000u}) {
    std::vector<double> w(n);
    for (auto& x : w) x = d(gen) < 0.5 ? 0.0 : d(gen);
    w[n - 1] = 1.0;
    EventTree tree(w);
    for (int k = 0; k < 200; ++k) {
      // Random updates keep the tree honest.
      const std::size_t j = gen() % n;
      w[j] = d(gen);
      tree.update(j, w[j]);
      double total = 0.0;
      for (double x : w) total += x;
      EXPECT_NEAR(tree.total(), total, 1e-12);
      const double target = d(gen) / 2 * total;
      double t = target;
      const std::size_t got = tree.find(t);
      double acc = 0.0;
      std::size_t expect = 0;
      while (expect + 1 < n && acc + w[expect] <= target) acc += w[expect++];
      EXPECT_EQ(got, expect);
      EXPECT_NEAR(t, target - acc, 1e-9);
    }
  }
}

TEST(EventTree, BatchedUpdateEqualsSingleUpdates) {
  std::vector<double> w(40, 1.0);
  EventTree a(w), b(w);
  a.update(std::array<std::size_t, 3>{15, 16, 17}, std::array<double, 3>{0.5, 2.0, 0.0});
  b.update(15, 0.5);
  b.update(16, 2.0);
  b.update(17, 0.0);
  for (double target : {0.0, 14.9, 15.2, 15.6, 17.4, 30.0, 38.4}) {
    double ta = target, tb = target;
    EXPECT_EQ(a.find(ta), b.find(tb));
    EXPECT_DOUBLE_EQ(ta, tb);
  }
  EXPECT_DOUBLE_EQ(a.total(), b.total());
  a.rebuild();
  EXPECT_DOUBLE_EQ(a.total(), a.exact_total());
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(1);
  double sum = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 4 * std::sqrt(1.0 / 12 / 100000));
  Rng r2(2);
  double esum = 0.0;
  for (int k = 0; k < 100000; ++k) esum += r2.exponential(4.0);
  EXPECT_NEAR(esum / 100000, 0.25, 4 * 0.25 / std::sqrt(100000.0));
}

TEST(Seeds, StreamsAreDistinct) {
  EXPECT_NE(stream_seed(1, 0), stream_seed(1, 1));
  EXPECT_NE(stream_seed(1, 0), stream_seed(2, 0));
  EXPECT_EQ(stream_seed(5, 9), stream_seed(5, 9));
}

TEST(Sampling, BasePointMatchesBaseMeasure) {
  const auto cfg = sample_local_equilibrium(leroux(), constant(vec({0.0, 1.0 / 3.0})), 1'000'000, 17);
  expect_marginals(leroux(), cfg, leroux().base_measure());
  const auto cb = sample_local_equilibrium(brick(), constant(vec({0.0, 0.5})), 1'000'000, 18);
  expect_marginals(brick(), cb, brick().base_measure());
}

TEST(Sampling, LerouxZeroFractionIsRho) {
  const std::size_t n = 200'000;
  const auto cfg = sample_local_equilibrium(leroux(), constant(vec({0.0, 0.5})), n, 4);
  const double zeros = frequencies(leroux(), cfg)[leroux().index_of("0")];
  EXPECT_LT(std::abs(zeros - 0.5), 4 * std::sqrt(0.25 / n));
}

TEST(Sampling, SeedDeterminesConfiguration) {
  const auto f = [](double x) { return vec({0.1 * std::sin(2 * M_PI * x), 0.4}); };
  const auto a = sample_local_equilibrium(leroux(), f, 5000, 1);
  const auto b = sample_local_equilibrium(leroux(), f, 5000, 1);
  const auto c = sample_local_equilibrium(leroux(), f, 5000, 2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.omega, c.omega);
  EXPECT_EQ(a.totals, conserved_totals(leroux(), a.omega));
}

TEST(Sampling, RejectsInadmissibleProfile) {
  EXPECT_THROW(sample_local_equilibrium(leroux(), constant(vec({0.8, 0.5})), 10, 1), OutsideDomain);
}

TEST(Evolve, TotalsConservedExactly) {
  for (const auto* m : {&leroux(), &brick()}) {
    const auto f = [](double x) { return vec({0.2 * std::sin(2 * M_PI * x), 0.45}); };
    auto cfg = sample_local_equilibrium(*m, f, 3000, 9);
    const auto before = cfg.totals;
    EvolveOptions opts;
    opts.check_interval = 100'000;
    opts.rebuild_interval = 50'000;
    cfg = evolve(*m, cfg, 0.1, 10, opts);
    EXPECT_GT(cfg.events, 100'000u);
    EXPECT_EQ(cfg.totals, before);
    EXPECT_EQ(conserved_totals(*m, cfg.omega), before);
  }
}

TEST(Evolve, ZeroDurationIsIdentity) {
  const auto cfg = sample_local_equilibrium(leroux(), constant(vec({0.0, 0.4})), 500, 3);
  EXPECT_EQ(evolve(leroux(), cfg, 0.0, 4), cfg);
}

TEST(Evolve, ReproducibleBitForBit) {
  const auto cfg = sample_local_equilibrium(brick(), constant(vec({0.1, 0.4})), 1000, 3);
  const auto a = evolve(brick(), cfg, 0.2, 77);
  const auto b = evolve(brick(), cfg, 0.2, 77);
  const auto c = evolve(brick(), cfg, 0.2, 78);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.omega, c.omega);
}

TEST(Evolve, MicroTimeFollowsEulerianScaling) {
  const auto cfg = sample_local_equilibrium(leroux(), constant(vec({0.0, 0.4})), 400, 3);
  const auto out = evolve(leroux(), cfg, 0.25, 1);
  EXPECT_DOUBLE_EQ(out.micro_time, 100.0);
  EXPECT_DOUBLE_EQ(block_average(leroux(), out, 400).time, 0.25);
}

TEST(Evolve, EventCountMatchesMeanRate) {
  for (const auto* m : {&leroux(), &brick()}) {
    const Vector u = vec({0.1, 0.4});
    const auto p = canonical_point(*m, invert_densities(*m, u).theta).single_site_weights;
    const std::size_t n = 10'000;
    const double t = 0.05;
    const auto out = evolve(*m, sample_local_equilibrium(*m, constant(u), n, 5), t, 6);
    const double expected = static_cast<double>(n) * (static_cast<double>(n) * t) * expected_pair_rate(*m, p);
    EXPECT_NEAR(static_cast<double>(out.events) / expected, 1.0, 0.1);
  }
}

TEST(Evolve, EquilibriumMarginalsAreStationary) {
  const Vector u = vec({0.2, 0.4});
  const auto p = canonical_point(brick(), invert_densities(brick(), u).theta).single_site_weights;
  const auto out = evolve(brick(), sample_local_equilibrium(brick(), constant(u), 4000, 21), 1.0, 22);
  expect_marginals(brick(), out, p);
  // Nearest-neighbour pairs stay product-distributed.
  const double n = static_cast<double>(out.sites());
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      double count = 0;
      for (std::size_t j = 0; j < out.sites(); ++j)
        count += out.omega[j] == a && out.omega[(j + 1) % out.sites()] == b;
      const double q = p[a] * p[b];
      EXPECT_LT(std::abs(count / n - q), 4.5 * std::sqrt(q * (1 - q) / n));
    }
  }
}

TEST(Evolve, EquilibriumProfileHasNoSpatialTrend) {
  const std::size_t n = 2000, l = 50;
  auto cfg = sample_local_equilibrium(leroux(), constant(vec({0.1, 0.4})), n, 31);
  Matrix acc = Matrix::Zero(n / l, 2);
  const int rounds = 20;
  for (int r = 0; r < rounds; ++r) {
    cfg = evolve(leroux(), std::move(cfg), 0.01, 100 + r);
    acc += block_average(leroux(), cfg, l).values;
  }
  acc /= rounds;
  const Eigen::Index k = acc.rows();
  Vector x(k);
  for (Eigen::Index i = 0; i < k; ++i) x(i) = (i + 0.5) / static_cast<double>(k);
  const double xm = x.mean();
  const double sxx = (x.array() - xm).square().sum();
  for (Eigen::Index c = 0; c < 2; ++c) {
    const Vector y = acc.col(c);
    const double slope = ((x.array() - xm) * (y.array() - y.mean())).sum() / sxx;
    const Vector resid = (y.array() - y.mean() - slope * (x.array() - xm)).matrix();
    const double se = std::sqrt(resid.squaredNorm() / static_cast<double>(k - 2) / sxx);
    EXPECT_LT(std::abs(slope), 4 * se);
  }
}

TEST(Evolve, StalledDynamicsIsReported) {
  const auto m = leroux_model(0, 0, 0);
  const auto cfg = sample_local_equilibrium(m, constant(vec({0.0, 0.4})), 100, 1);
  EXPECT_THROW(evolve(m, cfg, 0.1, 1), StalledDynamics);
}

TEST(BlockAverage, WholeLatticeIsTotalsOverN) {
  const auto cfg = sample_local_equilibrium(leroux(), constant(vec({0.1, 0.4})), 600, 2);
  const auto p = block_average(leroux(), cfg, 600);
  ASSERT_EQ(p.n_cells(), 1u);
  EXPECT_DOUBLE_EQ(p.values(0, 0), cfg.totals[0] / 600.0);
  EXPECT_DOUBLE_EQ(p.values(0, 1), cfg.totals[1] / 600.0);
}

TEST(BlockAverage, UnitBlocksAreRawValues) {
  const auto cfg = sample_local_equilibrium(brick(), constant(vec({0.1, 0.4})), 64, 2);
  const auto p = block_average(brick(), cfg, 1);
  for (std::size_t j = 0; j < 64; ++j)
    for (std::size_t c = 0; c < 2; ++c)
      EXPECT_EQ(p.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)), brick().xi(cfg.omega[j], c));
}

TEST(BlockAverage, UniformConfiguration) {
  LatticeConfig cfg;
  cfg.omega.assign(120, static_cast<std::uint32_t>(brick().index_of("1-")));
  cfg.totals = conserved_totals(brick(), cfg.omega);
  const auto p = block_average(brick(), cfg, 8);
  EXPECT_EQ(p.n_cells(), 15u);
  EXPECT_TRUE((p.values.col(0).array() == -1.0).all());
  EXPECT_TRUE((p.values.col(1).array() == 1.0).all());
}

TEST(BlockAverage, RejectsNonDivisor) {
  const auto cfg = sample_local_equilibrium(leroux(), constant(vec({0.1, 0.4})), 100, 2);
  EXPECT_THROW(block_average(leroux(), cfg, 7), BadBlockSize);
  EXPECT_THROW(block_average(leroux(), cfg, 0), BadBlockSize);
}
