#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "eulerlim/errors.hpp"
#include "eulerlim/model.hpp"
#include "eulerlim/profile.hpp"
#include "eulerlim/thermo.hpp"

namespace eulerlim {

/// SplitMix64 finalizer; derives independent stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x5851F42D4C957F2DULL));
}

/// Engine plus explicit conversions so streams are identical on every
/// standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

/// Binary indexed tree over blocks of kLeaf consecutive nonnegative weights.
/// Updates are O(log(N / kLeaf)); sampling descends the tree and then scans
/// one block, which keeps the hot part of the structure in cache.
class EventTree {
 public:
  static constexpr std::size_t kLeaf = 16;

  EventTree() = default;
  explicit EventTree(std::vector<double> weights) : weights_(std::move(weights)) {
    rebuild();
  }

  std::size_t size() const noexcept { return weights_.size(); }
  double weight(std::size_t j) const { return weights_[j]; }
  double total() const noexcept { return total_; }

  void update(std::size_t j, double w) {
    const double delta = w - weights_[j];
    if (delta == 0.0) return;
    weights_[j] = w;
    total_ += delta;
    propagate(j / kLeaf, delta);
  }

  /// Several updates at once; changes that fall into the same block share
  /// one pass up the tree.
  template <std::size_t K>
  void update(const std::array<std::size_t, K>& idx, const std::array<double, K>& w) {
    std::size_t block = tree_.size();
    double pending = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double delta = w[k] - weights_[idx[k]];
      if (delta == 0.0) continue;
      weights_[idx[k]] = w[k];
      total_ += delta;
      const std::size_t b = idx[k] / kLeaf;
      if (b != block) {
        if (pending != 0.0) propagate(block, pending);
        block = b;
        pending = 0.0;
      }
      pending += delta;
    }
    if (pending != 0.0) propagate(block, pending);
  }

  /// Index j with prefix(j) <= target < prefix(j + 1); `target` is replaced by
  /// the offset inside weight j.
  std::size_t find(double& target) const {
    std::size_t pos = 0;
    const std::size_t blocks = tree_.size() - 1;
    for (std::size_t step = top_; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next <= blocks && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    if (pos >= blocks) pos = blocks - 1;
    std::size_t j = pos * kLeaf;
    const std::size_t last = std::min(j + kLeaf, weights_.size()) - 1;
    while (j < last && target >= weights_[j]) target -= weights_[j++];
    return j;
  }

  /// Exact sum of the stored weights.
  double exact_total() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

  void rebuild() {
    const std::size_t blocks = (weights_.size() + kLeaf - 1) / kLeaf;
    tree_.assign(blocks + 1, 0.0);
    for (std::size_t j = 0; j < weights_.size(); ++j) tree_[j / kLeaf + 1] += weights_[j];
    for (std::size_t i = 1; i <= blocks; ++i) {
      const std::size_t parent = i + (i & (~i + 1));
      if (parent <= blocks) tree_[parent] += tree_[i];
    }
    total_ = exact_total();
    top_ = blocks == 0 ? 0 : std::bit_floor(blocks);
  }

 private:
  void propagate(std::size_t block, double delta) {
    for (std::size_t i = block + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }

  std::vector<double> weights_;
  std::vector<double> tree_;
  double total_ = 0.0;
  std::size_t top_ = 0;
};

/// A microscopic configuration on the discrete torus of N sites.
struct LatticeConfig {
  std::vector<std::uint32_t> omega;
  std::vector<long> totals;
  double micro_time = 0.0;
  std::uint64_t events = 0;

  std::size_t sites() const noexcept { return omega.size(); }
  friend bool operator==(const LatticeConfig&, const LatticeConfig&) = default;
};

inline std::vector<long> conserved_totals(const SpinModel& model,
                                          const std::vector<std::uint32_t>& omega) {
  std::vector<long> totals(model.n_cons(), 0);
  for (auto w : omega)
    for (std::size_t k = 0; k < model.n_cons(); ++k) totals[k] += model.xi(w, k);
  return totals;
}

/// Draws site j independently from the canonical single-site measure with
/// density profile(j / N).
inline LatticeConfig sample_local_equilibrium(
    const SpinModel& model, const std::function<Vector(double)>& profile,
    std::size_t n_sites, std::uint64_t seed) {
  Rng rng(seed);
  LatticeConfig cfg;
  cfg.omega.resize(n_sites);
  Vector last_u;
  std::vector<double> weights;
  InversionOptions opts;
  for (std::size_t j = 0; j < n_sites; ++j) {
    const Vector u = profile(static_cast<double>(j) / static_cast<double>(n_sites));
    if (last_u.size() != u.size() || last_u != u) {
      DensityPoint dp;
      try {
        dp = invert_densities(model, u, opts);
      } catch (const OutsideDomain& e) {
        throw OutsideDomain("site " + std::to_string(j) + ": " + e.what());
      }
      opts.start = dp.theta;
      weights = canonical_point(model, dp.theta).single_site_weights;
      last_u = u;
    }
    double v = rng.uniform();
    std::uint32_t w = 0;
    while (w + 1 < weights.size() && v >= weights[w]) v -= weights[w++];
    cfg.omega[j] = w;
  }
  cfg.totals = conserved_totals(model, cfg.omega);
  return cfg;
}

struct EvolveOptions {
  /// Events between exact rebuilds of the event tree.
  std::uint64_t rebuild_interval = 10'000'000;
  /// When nonzero, conserved totals are recomputed and checked this often.
  std::uint64_t check_interval = 0;
};

/// Gillespie direct-method evolution for N * macro_duration microscopic time
/// units. The configuration at the horizon is the one before the first event
/// past it.
inline LatticeConfig evolve(const SpinModel& model, LatticeConfig cfg,
                            double macro_duration, std::uint64_t seed,
                            const EvolveOptions& opts = {}) {
  const std::size_t n_sites = cfg.sites();
  const std::size_t s = model.size();
  if (n_sites < 2) throw Error("lattice needs at least two sites");
  if (macro_duration <= 0.0) return cfg;

  // Flattened per-pair cumulative target tables.
  struct Target {
    std::uint32_t first, second;
    double cumulative;
  };
  std::vector<Target> targets;
  std::vector<std::uint32_t> target_begin(s * s + 1, 0);
  std::vector<double> pair_rate(s * s);
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = 0; b < s; ++b) {
      double acc = 0.0;
      target_begin[a * s + b] = static_cast<std::uint32_t>(targets.size());
      for (const auto& t : model.transitions(a, b)) {
        acc += t.rate;
        targets.push_back({static_cast<std::uint32_t>(t.to_first),
                           static_cast<std::uint32_t>(t.to_second), acc});
      }
      pair_rate[a * s + b] = model.total_rate(a, b);
    }
  }
  target_begin[s * s] = static_cast<std::uint32_t>(targets.size());
  const std::size_t n_cons = model.n_cons();
  std::vector<int> xi(s * n_cons);
  for (std::size_t w = 0; w < s; ++w)
    for (std::size_t k = 0; k < n_cons; ++k) xi[w * n_cons + k] = model.xi(w, k);

  auto& omega = cfg.omega;
  auto right_of = [n_sites](std::size_t j) { return j + 1 == n_sites ? 0 : j + 1; };
  auto bond_rate = [&](std::size_t j) { return pair_rate[omega[j] * s + omega[right_of(j)]]; };
  std::vector<double> rates(n_sites);
  for (std::size_t j = 0; j < n_sites; ++j) rates[j] = bond_rate(j);
  EventTree tree(std::move(rates));

  Rng rng(seed);
  const double horizon = cfg.micro_time + static_cast<double>(n_sites) * macro_duration;
  std::uint64_t since_rebuild = 0;
  while (true) {
    const double total = tree.total();
    if (!(total > 0.0)) throw StalledDynamics(horizon - cfg.micro_time);
    const double wait = rng.exponential(total);
    if (cfg.micro_time + wait > horizon) {
      cfg.micro_time = horizon;
      break;
    }
    cfg.micro_time += wait;

    std::size_t j;
    double offset;
    do {
      offset = rng.uniform() * total;
      j = tree.find(offset);
    } while (tree.weight(j) <= 0.0);
    const std::size_t r = right_of(j);
    const std::size_t pair = omega[j] * s + omega[r];
    const double pick = std::min(offset, tree.weight(j));
    std::size_t t = target_begin[pair];
    while (t + 1 < target_begin[pair + 1] && pick >= targets[t].cumulative) ++t;

    const std::uint32_t old_first = omega[j], old_second = omega[r];
    omega[j] = targets[t].first;
    omega[r] = targets[t].second;
    for (std::size_t k = 0; k < n_cons; ++k) {
      cfg.totals[k] += xi[omega[j] * n_cons + k] + xi[omega[r] * n_cons + k] -
                       xi[old_first * n_cons + k] - xi[old_second * n_cons + k];
    }
    const std::size_t l = j == 0 ? n_sites - 1 : j - 1;
    tree.update(std::array<std::size_t, 3>{l, j, r},
                std::array<double, 3>{bond_rate(l), bond_rate(j), bond_rate(r)});
    ++cfg.events;

    if (++since_rebuild >= opts.rebuild_interval) {
      tree.rebuild();
      since_rebuild = 0;
    }
    if (opts.check_interval && cfg.events % opts.check_interval == 0 &&
        conserved_totals(model, omega) != cfg.totals) {
      throw ConservationBroken("conserved totals drifted during evolution");
    }
  }
  return cfg;
}

/// Componentwise block means of xi over consecutive blocks of l sites.
inline Profile block_average(const SpinModel& model, const LatticeConfig& cfg,
                             std::size_t l) {
  const std::size_t n_sites = cfg.sites();
  if (l == 0 || n_sites % l != 0) {
    throw BadBlockSize("block size " + std::to_string(l) + " does not divide " +
                       std::to_string(n_sites));
  }
  Profile p(n_sites / l, model.n_cons(), cfg.micro_time / static_cast<double>(n_sites));
  for (std::size_t k = 0; k < p.n_cells(); ++k) {
    for (std::size_t c = 0; c < model.n_cons(); ++c) {
      long sum = 0;
      for (std::size_t j = k * l; j < (k + 1) * l; ++j) sum += model.xi(cfg.omega[j], c);
      p.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) =
          static_cast<double>(sum) / static_cast<double>(l);
    }
  }
  return p;
}

}  // namespace eulerlim
