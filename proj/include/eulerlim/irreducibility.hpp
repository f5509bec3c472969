#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eulerlim/model.hpp"
#include "eulerlim/validators.hpp"

namespace eulerlim {

inline constexpr std::uint64_t kMaxEnumeratedConfigurations = 10'000'000;

/// One set of configurations sharing the same conserved totals.
struct ConservedClass {
  std::vector<long> totals;
  std::size_t size = 0;
  bool strongly_connected = false;
  /// Labels of a configuration not mutually reachable with the first member.
  std::vector<std::string> unreachable_example;
};

/// Exhaustively partitions the periodic torus of `n_sites` sites by conserved
/// totals and tests strong connectivity of the positive-rate jump graph inside
/// each class. This is a finite certificate for one torus size only.
inline std::vector<ConservedClass> conserved_classes(const SpinModel& model,
                                                     std::size_t n_sites) {
  if (n_sites < 3) throw SizeExceeded("irreducibility check needs >= 3 sites");
  const std::size_t s = model.size();
  std::uint64_t count = 1;
  std::vector<std::uint64_t> power(n_sites + 1, 1);
  for (std::size_t j = 0; j < n_sites; ++j) {
    if (count * s > kMaxEnumeratedConfigurations) {
      throw SizeExceeded("|S|^n_sites exceeds the enumeration limit of 1e7");
    }
    count *= s;
    power[j + 1] = count;
  }

  auto digit = [&](std::uint64_t code, std::size_t j) {
    return static_cast<std::size_t>((code / power[j]) % s);
  };

  // Reverse jump table: for each target pair, the source pairs reaching it.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> sources(s * s);
  for (const auto& e : model.rate_entries()) {
    sources[e.to_first * s + e.to_second].emplace_back(e.from_first,
                                                       e.from_second);
  }

  std::map<std::vector<long>, std::uint32_t> class_of_totals;
  std::vector<std::uint32_t> class_id(count);
  std::vector<std::vector<std::uint64_t>> members;
  std::vector<std::vector<long>> class_totals;
  std::vector<long> totals(model.n_cons());
  for (std::uint64_t code = 0; code < count; ++code) {
    std::fill(totals.begin(), totals.end(), 0);
    for (std::size_t j = 0; j < n_sites; ++j) {
      const auto w = digit(code, j);
      for (std::size_t k = 0; k < model.n_cons(); ++k) totals[k] += model.xi(w, k);
    }
    auto [it, inserted] = class_of_totals.emplace(
        totals, static_cast<std::uint32_t>(members.size()));
    if (inserted) {
      members.emplace_back();
      class_totals.push_back(totals);
    }
    class_id[code] = it->second;
    members[it->second].push_back(code);
  }

  auto replace_pair = [&](std::uint64_t code, std::size_t j, std::size_t a,
                          std::size_t b) {
    const std::size_t k = (j + 1) % n_sites;
    code -= digit(code, j) * power[j];
    code += a * power[j];
    code -= digit(code, k) * power[k];
    code += b * power[k];
    return code;
  };

  std::vector<std::uint32_t> seen_fwd(count, 0), seen_bwd(count, 0);
  std::vector<ConservedClass> result;
  std::vector<std::uint64_t> stack;
  for (std::uint32_t c = 0; c < members.size(); ++c) {
    const std::uint32_t stamp = c + 1;
    const std::uint64_t root = members[c].front();
    for (int direction = 0; direction < 2; ++direction) {
      auto& seen = direction == 0 ? seen_fwd : seen_bwd;
      stack.assign(1, root);
      seen[root] = stamp;
      while (!stack.empty()) {
        const std::uint64_t code = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < n_sites; ++j) {
          const auto w1 = digit(code, j);
          const auto w2 = digit(code, (j + 1) % n_sites);
          auto visit = [&](std::size_t a, std::size_t b) {
            const auto next = replace_pair(code, j, a, b);
            if (class_id[next] == c && seen[next] != stamp) {
              seen[next] = stamp;
              stack.push_back(next);
            }
          };
          if (direction == 0) {
            for (const auto& t : model.transitions(w1, w2))
              visit(t.to_first, t.to_second);
          } else {
            for (const auto& [a, b] : sources[w1 * s + w2]) visit(a, b);
          }
        }
      }
    }
    ConservedClass info{class_totals[c], members[c].size(), true, {}};
    for (const auto code : members[c]) {
      if (seen_fwd[code] != stamp || seen_bwd[code] != stamp) {
        info.strongly_connected = false;
        for (std::size_t j = 0; j < n_sites; ++j)
          info.unreachable_example.push_back(model.label(digit(code, j)));
        break;
      }
    }
    result.push_back(std::move(info));
  }
  return result;
}

inline ValidationReport check_irreducibility(const SpinModel& model,
                                             std::size_t n_sites) {
  ValidationReport report{Condition::B, {}};
  for (const auto& cls : conserved_classes(model, n_sites)) {
    if (!cls.strongly_connected) {
      report.witnesses.push_back(
          {cls.unreachable_example, static_cast<double>(cls.size)});
    }
  }
  return report;
}

}  // namespace eulerlim
