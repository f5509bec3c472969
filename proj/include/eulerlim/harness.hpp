#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "eulerlim/builtins.hpp"
#include "eulerlim/errors.hpp"
#include "eulerlim/flux.hpp"
#include "eulerlim/fv_solver.hpp"
#include "eulerlim/irreducibility.hpp"
#include "eulerlim/kmc.hpp"
#include "eulerlim/model_io.hpp"
#include "eulerlim/profile.hpp"
#include "eulerlim/validators.hpp"

namespace eulerlim {

// ---------------------------------------------------------------------------
// Model references

/// Resolves "leroux[:a=..,b=..]", "bricklayer[:a=..,...]" or "file:PATH".
inline SpinModel resolve_model(const std::string& ref) {
  const auto colon = ref.find(':');
  const std::string kind = ref.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : ref.substr(colon + 1);
  if (kind == "file") return load_model_file(rest);

  std::vector<std::pair<std::string, double>> kv;
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("expected key=value in '" + item + "'");
    kv.emplace_back(item.substr(0, eq), std::stod(item.substr(eq + 1)));
  }
  if (kind == "leroux") {
    double a = 1, b = 1;
    for (const auto& [k, v] : kv) {
      if (k == "a") a = v;
      else if (k == "b") b = v;
      else throw Error("unknown Leroux parameter '" + k + "'");
    }
    return leroux_model(a, b);
  }
  if (kind == "bricklayer") {
    BricklayerParams prm = kv.empty() ? canonical_bricklayer_params() : BricklayerParams{};
    for (const auto& [k, v] : kv) {
      if (k == "a") prm.a = v;
      else if (k == "b") prm.b = v;
      else if (k == "c") prm.c = v;
      else if (k == "d") prm.d = v;
      else if (k == "e") prm.e = v;
      else if (k == "f") prm.f = v;
      else if (k == "p") prm.p = v;
      else if (k == "q") prm.q = v;
      else if (k == "r") prm.r = v;
      else if (k == "x") prm.x = v;
      else if (k == "y") prm.y = v;
      else throw Error("unknown bricklayer parameter '" + k + "'");
    }
    return bricklayer_model(prm);
  }
  throw Error("unknown model reference '" + ref + "'");
}

// ---------------------------------------------------------------------------
// Worker pool

/// Runs body(i) for i in [0, count) on up to hardware_concurrency threads.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                         unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Convergence experiments

struct ExperimentSpec {
  std::string model = "leroux";
  std::string initial;
  double t = 0.0;
  std::vector<std::size_t> sizes;
  /// "sqrt" (divisor of N nearest sqrt(N)), "cells:K" (N/K sites per block)
  /// or "fixed:L".
  std::string block_rule = "sqrt";
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  std::size_t pde_cells = 1024;
  double cfl = 0.45;
  std::string rows_csv;
  std::string summary_json;

  void validate() const {
    if (!(t > 0.0)) throw SchemaError("t", "must be positive");
    if (sizes.empty()) throw SchemaError("sizes", "at least one lattice size");
    for (std::size_t i = 1; i < sizes.size(); ++i)
      if (sizes[i] <= sizes[i - 1]) throw SchemaError("sizes", "must be strictly increasing");
    if (replicas < 1) throw SchemaError("replicas", "must be at least 1");
    if (pde_cells < 8) throw SchemaError("pde_cells", "must be at least 8");
    if (!(cfl > 0.0 && cfl < 1.0)) throw SchemaError("cfl", "must lie in (0, 1)");
  }
};

inline ExperimentSpec load_experiment(const std::string& text) {
  const auto doc = detail::parse_json_document(text);
  if (!doc.is_object()) throw SchemaError("", "expected an object");
  static const std::set<std::string> required = {"model", "initial", "t", "sizes"};
  static const std::set<std::string> optional = {"block_rule", "replicas", "seed",
                                                 "pde_cells", "cfl", "rows_csv",
                                                 "summary_json"};
  for (const auto& [key, _] : doc.items())
    if (!required.count(key) && !optional.count(key)) throw SchemaError(key, "unknown field");
  for (const auto& key : required)
    if (!doc.contains(key)) throw SchemaError(key, "missing field");
  ExperimentSpec spec;
  try {
    spec.model = doc.at("model").get<std::string>();
    spec.initial = doc.at("initial").get<std::string>();
    spec.t = doc.at("t").get<double>();
    spec.sizes = doc.at("sizes").get<std::vector<std::size_t>>();
    if (doc.contains("block_rule")) spec.block_rule = doc["block_rule"].get<std::string>();
    if (doc.contains("replicas")) spec.replicas = doc["replicas"].get<std::size_t>();
    if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("pde_cells")) spec.pde_cells = doc["pde_cells"].get<std::size_t>();
    if (doc.contains("cfl")) spec.cfl = doc["cfl"].get<double>();
    if (doc.contains("rows_csv")) spec.rows_csv = doc["rows_csv"].get<std::string>();
    if (doc.contains("summary_json")) spec.summary_json = doc["summary_json"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("", e.what());
  }
  spec.validate();
  return spec;
}

/// Divisor of n closest to sqrt(n); ties go to the smaller divisor.
inline std::size_t sqrt_divisor(std::size_t n) {
  const double root = std::sqrt(static_cast<double>(n));
  std::size_t best = 1;
  for (std::size_t d = 1; d <= n; ++d) {
    if (n % d != 0) continue;
    if (std::abs(static_cast<double>(d) - root) < std::abs(static_cast<double>(best) - root))
      best = d;
    if (static_cast<double>(d) > root) break;
  }
  return best;
}

inline std::size_t block_size(const std::string& rule, std::size_t n_sites) {
  if (rule == "sqrt") return sqrt_divisor(n_sites);
  const auto colon = rule.find(':');
  const std::string kind = rule.substr(0, colon);
  const auto value = colon == std::string::npos ? 0 : std::stoul(rule.substr(colon + 1));
  std::size_t l = 0;
  if (kind == "cells" && value > 0 && n_sites % value == 0) l = n_sites / value;
  else if (kind == "fixed") l = value;
  if (l == 0 || n_sites % l != 0) {
    throw BadBlockSize("block rule '" + rule + "' gives no divisor of " + std::to_string(n_sites));
  }
  return l;
}

/// Test functions paired with the empirical measures: 1, sin 2 pi x, cos 2 pi x.
struct TestFunction {
  const char* name;
  double (*value)(double);
  /// Exact integral over [a, b].
  double (*integral)(double, double);
};

inline const std::vector<TestFunction>& default_test_functions() {
  static const std::vector<TestFunction> fns = {
      {"one", [](double) { return 1.0; }, [](double a, double b) { return b - a; }},
      {"sin", [](double x) { return std::sin(2 * M_PI * x); },
       [](double a, double b) { return (std::cos(2 * M_PI * a) - std::cos(2 * M_PI * b)) / (2 * M_PI); }},
      {"cos", [](double x) { return std::cos(2 * M_PI * x); },
       [](double a, double b) { return (std::sin(2 * M_PI * b) - std::sin(2 * M_PI * a)) / (2 * M_PI); }},
  };
  return fns;
}

struct TestFunctionError {
  std::string function;
  std::size_t component = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct ConvergenceRow {
  std::size_t n_sites = 0;
  std::size_t block = 0;
  std::size_t replicas = 0;
  /// Mean over replicas of dx * sum |empirical - pde|, per component.
  std::vector<double> l1_error;
  std::vector<double> l1_stddev;
  std::vector<TestFunctionError> test_function_errors;
  /// True iff every replica kept its initial conserved totals exactly.
  bool totals_conserved = true;
};

struct ConvergenceResult {
  std::string model;
  double t = 0.0;
  std::vector<ConvergenceRow> rows;
  bool monotone_decrease = false;
  /// Largest drop of the PDE entropy functional over [0, t].
  double entropy_drop = 0.0;
  double pde_dx = 0.0;
  double pde_mass_drift = 0.0;
};

inline std::pair<double, double> mean_and_stddev(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0};
}

/// Consecutive rows may increase by at most 1.5 combined standard errors.
inline bool monotone_within_noise(const std::vector<ConvergenceRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].l1_error.size(); ++c) {
      const double se_prev = rows[i - 1].l1_stddev[c] / std::sqrt(double(rows[i - 1].replicas));
      const double se_cur = rows[i].l1_stddev[c] / std::sqrt(double(rows[i].replicas));
      if (rows[i].l1_error[c] > rows[i - 1].l1_error[c] + 1.5 * (se_prev + se_cur)) return false;
    }
  }
  return true;
}

/// `on_row` sees each row as soon as it is complete, so callers can flush
/// partial results before a later size fails.
inline ConvergenceResult run_convergence(
    const ExperimentSpec& spec, unsigned workers = 0,
    const std::function<void(const ConvergenceRow&)>& on_row = {}) {
  spec.validate();
  const SpinModel model = resolve_model(spec.model);
  const auto ic = InitialCondition::parse(spec.initial);
  if (ic.components() != model.n_cons()) {
    throw Error("initial profile has the wrong number of components");
  }
  ConvergenceResult result;
  result.model = spec.model;
  result.t = spec.t;

  const Profile pde0 = ic.cell_averages(spec.pde_cells);
  SolveOptions sopts;
  sopts.entropy_model = &model;
  const Trajectory traj = solve(ModelFluxEvaluator(model), pde0, spec.t, spec.cfl, sopts);
  const Profile& pde = traj.snapshots.back();
  result.pde_dx = pde.dx();
  result.pde_mass_drift = (pde.mean() - pde0.mean()).lpNorm<Eigen::Infinity>();
  for (const auto& [time, value] : traj.entropy_series) {
    result.entropy_drop = std::max(result.entropy_drop, traj.entropy_series.front().second - value);
  }
  if (result.entropy_drop > 10.0 * pde.dx()) {
    throw PostShockRefusal("PDE entropy functional dropped by " +
                           std::to_string(result.entropy_drop) +
                           " over [0, t]; the window is not shock-free");
  }

  const auto& fns = default_test_functions();
  const std::size_t n = model.n_cons();
  // Reference pairings <g, u_pde> on the PDE grid.
  std::vector<std::vector<double>> pde_pairing(fns.size(), std::vector<double>(n, 0.0));
  for (std::size_t f = 0; f < fns.size(); ++f) {
    for (std::size_t j = 0; j < pde.n_cells(); ++j) {
      const double a = static_cast<double>(j) * pde.dx();
      const double w = fns[f].integral(a, a + pde.dx());
      for (std::size_t c = 0; c < n; ++c)
        pde_pairing[f][c] += w * pde.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
    }
  }

  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    const std::size_t n_sites = spec.sizes[si];
    const std::size_t l = block_size(spec.block_rule, n_sites);
    const Profile coarse = resample(pde, n_sites / l);
    std::vector<std::vector<double>> l1(spec.replicas, std::vector<double>(n));
    std::vector<std::vector<double>> tf(spec.replicas, std::vector<double>(fns.size() * n));
    std::vector<char> conserved(spec.replicas, 1);
    parallel_for(spec.replicas, [&](std::size_t r) {
      const std::uint64_t base = stream_seed(stream_seed(spec.seed, n_sites), r);
      LatticeConfig cfg =
          sample_local_equilibrium(model, [&](double x) { return ic.at(x); }, n_sites,
                                   stream_seed(base, 0));
      const auto totals0 = cfg.totals;
      cfg = evolve(model, std::move(cfg), spec.t, stream_seed(base, 1));
      conserved[r] = cfg.totals == totals0 && conserved_totals(model, cfg.omega) == totals0;
      const Profile emp = block_average(model, cfg, l);
      for (std::size_t c = 0; c < n; ++c) {
        const auto cc = static_cast<Eigen::Index>(c);
        l1[r][c] = emp.dx() * (emp.values.col(cc) - coarse.values.col(cc)).cwiseAbs().sum();
      }
      for (std::size_t f = 0; f < fns.size(); ++f) {
        std::vector<double> pairing(n, 0.0);
        for (std::size_t j = 0; j < n_sites; ++j) {
          const double g = fns[f].value(static_cast<double>(j) / static_cast<double>(n_sites));
          for (std::size_t c = 0; c < n; ++c) pairing[c] += g * model.xi(cfg.omega[j], c);
        }
        for (std::size_t c = 0; c < n; ++c) {
          tf[r][f * n + c] =
              std::abs(pairing[c] / static_cast<double>(n_sites) - pde_pairing[f][c]);
        }
      }
    }, workers);

    ConvergenceRow row;
    row.n_sites = n_sites;
    row.block = l;
    row.replicas = spec.replicas;
    row.totals_conserved = std::all_of(conserved.begin(), conserved.end(), [](char c) { return c != 0; });
    for (std::size_t c = 0; c < n; ++c) {
      std::vector<double> v;
      for (const auto& rep : l1) v.push_back(rep[c]);
      const auto [m, s] = mean_and_stddev(v);
      row.l1_error.push_back(m);
      row.l1_stddev.push_back(s);
    }
    for (std::size_t f = 0; f < fns.size(); ++f) {
      for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> v;
        for (const auto& rep : tf) v.push_back(rep[f * n + c]);
        const auto [m, s] = mean_and_stddev(v);
        row.test_function_errors.push_back({fns[f].name, c, m, s});
      }
    }
    if (on_row) on_row(row);
    result.rows.push_back(std::move(row));
  }
  result.monotone_decrease = monotone_within_noise(result.rows);
  return result;
}

inline constexpr const char* kConvergenceCsvHeader =
    "N,l,replicas,component,l1_error,l1_stddev,tf_one,tf_sin,tf_cos\n";

inline std::string convergence_row_csv(const ConvergenceRow& row) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t c = 0; c < row.l1_error.size(); ++c) {
    out << row.n_sites << ',' << row.block << ',' << row.replicas << ',' << c + 1 << ','
        << row.l1_error[c] << ',' << row.l1_stddev[c];
    for (const auto& e : row.test_function_errors)
      if (e.component == c) out << ',' << e.mean;
    out << '\n';
  }
  return out.str();
}

inline std::string convergence_rows_csv(const ConvergenceResult& res) {
  std::string out = kConvergenceCsvHeader;
  for (const auto& row : res.rows) out += convergence_row_csv(row);
  return out;
}

inline nlohmann::json convergence_summary(const ConvergenceResult& res) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : res.rows) {
    nlohmann::json tf = nlohmann::json::array();
    for (const auto& e : row.test_function_errors)
      tf.push_back({{"g", e.function}, {"component", e.component + 1}, {"error", e.mean},
                    {"stddev", e.stddev}});
    rows.push_back({{"N", row.n_sites}, {"l", row.block}, {"replicas", row.replicas},
                    {"l1_error", row.l1_error}, {"l1_stddev", row.l1_stddev},
                    {"test_function_errors", tf}, {"totals_conserved", row.totals_conserved}});
  }
  return {{"model", res.model},
          {"t", res.t},
          {"rows", rows},
          {"monotone_decrease", res.monotone_decrease},
          {"monotone_rule", "engineering proxy: consecutive L1 may rise by at most 1.5 "
                            "combined replica standard errors"},
          {"pde_entropy_drop", res.entropy_drop},
          {"pde_mass_drift", res.pde_mass_drift}};
}

// ---------------------------------------------------------------------------
// Certification

inline constexpr double kResidualThreshold = 1e-10;

inline nlohmann::json certificate_json(const FluxCertificate& c) {
  return {{"onsager_residual", c.onsager_residual},
          {"sym_residual_max", c.sym_residual_max},
          {"lax_residual_max", c.lax_residual_max},
          {"speeds_min_gap", c.speeds_min_gap},
          {"grid_size", c.grid_size}};
}

inline bool certificate_passes(const FluxCertificate& c) {
  return c.grid_size > 0 && c.onsager_residual < kResidualThreshold &&
         c.sym_residual_max < kResidualThreshold && c.lax_residual_max < kResidualThreshold;
}

inline nlohmann::json report_json(const ValidationReport& r) {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& x : r.witnesses) w.push_back({{"states", x.states}, {"mismatch", x.mismatch}});
  return {{"condition", to_string(r.condition)}, {"passed", r.passed()}, {"witnesses", w}};
}

/// Every structural check in one report; "passed" is the conjunction. Check
/// failures and errors are recorded, never thrown.
inline nlohmann::json run_certification(const SpinModel& model, std::size_t irreducibility_sites = 4,
                                        std::size_t points_per_axis = 30, double margin = 0.02) {
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  auto record = [&](const std::string& name, const std::function<nlohmann::json()>& fn) {
    nlohmann::json entry;
    try {
      entry = fn();
    } catch (const std::exception& e) {
      entry = {{"passed", false}, {"error", e.what()}};
    }
    entry["check"] = name;
    all = all && entry.value("passed", false);
    checks.push_back(entry);
  };
  record("conservation", [&] { return report_json(validate_conservation(model)); });
  record("irreducibility", [&] {
    auto j = report_json(check_irreducibility(model, irreducibility_sites));
    j["n_sites"] = irreducibility_sites;
    return j;
  });
  record("stationarity", [&] { return report_json(validate_stationarity(model)); });
  record("rate_cycle", [&] { return report_json(validate_rate_cycle(model)); });
  record("flux_structure", [&] {
    const auto grid = admissible_grid(model, points_per_axis, margin);
    const auto cert = certify_grid(model, grid);
    auto j = certificate_json(cert);
    j["inverse_residual_max"] = cert.inverse_residual_max;
    j["speeds_imag_max"] = cert.speeds_imag_max;
    j["hessian_eigmin"] = cert.hessian_eigmin;
    j["passed"] = certificate_passes(cert) && cert.inverse_residual_max < kResidualThreshold &&
                  cert.speeds_imag_max < kResidualThreshold && cert.hessian_eigmin > 0.0;
    return j;
  });
  return {{"passed", all}, {"checks", checks}};
}

}  // namespace eulerlim
