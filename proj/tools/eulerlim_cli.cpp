#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eulerlim/harness.hpp"

using namespace eulerlim;

namespace {

struct ModelArgs {
  std::string file;
  std::string builtin;

  void add(CLI::App* app) {
    auto* f = app->add_option("--model", file, "model JSON file");
    auto* b = app->add_option("--builtin", builtin,
                              "leroux[:a=..,b=..] or bricklayer[:a=..,...,y=..]");
    f->excludes(b);
  }
  SpinModel resolve() const {
    if (!file.empty()) return load_model_file(file);
    if (!builtin.empty()) return resolve_model(builtin);
    throw Error("one of --model or --builtin is required");
  }
};

/// Writes to `path`, or stdout when empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<std::vector<double>> parse_grid(const std::string& spec, std::size_t n) {
  std::vector<std::vector<double>> axes;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double lo = 0, hi = 0;
    int count = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(item);
    if (!(is >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 1) {
      throw Error("grid axis '" + item + "' must look like lo:hi:count");
    }
    std::vector<double> axis;
    for (int k = 0; k < count; ++k)
      axis.push_back(count == 1 ? lo : lo + (hi - lo) * k / (count - 1));
    axes.push_back(axis);
  }
  if (axes.size() != n) throw Error("grid needs one axis per conserved quantity");
  return axes;
}

int cmd_thermo(const ModelArgs& margs, const std::string& grid, double margin,
               const std::string& out_path) {
  const SpinModel model = margs.resolve();
  const std::size_t n = model.n_cons();
  const auto axes = parse_grid(grid, n);
  Output out(out_path);
  auto& os = out.stream();
  os.precision(17);
  for (std::size_t i = 0; i < n; ++i) os << "u_" << i + 1 << ',';
  for (std::size_t i = 0; i < n; ++i) os << "theta_" << i + 1 << ',';
  os << "S,eigmin\n";
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    Vector u(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) u(static_cast<Eigen::Index>(i)) = axes[i][idx[i]];
    if (in_admissible_domain(model, u, margin)) {
      InversionOptions opts;
      opts.margin = margin;
      const auto dp = invert_densities(model, u, opts);
      const double eigmin = Eigen::SelfAdjointEigenSolver<Matrix>(dp.hessian).eigenvalues()(0);
      for (std::size_t i = 0; i < n; ++i) os << u(static_cast<Eigen::Index>(i)) << ',';
      for (std::size_t i = 0; i < n; ++i) os << dp.theta(static_cast<Eigen::Index>(i)) << ',';
      os << dp.entropy << ',' << eigmin << '\n';
    }
    std::size_t k = 0;
    while (k < n && ++idx[k] == axes[k].size()) idx[k++] = 0;
    if (k == n) break;
  }
  return 0;
}

int cmd_certify(const ModelArgs& margs, std::size_t points, double margin) {
  const SpinModel model = margs.resolve();
  const auto cert = certify_grid(model, admissible_grid(model, points, margin));
  std::cout << certificate_json(cert).dump(2) << '\n';
  return certificate_passes(cert) ? 0 : 1;
}

int cmd_validate(const ModelArgs& margs, std::size_t sites, std::size_t points, double margin) {
  SpinModel model = [&] {
    try {
      return margs.resolve();
    } catch (const Error& e) {
      std::cout << nlohmann::json{{"passed", false}, {"error", e.what()}}.dump(2) << '\n';
      throw;
    }
  }();
  const auto report = run_certification(model, sites, points, margin);
  std::cout << report.dump(2) << '\n';
  return report["passed"].get<bool>() ? 0 : 2;
}

int cmd_pde(const ModelArgs& margs, std::size_t cells, double cfl, double t_end,
            std::size_t snapshots, const std::string& initial, const std::string& flux_kind,
            const std::string& out_path) {
  const SpinModel model = margs.resolve();
  const auto ic = InitialCondition::parse(initial);
  std::unique_ptr<FluxEvaluator> flux;
  if (flux_kind == "exact") {
    flux = std::make_unique<ModelFluxEvaluator>(model);
  } else if (flux_kind == "closed") {
    if (margs.builtin.rfind("leroux", 0) == 0) flux = std::make_unique<LerouxFluxEvaluator>();
    else if (margs.builtin == "bricklayer")
      flux = std::make_unique<BricklayerFluxEvaluator>(0.5);
    else throw Error("closed-form fluxes exist for leroux and canonical bricklayer only");
  } else {
    throw Error("--flux must be exact or closed");
  }
  SolveOptions opts;
  for (std::size_t k = 1; k <= snapshots; ++k)
    opts.snapshot_times.push_back(t_end * static_cast<double>(k) / static_cast<double>(snapshots));
  const auto traj = solve(*flux, ic.cell_averages(cells), t_end, cfl, opts);
  Output out(out_path);
  auto& os = out.stream();
  os.precision(17);
  os << "time,x";
  for (std::size_t i = 0; i < model.n_cons(); ++i) os << ",u_" << i + 1;
  os << '\n';
  for (const auto& snap : traj.snapshots) {
    for (std::size_t j = 0; j < snap.n_cells(); ++j) {
      os << snap.time << ',' << (static_cast<double>(j) + 0.5) * snap.dx();
      for (std::size_t i = 0; i < snap.components(); ++i)
        os << ',' << snap.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      os << '\n';
    }
  }
  return 0;
}

int cmd_simulate(const ModelArgs& margs, std::size_t sites, double t, const std::string& initial,
                 std::size_t block, std::size_t replicas, std::uint64_t seed,
                 const std::string& out_path) {
  const SpinModel model = margs.resolve();
  const auto ic = InitialCondition::parse(initial);
  if (ic.components() != model.n_cons()) throw Error("initial profile has the wrong dimension");
  if (block == 0) block = sqrt_divisor(sites);
  std::vector<Profile> results(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    const std::uint64_t base = stream_seed(stream_seed(seed, sites), r);
    auto cfg = sample_local_equilibrium(model, [&](double x) { return ic.at(x); }, sites,
                                        stream_seed(base, 0));
    cfg = evolve(model, std::move(cfg), t, stream_seed(base, 1));
    results[r] = block_average(model, cfg, block);
  });
  Output out(out_path);
  auto& os = out.stream();
  os.precision(17);
  os << "replica,x_cell";
  for (std::size_t i = 0; i < model.n_cons(); ++i) os << ",u_" << i + 1;
  os << '\n';
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto& p = results[r];
    for (std::size_t k = 0; k < p.n_cells(); ++k) {
      os << r << ',' << (static_cast<double>(k) + 0.5) * p.dx();
      for (std::size_t i = 0; i < p.components(); ++i)
        os << ',' << p.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
      os << '\n';
    }
  }
  return 0;
}

int cmd_converge(const std::string& spec_path, std::string rows_path, std::string summary_path,
                 unsigned workers) {
  ExperimentSpec spec;
  try {
    spec = load_experiment(detail::read_file(spec_path));
    resolve_model(spec.model);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  if (rows_path.empty()) rows_path = spec.rows_csv;
  if (summary_path.empty()) summary_path = spec.summary_json;
  Output rows(rows_path);
  rows.stream() << kConvergenceCsvHeader << std::flush;
  ConvergenceResult result;
  try {
    result = run_convergence(spec, workers, [&](const ConvergenceRow& row) {
      rows.stream() << convergence_row_csv(row) << std::flush;
    });
  } catch (const PostShockRefusal& e) {
    std::cerr << "warning: " << e.what() << '\n';
    return 3;
  }
  Output summary(summary_path);
  summary.stream() << convergence_summary(result).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hydrodynamic limits of lattice spin models with several conservation laws"};
  app.require_subcommand(1);

  ModelArgs margs;

  auto* validate = app.add_subcommand("validate", "run every structural check on a model");
  margs.add(validate);
  std::size_t sites = 4, points = 30;
  double grid_margin = 0.02;
  validate->add_option("--sites", sites, "torus size for the irreducibility check");
  validate->add_option("--points", points, "grid points per axis");
  validate->add_option("--margin", grid_margin, "distance kept from the domain boundary");

  auto* thermo = app.add_subcommand("thermo", "tabulate theta, S and eigmin(S'') on a grid");
  margs.add(thermo);
  std::string grid, out_path;
  double domain_margin = kDefaultDomainMargin;
  thermo->add_option("--grid", grid, "lo:hi:count per component, comma separated")->required();
  thermo->add_option("--margin", domain_margin, "admissibility margin");
  thermo->add_option("--out", out_path, "CSV output (stdout by default)");

  auto* certify = app.add_subcommand("certify", "flux residuals on the certification grid");
  margs.add(certify);
  certify->add_option("--points", points, "grid points per axis");
  certify->add_option("--margin", grid_margin, "distance kept from the domain boundary");

  auto* pde = app.add_subcommand("pde", "finite-volume solve of the limiting system");
  margs.add(pde);
  std::size_t cells = 1024, snapshots = 10;
  double cfl = 0.45, t_end = 0.1;
  std::string initial, flux_kind = "exact";
  pde->add_option("--cells", cells, "grid cells");
  pde->add_option("--cfl", cfl, "CFL number in (0, 1)");
  pde->add_option("--t-end", t_end, "final macroscopic time")->required();
  pde->add_option("--snapshots", snapshots, "snapshots after t = 0");
  pde->add_option("--initial", initial, "const:v1,.. or sine:mean1,amp1,..")->required();
  pde->add_option("--flux", flux_kind, "exact (model sums) or closed (built-ins only)");
  pde->add_option("--out", out_path, "CSV output (stdout by default)");

  auto* simulate = app.add_subcommand("simulate", "kinetic Monte Carlo under Eulerian scaling");
  margs.add(simulate);
  std::size_t n_sites = 1024, block = 0, replicas = 1;
  double t_macro = 0.1;
  std::uint64_t seed = 0;
  simulate->add_option("--sites", n_sites, "lattice size N");
  simulate->add_option("--t", t_macro, "macroscopic time")->required();
  simulate->add_option("--initial", initial, "const:v1,.. or sine:mean1,amp1,..")->required();
  simulate->add_option("--block", block, "block length (default: divisor nearest sqrt N)");
  simulate->add_option("--replicas", replicas, "independent replicas");
  simulate->add_option("--seed", seed, "master seed");
  simulate->add_option("--out", out_path, "CSV output (stdout by default)");

  auto* converge = app.add_subcommand("converge", "KMC against PDE over lattice sizes");
  std::string spec_path, rows_path, summary_path;
  unsigned workers = 0;
  converge->add_option("--spec", spec_path, "experiment JSON")->required();
  converge->add_option("--rows", rows_path, "rows CSV (overrides the spec)");
  converge->add_option("--summary", summary_path, "summary JSON (overrides the spec)");
  converge->add_option("--workers", workers, "worker threads (default: all cores)");

  auto* model_cmd = app.add_subcommand("model", "print a model as JSON");
  margs.add(model_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(margs, sites, points, grid_margin);
    if (*thermo) return cmd_thermo(margs, grid, domain_margin, out_path);
    if (*certify) return cmd_certify(margs, points, grid_margin);
    if (*pde) return cmd_pde(margs, cells, cfl, t_end, snapshots, initial, flux_kind, out_path);
    if (*simulate)
      return cmd_simulate(margs, n_sites, t_macro, initial, block, replicas, seed, out_path);
    if (*converge) return cmd_converge(spec_path, rows_path, summary_path, workers);
    if (*model_cmd) {
      std::cout << save_model(margs.resolve());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return *validate ? 2 : 1;
  }
  return 0;
}
