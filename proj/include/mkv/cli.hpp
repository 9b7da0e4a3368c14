// Command-line front end: simulate / estimate / select / experiment.
// Exit codes: 0 success, 2 usage error, 1 runtime failure (non-finite
// particles, compute budget). Worker threads come from --threads, then the
// MKV_THREADS environment variable, then the hardware count.
#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mkv/harness.hpp"
#include "mkv/io.hpp"
#include "mkv/parallel.hpp"

namespace mkv {

namespace detail {

inline BandwidthMode parse_bandwidth_mode(const std::string& text, int smoothness, double omega) {
  if (text == "auto") return BandwidthMode::auto_select(omega);
  if (text == "rule") return BandwidthMode::rule(smoothness);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(value > 0.0))
    throw std::invalid_argument("--bandwidth must be 'auto', 'rule' or a positive number, got '" + text + "'");
  return BandwidthMode::fixed(value);
}

inline std::string strip_json_suffix(const std::string& path) {
  constexpr std::string_view suffix = ".json";
  if (path.size() > suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return path.substr(0, path.size() - suffix.size());
  return path;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"mkv: interacting-particle simulation and adaptive density estimation for McKean-Vlasov equations"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads (default: MKV_THREADS or hardware)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "run the interacting-particle Euler scheme");
  std::string sim_model = "ou-linear";
  std::size_t sim_n = 1024, sim_steps = 100;
  double sim_t = 1.0;
  std::uint64_t sim_seed = 0;
  int sim_dim = 1;
  std::string sim_out = "particles.csv";
  sim->add_option("--model", sim_model, "ou-linear | double-layer | double-layer-perturbed | burgers");
  sim->add_option("--n", sim_n, "number of particles")->check(CLI::PositiveNumber);
  sim->add_option("--steps", sim_steps, "number of Euler steps")->check(CLI::PositiveNumber);
  sim->add_option("--t", sim_t, "time horizon");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--dim", sim_dim, "state dimension (ou-linear only)");
  sim->add_option("--out", sim_out, "output CSV path (JSON sidecar written alongside)");

  // estimate
  auto* est = app.add_subcommand("estimate", "kernel density estimate over a query grid");
  std::string est_particles, est_bandwidth = "rule", est_grid_text, est_out = "density.csv";
  int est_order = 1, est_smoothness = 0;
  double est_omega = 23.0;
  est->add_option("--particles", est_particles, "ensemble CSV written by simulate")->required();
  est->add_option("--order", est_order, "kernel order (1, 3, 5, 7 or 9)");
  est->add_option("--bandwidth", est_bandwidth, "'auto' (Goldenshluger-Lepski), 'rule' or a fixed value");
  est->add_option("--smoothness", est_smoothness, "smoothness proxy for the rule (default: order + 1)");
  est->add_option("--omega", est_omega, "selector penalty constant");
  est->add_option("--grid", est_grid_text, "query grid start:stop:count")->required();
  est->add_option("--out", est_out, "output CSV path");

  // select
  auto* sel = app.add_subcommand("select", "audit the bandwidth selection at query points");
  std::string sel_particles, sel_grid_text, sel_out = "selection.json";
  int sel_order = 5;
  double sel_omega = 23.0;
  std::vector<double> sel_points;
  sel->add_option("--particles", sel_particles, "ensemble CSV written by simulate")->required();
  sel->add_option("--order", sel_order, "kernel order (1, 3, 5, 7 or 9)");
  sel->add_option("--omega", sel_omega, "selector penalty constant");
  sel->add_option("--x", sel_points, "query point (repeatable)");
  sel->add_option("--grid", sel_grid_text, "query grid start:stop:count");
  sel->add_option("--out", sel_out, "output JSON path");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a benchmark study end to end");
  std::string exp_id, exp_model, exp_grid_text, exp_out = "result.json";
  std::vector<int> exp_orders;
  std::vector<std::size_t> exp_n_list;
  int exp_nmin = -1, exp_nmax = -1;
  std::size_t exp_reps = 0, exp_steps = 0;
  double exp_t = 0.0, exp_omega = -1.0, exp_budget = -1.0;
  std::uint64_t exp_seed = 0;
  bool exp_force = false;
  exp->add_option("id", exp_id, "ou-rate | double-layer-bandwidth | burgers-recon")->required();
  exp->add_option("--model", exp_model, "model override for the histogram study");
  exp->add_option("--orders", exp_orders, "kernel orders")->delimiter(',');
  exp->add_option("--nmin", exp_nmin, "smallest particle count as a power of two");
  exp->add_option("--nmax", exp_nmax, "largest particle count as a power of two");
  exp->add_option("--n-list", exp_n_list, "explicit particle counts")->delimiter(',');
  exp->add_option("--reps", exp_reps, "Monte-Carlo replicates");
  exp->add_option("--t", exp_t, "time horizon");
  exp->add_option("--steps", exp_steps, "Euler steps");
  exp->add_option("--omega", exp_omega, "selector penalty constant");
  exp->add_option("--grid", exp_grid_text, "query grid start:stop:count");
  exp->add_option("--seed", exp_seed, "master seed");
  exp->add_option("--budget", exp_budget, "simulation-op budget for the guard");
  exp->add_flag("--force", exp_force, "lift the compute budget guard");
  exp->add_option("--out", exp_out, "output JSON path (CSV companions written alongside)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (threads > 0) set_max_threads(threads);

    if (sim->parsed()) {
      ModelSpec model =
          sim_dim > 1 && sim_model == "ou-linear" ? linear_interaction_model(-1.0, sim_dim) : model_by_id(sim_model);
      if (sim_dim != model.dim) throw std::invalid_argument("--dim is only adjustable for ou-linear");
      SimConfig cfg;
      cfg.n_particles = sim_n;
      cfg.n_steps = sim_steps;
      cfg.horizon = sim_t;
      cfg.seed = sim_seed;
      cfg.dim = sim_dim;
      cfg.validate();
      const ParticleEnsemble ens = simulate(cfg, model);
      EnsembleMeta meta{sim_seed, sim_n, sim_steps, sim_t, model.id, ens.time};
      write_ensemble_csv(sim_out, ens, meta);
      std::cout << "wrote " << sim_out << " and " << sim_out << ".json\n";
      return 0;
    }

    if (est->parsed()) {
      const GridSpec grid = parse_grid_spec(est_grid_text);
      const BandwidthMode mode = detail::parse_bandwidth_mode(est_bandwidth, est_smoothness, est_omega);
      const LoadedEnsemble loaded = read_ensemble_csv(est_particles);
      if (loaded.ensemble.dim != 1) throw std::invalid_argument("estimate supports one-dimensional ensembles");
      const KernelSpec kernel = make_kernel(est_order, 1);
      const std::vector<double> queries = grid.points();
      const DensityEstimate density = estimate_with_mode(loaded.ensemble, kernel, mode, queries);
      write_density_csv(est_out, density, mode.kind == BandwidthMode::Kind::Auto);
      std::cout << "wrote " << est_out << "\n";
      return 0;
    }

    if (sel->parsed()) {
      if (sel_points.empty() == sel_grid_text.empty())
        throw std::invalid_argument("select needs exactly one of --x or --grid");
      const LoadedEnsemble loaded = read_ensemble_csv(sel_particles);
      if (loaded.ensemble.dim != 1) throw std::invalid_argument("select supports one-dimensional ensembles");
      const KernelSpec kernel = make_kernel(sel_order, 1);
      const BandwidthGrid grid = bandwidth_grid(loaded.ensemble.size(), sel_order, 1);
      std::vector<double> points = sel_points;
      if (!sel_grid_text.empty()) points = parse_grid_spec(sel_grid_text).points();

      nlohmann::json traces = nlohmann::json::array();
      for (double x : points)
        traces.push_back(selection_trace_json(select_bandwidth(loaded.ensemble, kernel, grid, sel_omega, {&x, 1})));
      std::ofstream out(sel_out);
      if (!out) throw std::runtime_error("cannot open " + sel_out + " for writing");
      out << traces.dump(2) << "\n";
      std::cout << "wrote " << sel_out << "\n";
      return 0;
    }

    // experiment
    ExperimentSpec spec = default_experiment(exp_id);
    if (exp->count("--model")) spec.model_id = exp_model;
    if (exp->count("--orders")) spec.orders = exp_orders;
    if (exp->count("--nmin") || exp->count("--nmax")) {
      if (exp_nmin < 0) exp_nmin = exp_nmax;
      if (exp_nmax < 0) exp_nmax = exp_nmin;
      if (exp_nmin < 1 || exp_nmax < exp_nmin || exp_nmax > 62)
        throw std::invalid_argument("--nmin/--nmax must satisfy 1 <= nmin <= nmax <= 62");
      spec.n_values.clear();
      for (int e = exp_nmin; e <= exp_nmax; ++e) spec.n_values.push_back(1ULL << e);
    }
    if (exp->count("--n-list")) spec.n_values = exp_n_list;
    if (exp->count("--reps")) spec.replicates = exp_reps;
    if (exp->count("--t")) spec.horizon = exp_t;
    if (exp->count("--steps")) spec.n_steps = exp_steps;
    if (exp->count("--omega")) spec.omega = exp_omega;
    if (exp->count("--grid")) spec.query_grid = parse_grid_spec(exp_grid_text);
    if (exp->count("--seed")) spec.seed = exp_seed;
    if (exp->count("--budget")) spec.budget = exp_budget;
    spec.lift_budget = exp_force;

    const ExperimentResult result = run_experiment(spec);
    std::ofstream out(exp_out);
    if (!out) throw std::runtime_error("cannot open " + exp_out + " for writing");
    out << to_json(result).dump(2) << "\n";
    write_result_csv(result, detail::strip_json_suffix(exp_out));
    std::cout << "wrote " << exp_out << " (+ CSV companions) in " << result.wallclock_s << " s\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mkv
