// Experiment orchestration: Monte-Carlo strong error tables with slope fits,
// bandwidth-distribution histograms and the Burgers reconstruction study.
// Replicate j of a table cell runs with seed (cell seed XOR j), so any subset
// of replicates reproduces independently.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkv/gl_select.hpp"
#include "mkv/io.hpp"
#include "mkv/kde.hpp"
#include "mkv/models.hpp"
#include "mkv/parallel.hpp"
#include "mkv/simulate.hpp"

namespace mkv {

/// Raised when an experiment exceeds the configured compute budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// How the estimator picks its bandwidth.
struct BandwidthMode {
  enum class Kind { Fixed, Rule, Auto };
  Kind kind = Kind::Rule;
  double fixed_value = 0.0;   // Fixed
  int smoothness_proxy = 0;   // Rule; 0 means order + 1
  double omega = 23.0;        // Auto

  static BandwidthMode fixed(double eta) { return {Kind::Fixed, eta, 0, 0.0}; }
  static BandwidthMode rule(int proxy = 0) { return {Kind::Rule, 0.0, proxy, 0.0}; }
  static BandwidthMode auto_select(double omega) { return {Kind::Auto, 0.0, 0, omega}; }
};

/// Density estimate on a grid under the given bandwidth mode. Auto mode runs
/// the pointwise selector at every query point.
inline DensityEstimate estimate_with_mode(const ParticleEnsemble& ens, const KernelSpec& kernel,
                                          const BandwidthMode& mode, std::span<const double> queries) {
  switch (mode.kind) {
    case BandwidthMode::Kind::Fixed:
      return estimate_density(ens, kernel, mode.fixed_value, queries);
    case BandwidthMode::Kind::Rule: {
      const int proxy = mode.smoothness_proxy > 0 ? mode.smoothness_proxy : kernel.order() + 1;
      return estimate_density(ens, kernel, fixed_bandwidth(ens.size(), proxy, kernel.dim()), queries);
    }
    case BandwidthMode::Kind::Auto:
      break;
  }
  const std::size_t d = static_cast<std::size_t>(kernel.dim());
  const std::size_t g = queries.size() / d;
  const BandwidthGrid grid = bandwidth_grid(ens.size(), kernel.order(), kernel.dim());
  DensityEstimate est;
  est.queries.assign(queries.begin(), queries.end());
  est.values.assign(g, 0.0);
  est.bandwidths.assign(g, 0.0);
  est.dim = kernel.dim();
  est.order = kernel.order();
  est.n_particles = ens.size();
  est.seed = ens.seed;
  est.time = ens.time;
  parallel_for(g, [&](std::size_t q) {
    const auto sel = select_bandwidth(ens, kernel, grid, mode.omega, queries.subspan(q * d, d));
    est.values[q] = sel.density_at_selected();
    est.bandwidths[q] = sel.selected;
  });
  return est;
}

/// Sup over the grid of the squared pointwise error.
inline double sup_sq_error(std::span<const double> estimates, std::span<const double> reference) {
  if (estimates.size() != reference.size() || estimates.empty())
    throw std::invalid_argument("sup_sq_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double diff = estimates[i] - reference[i];
    worst = std::max(worst, diff * diff);
  }
  return worst;
}

/// Mean over replicates, accumulated in ascending index order.
inline double replicate_mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("replicate_mean: empty");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

struct ErrorTableRow {
  std::size_t n_particles = 0;
  double e_n = 0.0;                   // mean over replicates of the sup squared error
  std::vector<double> replicate_sq_sup;  // per-replicate values, index order
};

// Monte-Carlo strong error: for each config, R independent seeded runs, each
// scored by the sup over the evaluation grid of the squared deviation from
// the analytic reference at time T.
inline std::vector<ErrorTableRow> mc_strong_error(const ModelSpec& model, std::span<const SimConfig> cfgs,
                                                  const KernelSpec& kernel, const BandwidthMode& mode,
                                                  std::span<const double> eval_grid, std::size_t replicates) {
  if (!model.reference) throw std::invalid_argument("mc_strong_error: model has no analytic reference");
  if (replicates < 1) throw std::invalid_argument("mc_strong_error: need at least one replicate");
  if (eval_grid.empty()) throw std::invalid_argument("mc_strong_error: empty evaluation grid");
  const std::size_t d = static_cast<std::size_t>(model.dim);
  if (eval_grid.size() % d != 0) throw std::invalid_argument("mc_strong_error: grid size not a multiple of dim");
  const std::size_t g = eval_grid.size() / d;

  std::vector<ErrorTableRow> rows;
  rows.reserve(cfgs.size());
  for (const SimConfig& cfg : cfgs) {
    std::vector<double> reference(g, 0.0);
    for (std::size_t q = 0; q < g; ++q)
      reference[q] = model.reference->density(cfg.horizon, eval_grid.subspan(q * d, d));

    ErrorTableRow row;
    row.n_particles = cfg.n_particles;
    row.replicate_sq_sup.assign(replicates, 0.0);
    parallel_for(replicates, [&](std::size_t j) {
      SimConfig run_cfg = cfg;
      run_cfg.seed = replicate_seed(cfg.seed, j);
      const ParticleEnsemble ens = simulate(run_cfg, model);
      const DensityEstimate est = estimate_with_mode(ens, kernel, mode, eval_grid);
      row.replicate_sq_sup[j] = sup_sq_error(est.values, reference);
    });
    row.e_n = replicate_mean(row.replicate_sq_sup);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct SlopeFit {
  double slope = 0.0;      // alpha, reported >= 0 for decaying error
  double intercept = 0.0;
  double residual = 0.0;   // root mean squared residual
};

// Ordinary least squares on (log2 N, log2 E) pairs, fitted as
// log2 E = -alpha log2 N + c so a decaying error reports a positive alpha.
inline SlopeFit fit_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("fit_slope: need at least two points");
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(points.size());
  mean_y /= static_cast<double>(points.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_slope: degenerate abscissae");
  const double raw_slope = sxy / sxx;
  SlopeFit fit;
  fit.slope = -raw_slope;
  fit.intercept = mean_y - raw_slope * mean_x;
  double rss = 0.0;
  for (const auto& [x, y] : points) {
    const double r = y - (raw_slope * x + fit.intercept);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / static_cast<double>(points.size()));
  return fit;
}

struct BandwidthHistogram {
  std::vector<double> eta_values;     // descending grid
  std::vector<std::size_t> counts;    // aligned with eta_values
  std::size_t replicates = 0;
  std::size_t n_queries = 0;
};

// Tallies the selected bandwidth over replicates x query points.
inline BandwidthHistogram bandwidth_histogram(const ModelSpec& model, const SimConfig& cfg, const KernelSpec& kernel,
                                              const BandwidthGrid& grid, double omega,
                                              std::span<const double> query_grid, std::size_t replicates) {
  if (replicates < 1) throw std::invalid_argument("bandwidth_histogram: need at least one replicate");
  const std::size_t d = static_cast<std::size_t>(model.dim);
  const std::size_t g = query_grid.size() / d;

  BandwidthHistogram hist;
  hist.eta_values = grid.values;
  hist.counts.assign(grid.values.size(), 0);
  hist.replicates = replicates;
  hist.n_queries = g;

  std::vector<std::vector<std::size_t>> local(replicates);
  parallel_for(replicates, [&](std::size_t j) {
    local[j].assign(grid.values.size(), 0);
    SimConfig run_cfg = cfg;
    run_cfg.seed = replicate_seed(cfg.seed, j);
    const ParticleEnsemble ens = simulate(run_cfg, model);
    for (std::size_t q = 0; q < g; ++q) {
      const auto sel = select_bandwidth(ens, kernel, grid, omega, query_grid.subspan(q * d, d));
      ++local[j][sel.selected_index];
    }
  });
  for (std::size_t j = 0; j < replicates; ++j)
    for (std::size_t i = 0; i < hist.counts.size(); ++i) hist.counts[i] += local[j][i];
  return hist;
}

inline constexpr double kDefaultOpBudget = 2e10;

struct ExperimentSpec {
  std::string id;                    // ou-rate | double-layer-bandwidth | burgers-recon
  std::string model_id;              // histogram experiment: double-layer or double-layer-perturbed
  std::vector<int> orders;
  std::vector<std::size_t> n_values;
  std::size_t replicates = 1;
  double horizon = 1.0;
  std::size_t n_steps = 100;
  double omega = 23.0;
  GridSpec query_grid;
  std::uint64_t seed = 1;
  double budget = kDefaultOpBudget;  // simulation-op budget
  bool lift_budget = false;
};

/// Paper-default parameters for each experiment.
inline ExperimentSpec default_experiment(const std::string& id) {
  ExperimentSpec spec;
  spec.id = id;
  if (id == "ou-rate") {
    spec.orders = {1, 3, 5, 7, 9};
    for (int e = 7; e <= 15; ++e) spec.n_values.push_back(1ULL << e);
    spec.replicates = 30;
    spec.query_grid = {0.0, 6.0, 1000};
  } else if (id == "double-layer-bandwidth") {
    spec.model_id = "double-layer";
    spec.orders = {3, 5};
    for (int e = 5; e <= 16; ++e) spec.n_values.push_back(1ULL << e);
    spec.replicates = 1200;
    spec.query_grid = {-4.0, 4.0, 100};
  } else if (id == "burgers-recon") {
    spec.orders = {1, 3, 5, 7, 9};
    spec.n_values = {1ULL << 10, 1ULL << 15};
    spec.replicates = 1;
    spec.query_grid = {-3.0, 4.0, 1001};
  } else {
    throw std::invalid_argument("unknown experiment id: " + id);
  }
  return spec;
}

/// Simulation cost in the budget model: R * M * N^2 for pairwise drifts,
/// R * M * N when a reduced form exists, summed over table cells.
inline double estimated_sim_cost(const ExperimentSpec& spec, bool reduced_form) {
  double total = 0.0;
  for (std::size_t n : spec.n_values) {
    const double per_step = reduced_form ? static_cast<double>(n) : static_cast<double>(n) * static_cast<double>(n);
    total += per_step * static_cast<double>(spec.n_steps) * static_cast<double>(spec.replicates) *
             static_cast<double>(spec.orders.empty() ? 1 : spec.orders.size());
  }
  return total;
}

struct ExperimentResult {
  std::string experiment;
  nlohmann::json params;
  struct Row {
    std::size_t n = 0;
    int order = 0;
    double e_n = 0.0;
  };
  std::vector<Row> tables;
  struct Slope {
    int order = 0;
    double alpha = 0.0;
    double residual = 0.0;
  };
  std::vector<Slope> slopes;
  struct Hist {
    std::size_t n = 0;
    int order = 0;
    double omega = 0.0;
    std::vector<double> etas;
    std::vector<std::size_t> counts;
  };
  std::vector<Hist> histograms;
  std::uint64_t master_seed = 0;
  double wallclock_s = 0.0;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();

  ModelSpec model;
  if (spec.id == "ou-rate") {
    model = linear_interaction_model();
  } else if (spec.id == "double-layer-bandwidth") {
    model = model_by_id(spec.model_id.empty() ? "double-layer" : spec.model_id);
  } else if (spec.id == "burgers-recon") {
    model = burgers_model();
  } else {
    throw std::invalid_argument("unknown experiment id: " + spec.id);
  }
  if (spec.orders.empty() || spec.n_values.empty()) throw std::invalid_argument("run_experiment: empty orders or N set");

  if (!spec.lift_budget) {
    const double cost = estimated_sim_cost(spec, model.has_reduced_form);
    if (cost > spec.budget) {
      std::ostringstream msg;
      msg << "experiment '" << spec.id << "' needs ~" << cost << " simulation ops, over the budget of " << spec.budget
          << "; rerun with a larger budget or lift the guard";
      throw BudgetError(msg.str());
    }
  }

  ExperimentResult result;
  result.experiment = spec.id;
  result.master_seed = spec.seed;
  result.params = {{"model", model.id},
                   {"orders", spec.orders},
                   {"n_values", spec.n_values},
                   {"replicates", spec.replicates},
                   {"T", spec.horizon},
                   {"M", spec.n_steps},
                   {"omega", spec.omega},
                   {"grid", {{"start", spec.query_grid.start}, {"stop", spec.query_grid.stop}, {"count", spec.query_grid.count}}}};

  const std::vector<double> queries = spec.query_grid.points();

  if (spec.id == "ou-rate") {
    result.params["bandwidth"] = "rule: N^(-1/(2(l+1)+1))";
    for (int order : spec.orders) {
      const KernelSpec kernel = make_kernel(order, 1);
      std::vector<SimConfig> cfgs;
      for (std::size_t n : spec.n_values) {
        SimConfig cfg;
        cfg.n_particles = n;
        cfg.n_steps = spec.n_steps;
        cfg.horizon = spec.horizon;
        cfg.dim = 1;
        cfg.seed = spec.seed;  // replicate j then runs with seed (master xor j)
        cfgs.push_back(cfg);
      }
      const auto rows = mc_strong_error(model, cfgs, kernel, BandwidthMode::rule(order + 1), queries, spec.replicates);
      std::vector<std::pair<double, double>> fit_points;
      for (const auto& row : rows) {
        result.tables.push_back({row.n_particles, order, row.e_n});
        fit_points.emplace_back(std::log2(static_cast<double>(row.n_particles)), std::log2(row.e_n));
      }
      if (fit_points.size() >= 2) {
        const SlopeFit fit = fit_slope(fit_points);
        result.slopes.push_back({order, fit.slope, fit.residual});
      }
    }
  } else if (spec.id == "double-layer-bandwidth") {
    for (int order : spec.orders) {
      const KernelSpec kernel = make_kernel(order, 1);
      for (std::size_t n : spec.n_values) {
        SimConfig cfg;
        cfg.n_particles = n;
        cfg.n_steps = spec.n_steps;
        cfg.horizon = spec.horizon;
        cfg.dim = 1;
        cfg.seed = spec.seed;
        const BandwidthGrid grid = bandwidth_grid(n, order, 1);
        const auto hist = bandwidth_histogram(model, cfg, kernel, grid, spec.omega, queries, spec.replicates);
        result.histograms.push_back({n, order, spec.omega, hist.eta_values, hist.counts});
      }
    }
  } else {  // burgers-recon
    result.params["bandwidth"] = "goldenshluger-lepski";
    std::vector<double> reference(queries.size(), 0.0);
    parallel_for(queries.size(), [&](std::size_t q) {
      reference[q] = model.reference->density(spec.horizon, {&queries[q], 1});
    });
    for (int order : spec.orders) {
      const KernelSpec kernel = make_kernel(order, 1);
      for (std::size_t n : spec.n_values) {
        SimConfig cfg;
        cfg.n_particles = n;
        cfg.n_steps = spec.n_steps;
        cfg.horizon = spec.horizon;
        cfg.dim = 1;
        cfg.seed = spec.seed;
        const BandwidthGrid grid = bandwidth_grid(n, order, 1);

        std::vector<double> sup_errors(spec.replicates, 0.0);
        std::vector<std::vector<std::size_t>> local(spec.replicates);
        parallel_for(spec.replicates, [&](std::size_t j) {
          local[j].assign(grid.values.size(), 0);
          SimConfig run_cfg = cfg;
          run_cfg.seed = replicate_seed(cfg.seed, j);
          const ParticleEnsemble ens = simulate(run_cfg, model);
          double worst = 0.0;
          for (std::size_t q = 0; q < queries.size(); ++q) {
            const auto sel = select_bandwidth(ens, kernel, grid, spec.omega, {&queries[q], 1});
            ++local[j][sel.selected_index];
            worst = std::max(worst, std::fabs(sel.density_at_selected() - reference[q]));
          }
          sup_errors[j] = worst;
        });
        result.tables.push_back({n, order, detail::median(sup_errors)});
        ExperimentResult::Hist hist{n, order, spec.omega, grid.values, std::vector<std::size_t>(grid.values.size(), 0)};
        for (std::size_t j = 0; j < spec.replicates; ++j)
          for (std::size_t i = 0; i < hist.counts.size(); ++i) hist.counts[i] += local[j][i];
        result.histograms.push_back(std::move(hist));
      }
    }
    result.params["metric"] = "median over replicates of sup |estimate - reference|";
  }

  result.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

inline nlohmann::json to_json(const ExperimentResult& result) {
  nlohmann::json j;
  j["experiment"] = result.experiment;
  j["params"] = result.params;
  j["tables"] = nlohmann::json::array();
  for (const auto& row : result.tables) j["tables"].push_back({{"N", row.n}, {"order", row.order}, {"E_N", row.e_n}});
  j["slopes"] = nlohmann::json::array();
  for (const auto& s : result.slopes)
    j["slopes"].push_back({{"order", s.order}, {"alpha", s.alpha}, {"residual", s.residual}});
  j["histograms"] = nlohmann::json::array();
  for (const auto& h : result.histograms)
    j["histograms"].push_back(
        {{"N", h.n}, {"order", h.order}, {"omega", h.omega}, {"etas", h.etas}, {"counts", h.counts}});
  j["seeds"] = {{"master", result.master_seed}, {"replicate_rule", "master xor j"}};
  j["wallclock_s"] = result.wallclock_s;
  return j;
}

/// CSV companions next to the JSON result: one file per populated table.
inline void write_result_csv(const ExperimentResult& result, const std::string& base_path) {
  if (!result.tables.empty()) {
    std::ofstream out(base_path + "_tables.csv");
    out << "N,order,E_N\n";
    for (const auto& row : result.tables)
      out << row.n << ',' << row.order << ',' << format_double(row.e_n) << "\n";
  }
  if (!result.slopes.empty()) {
    std::ofstream out(base_path + "_slopes.csv");
    out << "order,alpha,residual\n";
    for (const auto& s : result.slopes)
      out << s.order << ',' << format_double(s.alpha) << ',' << format_double(s.residual) << "\n";
  }
  if (!result.histograms.empty()) {
    std::ofstream out(base_path + "_histograms.csv");
    out << "N,order,omega,eta,count\n";
    for (const auto& h : result.histograms)
      for (std::size_t i = 0; i < h.etas.size(); ++i)
        out << h.n << ',' << h.order << ',' << format_double(h.omega) << ',' << format_double(h.etas[i]) << ','
            << h.counts[i] << "\n";
  }
}

}  // namespace mkv
