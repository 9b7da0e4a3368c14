#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <utility>
#include <vector>

#include "mkv/harness.hpp"

using Catch::Matchers::WithinAbs;

TEST_CASE("slope fit recovers an exact line") {
  std::vector<std::pair<double, double>> pts;
  for (double n = 7.0; n <= 12.0; n += 1.0) pts.emplace_back(n, -0.8 * n + 1.0);
  auto fit = mkv::fit_slope(pts);
  REQUIRE_THAT(fit.slope, WithinAbs(0.8, 1e-12));
  REQUIRE_THAT(fit.intercept, WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(fit.residual, WithinAbs(0.0, 1e-12));
}

TEST_CASE("slope fit on two points") {
  std::vector<std::pair<double, double>> pts{{7.0, -7.0}, {8.0, -8.0}};
  auto fit = mkv::fit_slope(pts);
  REQUIRE_THAT(fit.slope, WithinAbs(1.0, 1e-12));
}

TEST_CASE("slope fit is invariant under shifting the ordinates") {
  std::vector<std::pair<double, double>> pts{{7.0, -5.1}, {8.0, -6.3}, {9.0, -6.9}, {10.0, -8.2}};
  auto base = mkv::fit_slope(pts);
  for (auto& [x, y] : pts) y += 3.25;
  auto shifted = mkv::fit_slope(pts);
  REQUIRE_THAT(shifted.slope, WithinAbs(base.slope, 1e-12));
  REQUIRE_THAT(shifted.residual, WithinAbs(base.residual, 1e-12));
  REQUIRE_THAT(shifted.intercept, WithinAbs(base.intercept + 3.25, 1e-12));
}

TEST_CASE("slope fit rejects degenerate abscissae") {
  std::vector<std::pair<double, double>> one{{7.0, -7.0}};
  REQUIRE_THROWS_AS(mkv::fit_slope(one), std::invalid_argument);
  std::vector<std::pair<double, double>> flat{{7.0, -7.0}, {7.0, -8.0}};
  REQUIRE_THROWS_AS(mkv::fit_slope(flat), std::invalid_argument);
}

TEST_CASE("sup squared error on injected values") {
  const std::vector<double> ref{0.1, 0.2, 0.3};
  REQUIRE(mkv::sup_sq_error(ref, ref) == 0.0);
  const std::vector<double> est{0.1, 0.3, 0.3};
  REQUIRE_THAT(mkv::sup_sq_error(est, ref), WithinAbs(0.01, 1e-15));
  const std::vector<double> single_est{0.5}, single_ref{0.4};
  REQUIRE_THAT(mkv::replicate_mean(std::vector<double>{mkv::sup_sq_error(single_est, single_ref)}),
               WithinAbs(0.01, 1e-15));
}

TEST_CASE("replicate mean equals the streaming mean") {
  std::vector<double> values{0.31, 0.92, 0.11, 0.47, 0.66, 0.05, 0.88};
  double streaming = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) streaming += (values[k] - streaming) / static_cast<double>(k + 1);
  REQUIRE_THAT(mkv::replicate_mean(values), WithinAbs(streaming, 1e-12));
}

TEST_CASE("mc strong error requires a reference") {
  auto model = mkv::double_layer_model();  // no analytic reference
  auto kernel = mkv::make_kernel(1, 1);
  mkv::SimConfig cfg;
  cfg.n_particles = 16;
  std::vector<double> grid{0.0, 1.0};
  REQUIRE_THROWS_AS(
      mkv::mc_strong_error(model, {&cfg, 1}, kernel, mkv::BandwidthMode::rule(), grid, 1),
      std::invalid_argument);
}

TEST_CASE("mc strong error is deterministic and decreasing-ish") {
  auto model = mkv::linear_interaction_model();
  auto kernel = mkv::make_kernel(3, 1);
  std::vector<mkv::SimConfig> cfgs;
  for (std::size_t n : {256ULL, 1024ULL}) {
    mkv::SimConfig cfg;
    cfg.n_particles = n;
    cfg.n_steps = 20;
    cfg.horizon = 0.2;
    cfg.seed = 10 + n;
    cfgs.push_back(cfg);
  }
  auto grid = mkv::GridSpec{0.0, 6.0, 200}.points();
  auto rows = mkv::mc_strong_error(model, cfgs, kernel, mkv::BandwidthMode::rule(), grid, 4);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    REQUIRE(row.e_n > 0.0);
    REQUIRE(row.replicate_sq_sup.size() == 4);
    REQUIRE_THAT(mkv::replicate_mean(row.replicate_sq_sup), WithinAbs(row.e_n, 1e-15));
  }
  auto again = mkv::mc_strong_error(model, cfgs, kernel, mkv::BandwidthMode::rule(), grid, 4);
  REQUIRE(again[0].replicate_sq_sup == rows[0].replicate_sq_sup);
  REQUIRE(again[1].replicate_sq_sup == rows[1].replicate_sq_sup);
}

TEST_CASE("estimate_with_mode covers all three bandwidth modes") {
  auto model = mkv::linear_interaction_model();
  mkv::SimConfig cfg;
  cfg.n_particles = 512;
  cfg.n_steps = 10;
  cfg.horizon = 0.1;
  cfg.seed = 3;
  auto ens = mkv::simulate(cfg, model);
  auto kernel = mkv::make_kernel(3, 1);
  auto grid = mkv::GridSpec{1.0, 5.0, 41}.points();

  auto fixed = mkv::estimate_with_mode(ens, kernel, mkv::BandwidthMode::fixed(0.5), grid);
  REQUIRE(fixed.bandwidths == std::vector<double>{0.5});

  auto rule = mkv::estimate_with_mode(ens, kernel, mkv::BandwidthMode::rule(), grid);
  REQUIRE_THAT(rule.bandwidths[0], WithinAbs(mkv::fixed_bandwidth(512, 4, 1), 1e-15));

  auto adaptive = mkv::estimate_with_mode(ens, kernel, mkv::BandwidthMode::auto_select(23.0), grid);
  REQUIRE(adaptive.bandwidths.size() == grid.size());
  auto gl_grid = mkv::bandwidth_grid(512, 3, 1);
  for (double eta : adaptive.bandwidths)
    REQUIRE(std::find(gl_grid.values.begin(), gl_grid.values.end(), eta) != gl_grid.values.end());
}

TEST_CASE("bandwidth histogram counts every selection") {
  auto model = mkv::linear_interaction_model();
  auto kernel = mkv::make_kernel(3, 1);
  mkv::SimConfig cfg;
  cfg.n_particles = 256;
  cfg.n_steps = 10;
  cfg.horizon = 0.1;
  cfg.seed = 8;
  auto grid = mkv::bandwidth_grid(256, 3, 1);
  auto queries = mkv::GridSpec{1.5, 4.5, 7}.points();
  auto hist = mkv::bandwidth_histogram(model, cfg, kernel, grid, 23.0, queries, 5);
  std::size_t total = 0;
  for (std::size_t c : hist.counts) total += c;
  REQUIRE(total == 5 * 7);
  REQUIRE(hist.eta_values == grid.values);

  mkv::BandwidthGrid singleton;
  singleton.values = {0.4};
  auto hist1 = mkv::bandwidth_histogram(model, cfg, kernel, singleton, 23.0, queries, 3);
  REQUIRE(hist1.counts == std::vector<std::size_t>{3 * 7});
}

TEST_CASE("experiment defaults follow the benchmark protocols") {
  auto ou = mkv::default_experiment("ou-rate");
  REQUIRE(ou.orders == std::vector<int>{1, 3, 5, 7, 9});
  REQUIRE(ou.n_values.front() == 128);
  REQUIRE(ou.n_values.back() == 32768);
  REQUIRE(ou.replicates == 30);
  REQUIRE(ou.n_steps == 100);
  REQUIRE_THAT(ou.horizon, WithinAbs(1.0, 0.0));
  REQUIRE(ou.query_grid.count == 1000);
  REQUIRE_THAT(ou.query_grid.start, WithinAbs(0.0, 0.0));
  REQUIRE_THAT(ou.query_grid.stop, WithinAbs(6.0, 0.0));

  auto burgers = mkv::default_experiment("burgers-recon");
  REQUIRE_THAT(burgers.omega, WithinAbs(23.0, 0.0));
  REQUIRE_THAT(burgers.query_grid.start, WithinAbs(-3.0, 0.0));
  REQUIRE_THAT(burgers.query_grid.stop, WithinAbs(4.0, 0.0));

  auto dl = mkv::default_experiment("double-layer-bandwidth");
  REQUIRE(dl.replicates == 1200);
  REQUIRE(dl.model_id == "double-layer");

  REQUIRE_THROWS_AS(mkv::default_experiment("nope"), std::invalid_argument);
}

TEST_CASE("budget guard rejects oversized runs with a cost estimate") {
  auto spec = mkv::default_experiment("double-layer-bandwidth");
  try {
    mkv::run_experiment(spec);
    FAIL("expected BudgetError");
  } catch (const mkv::BudgetError& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("budget") != std::string::npos);
    REQUIRE(msg.find("ops") != std::string::npos);
  }
  // the pairwise cost model is quadratic in N
  REQUIRE(mkv::estimated_sim_cost(spec, false) > 1e14);
  REQUIRE(mkv::estimated_sim_cost(spec, true) < 1e12);
}

TEST_CASE("tiny ou-rate experiment produces the documented schema") {
  auto spec = mkv::default_experiment("ou-rate");
  spec.orders = {1};
  spec.n_values = {128, 256};
  spec.replicates = 2;
  spec.query_grid = {0.0, 6.0, 100};
  spec.seed = 77;

  auto result = mkv::run_experiment(spec);
  REQUIRE(result.tables.size() == 2);
  REQUIRE(result.slopes.size() == 1);
  REQUIRE(result.tables[0].n == 128);
  REQUIRE(result.tables[0].e_n > 0.0);

  auto j = mkv::to_json(result);
  for (const char* key : {"experiment", "params", "tables", "slopes", "histograms", "seeds", "wallclock_s"})
    REQUIRE(j.contains(key));

  // reproducibility: identical bytes except the wall clock
  auto j2 = mkv::to_json(mkv::run_experiment(spec));
  j.erase("wallclock_s");
  j2.erase("wallclock_s");
  REQUIRE(j.dump() == j2.dump());
}

TEST_CASE("tiny burgers experiment fills tables and histograms") {
  auto spec = mkv::default_experiment("burgers-recon");
  spec.orders = {3};
  spec.n_values = {256};
  spec.replicates = 2;
  spec.query_grid = {-2.0, 3.0, 26};
  spec.seed = 5;
  auto result = mkv::run_experiment(spec);
  REQUIRE(result.tables.size() == 1);
  REQUIRE(result.tables[0].e_n > 0.0);
  REQUIRE(result.histograms.size() == 1);
  std::size_t total = 0;
  for (std::size_t c : result.histograms[0].counts) total += c;
  REQUIRE(total == 2 * 26);
}

TEST_CASE("csv companions are written next to the json") {
  auto spec = mkv::default_experiment("ou-rate");
  spec.orders = {1};
  spec.n_values = {128, 256};
  spec.replicates = 1;
  spec.query_grid = {0.0, 6.0, 50};
  auto result = mkv::run_experiment(spec);

  const auto dir = std::filesystem::temp_directory_path() / "mkv_harness_test";
  std::filesystem::create_directories(dir);
  const std::string base = (dir / "res").string();
  mkv::write_result_csv(result, base);
  REQUIRE(std::filesystem::exists(base + "_tables.csv"));
  REQUIRE(std::filesystem::exists(base + "_slopes.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("unknown experiment ids are rejected") {
  mkv::ExperimentSpec spec;
  spec.id = "mystery";
  spec.orders = {1};
  spec.n_values = {16};
  REQUIRE_THROWS_AS(mkv::run_experiment(spec), std::invalid_argument);
}
