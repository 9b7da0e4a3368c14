#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mkv/models.hpp"
#include "mkv/parallel.hpp"
#include "mkv/rng.hpp"
#include "mkv/simulate.hpp"

using Catch::Matchers::WithinAbs;

namespace {

mkv::ModelSpec still_model() {
  mkv::ModelSpec m;
  m.id = "still";
  m.dim = 1;
  m.has_reduced_form = true;
  m.drift_reduced = [](double, std::span<const double>, const mkv::StepSummary&, const mkv::ParticleEnsemble&,
                       std::span<double> out) { out[0] = 0.0; };
  m.drift_pairwise = [](double, std::span<const double>, const mkv::ParticleEnsemble&, std::span<double> out) {
    out[0] = 0.0;
  };
  m.sigma = [](double, std::span<const double>) { return 0.0; };
  m.initial = mkv::GaussianLaw{{0.0}, 1.0};
  return m;
}

mkv::ModelSpec noise_model(double sigma = 1.0) {
  auto m = still_model();
  m.id = "noise";
  m.sigma = [sigma](double, std::span<const double>) { return sigma; };
  return m;
}

double sample_mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_var(const std::vector<double>& xs) {
  const double m = sample_mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("dirac initial law clones the point") {
  mkv::CounterRng rng(1);
  auto ens = mkv::sample_initial(mkv::DiracLaw{{0.0}}, 4, rng);
  REQUIRE(ens.size() == 4);
  for (double v : ens.positions) REQUIRE(v == 0.0);
}

TEST_CASE("gaussian initial law has the requested moments") {
  mkv::CounterRng rng(99);
  auto ens = mkv::sample_initial(mkv::GaussianLaw{{3.0}, 0.5}, 100000, rng);
  REQUIRE_THAT(sample_mean(ens.positions), WithinAbs(3.0, 0.01));
  REQUIRE_THAT(sample_var(ens.positions), WithinAbs(0.5, 0.02));

  auto std_ens = mkv::sample_initial(mkv::GaussianLaw{{0.0}, 1.0}, 100000, mkv::CounterRng(7));
  REQUIRE_THAT(sample_mean(std_ens.positions), WithinAbs(0.0, 0.013));
}

TEST_CASE("negative variance is rejected") {
  mkv::CounterRng rng(1);
  REQUIRE_THROWS_AS(mkv::sample_initial(mkv::GaussianLaw{{0.0}, -0.5}, 10, rng), std::invalid_argument);
}

TEST_CASE("zero drift and zero noise leave positions unchanged") {
  mkv::CounterRng rng(3);
  auto before = mkv::sample_initial(mkv::GaussianLaw{{0.0}, 1.0}, 32, rng);
  auto after = mkv::euler_step(before, still_model(), 0.25, rng);
  REQUIRE(after.positions == before.positions);
  REQUIRE_THAT(after.time, WithinAbs(0.25, 1e-15));
  REQUIRE(after.step == 1);
}

TEST_CASE("two-particle linear drift moves each particle toward the mean") {
  auto m = mkv::linear_interaction_model();
  m.sigma = [](double, std::span<const double>) { return 0.0; };
  mkv::ParticleEnsemble ens;
  ens.dim = 1;
  ens.positions = {0.0, 2.0};
  mkv::CounterRng rng(0);
  auto next = mkv::euler_step(ens, m, 0.1, rng);
  REQUIRE_THAT(next.positions[0], WithinAbs(0.1, 1e-15));
  REQUIRE_THAT(next.positions[1], WithinAbs(1.9, 1e-15));
}

TEST_CASE("increment equals the seeded normal draw replayed in isolation") {
  auto m = noise_model();
  m.initial = mkv::DiracLaw{{0.0}};
  mkv::SimConfig cfg;
  cfg.n_particles = 1;
  cfg.n_steps = 1;
  cfg.horizon = 1.0;
  cfg.seed = 31337;
  auto ens = mkv::simulate(cfg, m);
  const double expected = mkv::CounterRng(31337).normal(0, 1, 0);
  REQUIRE(ens.positions[0] == expected);
  // re-running is bitwise identical
  REQUIRE(mkv::simulate(cfg, m).positions == ens.positions);
}

TEST_CASE("simulate with one step reproduces a single euler step") {
  auto m = mkv::linear_interaction_model();
  mkv::SimConfig cfg;
  cfg.n_particles = 64;
  cfg.n_steps = 1;
  cfg.horizon = 0.5;
  cfg.seed = 11;
  auto direct = mkv::simulate(cfg, m);
  const mkv::CounterRng rng(cfg.seed);
  auto manual = mkv::euler_step(mkv::sample_initial(m.initial, 64, rng), m, 0.5, rng);
  REQUIRE(direct.positions == manual.positions);
}

TEST_CASE("OU run stays at the stationary law") {
  auto m = mkv::linear_interaction_model();
  mkv::SimConfig cfg;
  cfg.n_particles = 1 << 12;
  cfg.n_steps = 100;
  cfg.horizon = 1.0;
  cfg.seed = 2718;
  auto ens = mkv::simulate(cfg, m);
  REQUIRE_THAT(ens.time, WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(sample_mean(ens.positions), WithinAbs(3.0, 0.05));
  REQUIRE_THAT(sample_var(ens.positions), WithinAbs(0.5, 0.05));
}

TEST_CASE("results are bitwise identical for any thread count") {
  auto m = mkv::linear_interaction_model();
  mkv::SimConfig cfg;
  cfg.n_particles = 2048;
  cfg.n_steps = 20;
  cfg.horizon = 0.2;
  cfg.seed = 555;
  mkv::set_max_threads(1);
  auto serial = mkv::simulate(cfg, m);
  mkv::set_max_threads(8);
  auto parallel = mkv::simulate(cfg, m);
  mkv::set_max_threads(0);
  REQUIRE(serial.positions == parallel.positions);
}

TEST_CASE("permuting RNG substreams permutes the output") {
  const std::size_t n = 128;
  std::vector<std::uint64_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0ULL);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(123));

  mkv::SimConfig cfg;
  cfg.n_particles = n;
  cfg.n_steps = 10;
  cfg.horizon = 0.5;
  cfg.seed = 42;

  // independent particles: exact permutation equivariance
  auto nm = noise_model();
  auto base = mkv::simulate(cfg, nm);
  auto permuted = mkv::simulate(cfg, nm, mkv::DriftPath::Reduced, nullptr, &perm);
  for (std::size_t i = 0; i < n; ++i) REQUIRE(permuted.positions[i] == base.positions[static_cast<std::size_t>(perm[i])]);

  // counting drift: the empirical measure is permutation invariant, so the
  // interaction stays exact too
  auto bm = mkv::burgers_model();
  bm.initial = mkv::GaussianLaw{{0.0}, 1.0};
  auto bbase = mkv::simulate(cfg, bm);
  auto bperm = mkv::simulate(cfg, bm, mkv::DriftPath::Reduced, nullptr, &perm);
  for (std::size_t i = 0; i < n; ++i)
    REQUIRE(bperm.positions[i] == bbase.positions[static_cast<std::size_t>(perm[i])]);
}

TEST_CASE("reduced and pairwise paths give identical burgers trajectories") {
  auto m = mkv::burgers_model();
  mkv::SimConfig cfg;
  cfg.n_particles = 256;
  cfg.n_steps = 25;
  cfg.horizon = 0.5;
  cfg.seed = 777;
  auto reduced = mkv::simulate(cfg, m, mkv::DriftPath::Reduced);
  auto pairwise = mkv::simulate(cfg, m, mkv::DriftPath::Pairwise);
  REQUIRE(reduced.positions == pairwise.positions);
}

TEST_CASE("reduced and pairwise paths agree for the linear model") {
  auto m = mkv::linear_interaction_model();
  mkv::SimConfig cfg;
  cfg.n_particles = 200;
  cfg.n_steps = 25;
  cfg.horizon = 0.5;
  cfg.seed = 778;
  auto reduced = mkv::simulate(cfg, m, mkv::DriftPath::Reduced);
  auto pairwise = mkv::simulate(cfg, m, mkv::DriftPath::Pairwise);
  for (std::size_t i = 0; i < reduced.size(); ++i)
    REQUIRE_THAT(reduced.positions[i], WithinAbs(pairwise.positions[i], 1e-12));
}

TEST_CASE("zero-noise linear dynamics keep the ensemble mean invariant") {
  auto m = mkv::linear_interaction_model();
  m.sigma = [](double, std::span<const double>) { return 0.0; };
  mkv::SimConfig cfg;
  cfg.n_particles = 512;
  cfg.n_steps = 1;
  cfg.horizon = 0.02;
  cfg.seed = 9;
  const mkv::CounterRng rng(cfg.seed);
  auto state = mkv::sample_initial(m.initial, cfg.n_particles, rng);
  const double mean0 = sample_mean(state.positions);
  for (int s = 0; s < 50; ++s) state = mkv::euler_step(state, m, 0.02, rng);
  REQUIRE_THAT(sample_mean(state.positions), WithinAbs(mean0, 1e-13));
}

TEST_CASE("snapshot sink sees thinned states") {
  auto m = noise_model();
  mkv::SimConfig cfg;
  cfg.n_particles = 16;
  cfg.n_steps = 10;
  cfg.horizon = 1.0;
  cfg.seed = 4;
  std::vector<std::uint64_t> seen;
  mkv::SnapshotSink sink;
  sink.every = 3;
  sink.callback = [&](const mkv::ParticleEnsemble& e) { seen.push_back(e.step); };
  mkv::simulate(cfg, m, mkv::DriftPath::Reduced, &sink);
  REQUIRE(seen == std::vector<std::uint64_t>{3, 6, 9});
}

TEST_CASE("non-finite positions abort with a diagnostic") {
  auto m = still_model();
  m.drift_reduced = [](double, std::span<const double>, const mkv::StepSummary&, const mkv::ParticleEnsemble&,
                       std::span<double> out) { out[0] = 1e308; };
  mkv::SimConfig cfg;
  cfg.n_particles = 4;
  cfg.n_steps = 3;
  cfg.horizon = 3.0;
  cfg.seed = 1;
  try {
    mkv::simulate(cfg, m);
    FAIL("expected SimulationError");
  } catch (const mkv::SimulationError& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("particle") != std::string::npos);
    REQUIRE(msg.find("step") != std::string::npos);
  }
}

TEST_CASE("config validation rejects bad parameters") {
  mkv::SimConfig cfg;
  cfg.n_particles = 0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.n_particles = 1;
  cfg.n_steps = 0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.n_steps = 1;
  cfg.horizon = 0.0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.horizon = 1.0;
  REQUIRE_NOTHROW(cfg.validate());
  REQUIRE_THAT(cfg.step(), WithinAbs(1.0, 0.0));
}
