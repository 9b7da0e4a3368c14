// Interacting-particle Euler scheme.
//
// One step advances every particle synchronously:
//   x' = x + h * b(t, x, empirical measure of the pre-step ensemble)
//          + sqrt(h) * sigma(t, x) * Z,
// with Z drawn from the particle's dedicated counter-RNG substream. Results
// are a pure function of (seed, config, model) under any thread count.
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <variant>
#include <vector>

#include "mkv/ensemble.hpp"
#include "mkv/models.hpp"
#include "mkv/parallel.hpp"
#include "mkv/rng.hpp"

namespace mkv {

struct SimConfig {
  std::size_t n_particles = 1;
  std::size_t n_steps = 1;
  double horizon = 1.0;  // T
  std::uint64_t seed = 0;
  int dim = 1;

  double step() const noexcept { return horizon / static_cast<double>(n_steps); }

  void validate() const {
    if (n_particles < 1) throw std::invalid_argument("SimConfig: n_particles must be >= 1");
    if (n_steps < 1) throw std::invalid_argument("SimConfig: n_steps must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("SimConfig: horizon must be > 0");
    if (dim < 1) throw std::invalid_argument("SimConfig: dim must be >= 1");
  }
};

/// Raised when a particle leaves the finite range; names the culprit.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DriftPath { Reduced, Pairwise };

// RNG substream assignment: particle n draws from stream n unless a map says
// otherwise. The map hook exists so exchangeability (permuting substreams
// permutes the particles) is testable.
using StreamMap = std::vector<std::uint64_t>;

inline ParticleEnsemble sample_initial(const InitialLaw& law, std::size_t n, const CounterRng& rng, int dim = 1,
                                       const StreamMap* streams = nullptr) {
  if (n < 1) throw std::invalid_argument("sample_initial: n must be >= 1");
  if (streams && streams->size() != n) throw std::invalid_argument("sample_initial: stream map size mismatch");
  ParticleEnsemble ens = make_ensemble(n, dim);
  ens.seed = rng.master_seed();
  ens.time = 0.0;
  ens.step = 0;

  if (const auto* gaussian = std::get_if<GaussianLaw>(&law)) {
    if (gaussian->variance < 0.0) throw std::invalid_argument("sample_initial: negative variance");
    if (gaussian->mean.size() != static_cast<std::size_t>(dim))
      throw std::invalid_argument("sample_initial: law dimension mismatch");
    const double sd = std::sqrt(gaussian->variance);
    parallel_for(n, [&](std::size_t i) {
      const std::uint64_t stream = streams ? (*streams)[i] : static_cast<std::uint64_t>(i);
      auto x = ens.particle(i);
      for (int j = 0; j < dim; ++j)
        x[static_cast<std::size_t>(j)] =
            gaussian->mean[static_cast<std::size_t>(j)] + sd * rng.normal(stream, 0, static_cast<std::uint64_t>(j));
    });
  } else {
    const auto& dirac = std::get<DiracLaw>(law);
    if (dirac.point.size() != static_cast<std::size_t>(dim))
      throw std::invalid_argument("sample_initial: law dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      auto x = ens.particle(i);
      for (int j = 0; j < dim; ++j) x[static_cast<std::size_t>(j)] = dirac.point[static_cast<std::size_t>(j)];
    }
  }
  return ens;
}

// One synchronous Euler step of size h from the given state. All drifts are
// evaluated against the pre-step ensemble; noise for the transition into step
// m+1 uses step key m+1.
inline ParticleEnsemble euler_step(const ParticleEnsemble& state, const ModelSpec& model, double h,
                                   const CounterRng& rng, DriftPath path = DriftPath::Reduced,
                                   const StreamMap* streams = nullptr) {
  if (!(h > 0.0)) throw std::invalid_argument("euler_step: h must be > 0");
  if (state.dim != model.dim) throw std::invalid_argument("euler_step: model/ensemble dimension mismatch");
  if (streams && streams->size() != state.size()) throw std::invalid_argument("euler_step: stream map size mismatch");

  const std::size_t n = state.size();
  const std::size_t d = static_cast<std::size_t>(state.dim);
  const double t = state.time;
  const double sqrt_h = std::sqrt(h);
  const std::uint64_t step_key = state.step + 1;

  StepSummary summary;
  if (path == DriftPath::Reduced && model.summarize) summary = model.summarize(state);

  ParticleEnsemble next = state;
  next.time = state.time + h;
  next.step = step_key;

  std::atomic<std::size_t> bad_particle{n};  // n means "none"
  parallel_for(n, [&](std::size_t i) {
    const std::uint64_t stream = streams ? (*streams)[i] : static_cast<std::uint64_t>(i);
    const auto x = state.particle(i);
    auto out = next.particle(i);
    double stack_buf[8];
    std::vector<double> heap_buf;
    std::span<double> drift;
    if (d <= 8) {
      drift = {stack_buf, d};
    } else {
      heap_buf.assign(d, 0.0);
      drift = heap_buf;
    }
    if (path == DriftPath::Reduced) {
      model.drift_reduced(t, x, summary, state, drift);
    } else {
      model.drift_pairwise(t, x, state, drift);
    }
    const double sig = model.sigma(t, x);
    bool finite = true;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = rng.normal(stream, step_key, static_cast<std::uint64_t>(j));
      out[j] = x[j] + h * drift[j] + sqrt_h * sig * z;
      finite = finite && std::isfinite(out[j]);
    }
    if (!finite) {
      std::size_t expected = n;
      bad_particle.compare_exchange_strong(expected, i);
    }
  });
  if (bad_particle.load() < n) {
    std::ostringstream msg;
    msg << "euler_step: non-finite position for particle " << bad_particle.load() << " at step " << step_key
        << " (t = " << next.time << ")";
    throw SimulationError(msg.str());
  }
  return next;
}

struct SnapshotSink {
  std::size_t every = 0;  // 0 disables snapshots
  std::function<void(const ParticleEnsemble&)> callback;
};

/// Runs the full scheme: sample the initial law, then n_steps Euler steps.
inline ParticleEnsemble simulate(const SimConfig& cfg, const ModelSpec& model, DriftPath path = DriftPath::Reduced,
                                 const SnapshotSink* sink = nullptr, const StreamMap* streams = nullptr) {
  cfg.validate();
  if (cfg.dim != model.dim) throw std::invalid_argument("simulate: config/model dimension mismatch");
  const CounterRng rng(cfg.seed);
  ParticleEnsemble state = sample_initial(model.initial, cfg.n_particles, rng, cfg.dim, streams);
  const double h = cfg.step();
  for (std::size_t m = 0; m < cfg.n_steps; ++m) {
    state = euler_step(state, model, h, rng, path, streams);
    if (sink && sink->every > 0 && (m + 1) % sink->every == 0 && sink->callback) sink->callback(state);
  }
  return state;
}

}  // namespace mkv
