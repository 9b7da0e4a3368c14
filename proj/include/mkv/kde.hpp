// Kernel density estimator over the final-time particle positions:
//   mu_hat(x) = N^-1 sum_n eta^-d K(eta^-1 (x - X_n)).
// Direct summation, no binning or truncation; queries evaluate in parallel,
// particles in fixed index order.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mkv/ensemble.hpp"
#include "mkv/kernels.hpp"
#include "mkv/parallel.hpp"

namespace mkv {

struct DensityEstimate {
  std::vector<double> queries;     // row-major G x dim
  std::vector<double> values;      // G
  std::vector<double> bandwidths;  // size 1 (uniform) or G (per point)
  int dim = 1;
  int order = 1;
  std::size_t n_particles = 0;
  std::uint64_t seed = 0;
  double time = 0.0;

  std::size_t n_queries() const noexcept { return values.size(); }
};

/// Estimator value at a single query point.
inline double kde_at(const ParticleEnsemble& ens, const KernelSpec& kernel, double eta, std::span<const double> x) {
  if (!(eta > 0.0)) throw std::invalid_argument("kde_at: eta must be > 0");
  if (kernel.dim() != ens.dim || static_cast<int>(x.size()) != ens.dim)
    throw std::invalid_argument("kde_at: dimension mismatch");
  const std::size_t n = ens.size();
  const std::size_t d = static_cast<std::size_t>(ens.dim);
  const double inv_eta = 1.0 / eta;
  double sum = 0.0;
  if (d == 1) {
    for (std::size_t i = 0; i < n; ++i) sum += kernel.eval1((x[0] - ens.positions[i]) * inv_eta);
  } else {
    std::vector<double> u(d);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = ens.particle(i);
      double v = 1.0;
      for (std::size_t j = 0; j < d; ++j) v *= kernel.eval1((x[j] - p[j]) * inv_eta);
      sum += v;
    }
  }
  return sum * std::pow(inv_eta, static_cast<double>(d)) / static_cast<double>(n);
}

/// Estimator at one point for several bandwidths in one pass over particles.
inline std::vector<double> kde_at_multi(const ParticleEnsemble& ens, const KernelSpec& kernel,
                                        std::span<const double> etas, std::span<const double> x) {
  std::vector<double> out(etas.size(), 0.0);
  for (std::size_t e = 0; e < etas.size(); ++e) out[e] = kde_at(ens, kernel, etas[e], x);
  return out;
}

/// Evaluates the estimator on a grid of query points.
inline DensityEstimate estimate_density(const ParticleEnsemble& ens, const KernelSpec& kernel, double eta,
                                        std::span<const double> queries) {
  if (!(eta > 0.0)) throw std::invalid_argument("estimate_density: eta must be > 0");
  if (kernel.dim() != ens.dim) throw std::invalid_argument("estimate_density: kernel/ensemble dimension mismatch");
  const std::size_t d = static_cast<std::size_t>(ens.dim);
  if (queries.size() % d != 0) throw std::invalid_argument("estimate_density: query array size not a multiple of dim");
  const std::size_t g = queries.size() / d;

  DensityEstimate est;
  est.queries.assign(queries.begin(), queries.end());
  est.values.assign(g, 0.0);
  est.bandwidths = {eta};
  est.dim = ens.dim;
  est.order = kernel.order();
  est.n_particles = ens.size();
  est.seed = ens.seed;
  est.time = ens.time;

  parallel_for(g, [&](std::size_t q) { est.values[q] = kde_at(ens, kernel, eta, queries.subspan(q * d, d)); });
  return est;
}

}  // namespace mkv
