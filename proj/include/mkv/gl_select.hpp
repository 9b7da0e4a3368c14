// Data-driven pointwise bandwidth selection.
//
// Over a grid H of candidate bandwidths, the selector minimises A + V where
//   V_eta = omega * |K|_L2^2 * log(N) / (N * eta^d)
// is the variance penalty and
//   A_eta = max over eta' <= eta of { (mu_hat_eta - mu_hat_eta')^2 - V_eta - V_eta' }_+
// compares the estimate against every coarser one. Natural logarithms
// throughout, both here and in the grid.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mkv/kde.hpp"
#include "mkv/kernels.hpp"

namespace mkv {

struct BandwidthGrid {
  std::vector<double> values;  // sorted descending
  std::size_t n_particles = 0;
  int order = 1;
  int dim = 1;
};

// Grid H = { (n / log n)^(-1/(2m+d)), m = 1..order+1 }, sorted descending.
// Larger m gives the larger bandwidth since the base exceeds one.
inline BandwidthGrid bandwidth_grid(std::size_t n, int order, int dim) {
  if (n < 3) throw std::invalid_argument("bandwidth_grid: n must be >= 3");
  if (dim < 1) throw std::invalid_argument("bandwidth_grid: dim must be >= 1");
  if (order < 1) throw std::invalid_argument("bandwidth_grid: order must be >= 1");
  BandwidthGrid grid;
  grid.n_particles = n;
  grid.order = order;
  grid.dim = dim;
  const double base = static_cast<double>(n) / std::log(static_cast<double>(n));
  for (int m = order + 1; m >= 1; --m)
    grid.values.push_back(std::pow(base, -1.0 / static_cast<double>(2 * m + dim)));
  return grid;
}

/// Smoothness-based rule eta = n^(-1/(2k + d)) with k the smoothness proxy.
inline double fixed_bandwidth(std::size_t n, int smoothness_proxy, int dim) {
  if (n < 1) throw std::invalid_argument("fixed_bandwidth: n must be >= 1");
  if (smoothness_proxy < 1) throw std::invalid_argument("fixed_bandwidth: smoothness proxy must be >= 1");
  if (dim < 1) throw std::invalid_argument("fixed_bandwidth: dim must be >= 1");
  return std::pow(static_cast<double>(n), -1.0 / static_cast<double>(2 * smoothness_proxy + dim));
}

inline double variance_term(double eta, std::size_t n, const KernelSpec& kernel, double omega) {
  if (!(eta > 0.0)) throw std::invalid_argument("variance_term: eta must be > 0");
  if (n < 2) throw std::invalid_argument("variance_term: n must be >= 2");
  if (!(omega > 0.0)) throw std::invalid_argument("variance_term: omega must be > 0");
  return omega * kernel.l2_norm_sq() * std::log(static_cast<double>(n)) /
         (static_cast<double>(n) * std::pow(eta, static_cast<double>(kernel.dim())));
}

// A-term at the grid point eta. The max runs over eta' <= eta inclusive; the
// eta' = eta entry contributes {-2 V_eta}_+ = 0, so a singleton grid gives 0.
inline double a_term(std::span<const double> grid, std::span<const double> estimates, std::span<const double> v_terms,
                     double eta) {
  if (grid.size() != estimates.size() || grid.size() != v_terms.size())
    throw std::invalid_argument("a_term: table sizes mismatch");
  const auto it = std::find(grid.begin(), grid.end(), eta);
  if (it == grid.end()) throw std::invalid_argument("a_term: eta not on the grid");
  const std::size_t at = static_cast<std::size_t>(it - grid.begin());
  double best = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] > eta) continue;
    const double diff = estimates[at] - estimates[j];
    const double candidate = diff * diff - v_terms[at] - v_terms[j];
    if (candidate > best) best = candidate;
  }
  return best;
}

struct BandwidthSelection {
  double selected = 0.0;           // eta hat
  std::size_t selected_index = 0;  // into the descending grid
  std::vector<double> grid;        // descending
  std::vector<double> estimates;   // mu_hat per grid value
  std::vector<double> a_terms;
  std::vector<double> v_terms;
  std::vector<double> query;  // x
  double omega = 0.0;

  double density_at_selected() const { return estimates[selected_index]; }
  double total(std::size_t i) const { return a_terms[i] + v_terms[i]; }
};

// Argmin of A + V over a descending grid; ties break toward the largest
// bandwidth (first index), favouring the smaller variance bound.
inline std::size_t select_from_tables(std::span<const double> a_terms, std::span<const double> v_terms) {
  if (a_terms.empty() || a_terms.size() != v_terms.size())
    throw std::invalid_argument("select_from_tables: bad tables");
  std::size_t best = 0;
  double best_total = a_terms[0] + v_terms[0];
  for (std::size_t i = 1; i < a_terms.size(); ++i) {
    const double total = a_terms[i] + v_terms[i];
    if (total < best_total) {
      best = i;
      best_total = total;
    }
  }
  return best;
}

inline BandwidthSelection select_bandwidth(const ParticleEnsemble& ens, const KernelSpec& kernel,
                                           const BandwidthGrid& grid, double omega, std::span<const double> x) {
  if (grid.values.empty()) throw std::invalid_argument("select_bandwidth: empty grid");
  if (!(omega > 0.0)) throw std::invalid_argument("select_bandwidth: omega must be > 0");

  BandwidthSelection sel;
  sel.grid = grid.values;
  sel.omega = omega;
  sel.query.assign(x.begin(), x.end());
  sel.estimates = kde_at_multi(ens, kernel, grid.values, x);
  sel.v_terms.reserve(grid.values.size());
  for (double eta : grid.values) sel.v_terms.push_back(variance_term(eta, ens.size(), kernel, omega));
  sel.a_terms.reserve(grid.values.size());
  for (double eta : grid.values) sel.a_terms.push_back(a_term(sel.grid, sel.estimates, sel.v_terms, eta));
  sel.selected_index = select_from_tables(sel.a_terms, sel.v_terms);
  sel.selected = sel.grid[sel.selected_index];
  return sel;
}

}  // namespace mkv
