// Particle ensemble state: N positions in R^d at a fixed time, with the seed
// and step index that produced it.
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mkv {

struct ParticleEnsemble {
  std::vector<double> positions;  // row-major N x dim
  int dim = 1;
  double time = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  std::size_t size() const noexcept { return dim > 0 ? positions.size() / static_cast<std::size_t>(dim) : 0; }

  std::span<const double> particle(std::size_t n) const {
    return {positions.data() + n * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }

  std::span<double> particle(std::size_t n) {
    return {positions.data() + n * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

inline ParticleEnsemble make_ensemble(std::size_t n, int dim) {
  if (dim < 1) throw std::invalid_argument("make_ensemble: dim must be >= 1");
  ParticleEnsemble ens;
  ens.dim = dim;
  ens.positions.assign(n * static_cast<std::size_t>(dim), 0.0);
  return ens;
}

}  // namespace mkv
