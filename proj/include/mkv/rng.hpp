// Counter-based random numbers for reproducible parallel simulation.
//
// Every normal draw is a pure function of (master seed, stream, step, coord),
// so a particle's noise can be regenerated in isolation and results never
// depend on thread scheduling. Uniforms come from a SplitMix64-style mixing
// chain; normals via the AS241 inverse normal CDF (PPND16).
#pragma once

#include <cmath>
#include <cstdint>

namespace mkv {

/// SplitMix64 finalizer; bijective 64-bit mixing.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {

template <std::size_t N>
constexpr double horner(const double (&c)[N], double r) noexcept {
  double acc = c[N - 1];
  for (std::size_t i = N - 1; i > 0; --i) acc = acc * r + c[i - 1];
  return acc;
}

}  // namespace detail

/// Inverse of the standard normal CDF (Wichura's AS241, PPND16 variant).
/// Relative accuracy is ~1e-15 for p away from the extreme denormal tails.
inline double inverse_normal_cdf(double p) {
  // Coefficient sets, lowest degree first.
  static constexpr double A[] = {3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
                                 1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
                                 3.3430575583588128105e4,  2.5090809287301226727e3};
  static constexpr double B[] = {1.0,                      4.2313330701600911252e1, 6.8718700749205790830e2,
                                 5.3941960214247511077e3,  2.1213794301586595867e4, 3.9307895800092710610e4,
                                 2.8729085735721942674e4,  5.2264952788528545610e3};
  static constexpr double C[] = {1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                                 3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                                 2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double D[] = {1.0,                      2.05319162663775882187e0, 1.67638483018380384940e0,
                                 6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
                                 5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static constexpr double E[] = {6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                                 2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                 2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double F[] = {1.0,                      5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                 1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
                                 1.42151175831644588870e-7};

  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * detail::horner(A, r) / detail::horner(B, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = detail::horner(C, r) / detail::horner(D, r);
  } else {
    r -= 5.0;
    x = detail::horner(E, r) / detail::horner(F, r);
  }
  return q < 0.0 ? -x : x;
}

// Counter-based generator. `stream` is the per-particle substream (the particle
// index unless a test permutes it), `step` the Euler step key (0 is reserved
// for initial sampling, step m+1 drives the transition t_m -> t_{m+1}) and
// `coord` the coordinate index.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t master_seed) noexcept : master_(master_seed) {}

  std::uint64_t master_seed() const noexcept { return master_; }

  std::uint64_t bits(std::uint64_t stream, std::uint64_t step, std::uint64_t coord) const noexcept {
    std::uint64_t h = mix64(master_);
    h = mix64(h ^ (stream + 0x9e3779b97f4a7c15ULL));
    h = mix64(h ^ (step + 0xbf58476d1ce4e5b9ULL));
    h = mix64(h ^ (coord + 0x94d049bb133111ebULL));
    return h;
  }

  /// Uniform draw in the open interval (0, 1); 52 bits of resolution.
  double uniform(std::uint64_t stream, std::uint64_t step, std::uint64_t coord) const noexcept {
    return (static_cast<double>(bits(stream, step, coord) >> 12) + 0.5) * 0x1p-52;
  }

  /// Standard normal draw via the inverse CDF.
  double normal(std::uint64_t stream, std::uint64_t step, std::uint64_t coord) const noexcept {
    return inverse_normal_cdf(uniform(stream, step, coord));
  }

 private:
  std::uint64_t master_;
};

/// Seed for Monte-Carlo replicate j of a master seed.
constexpr std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t j) noexcept { return master ^ j; }

}  // namespace mkv
