// Benchmark McKean-Vlasov models: drift, diffusion and initial law, plus
// analytic reference solutions where one exists.
//
// Every drift carries two evaluation paths. The reduced path may consult a
// per-step summary of the ensemble (mean, sorted copy) so one Euler step costs
// O(N) or O(N log N); the pairwise path folds the interaction kernel over all
// particles and serves as the oracle the reduced path is tested against.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mkv/ensemble.hpp"
#include "mkv/quadrature.hpp"

namespace mkv {

struct GaussianLaw {
  std::vector<double> mean;
  double variance = 1.0;  // isotropic
};

struct DiracLaw {
  std::vector<double> point;
};

using InitialLaw = std::variant<GaussianLaw, DiracLaw>;

/// Per-step precomputed ensemble summaries for reduced-form drifts.
struct StepSummary {
  std::vector<double> mean;    // per-coordinate mean, ascending-index sum
  std::vector<double> sorted;  // sorted positions, dim 1 only
};

struct ReferenceSolution {
  // Density of mu_t at x; the authoritative comparison target.
  std::function<double(double t, std::span<const double> x)> density;
  // CDF for scalar models; null when not available.
  std::function<double(double t, double x)> cdf;
};

struct ModelSpec {
  std::string id;
  int dim = 1;
  bool has_reduced_form = false;  // cost model: O(N) per step vs O(N^2)

  std::function<StepSummary(const ParticleEnsemble&)> summarize;  // may be null
  std::function<void(double t, std::span<const double> x, const StepSummary& summary, const ParticleEnsemble& ens,
                     std::span<double> out)>
      drift_reduced;
  std::function<void(double t, std::span<const double> x, const ParticleEnsemble& ens, std::span<double> out)>
      drift_pairwise;
  std::function<double(double t, std::span<const double> x)> sigma;  // sigma(t,x) * Identity

  InitialLaw initial;
  std::optional<ReferenceSolution> reference;
};

namespace detail {

inline std::vector<double> ensemble_mean(const ParticleEnsemble& ens) {
  const std::size_t n = ens.size();
  const std::size_t d = static_cast<std::size_t>(ens.dim);
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ens.particle(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[j];
  }
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  return mean;
}

}  // namespace detail

// Linear interaction b(x, mu) = c * (x - mean(mu)); the simulated benchmark
// uses c = -1, for which N(3, 1/2) is invariant and serves as the reference.
// Other values of c are exposed without a reference solution.
inline ModelSpec linear_interaction_model(double c = -1.0, int dim = 1) {
  if (dim < 1) throw std::invalid_argument("linear_interaction_model: dim must be >= 1");
  ModelSpec m;
  m.id = "ou-linear";
  m.dim = dim;
  m.has_reduced_form = true;
  m.summarize = [](const ParticleEnsemble& ens) {
    StepSummary s;
    s.mean = detail::ensemble_mean(ens);
    return s;
  };
  m.drift_reduced = [c](double, std::span<const double> x, const StepSummary& s, const ParticleEnsemble&,
                        std::span<double> out) {
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = c * (x[j] - s.mean[j]);
  };
  m.drift_pairwise = [c](double, std::span<const double> x, const ParticleEnsemble& ens, std::span<double> out) {
    const std::size_t n = ens.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = ens.particle(i);
      for (std::size_t j = 0; j < x.size(); ++j) out[j] += c * (x[j] - y[j]);
    }
    for (std::size_t j = 0; j < x.size(); ++j) out[j] /= static_cast<double>(n);
  };
  m.sigma = [](double, std::span<const double>) { return 1.0; };
  m.initial = GaussianLaw{std::vector<double>(static_cast<std::size_t>(dim), 3.0), 0.5};
  if (c == -1.0) {
    ReferenceSolution ref;
    const double var = 0.5;
    ref.density = [var, dim](double, std::span<const double> x) {
      double v = 1.0;
      for (int j = 0; j < dim; ++j) {
        const double z = x[static_cast<std::size_t>(j)] - 3.0;
        v *= std::exp(-z * z / (2.0 * var)) / std::sqrt(2.0 * 3.14159265358979323846 * var);
      }
      return v;
    };
    ref.cdf = [var](double, double x) { return 0.5 * std::erfc(-(x - 3.0) / std::sqrt(2.0 * var)); };
    m.reference = std::move(ref);
  }
  return m;
}

/// Derivative of the double-layer Morse potential U(x) = -exp(-x^2) + 2 exp(-2 x^2).
inline double double_layer_force(double z) noexcept {
  return 2.0 * z * std::exp(-z * z) - 8.0 * z * std::exp(-2.0 * z * z);
}

/// Lipschitz common force used in the perturbed variant.
inline double tent_force(double x) noexcept { return std::fabs(x) <= 1.0 ? 2.0 * (1.0 - std::fabs(x)) : 0.0; }

// Pairwise Morse-type interaction, optionally perturbed by a common Lipschitz
// force that lowers the smoothness of the solution. No reduced form: the
// drift is a genuine O(N^2) fold.
inline ModelSpec double_layer_model(bool perturbed = false) {
  ModelSpec m;
  m.id = perturbed ? "double-layer-perturbed" : "double-layer";
  m.dim = 1;
  m.has_reduced_form = false;
  auto drift = [perturbed](double, std::span<const double> x, const ParticleEnsemble& ens, std::span<double> out) {
    const std::size_t n = ens.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += double_layer_force(x[0] - ens.positions[i]);
    acc /= static_cast<double>(n);
    if (perturbed) acc += tent_force(x[0]);
    out[0] = acc;
  };
  m.drift_pairwise = drift;
  m.drift_reduced = [drift](double t, std::span<const double> x, const StepSummary&, const ParticleEnsemble& ens,
                            std::span<double> out) { drift(t, x, ens, out); };
  m.sigma = [](double, std::span<const double>) { return 1.0; };
  m.initial = GaussianLaw{{0.0}, 1.0};
  return m;
}

// Burgers reference solution. The CDF is
//   M_t(x) = A(x) / (B(x) + A(x)),
// with A and B Gaussian integrals over the positive and negative half-lines;
// the density differentiates A and B under the integral sign and applies the
// quotient rule. Composite Simpson, truncated where the integrand drops below
// 1e-16 of its maximum.
struct BurgersReferenceValue {
  double cdf = 0.0;
  double density = 0.0;
};

inline BurgersReferenceValue burgers_reference(double t, double x, double sigma) {
  if (t <= 0.0) throw std::invalid_argument("burgers_reference: t must be > 0");
  if (sigma <= 0.0) throw std::invalid_argument("burgers_reference: sigma must be > 0");

  const double sig2 = sigma * sigma;
  const double s = sigma * std::sqrt(t);     // Gaussian scale of both integrands
  const double width = 8.6 * s;              // exp(-8.6^2/2) < 1e-16
  constexpr std::size_t kPanels = 8192;

  // A: integrand exp(-((x-y)^2/(2t) + y)/sig^2) over [0, inf); a Gaussian in y
  // centred at x - t. dA/dx carries the factor -(x-y)/(t sig^2).
  const double centre_a = x - t;
  const double lo_a = std::max(0.0, centre_a - width);
  const double hi_a = std::max(0.0, centre_a) + width;
  double a_val = 0.0, a_deriv = 0.0;
  {
    const double h = (hi_a - lo_a) / static_cast<double>(kPanels);
    double sum_v = 0.0, sum_d = 0.0;
    for (std::size_t i = 0; i <= kPanels; ++i) {
      const double y = lo_a + static_cast<double>(i) * h;
      const double diff = x - y;
      const double g = std::exp(-(diff * diff / (2.0 * t) + y) / sig2);
      const double w = (i == 0 || i == kPanels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      sum_v += w * g;
      sum_d += w * (-diff / (t * sig2)) * g;
    }
    a_val = sum_v * h / 3.0;
    a_deriv = sum_d * h / 3.0;
  }

  // B: integrand exp(-(x-y)^2/(2 t sig^2)) over (-inf, 0]; Gaussian centred at x.
  const double lo_b = std::min(0.0, x) - width;
  const double hi_b = std::min(0.0, x + width);
  double b_val = 0.0, b_deriv = 0.0;
  {
    const double h = (hi_b - lo_b) / static_cast<double>(kPanels);
    double sum_v = 0.0, sum_d = 0.0;
    for (std::size_t i = 0; i <= kPanels; ++i) {
      const double y = lo_b + static_cast<double>(i) * h;
      const double diff = x - y;
      const double g = std::exp(-diff * diff / (2.0 * t * sig2));
      const double w = (i == 0 || i == kPanels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      sum_v += w * g;
      sum_d += w * (-diff / (t * sig2)) * g;
    }
    b_val = sum_v * h / 3.0;
    b_deriv = sum_d * h / 3.0;
  }

  BurgersReferenceValue out;
  const double den = a_val + b_val;
  if (den <= 0.0) {
    // Both integrals underflow only far outside any sensible evaluation range;
    // the CDF is symmetric about t/2.
    out.cdf = x >= t / 2.0 ? 1.0 : 0.0;
    out.density = 0.0;
    return out;
  }
  out.cdf = a_val / den;
  out.density = (a_deriv * b_val - a_val * b_deriv) / (den * den);
  return out;
}

// Burgers-type drift b(x, mu) = mu((-inf, x]): the empirical CDF at x, with a
// particle counting itself. Reduced form sorts once per step and counts by
// binary search; the pairwise path counts directly.
inline ModelSpec burgers_model(double sigma = std::sqrt(0.2)) {
  if (sigma <= 0.0) throw std::invalid_argument("burgers_model: sigma must be > 0");
  ModelSpec m;
  m.id = "burgers";
  m.dim = 1;
  m.has_reduced_form = true;
  m.summarize = [](const ParticleEnsemble& ens) {
    StepSummary s;
    s.sorted = ens.positions;
    std::sort(s.sorted.begin(), s.sorted.end());
    return s;
  };
  m.drift_reduced = [](double, std::span<const double> x, const StepSummary& s, const ParticleEnsemble&,
                       std::span<double> out) {
    const auto it = std::upper_bound(s.sorted.begin(), s.sorted.end(), x[0]);
    out[0] = static_cast<double>(it - s.sorted.begin()) / static_cast<double>(s.sorted.size());
  };
  m.drift_pairwise = [](double, std::span<const double> x, const ParticleEnsemble& ens, std::span<double> out) {
    std::size_t count = 0;
    for (double y : ens.positions) count += y <= x[0] ? 1 : 0;
    out[0] = static_cast<double>(count) / static_cast<double>(ens.size());
  };
  m.sigma = [sigma](double, std::span<const double>) { return sigma; };
  m.initial = DiracLaw{{0.0}};
  ReferenceSolution ref;
  ref.density = [sigma](double t, std::span<const double> x) { return burgers_reference(t, x[0], sigma).density; };
  ref.cdf = [sigma](double t, double x) { return burgers_reference(t, x, sigma).cdf; };
  m.reference = std::move(ref);
  return m;
}

/// Model lookup by CLI identifier.
inline ModelSpec model_by_id(const std::string& id) {
  if (id == "ou-linear") return linear_interaction_model();
  if (id == "double-layer") return double_layer_model(false);
  if (id == "double-layer-perturbed") return double_layer_model(true);
  if (id == "burgers") return burgers_model();
  throw std::invalid_argument("unknown model id: " + id);
}

}  // namespace mkv
