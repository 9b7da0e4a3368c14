// Gaussian-based kernels of order 1, 3, 5, 7, 9 and their tensorized
// multivariate versions. A kernel of order l integrates to one and has
// vanishing coordinate moments up to order l, which is what buys the bias
// reduction for smooth densities.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mkv/quadrature.hpp"

namespace mkv {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;

/// Standard normal density.
inline double gaussian_phi(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

struct KernelNorms {
  double l1_norm = 0.0;
  double l2_norm_sq = 0.0;
  double sup_norm = 0.0;
};

// One-dimensional factor K(x) = P(x) * phi(x), tensorized over coordinates for
// dim > 1. P is an even polynomial with exact integer coefficients over an
// integer denominator; it is evaluated by Horner's rule in x^2.
class KernelSpec {
 public:
  KernelSpec() = default;

  int order() const noexcept { return order_; }
  int dim() const noexcept { return dim_; }

  /// Numerators of the prefactor over even powers x^0, x^2, ...
  std::span<const long long> polynomial_numerators() const noexcept {
    return {numerators_.data(), static_cast<std::size_t>(n_terms_)};
  }
  long long polynomial_denominator() const noexcept { return denominator_; }

  double l1_norm() const noexcept { return l1_norm_; }
  double l2_norm_sq() const noexcept { return l2_norm_sq_; }
  double sup_norm() const noexcept { return sup_norm_; }

  /// One-dimensional factor P(u) * phi(u).
  double eval1(double u) const noexcept {
    const double u2 = u * u;
    double p = coeffs_[static_cast<std::size_t>(n_terms_ - 1)];
    for (int i = n_terms_ - 2; i >= 0; --i) p = p * u2 + coeffs_[static_cast<std::size_t>(i)];
    return p * kInvSqrt2Pi * std::exp(-0.5 * u2);
  }

  /// Product kernel value at a point of dimension dim().
  double eval(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("KernelSpec::eval: dimension mismatch");
    double v = 1.0;
    for (double u : x) v *= eval1(u);
    return v;
  }

 private:
  friend KernelSpec make_kernel(int order, int dim);

  int order_ = 1;
  int dim_ = 1;
  std::array<long long, 5> numerators_{};
  long long denominator_ = 1;
  int n_terms_ = 1;
  std::array<double, 5> coeffs_{};
  double l1_norm_ = 0.0;
  double l2_norm_sq_ = 0.0;
  double sup_norm_ = 0.0;
};

namespace detail {

// Quadrature domain and step for kernel integrals. gaussian_phi(15) ~ 5e-50,
// so truncating at +-15 is far below the 1e-8 verification tolerances.
inline constexpr double kKernelQuadHalfWidth = 15.0;
inline constexpr std::size_t kKernelQuadPanels = 30000;  // step 1e-3

template <class F>
double kernel_quad(F&& f) {
  return simpson(f, -kKernelQuadHalfWidth, kKernelQuadHalfWidth, kKernelQuadPanels);
}

// Simpson with panel width <= 1e-3, piecewise between the given breakpoints.
// Used for integrands with kinks (|K| changes slope where K crosses zero);
// splitting restores the full convergence order.
template <class F>
double kernel_quad_split(F&& f, const std::vector<double>& breakpoints) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double a = breakpoints[i], b = breakpoints[i + 1];
    if (b <= a) continue;
    std::size_t panels = static_cast<std::size_t>(std::ceil((b - a) / 1e-3));
    panels += panels % 2;
    if (panels < 2) panels = 2;
    total += simpson(f, a, b, panels);
  }
  return total;
}

// Sign changes of the 1-d kernel factor on (0, half), refined by bisection on
// the polynomial prefactor (phi never vanishes).
inline std::vector<double> kernel_sign_changes(const KernelSpec& k) {
  auto poly = [&](double x) {
    const double u2 = x * x;
    auto num = k.polynomial_numerators();
    double p = static_cast<double>(num[num.size() - 1]);
    for (std::size_t i = num.size() - 1; i > 0; --i) p = p * u2 + static_cast<double>(num[i - 1]);
    return p;
  };
  std::vector<double> roots;
  const double step = 1e-2;
  double prev_x = 0.0, prev_v = poly(0.0);
  for (double x = step; x <= kKernelQuadHalfWidth + 1e-12; x += step) {
    const double v = poly(x);
    if ((prev_v < 0.0) != (v < 0.0)) {
      double lo = prev_x, hi = x, flo = prev_v;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = poly(mid);
        if ((flo < 0.0) != (fm < 0.0)) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_x = x;
    prev_v = v;
  }
  return roots;
}

}  // namespace detail

/// Norms of the dim-dimensional product kernel, recomputed by quadrature.
/// Per-axis composite Simpson with step 1e-3 on [-15, 15]; the sup is located
/// by a grid scan refined with golden-section search.
inline KernelNorms kernel_norms(const KernelSpec& k) {
  std::vector<double> breaks{-detail::kKernelQuadHalfWidth};
  for (double r : detail::kernel_sign_changes(k)) breaks.push_back(-r);
  std::sort(breaks.begin(), breaks.end());
  for (std::size_t i = breaks.size(); i > 1;) breaks.push_back(-breaks[--i]);
  breaks.push_back(detail::kKernelQuadHalfWidth);
  const double l1_1d = detail::kernel_quad_split([&](double u) { return std::fabs(k.eval1(u)); }, breaks);
  const double l2sq_1d = detail::kernel_quad([&](double u) {
    const double v = k.eval1(u);
    return v * v;
  });

  const double half = detail::kKernelQuadHalfWidth;
  const std::size_t panels = detail::kKernelQuadPanels;
  const double step = 2.0 * half / static_cast<double>(panels);
  double best = 0.0, best_x = 0.0;
  for (std::size_t i = 0; i <= panels; ++i) {
    const double x = -half + static_cast<double>(i) * step;
    const double v = std::fabs(k.eval1(x));
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  const double refined =
      golden_section_max([&](double u) { return std::fabs(k.eval1(u)); }, best_x - step, best_x + step);
  const double sup_1d = refined > best ? refined : best;

  KernelNorms norms;
  const double d = static_cast<double>(k.dim());
  norms.l1_norm = std::pow(l1_1d, d);
  norms.l2_norm_sq = std::pow(l2sq_1d, d);
  norms.sup_norm = std::pow(sup_1d, d);
  return norms;
}

/// Builds the kernel of the given odd order (1, 3, 5, 7 or 9) in dimension
/// dim >= 1 and caches its norms.
inline KernelSpec make_kernel(int order, int dim) {
  if (dim < 1) throw std::invalid_argument("make_kernel: dim must be >= 1");
  KernelSpec k;
  k.order_ = order;
  k.dim_ = dim;
  switch (order) {
    case 1:
      k.numerators_ = {1, 0, 0, 0, 0};
      k.denominator_ = 1;
      k.n_terms_ = 1;
      break;
    case 3:
      k.numerators_ = {3, -1, 0, 0, 0};
      k.denominator_ = 2;
      k.n_terms_ = 2;
      break;
    case 5:
      k.numerators_ = {15, -10, 1, 0, 0};
      k.denominator_ = 8;
      k.n_terms_ = 3;
      break;
    case 7:
      k.numerators_ = {105, -105, 21, -1, 0};
      k.denominator_ = 48;
      k.n_terms_ = 4;
      break;
    case 9:
      k.numerators_ = {945, -1260, 378, -36, 1};
      k.denominator_ = 384;
      k.n_terms_ = 5;
      break;
    default:
      throw std::invalid_argument("make_kernel: order must be one of 1, 3, 5, 7, 9");
  }
  for (int i = 0; i < k.n_terms_; ++i)
    k.coeffs_[static_cast<std::size_t>(i)] =
        static_cast<double>(k.numerators_[static_cast<std::size_t>(i)]) / static_cast<double>(k.denominator_);
  const KernelNorms norms = kernel_norms(k);
  k.l1_norm_ = norms.l1_norm;
  k.l2_norm_sq_ = norms.l2_norm_sq;
  k.sup_norm_ = norms.sup_norm;
  return k;
}

/// Pointwise kernel evaluation.
inline double eval_kernel(const KernelSpec& k, std::span<const double> x) { return k.eval(x); }

struct MomentCheck {
  int k = 0;
  double moment = 0.0;  // integral of x_[j]^k K(x) dx, identical for every j
  bool passed = false;  // Definition constraint; vacuous for k > order
};

/// Coordinate moments 0..max_order by quadrature. The moment of order k is
/// required to equal 1_{k=0} only for k <= order; higher moments are reported
/// with passed = true since the kernel is not constrained there.
inline std::vector<MomentCheck> check_moments(const KernelSpec& k, int max_order, double tol) {
  if (max_order < 0) throw std::invalid_argument("check_moments: max_order must be >= 0");
  // Per-coordinate moment of the product kernel: the off-axis factors each
  // integrate to one, so the 1-d integral is the d-dimensional value.
  std::vector<MomentCheck> report;
  report.reserve(static_cast<std::size_t>(max_order) + 1);
  for (int m = 0; m <= max_order; ++m) {
    const double value = detail::kernel_quad([&](double u) { return std::pow(u, m) * k.eval1(u); });
    const double target = m == 0 ? 1.0 : 0.0;
    MomentCheck entry;
    entry.k = m;
    entry.moment = value;
    entry.passed = m > k.order() || std::fabs(value - target) <= tol;
    report.push_back(entry);
  }
  return report;
}

}  // namespace mkv
