// Composite Simpson quadrature and a golden-section maximizer.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace mkv {

/// Composite Simpson rule over [a, b] with n panels (n even, n >= 2).
template <class F>
double simpson(F&& f, double a, double b, std::size_t n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("simpson: panel count must be even and >= 2");
  const double h = (b - a) / static_cast<double>(n);
  double odd = 0.0, even = 0.0;
  for (std::size_t i = 1; i < n; i += 2) odd += f(a + static_cast<double>(i) * h);
  for (std::size_t i = 2; i < n; i += 2) even += f(a + static_cast<double>(i) * h);
  return (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0;
}

/// Simpson sum over pre-tabulated values on a uniform grid of step h.
inline double simpson_sum(std::span<const double> values, double h) {
  const std::size_t n = values.size();
  if (n < 3 || n % 2 == 0) throw std::invalid_argument("simpson_sum: need an odd number of points >= 3");
  double odd = 0.0, even = 0.0;
  for (std::size_t i = 1; i + 1 < n; i += 2) odd += values[i];
  for (std::size_t i = 2; i + 1 < n; i += 2) even += values[i];
  return (values.front() + values.back() + 4.0 * odd + 2.0 * even) * h / 3.0;
}

/// Golden-section search for the maximum of f on [a, b] (f unimodal there).
template <class F>
double golden_section_max(F&& f, double a, double b, int iterations = 80) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iterations; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  double xm = 0.5 * (a + b);
  double fm = f(xm);
  return fm > std::max(f1, f2) ? fm : std::max(f1, f2);
}

}  // namespace mkv
