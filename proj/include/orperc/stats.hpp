#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace orperc {

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ99 = 2.5758293035489004;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Wilson score interval for a binomial proportion.  Well behaved at 0 and n,
// which is where survival estimates live most of the time.
inline Interval wilson(std::int64_t successes, std::int64_t n, double z = kZ95) {
  if (n <= 0) return {0.0, 1.0};
  const double ph = static_cast<double>(successes) / static_cast<double>(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / static_cast<double>(n);
  const double center = (ph + z2 / (2.0 * static_cast<double>(n))) / denom;
  const double half =
      z *
      std::sqrt(ph * (1.0 - ph) / static_cast<double>(n) +
                z2 / (4.0 * static_cast<double>(n) * static_cast<double>(n))) /
      denom;
  double lo = center - half, hi = center + half;
  if (lo < 0.0 || successes == 0) lo = 0.0;  // exact endpoint, no rounding residue
  if (hi > 1.0 || successes == n) hi = 1.0;
  return {lo, hi};
}

// Streaming mean/variance accumulator.  merge() makes it usable as a
// block accumulator in the deterministic replica reducer.
struct MeanVar {
  std::int64_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  void merge(const MeanVar& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    double m = mean();
    double v = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
  double stderr_mean() const {
    return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
  Interval ci(double z = kZ95) const {
    double se = stderr_mean();
    return {mean() - z * se, mean() + z * se};
  }
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares y = a + b x.  A zero-variance target with zero
// residuals reports r2 = 1 (a constant sequence is fit perfectly).
inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  LinearFit f;
  const std::size_t n = xs.size();
  if (n == 0 || ys.size() != n) return f;
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ss_tot = 0, ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = f.intercept + f.slope * xs[i];
    ss_tot += (ys[i] - my) * (ys[i] - my);
    ss_res += (ys[i] - pred) * (ys[i] - pred);
  }
  constexpr double eps = 1e-12;
  if (ss_tot <= eps)
    f.r2 = ss_res <= eps ? 1.0 : 0.0;
  else
    f.r2 = 1.0 - ss_res / ss_tot;
  return f;
}

}  // namespace orperc
