#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace percolab {


struct Interval {
  double center = 0;
  double lo = 0;
  double hi = 1;
  double halfwidth() const { return (hi - lo) / 2; }
};

// Wilson score interval for a binomial proportion.
inline Interval wilson(std::uint64_t hits, std::uint64_t trials, double z) {
  if (trials == 0) throw std::domain_error("wilson: zero trials");
  double n = double(trials);
  double ph = double(hits) / n;
  double z2 = z * z;
  double denom = 1 + z2 / n;
  double mid = (ph + z2 / (2 * n)) / denom;
  double rad = z / denom * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n));
  Interval iv;
  iv.center = ph;
  iv.lo = std::max(0.0, mid - rad);
  iv.hi = std::min(1.0, mid + rad);
  return iv;
}

inline double wilson_lower(std::uint64_t hits, std::uint64_t trials, double z) {
  return wilson(hits, trials, z).lo;
}
inline double wilson_upper(std::uint64_t hits, std::uint64_t trials, double z) {
  return wilson(hits, trials, z).hi;
}

constexpr double z95 = 1.959963985;
constexpr double z99_one_sided = 2.326347874;
constexpr double z3sigma = 3.0;

struct LinFit {
  double slope = 0;
  double intercept = 0;
};

inline LinFit least_squares(const std::vector<double>& xs,
                            const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::domain_error("least_squares: need >= 2 points");
  double n = double(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double det = n * sxx - sx * sx;
  if (det == 0) throw std::domain_error("least_squares: degenerate x values");
  LinFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}


}  // namespace percolab
