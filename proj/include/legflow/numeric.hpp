#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "legflow/errors.hpp"

namespace legflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;

/// Central difference d/dx_i of a vector-valued function.
inline Vec central_diff(const std::function<Vec(const Vec&)>& f, const Vec& x,
                        int i, double step) {
  Vec xp = x, xm = x;
  xp[i] += step;
  xm[i] -= step;
  return (f(xp) - f(xm)) / (2.0 * step);
}

inline Mat central_diff_mat(const std::function<Mat(const Vec&)>& f,
                            const Vec& x, int i, double step) {
  Vec xp = x, xm = x;
  xp[i] += step;
  xm[i] -= step;
  return (f(xp) - f(xm)) / (2.0 * step);
}

/// Least-squares slope of y against x.
inline double lsq_slope(const std::vector<double>& x,
                        const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw validation_error("lsq_slope: need >= 2 samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw numerical_error("lsq_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / det;
}

/// R^2 of the least-squares line.
inline double lsq_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= double(n); my /= double(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 1.0;
  return (sxy * sxy) / (sxx * syy);
}

/// Fitted convergence order from errors at h, h/2, h/4, ...
/// Values at or below `floor_eps` count as fully converged: if every value is
/// below the floor the sequence is reported as order `saturated_order`.
struct OrderFit {
  double order = 0.0;
  bool saturated = false;  // all errors below measurement floor
};

inline OrderFit fit_order(const std::vector<double>& errors,
                          double floor_eps = 1e-11,
                          double saturated_order = 10.0) {
  OrderFit out;
  bool all_small = true;
  for (double e : errors)
    if (std::abs(e) > floor_eps) all_small = false;
  if (all_small) {
    out.saturated = true;
    out.order = saturated_order;
    return out;
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    double e = std::max(std::abs(errors[i]), floor_eps);
    x.push_back(-double(i) * std::log(2.0));  // log h_i, h_i = h0/2^i
    y.push_back(std::log(e));
  }
  out.order = lsq_slope(x, y);
  return out;
}

/// Deterministic 64-bit FNV-1a hash for manifest fingerprints.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Splitmix-based deterministic uniform generator; stable across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed + 0x9E3779B97F4A7C15ull) {}
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  /// Uniform in [0,1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform in [a,b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Standard normal (Box-Muller).
  double normal() {
    double u1 = std::max(uniform(), 1e-300), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  Vec normal_vec(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::uint64_t state_;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace legflow
