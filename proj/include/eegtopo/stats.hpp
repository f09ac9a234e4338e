#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "eegtopo/types.hpp"

namespace eegtopo {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw DataError("stats: mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample standard deviation, n-1 in the denominator.
inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) throw DataError("stats: std needs at least 2 values");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
  constexpr double fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) return h;
  }
  throw NumericalError("stats: incomplete beta did not converge");
}

}  // namespace detail

// I_x(a, b), the regularized incomplete beta function.
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ConfigError("stats: beta parameters must be positive");
  if (x < 0.0 || x > 1.0)
    throw ConfigError("stats: beta argument outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

struct TTestResult {
  double t{0.0};
  double df{0.0};
  double p{1.0};  // two-sided
  double mean_a{0.0}, mean_b{0.0};
  double std_a{0.0}, std_b{0.0};
  std::size_t n_a{0}, n_b{0};
};

// Welch's unequal-variance t-test with Satterthwaite degrees of freedom.
// Two samples with zero variance are handled explicitly: identical means give
// p = 1, different means give p = 0.
inline TTestResult welch_t_test(const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw DataError("stats: each sample needs at least 2 values");
  TTestResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  r.std_a = sample_std(a);
  r.std_b = sample_std(b);
  const double na = static_cast<double>(r.n_a);
  const double nb = static_cast<double>(r.n_b);
  const double va = r.std_a * r.std_a / na;
  const double vb = r.std_b * r.std_b / nb;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    r.df = na + nb - 2.0;
    if (r.mean_a == r.mean_b) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = r.mean_a > r.mean_b ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = (r.mean_a - r.mean_b) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const double x = r.df / (r.df + r.t * r.t);
  r.p = regularized_incomplete_beta(r.df / 2.0, 0.5, x);
  return r;
}

}  // namespace eegtopo
