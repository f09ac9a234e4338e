#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "eegtopo/types.hpp"
#include "eegtopo/util.hpp"

namespace eegtopo {

// Above this order the dense solver gives way to randomized subspace
// iteration when only a few leading eigenvalues are wanted.
inline constexpr Eigen::Index kDenseEigenLimit = 2000;

namespace detail {

// Householder reduction of a symmetric matrix to tridiagonal form,
// eigenvalues only (no transform accumulation). `a` is destroyed.
inline void tridiagonalize(Eigen::MatrixXd& a, Eigen::VectorXd& d,
                           Eigen::VectorXd& e) {
  const Eigen::Index n = a.rows();
  d.resize(n);
  e.resize(n);
  for (Eigen::Index i = n - 1; i >= 1; --i) {
    const Eigen::Index l = i - 1;
    double h = 0.0;
    if (l > 0) {
      double scale = 0.0;
      for (Eigen::Index k = 0; k <= l; ++k) scale += std::abs(a(i, k));
      if (scale == 0.0) {
        e[i] = a(i, l);
      } else {
        for (Eigen::Index k = 0; k <= l; ++k) {
          a(i, k) /= scale;
          h += a(i, k) * a(i, k);
        }
        double f = a(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        a(i, l) = f - g;
        f = 0.0;
        for (Eigen::Index j = 0; j <= l; ++j) {
          g = 0.0;
          for (Eigen::Index k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
          for (Eigen::Index k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
          e[j] = g / h;
          f += e[j] * a(i, j);
        }
        const double hh = f / (h + h);
        for (Eigen::Index j = 0; j <= l; ++j) {
          f = a(i, j);
          g = e[j] - hh * f;
          e[j] = g;
          for (Eigen::Index k = 0; k <= j; ++k)
            a(j, k) -= f * e[k] + g * a(i, k);
        }
      }
    } else {
      e[i] = a(i, l);
    }
    d[i] = h;
  }
  for (Eigen::Index i = 0; i < n; ++i) d[i] = a(i, i);
  if (n > 0) e[0] = 0.0;
}

// Implicit-shift QL sweeps on a tridiagonal matrix; eigenvalues land in `d`.
inline void ql_eigenvalues(Eigen::VectorXd& d, Eigen::VectorXd& e) {
  const Eigen::Index n = d.size();
  if (n == 0) return;
  for (Eigen::Index i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (Eigen::Index l = 0; l < n; ++l) {
    int iter = 0;
    Eigen::Index m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd)
          break;
      }
      if (m != l) {
        if (iter++ == 50)
          throw NumericalError(
              "eigensolve: QL iteration failed to converge at row " +
              std::to_string(l));
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        for (Eigen::Index i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (i == l) {
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
            // normal sweep exit; the do-while re-checks m
            break;
          }
        }
        if (r == 0.0) continue;
      }
    } while (m != l);
  }
}

}  // namespace detail

// All eigenvalues of a symmetric matrix, sorted descending. The input is
// symmetrized first so tiny asymmetries from accumulation do not matter.
inline Eigen::VectorXd symmetric_eigenvalues_dense(Eigen::MatrixXd a) {
  if (a.rows() != a.cols())
    throw DataError("eigensolve: matrix is not square");
  if (a.rows() == 0) return Eigen::VectorXd();
  a = 0.5 * (a + a.transpose()).eval();
  Eigen::VectorXd d, e;
  detail::tridiagonalize(a, d, e);
  detail::ql_eigenvalues(d, e);
  std::sort(d.data(), d.data() + d.size(), std::greater<double>());
  return d;
}

struct EigensolveOptions {
  int oversample{10};
  int min_power_iters{2};
  int max_power_iters{200};
  double rel_tol{1e-9};     // stop once leading Ritz values settle this far
  double fail_tol{1e-6};    // still moving more than this at the cap -> error
  std::uint64_t seed{0x6a09e667f3bcc908ull};
};

// Randomized subspace iteration for the k leading eigenvalues of a positive
// semi-definite matrix. Power iterations continue past the fixed minimum
// until the Ritz values stabilize.
inline Eigen::VectorXd top_eigenvalues_randomized(
    const Eigen::Ref<const Eigen::MatrixXd>& a, int k,
    const EigensolveOptions& opt = {}) {
  const Eigen::Index n = a.rows();
  if (a.rows() != a.cols())
    throw DataError("eigensolve: matrix is not square");
  if (k < 1 || k > n)
    throw ConfigError("eigensolve: k must be in [1, n]");
  const Eigen::Index dim = std::min<Eigen::Index>(n, k + opt.oversample);

  GaussianRng rng(opt.seed);
  Eigen::MatrixXd q(n, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < n; ++i) q(i, j) = rng.normal();
  q = Eigen::HouseholderQR<Eigen::MatrixXd>(a * q).householderQ() *
      Eigen::MatrixXd::Identity(n, dim);

  Eigen::VectorXd prev = Eigen::VectorXd::Zero(k);
  for (int it = 1; it <= opt.max_power_iters; ++it) {
    const Eigen::MatrixXd y = a * q;
    const Eigen::MatrixXd small = q.transpose() * y;
    Eigen::VectorXd ritz = symmetric_eigenvalues_dense(small).head(k);
    double rel = 0.0;
    const double denom = std::max(std::abs(ritz[0]), 1e-300);
    for (int i = 0; i < k; ++i)
      rel = std::max(rel, std::abs(ritz[i] - prev[i]) / denom);
    if (it >= opt.min_power_iters && rel < opt.rel_tol) return ritz;
    if (it == opt.max_power_iters) {
      if (rel > opt.fail_tol)
        throw NumericalError(
            "eigensolve: subspace iteration did not converge (relative "
            "movement " +
            std::to_string(rel) + ")");
      return ritz;
    }
    prev = ritz;
    q = Eigen::HouseholderQR<Eigen::MatrixXd>(y).householderQ() *
        Eigen::MatrixXd::Identity(n, dim);
  }
  return prev;  // unreachable
}

// k leading eigenvalues, descending. Small problems go through the dense
// solver; large ones through randomized subspace iteration when the target
// subspace is genuinely low-dimensional.
inline Eigen::VectorXd top_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                       int k,
                                       const EigensolveOptions& opt = {}) {
  const Eigen::Index n = a.rows();
  if (k < 1 || k > n)
    throw ConfigError("eigensolve: k must be in [1, n]");
  if (n <= kDenseEigenLimit || k + opt.oversample >= n)
    return symmetric_eigenvalues_dense(a).head(k);
  return top_eigenvalues_randomized(a, k, opt);
}

}  // namespace eegtopo
