#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "eegtopo/eigensolve.hpp"
#include "eegtopo/topomap.hpp"
#include "eegtopo/types.hpp"

namespace eegtopo {

// Feature vectors use strictly fewer than this many eigenvalues.
inline constexpr int kMaxFeatureK = 100;

struct FeatureSpec {
  int k{3};       // leading eigenvalues kept per color channel
  int stride{1};  // samples between topomap frames

  void validate() const {
    if (k < 1 || k >= kMaxFeatureK)
      throw ConfigError("features: k must be in [1, " +
                        std::to_string(kMaxFeatureK) + ")");
    if (stride < 1) throw ConfigError("features: stride must be >= 1");
  }
};

// Subtracts the mean frame, so columns become the deviations phi_i.
inline Eigen::MatrixXd center_stack(Eigen::MatrixXd stack) {
  if (stack.cols() == 0) throw DataError("features: empty stack");
  const Eigen::VectorXd mean = stack.rowwise().mean();
  stack.colwise() -= mean;
  return stack;
}

struct SpectrumResult {
  Eigen::VectorXd eigenvalues;  // descending, length min(d, n)
  bool used_gram{false};        // true when the n x n Gram side was solved
  Eigen::Index side_used{0};
  double trace{0.0};
  double centered_sq_norm{0.0};  // Frobenius norm^2 of the centered stack
};

namespace detail {

// The nonzero spectrum of phi*phi^T equals that of phi^T*phi, so always
// solve the smaller side.
inline Eigen::MatrixXd smaller_side_product(
    const Eigen::Ref<const Eigen::MatrixXd>& centered, bool& used_gram) {
  used_gram = centered.cols() <= centered.rows();
  if (used_gram)
    return centered.transpose() * centered;  // n x n
  return centered * centered.transpose();    // d x d
}

inline void clamp_spectrum(Eigen::VectorXd& ev) {
  if (ev.size() == 0) return;
  const double floor_tol = 1e-6 * std::max(ev[0], 0.0) + 1e-12;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -floor_tol)
      throw NumericalError(
          "features: Gram spectrum has a significantly negative eigenvalue " +
          std::to_string(ev[i]));
    if (ev[i] < 0.0) ev[i] = 0.0;
  }
}

}  // namespace detail

// Full spectrum of the centered stack's Gram matrix (smaller side), with the
// trace identity sum(lambda) == ||phi||_F^2 enforced as a consistency check.
inline SpectrumResult gram_spectrum(
    const Eigen::Ref<const Eigen::MatrixXd>& stack) {
  const Eigen::MatrixXd centered = center_stack(stack);
  SpectrumResult res;
  res.centered_sq_norm = centered.squaredNorm();
  const Eigen::MatrixXd prod =
      detail::smaller_side_product(centered, res.used_gram);
  res.side_used = prod.rows();
  res.eigenvalues = symmetric_eigenvalues_dense(prod);
  detail::clamp_spectrum(res.eigenvalues);
  res.trace = res.eigenvalues.sum();
  const double scale = std::max(res.centered_sq_norm, 1e-300);
  if (std::abs(res.trace - res.centered_sq_norm) > 1e-9 * scale)
    throw NumericalError(
        "features: trace identity violated: sum(eigenvalues)=" +
        std::to_string(res.trace) + " vs ||phi||^2=" +
        std::to_string(res.centered_sq_norm));
  return res;
}

namespace detail {

// Shared by the feature contract and the k sweep; the caller sets the
// inclusive upper bound on k.
inline Eigen::VectorXd leading_eigenvalues(
    const Eigen::Ref<const Eigen::MatrixXd>& stack, int k, int k_cap) {
  if (k < 1 || k > k_cap)
    throw ConfigError("features: k must be in [1, " + std::to_string(k_cap) +
                      "]");
  const Eigen::Index n = stack.cols();
  if (n < 2) throw DataError("features: need at least 2 frames");
  if (k > n - 1)
    throw DataError("features: k=" + std::to_string(k) +
                    " exceeds the centered-stack rank bound n-1=" +
                    std::to_string(n - 1));
  const Eigen::MatrixXd centered = center_stack(stack);
  bool used_gram = false;
  const Eigen::MatrixXd prod = smaller_side_product(centered, used_gram);
  Eigen::VectorXd ev;
  if (prod.rows() <= kDenseEigenLimit) {
    ev = symmetric_eigenvalues_dense(prod);
    clamp_spectrum(ev);
    const double fro = centered.squaredNorm();
    if (std::abs(ev.sum() - fro) > 1e-9 * std::max(fro, 1e-300))
      throw NumericalError("features: trace identity violated");
    ev = ev.head(k).eval();
  } else {
    ev = top_eigenvalues(prod, k);
    clamp_spectrum(ev);
  }
  return ev;
}

}  // namespace detail

// Top-k eigenvalues of the centered stack (columns = vectorized topomaps),
// sorted descending. Feature contract: 1 <= k < 100 and k <= n-1.
inline Eigen::VectorXd top_k_eigenvalues(
    const Eigen::Ref<const Eigen::MatrixXd>& stack, int k) {
  return detail::leading_eigenvalues(stack, k, kMaxFeatureK - 1);
}

// The k sweep inspects prefixes of the leading spectrum up to and including
// k = 100, one step past the feature contract's bound.
inline Eigen::VectorXd sweep_eigenvalues(
    const Eigen::Ref<const Eigen::MatrixXd>& stack, int k_max) {
  return detail::leading_eigenvalues(stack, k_max, kMaxFeatureK);
}

// Per-question feature record: one eigenvalue vector per color channel.
struct QuestionFeatures {
  std::string subject_id;
  std::string question_id;
  Answer answer{Answer::Correct};
  double elapsed_s{0.0};
  Eigen::VectorXd red, green, blue;
};

inline QuestionFeatures extract_question_features(const TopomapRenderer& renderer,
                                                  const Recording& rec,
                                                  const EventLog& events,
                                                  const std::string& question_id,
                                                  const FeatureSpec& spec) {
  spec.validate();
  const EventEntry& entry = events.find(question_id);
  const Eigen::MatrixXd segment = slice_question(rec, events, question_id);
  const RgbStack stack = render_stack(renderer, segment, spec.stride);
  QuestionFeatures f;
  f.subject_id = rec.subject_id;
  f.question_id = question_id;
  f.answer = entry.answer;
  f.elapsed_s = entry.elapsed_seconds(rec.sample_rate_hz);
  f.red = top_k_eigenvalues(stack.red, spec.k);
  f.green = top_k_eigenvalues(stack.green, spec.k);
  f.blue = top_k_eigenvalues(stack.blue, spec.k);
  return f;
}

}  // namespace eegtopo
