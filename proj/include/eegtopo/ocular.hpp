#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "eegtopo/types.hpp"

namespace eegtopo {

struct OcularSpec {
  double blink_threshold_uv{75.0};
  double window_s{0.2};       // half-window kept around each threshold crossing
  bool fit_on_full_record{false};

  void validate() const {
    if (!(blink_threshold_uv > 0.0))
      throw ConfigError("ocular: blink threshold must be positive");
    if (!(window_s >= 0.0))
      throw ConfigError("ocular: window must be non-negative");
  }
};

// Regression weights mapping EOG activity into every channel. Rows for the
// EOG channels themselves are zero so correction passes them through.
struct OcularModel {
  std::vector<int> eog_channels;
  Eigen::MatrixXd weights;    // n_channels x n_eog
  Eigen::VectorXd eog_means;  // fit-time mean of each EOG channel
  std::int64_t n_fit_samples{0};
};

namespace detail {

// Union of +/- window around every sample where any EOG channel deviates
// from its mean by more than the threshold.
inline std::vector<char> blink_mask(const Recording& rec,
                                    const OcularSpec& spec) {
  const Eigen::Index n = rec.n_samples();
  std::vector<char> mask(static_cast<std::size_t>(n), 0);
  const Eigen::Index w = static_cast<Eigen::Index>(
      std::llround(spec.window_s * rec.sample_rate_hz));
  for (int eog : rec.eog_channels) {
    const auto row = rec.data.row(eog);
    const double mu = row.mean();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(row[i] - mu) <= spec.blink_threshold_uv) continue;
      const Eigen::Index lo = std::max<Eigen::Index>(0, i - w);
      const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + w);
      std::fill(mask.begin() + lo, mask.begin() + hi + 1, char(1));
    }
  }
  return mask;
}

}  // namespace detail

// Least-squares regression of every channel onto the EOG channels, computed
// over blink epochs (or the whole record when requested). With a single EOG
// channel this reduces to cov(channel, eog) / var(eog).
inline OcularModel fit_ocular(const Recording& rec, const OcularSpec& spec) {
  spec.validate();
  if (rec.eog_channels.empty())
    throw DataError("ocular: recording has no EOG channels");

  std::vector<Eigen::Index> idx;
  if (spec.fit_on_full_record) {
    idx.resize(static_cast<std::size_t>(rec.n_samples()));
    for (Eigen::Index i = 0; i < rec.n_samples(); ++i)
      idx[static_cast<std::size_t>(i)] = i;
  } else {
    const std::vector<char> mask = detail::blink_mask(rec, spec);
    for (Eigen::Index i = 0; i < rec.n_samples(); ++i)
      if (mask[static_cast<std::size_t>(i)]) idx.push_back(i);
    if (idx.size() < 2)
      throw DataError(
          "ocular: no blink epochs above " +
          std::to_string(spec.blink_threshold_uv) +
          " uV; lower the threshold or fit on the full record");
  }

  const auto n_eog = static_cast<Eigen::Index>(rec.eog_channels.size());
  const auto n_fit = static_cast<Eigen::Index>(idx.size());

  Eigen::MatrixXd eog(n_eog, n_fit);
  for (Eigen::Index e = 0; e < n_eog; ++e) {
    const auto row = rec.data.row(rec.eog_channels[static_cast<std::size_t>(e)]);
    for (Eigen::Index j = 0; j < n_fit; ++j)
      eog(e, j) = row[idx[static_cast<std::size_t>(j)]];
  }
  const Eigen::VectorXd fit_means = eog.rowwise().mean();
  eog.colwise() -= fit_means;

  for (Eigen::Index e = 0; e < n_eog; ++e)
    if (eog.row(e).squaredNorm() <= 1e-12)
      throw DataError(
          "ocular: EOG channel " +
          std::to_string(rec.eog_channels[static_cast<std::size_t>(e)]) +
          " has zero variance over the fit samples");

  OcularModel model;
  model.eog_channels = rec.eog_channels;
  model.weights = Eigen::MatrixXd::Zero(rec.n_channels(), n_eog);
  model.n_fit_samples = n_fit;
  // Subtraction uses whole-record means so channel means are preserved.
  model.eog_means.resize(n_eog);
  for (Eigen::Index e = 0; e < n_eog; ++e)
    model.eog_means[e] =
        rec.data.row(rec.eog_channels[static_cast<std::size_t>(e)]).mean();

  const Eigen::MatrixXd gram = eog * eog.transpose();

  Eigen::MatrixXd target(rec.n_channels(), n_fit);
  for (Eigen::Index c = 0; c < rec.n_channels(); ++c) {
    const auto row = rec.data.row(c);
    double mu = 0.0;
    for (Eigen::Index j = 0; j < n_fit; ++j)
      mu += row[idx[static_cast<std::size_t>(j)]];
    mu /= static_cast<double>(n_fit);
    for (Eigen::Index j = 0; j < n_fit; ++j)
      target(c, j) = row[idx[static_cast<std::size_t>(j)]] - mu;
  }

  const Eigen::MatrixXd solved =
      gram.ldlt().solve(eog * target.transpose());  // n_eog x n_channels
  model.weights = solved.transpose();
  for (int c : rec.eog_channels) model.weights.row(c).setZero();
  return model;
}

// Subtracts the regressed EOG contribution from every channel. EOG channels
// pass through unchanged.
inline Recording remove_ocular(const Recording& rec, const OcularModel& model) {
  if (model.eog_channels != rec.eog_channels)
    throw DataError("ocular: model was fit with different EOG channels");
  const auto n_eog = static_cast<Eigen::Index>(model.eog_channels.size());
  if (model.weights.rows() != rec.n_channels() || model.weights.cols() != n_eog)
    throw DataError("ocular: model shape does not match recording");

  Eigen::MatrixXd eog(n_eog, rec.n_samples());
  for (Eigen::Index e = 0; e < n_eog; ++e)
    eog.row(e) =
        rec.data.row(rec.eog_channels[static_cast<std::size_t>(e)]).array() -
        model.eog_means[e];

  Recording out = rec;
  out.data.noalias() -= model.weights * eog;
  for (int c : rec.eog_channels) out.data.row(c) = rec.data.row(c);
  return out;
}

}  // namespace eegtopo
