#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "eegtopo/montage.hpp"
#include "eegtopo/types.hpp"
#include "eegtopo/util.hpp"

namespace eegtopo {

// Per-class answer-time model, seconds. Defaults follow the short-term 2D
// condition (correct 8.8 +/- 4.6 s, incorrect 11.6 +/- 5.6 s).
struct ClassTimeModel {
  double mean_s{0.0};
  double std_s{0.0};
};

struct SynthesisConfig {
  int n_subjects{66};
  int n_questions{20};
  double sample_rate_hz{250.0};
  // 0 = both classes share one spatial-covariance model (no signal to
  // classify); 1 = maximally divergent class models.
  double class_separation{1.0};
  ClassTimeModel correct_time{8.8, 4.6};
  ClassTimeModel incorrect_time{11.6, 5.6};
  std::uint64_t rng_seed{1};

  // Signal-shape knobs, microvolts.
  double background_rms_uv{5.0};
  double sensor_noise_uv{2.0};
  double activity_scale_uv{10.0};

  void validate() const {
    if (n_subjects < 1) throw ConfigError("synthesis: n_subjects must be >= 1");
    if (n_questions < 0) throw ConfigError("synthesis: n_questions must be >= 0");
    if (!(sample_rate_hz > 0.0))
      throw ConfigError("synthesis: sample_rate_hz must be positive");
    if (class_separation < 0.0)
      throw ConfigError("synthesis: class_separation must be >= 0");
    for (const auto* m : {&correct_time, &incorrect_time}) {
      if (!(m->mean_s > 0.0) || m->std_s < 0.0)
        throw ConfigError("synthesis: invalid time model");
    }
    if (background_rms_uv < 0.0 || sensor_noise_uv < 0.0 ||
        activity_scale_uv < 0.0)
      throw ConfigError("synthesis: signal scales must be >= 0");
  }
};

struct SyntheticDataset {
  std::vector<Recording> recordings;
  std::vector<EventLog> events;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t subject_seed(std::uint64_t base, int subject_idx) {
  return splitmix64(base ^ (0x9e3779b97f4a7c15ull *
                            static_cast<std::uint64_t>(subject_idx + 1)));
}

// The two class signal models. Each class drives kNumPatterns fixed spatial
// patterns with an AR(1) time course; the incorrect-class patterns and
// amplitude profile are pulled away from the correct-class ones as
// class_separation grows. At separation 0 the models coincide exactly.
constexpr int kNumPatterns = 3;

struct ClassModels {
  // patterns[class][p] is a unit vector over channels (zero on EOG rows).
  Eigen::MatrixXd correct_patterns;    // channels x kNumPatterns
  Eigen::MatrixXd incorrect_patterns;  // channels x kNumPatterns
  double correct_amps[kNumPatterns];
  double incorrect_amps[kNumPatterns];
};

inline Eigen::VectorXd random_pattern(GaussianRng& rng, int n_channels,
                                      const std::vector<int>& eog) {
  Eigen::VectorXd v(n_channels);
  for (int c = 0; c < n_channels; ++c) v[c] = rng.normal();
  for (int e : eog) v[e] = 0.0;
  const double norm = v.norm();
  return norm > 0.0 ? Eigen::VectorXd(v / norm) : v;
}

inline ClassModels make_class_models(const SynthesisConfig& cfg,
                                     int n_channels,
                                     const std::vector<int>& eog) {
  GaussianRng rng(splitmix64(cfg.rng_seed ^ 0xa5a5a5a5a5a5a5a5ull));
  ClassModels m;
  m.correct_patterns.resize(n_channels, kNumPatterns);
  m.incorrect_patterns.resize(n_channels, kNumPatterns);
  const double s = std::min(cfg.class_separation, 1.0);
  // Amplitude profiles relative to activity_scale_uv. The ratio differences
  // are what survive the per-question color normalization downstream.
  const double prof_correct[kNumPatterns] = {1.0, 0.6, 0.35};
  const double prof_incorrect[kNumPatterns] = {1.6, 0.3, 0.8};
  for (int p = 0; p < kNumPatterns; ++p) {
    const Eigen::VectorXd base = random_pattern(rng, n_channels, eog);
    const Eigen::VectorXd alt = random_pattern(rng, n_channels, eog);
    m.correct_patterns.col(p) = base;
    Eigen::VectorXd mixed = (1.0 - s) * base + s * alt;
    const double norm = mixed.norm();
    if (norm > 0.0) mixed /= norm;
    m.incorrect_patterns.col(p) = mixed;
    m.correct_amps[p] = cfg.activity_scale_uv * prof_correct[p];
    m.incorrect_amps[p] =
        cfg.activity_scale_uv *
        ((1.0 - s) * prof_correct[p] + s * prof_incorrect[p]);
  }
  return m;
}

}  // namespace detail

// One normal draw from the class time model, clamped to the answering
// window (0.5 s, 30 s].
inline double draw_answer_seconds(const ClassTimeModel& model,
                                  GaussianRng& rng) {
  return std::clamp(rng.normal(model.mean_s, model.std_s), 0.5,
                    kMaxQuestionSeconds);
}

struct QuestionPlan {
  std::string question_id;
  Answer answer{Answer::Correct};
  std::int64_t start_sample{0};
  std::int64_t end_sample{0};
};

// Question layout for one subject: 2 s lead-in, questions in order with 1 s
// gaps, labels alternating correct/incorrect so every synthetic dataset is
// class-balanced at any size. Durations come from the per-class time model.
inline std::vector<QuestionPlan> plan_questions(const SynthesisConfig& cfg,
                                                GaussianRng& rng) {
  const double rate = cfg.sample_rate_hz;
  const auto lead = static_cast<std::int64_t>(std::llround(2.0 * rate));
  const auto gap = static_cast<std::int64_t>(std::llround(1.0 * rate));
  std::vector<QuestionPlan> plan;
  plan.reserve(static_cast<std::size_t>(cfg.n_questions));
  std::int64_t cursor = lead;
  for (int q = 0; q < cfg.n_questions; ++q) {
    QuestionPlan p;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "Q%02d", q + 1);
    p.question_id = buf;
    p.answer = (q % 2 == 0) ? Answer::Correct : Answer::Incorrect;
    const auto& model =
        p.answer == Answer::Correct ? cfg.correct_time : cfg.incorrect_time;
    const double seconds = draw_answer_seconds(model, rng);
    const auto len = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(seconds * rate)));
    p.start_sample = cursor;
    p.end_sample = cursor + len;
    cursor = p.end_sample + gap;
    plan.push_back(p);
  }
  return plan;
}

// Synthesizes one subject. Deterministic: the stream is derived from
// (rng_seed, subject_idx) alone, so subjects can be generated independently
// and in any order, and the class models are derived from rng_seed alone so
// all subjects share them.
inline std::pair<Recording, EventLog> synthesize_subject(
    const SynthesisConfig& cfg, const Montage& montage, int subject_idx) {
  cfg.validate();
  montage.validate();
  const int n_ch = montage.count();
  const std::vector<int> eog = default_eog_channels(montage);
  const detail::ClassModels models = detail::make_class_models(cfg, n_ch, eog);

  GaussianRng rng(detail::subject_seed(cfg.rng_seed, subject_idx));
  const std::vector<QuestionPlan> plan = plan_questions(cfg, rng);
  const double rate = cfg.sample_rate_hz;
  const std::int64_t total =
      plan.empty() ? static_cast<std::int64_t>(std::llround(4.0 * rate))
                   : plan.back().end_sample +
                         static_cast<std::int64_t>(std::llround(2.0 * rate));

  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(n_ch, total);

  // Background: per-channel AR(1), rho = 0.95, scaled to the requested RMS.
  {
    const double rho = 0.95;
    const double innov = cfg.background_rms_uv * std::sqrt(1.0 - rho * rho);
    for (int c = 0; c < n_ch; ++c) {
      double state = cfg.background_rms_uv * rng.normal();
      for (std::int64_t t = 0; t < total; ++t) {
        state = rho * state + innov * rng.normal();
        data(c, t) = state;
      }
    }
  }

  // Blink train on the EOG reference, propagated to scalp channels with a
  // coefficient that decays with distance from the eyes.
  if (!eog.empty()) {
    Eigen::Vector3d eye_center(0.0, 0.0, 0.0);
    for (int e : eog) {
      const auto& ch = montage.channels[static_cast<std::size_t>(e)];
      eye_center += Eigen::Vector3d(ch.x, ch.y, ch.z);
    }
    eye_center /= static_cast<double>(eog.size());
    Eigen::VectorXd prop(n_ch);
    for (int c = 0; c < n_ch; ++c) {
      const auto& ch = montage.channels[static_cast<std::size_t>(c)];
      const double d =
          (Eigen::Vector3d(ch.x, ch.y, ch.z) - eye_center).norm();
      prop[c] = 0.85 * std::exp(-2.5 * d);
    }
    for (int e : eog) prop[e] = 1.0;

    const auto blink_len = static_cast<std::int64_t>(std::llround(0.35 * rate));
    std::int64_t t0 = static_cast<std::int64_t>(
        std::llround(rng.uniform(0.5, 3.0) * rate));
    while (t0 < total) {
      const double amp = rng.uniform(120.0, 180.0);
      for (std::int64_t k = 0; k < blink_len && t0 + k < total; ++k) {
        const double shape =
            0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(k) /
                                  static_cast<double>(blink_len)));
        data.col(t0 + k) += prop * (amp * shape);
      }
      t0 += static_cast<std::int64_t>(std::llround(rng.uniform(3.0, 8.0) * rate));
    }
  }

  // Class-dependent activity inside each question segment.
  for (const auto& q : plan) {
    const bool correct = q.answer == Answer::Correct;
    const Eigen::MatrixXd& patterns =
        correct ? models.correct_patterns : models.incorrect_patterns;
    const double* amps = correct ? models.correct_amps : models.incorrect_amps;
    const double rho = 0.9;
    const double innov = std::sqrt(1.0 - rho * rho);
    for (int p = 0; p < detail::kNumPatterns; ++p) {
      const double amp = amps[p] * std::exp(0.08 * rng.normal());
      double z = rng.normal();
      for (std::int64_t t = q.start_sample; t < q.end_sample; ++t) {
        z = rho * z + innov * rng.normal();
        data.col(t) += patterns.col(p) * (amp * z);
      }
    }
  }

  // Sensor noise.
  if (cfg.sensor_noise_uv > 0.0) {
    for (int c = 0; c < n_ch; ++c)
      for (std::int64_t t = 0; t < total; ++t)
        data(c, t) += cfg.sensor_noise_uv * rng.normal();
  }

  // Quantize to float32 so the on-disk container round-trips bit-exactly.
  data = data.cast<float>().cast<double>();

  Recording rec;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "S%03d", subject_idx + 1);
  rec.subject_id = buf;
  rec.sample_rate_hz = rate;
  rec.data = std::move(data);
  rec.montage_ref = montage.name;
  rec.eog_channels = eog;

  EventLog log;
  log.subject_id = rec.subject_id;
  for (const auto& q : plan) {
    EventEntry e;
    e.question_id = q.question_id;
    e.start_sample = q.start_sample;
    e.end_sample = q.end_sample;
    e.answer = q.answer;
    log.entries.push_back(e);
  }
  log.validate(rate, rec.n_samples());
  return {std::move(rec), std::move(log)};
}

inline SyntheticDataset synthesize_dataset(const SynthesisConfig& cfg,
                                           const Montage& montage) {
  cfg.validate();
  SyntheticDataset out;
  out.recordings.reserve(static_cast<std::size_t>(cfg.n_subjects));
  out.events.reserve(static_cast<std::size_t>(cfg.n_subjects));
  for (int s = 0; s < cfg.n_subjects; ++s) {
    auto [rec, log] = synthesize_subject(cfg, montage, s);
    out.recordings.push_back(std::move(rec));
    out.events.push_back(std::move(log));
  }
  return out;
}

}  // namespace eegtopo
