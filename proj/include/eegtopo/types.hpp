#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "eegtopo/errors.hpp"
#include "eegtopo/montage.hpp"

namespace eegtopo {

// Per-question answering window is capped at 30 seconds.
constexpr double kMaxQuestionSeconds = 30.0;

enum class Answer { Correct, Incorrect };

inline const char* to_string(Answer a) {
  return a == Answer::Correct ? "correct" : "incorrect";
}

inline Answer answer_from_string(const std::string& s) {
  if (s == "correct") return Answer::Correct;
  if (s == "incorrect") return Answer::Incorrect;
  throw DataError("unknown answer value '" + s + "'");
}

// One continuous multi-channel recording, rows = channels, columns = time
// samples, values in microvolts.
struct Recording {
  std::string subject_id;
  double sample_rate_hz{0.0};
  Eigen::MatrixXd data;
  std::string montage_ref;
  std::vector<int> eog_channels;

  Eigen::Index n_channels() const { return data.rows(); }
  Eigen::Index n_samples() const { return data.cols(); }

  void validate(const Montage* montage = nullptr) const {
    if (!(sample_rate_hz > 0.0))
      throw DataError("recording '" + subject_id +
                      "': sample rate must be positive");
    if (montage && data.rows() != montage->count())
      throw DataError("recording '" + subject_id + "': " +
                      std::to_string(data.rows()) +
                      " channels do not match montage '" + montage->name +
                      "' with " + std::to_string(montage->count()) +
                      " channels");
    for (Eigen::Index c = 0; c < data.rows(); ++c)
      for (Eigen::Index s = 0; s < data.cols(); ++s)
        if (!std::isfinite(data(c, s)))
          throw DataError("recording '" + subject_id +
                          "': non-finite sample at channel " +
                          std::to_string(c) + ", sample " + std::to_string(s));
    for (int e : eog_channels)
      if (e < 0 || e >= data.rows())
        throw DataError("recording '" + subject_id +
                        "': EOG channel index " + std::to_string(e) +
                        " out of range");
  }
};

struct EventEntry {
  std::string question_id;
  std::int64_t start_sample{0};
  std::int64_t end_sample{0};
  Answer answer{Answer::Correct};
  bool excluded{false};  // manual epoch-exclusion flag

  double elapsed_seconds(double sample_rate_hz) const {
    return static_cast<double>(end_sample - start_sample) / sample_rate_hz;
  }
};

struct EventLog {
  std::string subject_id;
  std::vector<EventEntry> entries;

  void validate(double sample_rate_hz, std::int64_t n_samples = -1) const {
    const auto cap = static_cast<std::int64_t>(
        std::llround(kMaxQuestionSeconds * sample_rate_hz));
    std::int64_t prev_end = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (e.start_sample >= e.end_sample)
        throw DataError("event '" + e.question_id +
                        "': start_sample must precede end_sample");
      if (e.end_sample - e.start_sample > cap)
        throw DataError("event '" + e.question_id + "': segment of " +
                        std::to_string(e.end_sample - e.start_sample) +
                        " samples exceeds the 30 s cap of " +
                        std::to_string(cap));
      if (i > 0 && e.start_sample < prev_end)
        throw DataError("event '" + e.question_id +
                        "': events must be sorted and non-overlapping");
      if (n_samples >= 0 && e.end_sample > n_samples)
        throw DataError("event '" + e.question_id +
                        "': end_sample " + std::to_string(e.end_sample) +
                        " beyond recording length " +
                        std::to_string(n_samples));
      prev_end = e.end_sample;
    }
  }

  const EventEntry& find(const std::string& question_id) const {
    for (const auto& e : entries)
      if (e.question_id == question_id) return e;
    throw DataError("unknown question id '" + question_id + "' for subject '" +
                    subject_id + "'");
  }
};

// Columns [start_sample, end_sample) of the recording for one question.
inline Eigen::MatrixXd slice_question(const Recording& rec,
                                      const EventLog& ev,
                                      const std::string& question_id) {
  const EventEntry& e = ev.find(question_id);
  if (e.end_sample > rec.n_samples())
    throw DataError("question '" + question_id + "': segment end " +
                    std::to_string(e.end_sample) +
                    " exceeds recording length " +
                    std::to_string(rec.n_samples()));
  const auto cap = static_cast<std::int64_t>(
      std::llround(kMaxQuestionSeconds * rec.sample_rate_hz));
  if (e.end_sample - e.start_sample > cap)
    throw DataError("question '" + question_id + "': segment exceeds 30 s cap");
  return rec.data.middleCols(e.start_sample, e.end_sample - e.start_sample);
}

}  // namespace eegtopo
