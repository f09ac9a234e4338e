#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eegtopo/types.hpp"

namespace eegtopo {

// Recording container format (version 1), all integers little-endian:
//
//   bytes 0-3   magic "EEGR"
//   u32         version (1)
//   u32         n_channels
//   u64         n_samples
//   f64         sample_rate_hz
//   u32         subject_id length, followed by that many bytes
//   u32         montage_ref length, followed by that many bytes
//   u32         EOG channel count, followed by that many u32 indices
//   payload     n_channels * n_samples float32 samples, channel-major
//               (all samples of channel 0, then channel 1, ...)
//
// Values are stored as float32; a write/load round trip is bit-exact for any
// recording whose samples are float32-representable, which holds for
// everything this pipeline produces.

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size())
      throw DataError("malformed header: truncated recording file " + path_);
  }

  const std::string& data_;
  std::string path_;
  std::size_t pos_{0};
};

}  // namespace detail

inline void write_recording(const Recording& rec, const std::string& path) {
  std::string out;
  out.reserve(64 + static_cast<std::size_t>(rec.data.size()) * 4);
  out += "EEGR";
  detail::put_u32(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(rec.n_channels()));
  detail::put_u64(out, static_cast<std::uint64_t>(rec.n_samples()));
  detail::put_f64(out, rec.sample_rate_hz);
  detail::put_u32(out, static_cast<std::uint32_t>(rec.subject_id.size()));
  out += rec.subject_id;
  detail::put_u32(out, static_cast<std::uint32_t>(rec.montage_ref.size()));
  out += rec.montage_ref;
  detail::put_u32(out, static_cast<std::uint32_t>(rec.eog_channels.size()));
  for (int e : rec.eog_channels)
    detail::put_u32(out, static_cast<std::uint32_t>(e));
  for (Eigen::Index c = 0; c < rec.n_channels(); ++c)
    for (Eigen::Index s = 0; s < rec.n_samples(); ++s)
      detail::put_f32(out, static_cast<float>(rec.data(c, s)));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open recording file for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("failed writing recording file: " + path);
}

inline Recording load_recording(const std::string& path,
                                const Montage& montage) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open recording file: " + path);
  std::string blob((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  detail::ByteReader r(blob, path);

  if (r.bytes(4) != "EEGR")
    throw DataError("malformed header: bad magic in " + path);
  const std::uint32_t version = r.u32();
  if (version != 1)
    throw DataError("malformed header: unsupported version " +
                    std::to_string(version) + " in " + path);
  const auto n_channels = static_cast<Eigen::Index>(r.u32());
  const auto n_samples = static_cast<Eigen::Index>(r.u64());

  Recording rec;
  rec.sample_rate_hz = r.f64();
  rec.subject_id = r.bytes(r.u32());
  rec.montage_ref = r.bytes(r.u32());
  const std::uint32_t n_eog = r.u32();
  for (std::uint32_t i = 0; i < n_eog; ++i)
    rec.eog_channels.push_back(static_cast<int>(r.u32()));

  if (n_channels != montage.count())
    throw DataError("recording " + path + " declares " +
                    std::to_string(n_channels) +
                    " channels, montage '" + montage.name + "' has " +
                    std::to_string(montage.count()));
  if (r.remaining() != static_cast<std::size_t>(n_channels) *
                           static_cast<std::size_t>(n_samples) * 4)
    throw DataError("malformed header: payload size mismatch in " + path);

  rec.data.resize(n_channels, n_samples);
  for (Eigen::Index c = 0; c < n_channels; ++c)
    for (Eigen::Index s = 0; s < n_samples; ++s) {
      const float v = r.f32();
      if (!std::isfinite(v))
        throw DataError("non-finite sample at channel " + std::to_string(c) +
                        ", sample " + std::to_string(s) + " in " + path);
      rec.data(c, s) = static_cast<double>(v);
    }
  rec.validate(&montage);
  return rec;
}

// Event sidecar schema (JSON):
//   {"version": 1, "subject_id": "...", "sample_rate_hz": 250.0,
//    "events": [{"question_id": "...", "start_sample": N,
//                "end_sample": M, "answer": "correct"|"incorrect",
//                "excluded": false}, ...]}
// "excluded" is optional and defaults to false; it is the hook for manual
// epoch rejection.
inline void write_events(const EventLog& log, double sample_rate_hz,
                         const std::string& path) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["subject_id"] = log.subject_id;
  j["sample_rate_hz"] = sample_rate_hz;
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : log.entries) {
    nlohmann::ordered_json je;
    je["question_id"] = e.question_id;
    je["start_sample"] = e.start_sample;
    je["end_sample"] = e.end_sample;
    je["answer"] = to_string(e.answer);
    je["excluded"] = e.excluded;
    j["events"].push_back(je);
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open event file for writing: " + path);
  f << j.dump(2) << "\n";
  if (!f) throw DataError("failed writing event file: " + path);
}

inline EventLog load_events(const std::string& path,
                            double expected_rate_hz = 0.0,
                            std::int64_t n_samples = -1) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open event file: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid event JSON in " + path + ": " + e.what());
  }
  EventLog log;
  try {
    if (j.at("version").get<int>() != 1)
      throw DataError("unsupported event file version in " + path);
    log.subject_id = j.at("subject_id").get<std::string>();
    const double rate = j.at("sample_rate_hz").get<double>();
    if (expected_rate_hz > 0.0 && std::abs(rate - expected_rate_hz) > 1e-9)
      throw DataError("event file " + path + " sample rate " +
                      std::to_string(rate) + " does not match recording rate " +
                      std::to_string(expected_rate_hz));
    for (const auto& je : j.at("events")) {
      EventEntry e;
      e.question_id = je.at("question_id").get<std::string>();
      e.start_sample = je.at("start_sample").get<std::int64_t>();
      e.end_sample = je.at("end_sample").get<std::int64_t>();
      e.answer = answer_from_string(je.at("answer").get<std::string>());
      e.excluded = je.value("excluded", false);
      log.entries.push_back(e);
    }
    log.validate(expected_rate_hz > 0.0 ? expected_rate_hz : rate, n_samples);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid event JSON in " + path + ": " + e.what());
  }
  return log;
}

}  // namespace eegtopo
