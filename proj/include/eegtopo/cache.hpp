#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "eegtopo/eigenfeat.hpp"
#include "eegtopo/types.hpp"

namespace eegtopo {

// Cached per-question leading Gram spectra (to depth min(100, n_frames-1),
// per color channel). Feature tables for any k are sliced from these, so
// changing only k never re-renders anything.
struct SpectraRecord {
  std::string subject_id;
  std::string question_id;
  Answer answer{Answer::Correct};
  double elapsed_s{0.0};
  long n_frames{0};
  std::array<std::vector<double>, 3> spectra;  // red, green, blue
};

using SpectraKey = std::pair<std::string, std::string>;  // subject, question
using SpectraMap = std::map<SpectraKey, SpectraRecord>;

inline const std::array<const char*, 3> kSpectraChannels = {"red", "green",
                                                            "blue"};

inline std::string spectra_cache_path(const std::string& cache_dir,
                                      const std::string& stack_hash) {
  return cache_dir + "/spectra_" + stack_hash + ".tsv";
}

inline std::string feature_cache_path(const std::string& cache_dir,
                                      const std::string& feature_hash) {
  return cache_dir + "/features_" + feature_hash + ".tsv";
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace detail

// Tolerant reader: malformed or inconsistent rows are dropped and reported
// through `warnings`, so a damaged cache degrades into recomputation instead
// of a failed run. A missing file is just an empty cache.
inline SpectraMap load_spectra_cache(const std::string& path,
                                     std::vector<std::string>* warnings) {
  SpectraMap out;
  std::ifstream f(path);
  if (!f) return out;
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back("spectra cache: " + msg);
  };
  std::string line;
  long line_no = 0;
  std::map<SpectraKey, std::array<bool, 3>> seen;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> t = detail::split_tabs(line);
    if (t.size() < 7) {
      warn("line " + std::to_string(line_no) + ": too few fields, dropped");
      continue;
    }
    SpectraRecord rec;
    rec.subject_id = t[0];
    rec.question_id = t[1];
    double elapsed = 0.0;
    double n_frames_d = 0.0, depth_d = 0.0;
    int channel = -1;
    for (int c = 0; c < 3; ++c)
      if (t[5] == kSpectraChannels[static_cast<std::size_t>(c)]) channel = c;
    bool ok = channel >= 0 && detail::parse_double(t[3], elapsed) &&
              detail::parse_double(t[4], n_frames_d) &&
              detail::parse_double(t[6], depth_d);
    Answer answer = Answer::Correct;
    if (ok) {
      try {
        answer = answer_from_string(t[2]);
      } catch (const Error&) {
        ok = false;
      }
    }
    const auto depth = static_cast<std::size_t>(depth_d);
    if (ok && t.size() != 7 + depth) ok = false;
    std::vector<double> values(ok ? depth : 0);
    for (std::size_t i = 0; ok && i < depth; ++i)
      if (!detail::parse_double(t[7 + i], values[i])) ok = false;
    if (!ok) {
      warn("line " + std::to_string(line_no) + ": malformed row, dropped");
      continue;
    }

    const SpectraKey key{rec.subject_id, rec.question_id};
    auto it = out.find(key);
    if (it == out.end()) {
      rec.answer = answer;
      rec.elapsed_s = elapsed;
      rec.n_frames = static_cast<long>(n_frames_d);
      rec.spectra[static_cast<std::size_t>(channel)] = std::move(values);
      out.emplace(key, std::move(rec));
      seen[key] = {channel == 0, channel == 1, channel == 2};
      continue;
    }
    SpectraRecord& dst = it->second;
    auto& flags = seen[key];
    if (flags[static_cast<std::size_t>(channel)] || dst.answer != answer ||
        dst.elapsed_s != elapsed ||
        dst.n_frames != static_cast<long>(n_frames_d)) {
      warn("inconsistent rows for " + key.first + "/" + key.second +
           ", record dropped");
      out.erase(it);
      seen.erase(key);
      continue;
    }
    dst.spectra[static_cast<std::size_t>(channel)] = std::move(values);
    flags[static_cast<std::size_t>(channel)] = true;
  }

  // Only complete records (all three channels, equal depths) count as hits.
  for (auto it = out.begin(); it != out.end();) {
    const auto& s = it->second.spectra;
    const bool complete = !s[0].empty() && s[0].size() == s[1].size() &&
                          s[1].size() == s[2].size();
    if (complete) {
      ++it;
    } else {
      warn("incomplete record for " + it->first.first + "/" +
           it->first.second + ", dropped");
      it = out.erase(it);
    }
  }
  return out;
}

inline void save_spectra_cache(const std::string& path, const SpectraMap& map,
                               const std::string& stack_hash) {
  std::filesystem::create_directories(
      std::filesystem::path(path).parent_path());
  std::ostringstream out;
  out << "# eegtopo spectra v1 hash " << stack_hash << "\n";
  out << "# columns: subject question answer elapsed_s n_frames channel depth "
         "lambda...\n";
  for (const auto& [key, rec] : map) {
    for (std::size_t c = 0; c < 3; ++c) {
      out << key.first << '\t' << key.second << '\t' << to_string(rec.answer)
          << '\t' << detail::format_double(rec.elapsed_s) << '\t'
          << rec.n_frames << '\t' << kSpectraChannels[c] << '\t'
          << rec.spectra[c].size();
      for (double v : rec.spectra[c]) out << '\t' << detail::format_double(v);
      out << '\n';
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cache: cannot open " + path + " for writing");
  f << out.str();
  if (!f) throw DataError("cache: write failed for " + path);
}

// Slices per-channel k-prefixes out of a cached record.
inline QuestionFeatures features_from_spectra(const SpectraRecord& rec, int k) {
  const auto kk = static_cast<std::size_t>(k);
  if (k < 1 || rec.spectra[0].size() < kk)
    throw DataError("cache: record " + rec.subject_id + "/" + rec.question_id +
                    " holds " + std::to_string(rec.spectra[0].size()) +
                    " eigenvalues, need k=" + std::to_string(k) +
                    " (question too short for this k/stride)");
  QuestionFeatures f;
  f.subject_id = rec.subject_id;
  f.question_id = rec.question_id;
  f.answer = rec.answer;
  f.elapsed_s = rec.elapsed_s;
  f.red = Eigen::Map<const Eigen::VectorXd>(rec.spectra[0].data(), k);
  f.green = Eigen::Map<const Eigen::VectorXd>(rec.spectra[1].data(), k);
  f.blue = Eigen::Map<const Eigen::VectorXd>(rec.spectra[2].data(), k);
  return f;
}

inline void save_feature_table(const std::string& path,
                               const std::vector<QuestionFeatures>& feats,
                               int k, const std::string& feature_hash) {
  std::filesystem::create_directories(
      std::filesystem::path(path).parent_path());
  std::ostringstream out;
  out << "# eegtopo features v1 hash " << feature_hash << " k " << k << "\n";
  out << "# columns: subject question answer elapsed_s r1..rk g1..gk b1..bk\n";
  for (const QuestionFeatures& f : feats) {
    if (f.red.size() != k || f.green.size() != k || f.blue.size() != k)
      throw DataError("cache: feature vector length does not match k");
    out << f.subject_id << '\t' << f.question_id << '\t' << to_string(f.answer)
        << '\t' << detail::format_double(f.elapsed_s);
    for (const auto* v : {&f.red, &f.green, &f.blue})
      for (Eigen::Index i = 0; i < v->size(); ++i)
        out << '\t' << detail::format_double((*v)[i]);
    out << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cache: cannot open " + path + " for writing");
  f << out.str();
  if (!f) throw DataError("cache: write failed for " + path);
}

// Strict reader: the feature table is a product, not a cache of convenience,
// so damage here is an error rather than a silent recompute.
inline std::vector<QuestionFeatures> load_feature_table(const std::string& path,
                                                        int expect_k) {
  std::ifstream f(path);
  if (!f) throw DataError("cache: cannot open feature table " + path);
  std::vector<QuestionFeatures> out;
  std::string line;
  long line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> t = detail::split_tabs(line);
    const auto err = [&](const std::string& why) {
      return DataError("cache: " + path + " line " + std::to_string(line_no) +
                       ": " + why);
    };
    if (t.size() < 5) throw err("too few fields");
    if ((t.size() - 4) % 3 != 0) throw err("field count is not 4 + 3k");
    const auto k = static_cast<int>((t.size() - 4) / 3);
    if (expect_k > 0 && k != expect_k)
      throw err("k=" + std::to_string(k) + ", expected " +
                std::to_string(expect_k));
    QuestionFeatures q;
    q.subject_id = t[0];
    q.question_id = t[1];
    q.answer = answer_from_string(t[2]);
    if (!detail::parse_double(t[3], q.elapsed_s)) throw err("bad elapsed_s");
    q.red.resize(k);
    q.green.resize(k);
    q.blue.resize(k);
    for (int i = 0; i < k; ++i) {
      double r, g, b;
      if (!detail::parse_double(t[4 + static_cast<std::size_t>(i)], r) ||
          !detail::parse_double(t[4 + static_cast<std::size_t>(k + i)], g) ||
          !detail::parse_double(t[4 + static_cast<std::size_t>(2 * k + i)], b))
        throw err("bad eigenvalue field");
      q.red[i] = r;
      q.green[i] = g;
      q.blue[i] = b;
    }
    out.push_back(std::move(q));
  }
  if (out.empty()) throw DataError("cache: feature table " + path + " is empty");
  return out;
}

}  // namespace eegtopo
