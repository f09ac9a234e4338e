#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eegtopo/errors.hpp"

namespace eegtopo {

// Head coordinate convention used throughout: unit sphere centered on the
// head, +x toward the right ear, +y toward the nasion (front), +z toward the
// vertex. Electrode positions have unit norm.
struct ChannelPosition {
  std::string label;
  double x{0.0};
  double y{0.0};
  double z{0.0};
};

struct Montage {
  std::string name;
  std::vector<ChannelPosition> channels;

  int count() const { return static_cast<int>(channels.size()); }

  void validate() const {
    std::set<std::string> labels;
    for (const auto& ch : channels) {
      const double norm = std::sqrt(ch.x * ch.x + ch.y * ch.y + ch.z * ch.z);
      if (std::abs(norm - 1.0) > 1e-9)
        throw DataError("montage '" + name + "': channel '" + ch.label +
                        "' is not on the unit sphere (|p| = " +
                        std::to_string(norm) + ")");
      if (!labels.insert(ch.label).second)
        throw DataError("montage '" + name + "': duplicate channel label '" +
                        ch.label + "'");
    }
  }
};

// Synthetic stand-in for a 128-channel geodesic sensor net: a Fibonacci
// spiral over the spherical cap from the vertex down to polar angle
// `cap_rad`. Channel 0 sits exactly at the vertex. Positions are normalized
// to unit length.
inline Montage geodesic_montage(int n_channels = 128,
                                double cap_rad = 2.0943951023931953) {
  if (n_channels < 1) throw ConfigError("montage needs at least one channel");
  Montage m;
  m.name = "geodesic" + std::to_string(n_channels) + "-v1";
  m.channels.reserve(static_cast<std::size_t>(n_channels));
  const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  const double z_min = std::cos(cap_rad);
  for (int i = 0; i < n_channels; ++i) {
    ChannelPosition ch;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "E%03d", i + 1);
    ch.label = buf;
    if (i == 0) {
      ch.x = 0.0;
      ch.y = 0.0;
      ch.z = 1.0;
    } else {
      const double z =
          1.0 - (1.0 - z_min) * static_cast<double>(i) /
                    static_cast<double>(n_channels - 1);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden_angle * static_cast<double>(i);
      ch.x = r * std::cos(phi);
      ch.y = r * std::sin(phi);
      ch.z = z;
      const double norm = std::sqrt(ch.x * ch.x + ch.y * ch.y + ch.z * ch.z);
      ch.x /= norm;
      ch.y /= norm;
      ch.z /= norm;
    }
    m.channels.push_back(ch);
  }
  return m;
}

// Channels acting as the ocular reference in synthetic data: the two most
// frontal-inferior positions (largest y - z).
inline std::vector<int> default_eog_channels(const Montage& m, int n_eog = 2) {
  std::vector<int> idx(m.channels.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const auto& ca = m.channels[static_cast<std::size_t>(a)];
    const auto& cb = m.channels[static_cast<std::size_t>(b)];
    const double sa = ca.y - ca.z;
    const double sb = cb.y - cb.z;
    if (sa != sb) return sa > sb;
    return a < b;
  });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(n_eog)));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// CSV schema: "label,x,y,z", one channel per row. Lines starting with '#'
// are comments; the loader accepts the "# montage <name>" header emitted by
// save_montage_csv and falls back to the file stem otherwise.
inline void save_montage_csv(const Montage& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open montage file for writing: " + path);
  out << "# montage " << m.name << "\n";
  out << "label,x,y,z\n";
  char buf[128];
  for (const auto& ch : m.channels) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g\n", ch.label.c_str(),
                  ch.x, ch.y, ch.z);
    out << buf;
  }
  if (!out) throw DataError("failed writing montage file: " + path);
}

inline Montage load_montage_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open montage file: " + path);
  Montage m;
  m.name = path;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream iss(line.substr(1));
      std::string word;
      iss >> word;
      if (word == "montage") iss >> m.name;
      continue;
    }
    if (!saw_header && line.rfind("label,", 0) == 0) {
      saw_header = true;
      continue;
    }
    std::istringstream iss(line);
    ChannelPosition ch;
    std::string field;
    if (!std::getline(iss, ch.label, ',')) continue;
    double* coords[3] = {&ch.x, &ch.y, &ch.z};
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(iss, field, ','))
        throw DataError("montage row with fewer than 4 fields in " + path +
                        ": '" + line + "'");
      try {
        *coords[i] = std::stod(field);
      } catch (const std::exception&) {
        throw DataError("non-numeric coordinate in montage file " + path +
                        ": '" + field + "'");
      }
    }
    m.channels.push_back(ch);
  }
  m.validate();
  return m;
}

}  // namespace eegtopo
