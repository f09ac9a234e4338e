#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "eegtopo/types.hpp"

namespace eegtopo {

struct BandpassSpec {
  double low_cut_hz{1.0};
  double high_cut_hz{48.0};
  int order{4};  // analog prototype order; the cascade has `order` biquads
  bool zero_phase{true};

  void validate(double sample_rate_hz) const {
    if (order < 1 || order > 10)
      throw ConfigError("bandpass: order must be in [1, 10]");
    if (!(low_cut_hz > 0.0) || !(low_cut_hz < high_cut_hz))
      throw ConfigError("bandpass: need 0 < low_cut < high_cut");
    if (!(high_cut_hz < sample_rate_hz / 2.0))
      throw ConfigError("bandpass: high cutoff " +
                        std::to_string(high_cut_hz) +
                        " Hz is at or above Nyquist for rate " +
                        std::to_string(sample_rate_hz));
  }
};

// Second-order section, a0 normalized to 1.
struct Biquad {
  double b0{0.0}, b1{0.0}, b2{0.0};
  double a1{0.0}, a2{0.0};
};

namespace detail {

inline std::complex<double> bilinear(std::complex<double> s) {
  return (1.0 + s) / (1.0 - s);
}

// Denominator coefficients of a section with the given digital pole and its
// conjugate (or a second real pole).
inline void pole_pair_to_denominator(std::complex<double> z1,
                                     std::complex<double> z2, Biquad& q) {
  q.a1 = -(z1 + z2).real();
  q.a2 = (z1 * z2).real();
}

inline std::complex<double> biquad_response(const Biquad& q, double omega) {
  const std::complex<double> zi = std::polar(1.0, -omega);  // z^-1
  return (q.b0 + q.b1 * zi + q.b2 * zi * zi) /
         (1.0 + q.a1 * zi + q.a2 * zi * zi);
}

}  // namespace detail

// Butterworth bandpass as a cascade of `order` biquads, designed by analog
// prototype -> lowpass-to-bandpass transform -> bilinear transform with
// frequency prewarping. Each section carries one zero at z=+1 and one at
// z=-1; each section is individually normalized to unit gain at the band
// center.
inline std::vector<Biquad> design_butterworth_bandpass(const BandpassSpec& spec,
                                                       double sample_rate_hz) {
  spec.validate(sample_rate_hz);
  const int n = spec.order;
  const double w1 = std::tan(M_PI * spec.low_cut_hz / sample_rate_hz);
  const double w2 = std::tan(M_PI * spec.high_cut_hz / sample_rate_hz);
  const double w0_sq = w1 * w2;
  const double bw = w2 - w1;
  const double omega_center = 2.0 * std::atan(std::sqrt(w0_sq));

  // Analog prototype poles on the unit circle, left half-plane.
  std::vector<std::complex<double>> proto;
  for (int k = 1; k <= n; ++k) {
    const double theta =
        M_PI * (2.0 * k + n - 1.0) / (2.0 * static_cast<double>(n));
    proto.emplace_back(std::cos(theta), std::sin(theta));
  }

  std::vector<Biquad> sections;
  sections.reserve(static_cast<std::size_t>(n));
  auto add_section = [&](std::complex<double> z1, std::complex<double> z2) {
    Biquad q;
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;  // zeros at z = +1 and z = -1
    detail::pole_pair_to_denominator(z1, z2, q);
    const double g = std::abs(detail::biquad_response(q, omega_center));
    q.b0 /= g;
    q.b1 /= g;
    q.b2 /= g;
    sections.push_back(q);
  };

  for (const auto& p : proto) {
    if (p.imag() < -1e-12) continue;  // conjugates are handled together
    // Bandpass transform: s^2 - p*bw*s + w0^2 = 0.
    const std::complex<double> half = 0.5 * p * bw;
    const std::complex<double> disc = std::sqrt(half * half - w0_sq);
    const std::complex<double> s_a = half + disc;
    const std::complex<double> s_b = half - disc;
    const std::complex<double> z_a = detail::bilinear(s_a);
    const std::complex<double> z_b = detail::bilinear(s_b);
    if (std::abs(p.imag()) <= 1e-12) {
      // Real prototype pole (odd order): its two bandpass poles form one
      // real-coefficient section on their own.
      add_section(z_a, z_b);
    } else {
      add_section(z_a, std::conj(z_a));
      add_section(z_b, std::conj(z_b));
    }
  }
  return sections;
}

// |H(e^{j 2 pi f / fs})| of the cascade, single pass.
inline double cascade_magnitude(const std::vector<Biquad>& sections,
                                double freq_hz, double sample_rate_hz) {
  const double omega = 2.0 * M_PI * freq_hz / sample_rate_hz;
  double mag = 1.0;
  for (const auto& q : sections) mag *= std::abs(detail::biquad_response(q, omega));
  return mag;
}

namespace detail {

inline void run_cascade_inplace(const std::vector<Biquad>& sections,
                                Eigen::VectorXd& x) {
  for (const auto& q : sections) {
    double s1 = 0.0, s2 = 0.0;  // direct form II transposed
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double in = x[i];
      const double out = q.b0 * in + s1;
      s1 = q.b1 * in - q.a1 * out + s2;
      s2 = q.b2 * in - q.a2 * out;
      x[i] = out;
    }
  }
}

}  // namespace detail

// Zero-phase filtering: odd-reflection padding of 3x the cascade coefficient
// length at both ends, forward pass, backward pass, padding stripped.
inline Eigen::VectorXd filtfilt(const std::vector<Biquad>& sections,
                                const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  if (n == 0) return Eigen::VectorXd();
  const Eigen::Index pad = std::min<Eigen::Index>(
      n - 1, 3 * (2 * static_cast<Eigen::Index>(sections.size()) + 1));
  Eigen::VectorXd ext(n + 2 * pad);
  for (Eigen::Index i = 0; i < pad; ++i)
    ext[i] = 2.0 * x[0] - x[pad - i];
  ext.segment(pad, n) = x;
  for (Eigen::Index i = 0; i < pad; ++i)
    ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  detail::run_cascade_inplace(sections, ext);
  ext.reverseInPlace();
  detail::run_cascade_inplace(sections, ext);
  ext.reverseInPlace();
  return ext.segment(pad, n);
}

inline Eigen::VectorXd filter_forward(const std::vector<Biquad>& sections,
                                      const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd y = x;
  detail::run_cascade_inplace(sections, y);
  return y;
}

// Band-pass filters every channel. Channels are independent, so the result
// does not depend on processing order.
inline Recording bandpass(const Recording& rec, const BandpassSpec& spec) {
  spec.validate(rec.sample_rate_hz);
  const std::vector<Biquad> sections =
      design_butterworth_bandpass(spec, rec.sample_rate_hz);
  Recording out = rec;
  for (Eigen::Index c = 0; c < rec.n_channels(); ++c) {
    Eigen::VectorXd row = rec.data.row(c).transpose();
    Eigen::VectorXd filtered =
        spec.zero_phase ? filtfilt(sections, row) : filter_forward(sections, row);
    out.data.row(c) = filtered.transpose();
  }
  return out;
}

}  // namespace eegtopo
