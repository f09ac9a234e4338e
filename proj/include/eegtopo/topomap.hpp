#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "eegtopo/montage.hpp"
#include "eegtopo/types.hpp"

namespace eegtopo {

struct TopomapSpec {
  int grid_size{40};  // image is grid_size x grid_size pixels
  int stride{1};      // samples between frames; > 1 is a speed option only

  void validate() const {
    if (grid_size < 16 || grid_size > 512)
      throw ConfigError("topomap: grid_size must be in [16, 512]");
    if (stride < 1) throw ConfigError("topomap: stride must be >= 1");
  }
};

// Azimuthal-equidistant projection of unit-sphere sensor positions onto the
// plane: radius proportional to polar angle from the vertex, scaled so the
// outermost sensor lands at `rim` (head outline = unit circle). Mirroring a
// sensor across the sagittal plane mirrors its image across the 2D y axis.
inline Eigen::MatrixX2d project_montage(const Montage& montage,
                                        double rim = 0.95) {
  const auto n = static_cast<Eigen::Index>(montage.channels.size());
  if (n == 0) throw DataError("projection: montage is empty");
  Eigen::MatrixX2d uv(n, 2);
  double theta_max = 0.0;
  std::vector<double> theta(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ch = montage.channels[static_cast<std::size_t>(i)];
    const double t = std::acos(std::clamp(ch.z, -1.0, 1.0));
    theta[static_cast<std::size_t>(i)] = t;
    theta_max = std::max(theta_max, t);
  }
  if (theta_max <= 0.0)
    throw DataError("projection: all sensors at the vertex");
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ch = montage.channels[static_cast<std::size_t>(i)];
    const double r = rim * theta[static_cast<std::size_t>(i)] / theta_max;
    const double phi = std::atan2(ch.y, ch.x);
    uv(i, 0) = r * std::cos(phi);
    uv(i, 1) = r * std::sin(phi);
  }
  return uv;
}

struct ColorRgb {
  double r{0.0}, g{0.0}, b{0.0};
};

// Piecewise-linear colormap: blue -> cyan -> yellow -> red with anchors at
// t = 0, 0.25, 0.5, 1. The midpoint t = 0.5 is exactly yellow, whose red and
// green components are equal.
inline ColorRgb colormap(double t);

// Clips v to [v_min, v_max] and maps it through the colormap.
inline ColorRgb colorize_value(double v, double v_min, double v_max) {
  if (!(v_min < v_max))
    throw ConfigError("topomap: need v_min < v_max for colorizing");
  return colormap((v - v_min) / (v_max - v_min));
}

inline ColorRgb colormap(double t) {
  static constexpr double anchor_t[4] = {0.0, 0.25, 0.5, 1.0};
  static constexpr double anchor_c[4][3] = {
      {0.0, 0.0, 1.0}, {0.0, 1.0, 1.0}, {1.0, 1.0, 0.0}, {1.0, 0.0, 0.0}};
  t = std::clamp(t, 0.0, 1.0);
  int seg = 2;
  while (seg > 0 && t < anchor_t[seg]) --seg;
  const double span = anchor_t[seg + 1] - anchor_t[seg];
  const double u = (t - anchor_t[seg]) / span;
  ColorRgb c;
  c.r = anchor_c[seg][0] + u * (anchor_c[seg + 1][0] - anchor_c[seg][0]);
  c.g = anchor_c[seg][1] + u * (anchor_c[seg + 1][1] - anchor_c[seg][1]);
  c.b = anchor_c[seg][2] + u * (anchor_c[seg + 1][2] - anchor_c[seg][2]);
  return c;
}

namespace detail {

inline double tps_kernel(double r) {
  return r > 0.0 ? r * r * std::log(r) : 0.0;
}

}  // namespace detail

// Thin-plate spline interpolation from scattered sensor images onto the
// pixels inside the unit disk. The solve is folded into a single m x n
// matrix at construction, so rendering a frame is one matrix-vector product.
class TopomapRenderer {
 public:
  TopomapRenderer(const Montage& montage, const std::vector<int>& exclude,
                  int grid_size) {
    TopomapSpec{grid_size, 1}.validate();
    grid_size_ = grid_size;
    n_total_ = static_cast<Eigen::Index>(montage.channels.size());
    for (Eigen::Index c = 0; c < n_total_; ++c)
      if (std::find(exclude.begin(), exclude.end(), static_cast<int>(c)) ==
          exclude.end())
        kept_.push_back(c);
    const auto n = static_cast<Eigen::Index>(kept_.size());
    if (n < 4)
      throw DataError("topomap: need at least 4 scalp channels, have " +
                      std::to_string(n));

    const Eigen::MatrixX2d all_uv = project_montage(montage);
    Eigen::MatrixX2d uv(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) uv.row(i) = all_uv.row(kept_[static_cast<std::size_t>(i)]);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if ((uv.row(i) - uv.row(j)).norm() < 1e-9)
          throw DataError("topomap: channels project to the same point");

    // [K P; P^T 0] [w; a] = [f; 0], P row = (1, u, v).
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 3, n + 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j)
        m(i, j) = detail::tps_kernel((uv.row(i) - uv.row(j)).norm());
      m(i, n) = 1.0;
      m(i, n + 1) = uv(i, 0);
      m(i, n + 2) = uv(i, 1);
      m(n, i) = 1.0;
      m(n + 1, i) = uv(i, 0);
      m(n + 2, i) = uv(i, 1);
    }

    // Pixel centers inside the unit disk, row-major image order (row 0 at
    // v = +1 so the nasion points up).
    std::vector<double> pu, pv;
    for (int row = 0; row < grid_size_; ++row) {
      const double v = 1.0 - 2.0 * (row + 0.5) / grid_size_;
      for (int col = 0; col < grid_size_; ++col) {
        const double u = -1.0 + 2.0 * (col + 0.5) / grid_size_;
        if (u * u + v * v > 1.0) continue;
        inside_.push_back(static_cast<Eigen::Index>(row) * grid_size_ + col);
        pu.push_back(u);
        pv.push_back(v);
      }
    }
    const auto n_px = static_cast<Eigen::Index>(inside_.size());

    Eigen::MatrixXd e(n_px, n + 3);
    for (Eigen::Index p = 0; p < n_px; ++p) {
      const double u = pu[static_cast<std::size_t>(p)];
      const double v = pv[static_cast<std::size_t>(p)];
      for (Eigen::Index i = 0; i < n; ++i) {
        const double du = u - uv(i, 0);
        const double dv = v - uv(i, 1);
        e(p, i) = detail::tps_kernel(std::sqrt(du * du + dv * dv));
      }
      e(p, n) = 1.0;
      e(p, n + 1) = u;
      e(p, n + 2) = v;
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    if ((m * lu.inverse() - Eigen::MatrixXd::Identity(n + 3, n + 3))
            .cwiseAbs()
            .maxCoeff() > 1e-6)
      throw NumericalError("topomap: spline system is singular");
    // values = E * M^{-1} * [f; 0]; only the first n columns ever see data.
    r_ = lu.solve(e.transpose()).transpose().leftCols(n);
  }

  int grid_size() const { return grid_size_; }
  Eigen::Index n_pixels() const { return static_cast<Eigen::Index>(inside_.size()); }
  const std::vector<Eigen::Index>& inside_pixels() const { return inside_; }
  const std::vector<Eigen::Index>& kept_channels() const { return kept_; }

  // Scalar field over inside pixels for one frame of all-channel samples.
  Eigen::VectorXd field(const Eigen::Ref<const Eigen::VectorXd>& sample) const {
    if (sample.size() != n_total_)
      throw DataError("topomap: frame has " + std::to_string(sample.size()) +
                      " channels, expected " + std::to_string(n_total_));
    Eigen::VectorXd f(static_cast<Eigen::Index>(kept_.size()));
    for (Eigen::Index i = 0; i < f.size(); ++i)
      f[i] = sample[kept_[static_cast<std::size_t>(i)]];
    return r_ * f;
  }

  // One column of scalar field per frame, frames taken every `stride`
  // samples starting at the first sample of the segment.
  Eigen::MatrixXd render_fields(const Eigen::Ref<const Eigen::MatrixXd>& segment,
                                int stride) const {
    if (stride < 1) throw ConfigError("topomap: stride must be >= 1");
    if (segment.cols() == 0) throw DataError("topomap: empty segment");
    const Eigen::Index n_frames = 1 + (segment.cols() - 1) / stride;
    Eigen::MatrixXd fields(n_pixels(), n_frames);
    for (Eigen::Index j = 0; j < n_frames; ++j)
      fields.col(j) = field(segment.col(j * stride));
    return fields;
  }

 private:
  int grid_size_{0};
  Eigen::Index n_total_{0};
  std::vector<Eigen::Index> kept_;
  std::vector<Eigen::Index> inside_;
  Eigen::MatrixXd r_;
};

// Color-channel stacks: one column per frame, one row per inside pixel,
// values in [0, 1].
struct RgbStack {
  Eigen::MatrixXd red, green, blue;
  double scale{1.0};

  Eigen::Index n_frames() const { return red.cols(); }
  Eigen::Index n_pixels() const { return red.rows(); }
};

// Symmetric per-question scale: colors span [-s, +s] with s the largest
// absolute field value, so zero always maps to the midpoint color. An
// all-zero question falls back to s = 1.
inline double symmetric_scale(const Eigen::Ref<const Eigen::MatrixXd>& fields) {
  const double s = fields.size() ? fields.cwiseAbs().maxCoeff() : 0.0;
  return s > 0.0 ? s : 1.0;
}

inline RgbStack colorize_stack(const Eigen::Ref<const Eigen::MatrixXd>& fields,
                               double scale) {
  if (!(scale > 0.0)) throw ConfigError("topomap: scale must be positive");
  RgbStack stack;
  stack.scale = scale;
  stack.red.resize(fields.rows(), fields.cols());
  stack.green.resize(fields.rows(), fields.cols());
  stack.blue.resize(fields.rows(), fields.cols());
  for (Eigen::Index j = 0; j < fields.cols(); ++j) {
    for (Eigen::Index i = 0; i < fields.rows(); ++i) {
      const ColorRgb c = colorize_value(fields(i, j), -scale, scale);
      stack.red(i, j) = c.r;
      stack.green(i, j) = c.g;
      stack.blue(i, j) = c.b;
    }
  }
  return stack;
}

inline RgbStack render_stack(const TopomapRenderer& renderer,
                             const Eigen::Ref<const Eigen::MatrixXd>& segment,
                             int stride) {
  const Eigen::MatrixXd fields = renderer.render_fields(segment, stride);
  return colorize_stack(fields, symmetric_scale(fields));
}

}  // namespace eegtopo
