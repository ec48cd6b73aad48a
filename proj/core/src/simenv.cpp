#include "sarbot/simenv.hpp"

#include "sarbot/errors.hpp"
#include "sarbot/pgm.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace sarbot::sim {

void RobotGeometry::validate() const {
  if (!(wheel_base > 0.0) || !std::isfinite(wheel_base)) {
    throw ConfigError(fmt::format("wheel base must be > 0, got {}", wheel_base));
  }
  if (!std::isfinite(v0)) throw ConfigError("base speed must be finite");
}

Integrator parse_integrator(std::string_view name) {
  if (name == "exact") return Integrator::kExactArc;
  if (name == "euler") return Integrator::kEuler;
  throw ConfigError(fmt::format("unknown integrator '{}' (expected exact or euler)", name));
}

std::string_view to_string(Integrator integrator) {
  return integrator == Integrator::kEuler ? "euler" : "exact";
}

Pose step(const Pose& pose, double motor_command, double dt, const RobotGeometry& robot,
          Integrator integrator) {
  if (!(dt > 0.0)) throw ConfigError(fmt::format("time step must be > 0, got {}", dt));
  const double v_right = robot.v0 + motor_command;
  const double v_left = robot.v0 - motor_command;
  const double speed = 0.5 * (v_right + v_left);
  const double omega = (v_right - v_left) / robot.wheel_base;

  Pose next = pose;
  if (integrator == Integrator::kEuler || std::abs(omega * dt) < 1e-12) {
    next.x += speed * std::cos(pose.theta) * dt;
    next.y += speed * std::sin(pose.theta) * dt;
    next.theta += omega * dt;
  } else {
    const double theta_end = pose.theta + omega * dt;
    const double r = speed / omega;
    next.x += r * (std::sin(theta_end) - std::sin(pose.theta));
    next.y += r * (std::cos(pose.theta) - std::cos(theta_end));
    next.theta = theta_end;
  }
  if (!std::isfinite(next.x) || !std::isfinite(next.y) || !std::isfinite(next.theta)) {
    throw NumericError("robot pose became non-finite");
  }
  return next;
}

Canvas::Canvas(std::size_t width, std::size_t height, double cell_size, std::uint8_t fill)
    : width_(width), height_(height), cell_size_(cell_size), raster_(width * height, fill) {
  if (width == 0 || height == 0) throw ConfigError("canvas must have at least one cell");
  if (!(cell_size > 0.0)) throw ConfigError(fmt::format("cell size must be > 0, got {}", cell_size));
}

bool Canvas::contains(Vec2 p) const {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= extent_x() && p.y <= extent_y();
}

double Canvas::sample(Vec2 p) const {
  if (!contains(p)) {
    throw OutOfBoundsError(fmt::format("sample point ({:.3f}, {:.3f}) cm is off the {:.1f}x{:.1f} cm canvas",
                                       p.x, p.y, extent_x(), extent_y()));
  }
  const auto axis = [](double coord, std::size_t n, std::size_t& i0, std::size_t& i1, double& f) {
    const double u = coord - 0.5;
    if (u <= 0.0) {
      i0 = i1 = 0;
      f = 0.0;
      return;
    }
    const double fl = std::floor(u);
    const auto i = static_cast<std::size_t>(fl);
    if (i + 1 >= n) {
      i0 = i1 = n - 1;
      f = 0.0;
      return;
    }
    i0 = i;
    i1 = i + 1;
    f = u - fl;
  };
  std::size_t c0, c1, r0, r1;
  double fx, fy;
  axis(p.x / cell_size_, width_, c0, c1, fx);
  axis(p.y / cell_size_, height_, r0, r1, fy);
  const double top = (1.0 - fx) * at(c0, r0) + fx * at(c1, r0);
  const double bottom = (1.0 - fx) * at(c0, r1) + fx * at(c1, r1);
  return (1.0 - fy) * top + fy * bottom;
}

Canvas Canvas::mirrored() const {
  Canvas out(width_, height_, cell_size_);
  for (std::size_t r = 0; r < height_; ++r) {
    std::copy_n(raster_.begin() + static_cast<std::ptrdiff_t>(r * width_), width_,
                out.raster_.begin() + static_cast<std::ptrdiff_t>((height_ - 1 - r) * width_));
  }
  return out;
}

void Canvas::save_pgm(const std::filesystem::path& path) const {
  GrayImage image;
  image.width = width_;
  image.height = height_;
  image.comments.push_back(fmt::format("cell_size {}", cell_size_));
  image.pixels.resize(raster_.size());
  for (std::size_t r = 0; r < height_; ++r) {
    std::copy_n(raster_.begin() + static_cast<std::ptrdiff_t>((height_ - 1 - r) * width_), width_,
                image.pixels.begin() + static_cast<std::ptrdiff_t>(r * width_));
  }
  write_pgm(path, image);
}

Canvas Canvas::load_pgm(const std::filesystem::path& path, double cell_size) {
  const GrayImage image = read_pgm(path);
  for (const auto& c : image.comments) {
    if (c.rfind("cell_size ", 0) == 0) {
      try {
        cell_size = std::stod(c.substr(10));
      } catch (const std::logic_error&) {
        throw ConfigError(fmt::format("'{}': bad cell_size comment", path.string()));
      }
    }
  }
  Canvas canvas(image.width, image.height, cell_size);
  for (std::size_t r = 0; r < image.height; ++r) {
    std::copy_n(image.pixels.begin() + static_cast<std::ptrdiff_t>(r * image.width), image.width,
                canvas.raster_.begin() +
                    static_cast<std::ptrdiff_t>((image.height - 1 - r) * image.width));
  }
  return canvas;
}

void SensorLayout::validate() const {
  double previous = 0.0;
  for (double lat : ldr_lateral) {
    if (!(lat > previous)) {
      throw ConfigError("LDR lateral offsets must be positive and increase from inner to outer");
    }
    previous = lat;
  }
  if (!(fov_radius > 0.0)) throw ConfigError("LDR field-of-view radius must be > 0");
  if (!(camera_length > 0.0) || !(camera_width > 0.0)) {
    throw ConfigError("camera window must have positive length and width");
  }
  if (camera_subsamples < 1) throw ConfigError("camera subsamples must be >= 1");
}

Vec2 to_world(const Pose& pose, Vec2 local) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  return {pose.x + c * local.x - s * local.y, pose.y + s * local.x + c * local.y};
}

namespace {

// Grid points with spacing r/3 inside the unit disk scaled by r; symmetric
// about both axes.
std::vector<Vec2> fov_pattern(double radius) {
  std::vector<Vec2> pts;
  for (int a = -3; a <= 3; ++a) {
    for (int b = -3; b <= 3; ++b) {
      if (a * a + b * b <= 9) pts.push_back({a * radius / 3.0, b * radius / 3.0});
    }
  }
  return pts;
}

double fov_mean(const Canvas& canvas, const Pose& pose, Vec2 centre,
                const std::vector<Vec2>& pattern) {
  double sum = 0.0;
  for (const Vec2& d : pattern) {
    sum += canvas.sample(to_world(pose, {centre.x + d.x, centre.y + d.y}));
  }
  return sum / static_cast<double>(pattern.size());
}

}  // namespace

loop::LdrReadout sample_ldr(const Canvas& canvas, const Pose& pose, const SensorLayout& layout) {
  const std::vector<Vec2> pattern = fov_pattern(layout.fov_radius);
  loop::LdrReadout readout;
  for (std::size_t i = 0; i < 3; ++i) {
    const double lat = layout.ldr_lateral[i];
    readout.left[i] = 255.0 - fov_mean(canvas, pose, {layout.ldr_forward, lat}, pattern);
    readout.right[i] = 255.0 - fov_mean(canvas, pose, {layout.ldr_forward, -lat}, pattern);
  }
  return readout;
}

signals::IntensityGrid sample_camera(const Canvas& canvas, const Pose& pose,
                                     const SensorLayout& layout) {
  using signals::kGridCols;
  using signals::kGridRows;
  const double row_len = layout.camera_length / static_cast<double>(kGridRows);
  const double col_wid = layout.camera_width / static_cast<double>(kGridCols);
  const std::size_t n = layout.camera_subsamples;
  const double inv = 1.0 / static_cast<double>(n * n);

  signals::IntensityGrid grid;
  for (std::size_t r = 0; r < kGridRows; ++r) {
    for (std::size_t c = 0; c < kGridCols; ++c) {
      double sum = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        const double fx = layout.camera_near +
                          (static_cast<double>(r) + (static_cast<double>(a) + 0.5) / n) * row_len;
        for (std::size_t b = 0; b < n; ++b) {
          const double fy = 0.5 * layout.camera_width -
                            (static_cast<double>(c) + (static_cast<double>(b) + 0.5) / n) * col_wid;
          sum += canvas.sample(to_world(pose, {fx, fy}));
        }
      }
      grid.at(r, c) = sum * inv;
    }
  }
  return grid;
}

}  // namespace sarbot::sim
