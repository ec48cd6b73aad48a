#pragma once

#include "sarbot/loop.hpp"
#include "sarbot/signals.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace sarbot::sim {

// World coordinates are centimetres, y pointing left of +x.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // radians, counter-clockwise from +x
};

struct RobotGeometry {
  double wheel_base = 10.0;  // cm
  double v0 = 5.0;           // cm/s

  void validate() const;
};

enum class Integrator {
  kExactArc,
  kEuler,
};

Integrator parse_integrator(std::string_view name);
std::string_view to_string(Integrator integrator);

// Differential drive with V_R = V0 + MC and V_L = V0 - MC. Throws ConfigError
// if dt <= 0.
Pose step(const Pose& pose, double motor_command, double dt, const RobotGeometry& robot,
          Integrator integrator = Integrator::kExactArc);

// Grayscale raster. Cell (col, row) covers [col*s, (col+1)*s) x [row*s, (row+1)*s).
class Canvas {
 public:
  Canvas() = default;
  Canvas(std::size_t width, std::size_t height, double cell_size, std::uint8_t fill = 255);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  double cell_size() const { return cell_size_; }
  double extent_x() const { return static_cast<double>(width_) * cell_size_; }
  double extent_y() const { return static_cast<double>(height_) * cell_size_; }

  std::uint8_t at(std::size_t col, std::size_t row) const { return raster_[row * width_ + col]; }
  void set(std::size_t col, std::size_t row, std::uint8_t value) {
    raster_[row * width_ + col] = value;
  }
  const std::vector<std::uint8_t>& raster() const { return raster_; }

  bool contains(Vec2 p) const;
  // Bilinear interpolation between cell centres; throws OutOfBoundsError
  // outside the canvas.
  double sample(Vec2 p) const;

  // Reflection about the horizontal centre line y = extent_y / 2.
  Canvas mirrored() const;
  Vec2 mirror(Vec2 p) const { return {p.x, extent_y() - p.y}; }
  Pose mirror(const Pose& pose) const { return {pose.x, extent_y() - pose.y, -pose.theta}; }

  // Binary PGM (P5) with a `# cell_size <cm>` comment. The first image row
  // is the highest y.
  void save_pgm(const std::filesystem::path& path) const;
  // Uses the cell_size comment when present, else `cell_size`.
  static Canvas load_pgm(const std::filesystem::path& path, double cell_size = 1.0);

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  double cell_size_ = 1.0;
  std::vector<std::uint8_t> raster_;
};

// Sensor geometry in the robot frame (x forward from the wheel axle, y left).
struct SensorLayout {
  // |y| of the LDR pairs, inner to outer. Left sensors sit at +y, starred
  // partners at -y.
  std::array<double, 3> ldr_lateral{3.0, 4.0, 5.0};
  double ldr_forward = 5.5;
  double fov_radius = 0.5;
  // Camera window: rows run near to far over [near, near + length], columns
  // left to right over [+width/2, -width/2].
  double camera_near = 5.0;
  double camera_length = 10.0;
  double camera_width = 15.0;
  std::size_t camera_subsamples = 4;

  void validate() const;
};

Vec2 to_world(const Pose& pose, Vec2 local);

// G = 255 - mean GSV over each sensor's field of view, so the dark path
// reads high.
loop::LdrReadout sample_ldr(const Canvas& canvas, const Pose& pose, const SensorLayout& layout);

signals::IntensityGrid sample_camera(const Canvas& canvas, const Pose& pose,
                                     const SensorLayout& layout);

enum class TrackKind {
  kStraight,
  kCircle,
  kRoundedRect,
  kSchedule,
};

TrackKind parse_track_kind(std::string_view name);
std::string_view to_string(TrackKind kind);

// Constant-curvature piece of a path; positive curvature turns left (1/cm).
struct CurvatureSegment {
  double length = 0.0;
  double curvature = 0.0;
};

struct TrackSpec {
  TrackKind kind = TrackKind::kRoundedRect;
  double line_width = 2.0;
  double cell_size = 0.1;
  double margin = 30.0;
  // Distance along the path from its first point to the robot start.
  double start_offset = 0.0;

  double length = 200.0;                           // straight
  double radius = 40.0;                            // circle
  double width = 120.0;                            // rounded rect
  double height = 80.0;                            // rounded rect
  std::array<double, 4> corner_radii{25.0, 40.0, 25.0, 40.0};
  std::vector<CurvatureSegment> segments;          // schedule
  bool closed = true;                              // schedule

  void validate() const;
};

struct World {
  Canvas canvas;
  std::vector<Vec2> centerline;
  bool closed = false;
  double line_width = 0.0;
  Pose start;
};

// Integrates a curvature schedule from the origin heading +x.
std::vector<Vec2> integrate_schedule(const std::vector<CurvatureSegment>& segments,
                                     double step = 0.05);

// Segments equivalent to the track kind (straight, circle, rounded rect or
// the explicit schedule).
std::vector<CurvatureSegment> track_segments(const TrackSpec& spec);

// Builds the canvas with an antialiased dark line (0) on a light background
// (255). Throws ConfigError for open or self-intersecting closed schedules.
World make_track(const TrackSpec& spec);

// Distance from p to the polyline.
double distance_to_path(const std::vector<Vec2>& path, bool closed, Vec2 p);

}  // namespace sarbot::sim
