#include "sarbot/errors.hpp"
#include "sarbot/simenv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sarbot::sim {
namespace {

double cross(Vec2 a, Vec2 b, Vec2 c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const double d1 = cross(q1, q2, p1);
  const double d2 = cross(q1, q2, p2);
  const double d3 = cross(p1, p2, q1);
  const double d4 = cross(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  const double ex = p.x - (a.x + t * dx);
  const double ey = p.y - (a.y + t * dy);
  return std::sqrt(ex * ex + ey * ey);
}

void check_self_intersection(const std::vector<Vec2>& path, bool closed) {
  // A coarse resampling (~1 cm) is enough to catch crossings of a 2 cm line.
  std::vector<Vec2> coarse;
  double acc = 1.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0) acc += std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
    if (acc >= 1.0 || i + 1 == path.size()) {
      coarse.push_back(path[i]);
      acc = 0.0;
    }
  }
  const std::size_t n = coarse.size();
  if (n < 4) return;
  const std::size_t segs = closed ? n : n - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    for (std::size_t j = i + 2; j < segs; ++j) {
      if (closed && i == 0 && j == segs - 1) continue;
      if (segments_intersect(coarse[i], coarse[(i + 1) % n], coarse[j], coarse[(j + 1) % n])) {
        throw ConfigError(fmt::format(
            "track path self-intersects near ({:.1f}, {:.1f}) cm", coarse[i].x, coarse[i].y));
      }
    }
  }
}

}  // namespace

TrackKind parse_track_kind(std::string_view name) {
  if (name == "straight") return TrackKind::kStraight;
  if (name == "circle") return TrackKind::kCircle;
  if (name == "rounded_rect") return TrackKind::kRoundedRect;
  if (name == "schedule") return TrackKind::kSchedule;
  throw ConfigError(fmt::format(
      "unknown track kind '{}' (expected straight, circle, rounded_rect or schedule)", name));
}

std::string_view to_string(TrackKind kind) {
  switch (kind) {
    case TrackKind::kStraight:
      return "straight";
    case TrackKind::kCircle:
      return "circle";
    case TrackKind::kRoundedRect:
      return "rounded_rect";
    case TrackKind::kSchedule:
      return "schedule";
  }
  return "?";
}

void TrackSpec::validate() const {
  if (!(line_width > 0.0)) throw ConfigError("track line width must be > 0");
  if (!(cell_size > 0.0)) throw ConfigError("track cell size must be > 0");
  if (!(margin >= 0.0)) throw ConfigError("track margin must be >= 0");
  if (!(start_offset >= 0.0)) throw ConfigError("track start offset must be >= 0");
  switch (kind) {
    case TrackKind::kStraight:
      if (!(length > 0.0)) throw ConfigError("straight track length must be > 0");
      break;
    case TrackKind::kCircle:
      if (!(radius > line_width)) throw ConfigError("circle radius must exceed the line width");
      break;
    case TrackKind::kRoundedRect:
      for (double r : corner_radii) {
        if (!(r > line_width)) throw ConfigError("corner radii must exceed the line width");
      }
      if (!(width > corner_radii[0] + corner_radii[1] && width > corner_radii[2] + corner_radii[3] &&
            height > corner_radii[1] + corner_radii[2] &&
            height > corner_radii[3] + corner_radii[0])) {
        throw ConfigError("rounded rectangle is too small for its corner radii");
      }
      break;
    case TrackKind::kSchedule:
      if (segments.empty()) throw ConfigError("schedule track needs at least one segment");
      for (const auto& s : segments) {
        if (!(s.length > 0.0) || !std::isfinite(s.curvature)) {
          throw ConfigError("schedule segments need length > 0 and finite curvature");
        }
      }
      break;
  }
}

std::vector<Vec2> integrate_schedule(const std::vector<CurvatureSegment>& segments, double step) {
  std::vector<Vec2> pts{{0.0, 0.0}};
  double x = 0.0, y = 0.0, theta = 0.0;
  for (const auto& seg : segments) {
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(seg.length / step)));
    const double ds = seg.length / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (seg.curvature == 0.0) {
        x += ds * std::cos(theta);
        y += ds * std::sin(theta);
      } else {
        const double next = theta + seg.curvature * ds;
        x += (std::sin(next) - std::sin(theta)) / seg.curvature;
        y += (std::cos(theta) - std::cos(next)) / seg.curvature;
        theta = next;
      }
      pts.push_back({x, y});
    }
  }
  return pts;
}

std::vector<CurvatureSegment> track_segments(const TrackSpec& spec) {
  constexpr double kQuarter = std::numbers::pi / 2.0;
  switch (spec.kind) {
    case TrackKind::kStraight:
      return {{spec.length, 0.0}};
    case TrackKind::kCircle:
      return {{2.0 * std::numbers::pi * spec.radius, 1.0 / spec.radius}};
    case TrackKind::kRoundedRect: {
      // Counter-clockwise from the end of the bottom-left corner.
      const auto& r = spec.corner_radii;
      return {{spec.width - r[0] - r[1], 0.0},  {kQuarter * r[1], 1.0 / r[1]},
              {spec.height - r[1] - r[2], 0.0}, {kQuarter * r[2], 1.0 / r[2]},
              {spec.width - r[2] - r[3], 0.0},  {kQuarter * r[3], 1.0 / r[3]},
              {spec.height - r[3] - r[0], 0.0}, {kQuarter * r[0], 1.0 / r[0]}};
    }
    case TrackKind::kSchedule:
      return spec.segments;
  }
  return {};
}

double distance_to_path(const std::vector<Vec2>& path, bool closed, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t segs = closed ? path.size() : path.size() - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    best = std::min(best, point_segment_distance(p, path[i], path[(i + 1) % path.size()]));
  }
  return best;
}

World make_track(const TrackSpec& spec) {
  spec.validate();
  const std::vector<CurvatureSegment> segments = track_segments(spec);
  const bool closed = spec.kind != TrackKind::kStraight && (spec.kind != TrackKind::kSchedule || spec.closed);
  std::vector<Vec2> path = integrate_schedule(segments);

  double total_turn = 0.0;
  double total_length = 0.0;
  for (const auto& s : segments) {
    total_turn += s.curvature * s.length;
    total_length += s.length;
  }
  if (closed) {
    const Vec2 end = path.back();
    const double gap = std::hypot(end.x, end.y);
    const double turns = total_turn / (2.0 * std::numbers::pi);
    if (gap > 0.5 || std::abs(turns - std::round(turns)) > 1e-3) {
      throw ConfigError(fmt::format(
          "closed track does not close: end point is {:.3f} cm from the start, total turn {:.4f} rev",
          gap, turns));
    }
    path.pop_back();
  }
  check_self_intersection(path, closed);
  if (spec.start_offset >= total_length) {
    throw ConfigError("track start offset is beyond the end of the path");
  }

  double min_x = path[0].x, max_x = path[0].x, min_y = path[0].y, max_y = path[0].y;
  for (const Vec2& p : path) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double s = spec.cell_size;
  // The small slack keeps e.g. 60 / 0.1 from rounding up to 601 cells.
  const auto cells = [s](double extent) {
    return static_cast<std::size_t>(std::ceil(extent / s - 1e-9));
  };
  const std::size_t width = cells(max_x - min_x + 2.0 * spec.margin);
  const std::size_t height = cells(max_y - min_y + 2.0 * spec.margin);
  for (Vec2& p : path) {
    p.x += spec.margin - min_x;
    p.y += spec.margin - min_y;
  }

  World world;
  world.canvas = Canvas(width, height, s);
  world.closed = closed;
  world.line_width = spec.line_width;

  // Per-cell distance to the centreline, updated segment by segment within
  // each segment's padded bounding box.
  const double half = 0.5 * spec.line_width;
  const double reach = half + 2.0 * s;
  std::vector<double> dist(width * height, std::numeric_limits<double>::infinity());
  const std::size_t segs = closed ? path.size() : path.size() - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    const Vec2 a = path[i];
    const Vec2 b = path[(i + 1) % path.size()];
    const auto lo_c = static_cast<long>(std::floor((std::min(a.x, b.x) - reach) / s));
    const auto hi_c = static_cast<long>(std::ceil((std::max(a.x, b.x) + reach) / s));
    const auto lo_r = static_cast<long>(std::floor((std::min(a.y, b.y) - reach) / s));
    const auto hi_r = static_cast<long>(std::ceil((std::max(a.y, b.y) + reach) / s));
    for (long r = std::max(0L, lo_r); r <= std::min<long>(static_cast<long>(height) - 1, hi_r); ++r) {
      for (long c = std::max(0L, lo_c); c <= std::min<long>(static_cast<long>(width) - 1, hi_c); ++c) {
        const Vec2 centre{(static_cast<double>(c) + 0.5) * s, (static_cast<double>(r) + 0.5) * s};
        double& d = dist[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)];
        d = std::min(d, point_segment_distance(centre, a, b));
      }
    }
  }
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double coverage = std::clamp((half - dist[r * width + c]) / s + 0.5, 0.0, 1.0);
      world.canvas.set(c, r, static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - coverage))));
    }
  }

  // Start pose: walk the path to the requested offset.
  double walked = 0.0;
  world.start = {path[0].x, path[0].y, 0.0};
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 a = path[i];
    const Vec2 b = path[i + 1];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double heading = std::atan2(b.y - a.y, b.x - a.x);
    if (walked + len >= spec.start_offset || i + 2 == path.size()) {
      const double t = len > 0.0 ? std::clamp((spec.start_offset - walked) / len, 0.0, 1.0) : 0.0;
      world.start = {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), heading};
      break;
    }
    walked += len;
  }
  world.centerline = std::move(path);
  return world;
}

}  // namespace sarbot::sim
