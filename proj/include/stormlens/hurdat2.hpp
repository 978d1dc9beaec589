#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stormlens/calendar.hpp"

namespace stormlens::hurdat2 {

/// Record identifier column (landfall, intensity peak, ...). Blank in most rows.
enum class RecordId { none, L, W, P, I, C, S, T };

/// System status codes used by the best-track archive.
enum class StormStatus { TD, TS, HU, EX, SD, SS, LO, WV, DB };

std::string_view to_string(RecordId id);
std::string_view to_string(StormStatus st);

/// One best-track sample. Missing sentinel values (-99 wind, -999 pressure
/// and radii) are mapped to absent optionals.
struct TrackPoint {
  Instant timestamp{};
  RecordId record_id = RecordId::none;
  StormStatus status = StormStatus::TD;
  double lat = 0.0;  // degrees, signed (N positive)
  double lon = 0.0;  // degrees, signed (E positive)
  std::optional<int> max_wind_kt;
  std::optional<int> min_pressure_mb;
  /// 34/50/64 kt wind radii by quadrant NE, SE, SW, NW (nautical miles).
  std::array<std::optional<int>, 12> wind_radii{};
  /// Radius of maximum wind; only present in 21-field rows.
  bool has_rmw_field = false;
  std::optional<int> radius_max_wind_nmi;

  bool operator==(const TrackPoint&) const = default;
};

struct StormTrack {
  std::string basin_id;  // e.g. AL092017
  std::string name;      // e.g. HARVEY (uppercase in the archive)
  std::vector<TrackPoint> points;  // strictly increasing timestamps

  bool operator==(const StormTrack&) const = default;
};

/// Parses a HURDAT2 archive. Accepts both 20-field and 21-field data rows.
/// Throws Error (naming the storm id and line number) on row-count
/// mismatches, unparseable fields, or non-monotone timestamps.
std::vector<StormTrack> parse_hurdat2(std::string_view text);

/// Inverse of parse_hurdat2: parse(serialize(x)) == x structurally.
std::string serialize_hurdat2(const std::vector<StormTrack>& tracks);

/// Lower wind bounds (knots) for categories 1..5.
struct SaffirSimpsonScale {
  std::array<int, 5> lower_kt{64, 83, 96, 113, 137};
};

/// Category 1..5 for the given sustained wind, or nullopt below hurricane
/// strength. Throws Error for negative wind.
std::optional<int> saffir_simpson_category(int max_wind_kt, const SaffirSimpsonScale& scale = {});

/// Equirectangular projection with cosine-latitude x-scaling about the
/// track's mean latitude. Adequate at storm scales; matches flat-map output.
struct Projection {
  double lat_ref = 0.0;
  double cos_ref = 1.0;

  std::pair<double, double> project(double lat, double lon) const { return {lon * cos_ref, lat}; }
  std::pair<double, double> unproject(double x, double y) const { return {y, x / cos_ref}; }
};

Projection track_projection(const StormTrack& track);

/// Interpolated storm state at one instant.
struct Kinematics {
  double lat = 0.0;
  double lon = 0.0;
  double vx = 0.0, vy = 0.0;  // projected velocity, degrees/hour
  double nx = 0.0, ny = 0.0;  // left-hand unit normal of the velocity
};

/// Position, velocity and unit normal at time t. Position is the linear
/// interpolation between the bracketing samples in the projected plane;
/// velocity is the bracketing segment's finite difference. A stationary
/// segment borrows the nearest non-degenerate segment's direction; an
/// entirely stationary track is an error, as is t outside the track span.
Kinematics track_kinematics(const StormTrack& track, Instant t);

}  // namespace stormlens::hurdat2
