#include "stormlens/mapgen.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "stormlens/error.hpp"

namespace stormlens::mapgen {

namespace {

constexpr std::int64_t kHalfWindowSeconds = 12 * 3600;
constexpr std::int64_t kDaySeconds = 24 * 3600;

double signed_area(const std::vector<GeoPoint>& ring) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    acc += ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
  return 0.5 * acc;
}

}  // namespace

SmoothedSeries smooth_rates(const corpus::UsageRateSeries& daily, const std::vector<Instant>& track_timestamps) {
  for (std::size_t i = 1; i < track_timestamps.size(); ++i)
    if (track_timestamps[i] < track_timestamps[i - 1]) throw Error("track timestamps are not sorted");

  std::int64_t start = cal::start_of(daily.start_date).time_since_epoch().count();
  std::int64_t end = start + static_cast<std::int64_t>(daily.size()) * kDaySeconds;

  SmoothedSeries out;
  out.samples.reserve(track_timestamps.size());
  for (Instant t : track_timestamps) {
    std::int64_t mid = t.time_since_epoch().count();
    std::int64_t lo = std::max(mid - kHalfWindowSeconds, start);
    std::int64_t hi = std::min(mid + kHalfWindowSeconds, end);
    double rate = 0.0;
    if (lo < hi) {
      double acc = 0.0;
      std::int64_t first_day = (lo - start) / kDaySeconds;
      std::int64_t last_day = (hi - 1 - start) / kDaySeconds;
      for (std::int64_t d = first_day; d <= last_day; ++d) {
        std::int64_t day_lo = start + d * kDaySeconds;
        std::int64_t overlap = std::min(hi, day_lo + kDaySeconds) - std::max(lo, day_lo);
        acc += daily.rate_or_zero(static_cast<std::size_t>(d)) * static_cast<double>(overlap);
      }
      rate = acc / static_cast<double>(hi - lo);
    }
    out.samples.push_back({t, rate});
  }
  return out;
}

std::vector<GeoPoint> EnvelopePolygon::ring() const {
  std::vector<GeoPoint> out;
  out.reserve(left.size() + right.size() + 1);
  out.insert(out.end(), left.begin(), left.end());
  out.insert(out.end(), right.rbegin(), right.rend());
  out.push_back(out.front());
  if (signed_area(out) < 0.0) std::reverse(out.begin(), out.end());
  return out;
}

EnvelopePolygon build_envelope(const hurdat2::StormTrack& track, const SmoothedSeries& smoothed, double k) {
  if (track.points.size() < 2) throw Error::at("{}: envelope needs at least 2 track points", track.basin_id);
  if (!(k > 0.0)) throw Error::at("envelope scale {} must be positive", k);
  if (smoothed.samples.size() != track.points.size())
    throw Error::at("{}: smoothed series has {} samples for {} track points", track.basin_id,
                    smoothed.samples.size(), track.points.size());
  for (std::size_t i = 0; i < smoothed.samples.size(); ++i)
    if (smoothed.samples[i].timestamp != track.points[i].timestamp)
      throw Error::at("{}: smoothed sample {} is not on the track timestamp", track.basin_id, i);

  hurdat2::Projection proj = hurdat2::track_projection(track);
  EnvelopePolygon env;
  env.k = k;
  for (std::size_t i = 0; i < track.points.size(); ++i) {
    hurdat2::Kinematics kin = hurdat2::track_kinematics(track, track.points[i].timestamp);
    auto [x, y] = proj.project(kin.lat, kin.lon);
    double w = k * smoothed.samples[i].rate;
    env.max_rate = std::max(env.max_rate, smoothed.samples[i].rate);
    auto [left_lat, left_lon] = proj.unproject(x + w * kin.nx, y + w * kin.ny);
    auto [right_lat, right_lon] = proj.unproject(x - w * kin.nx, y - w * kin.ny);
    env.left.push_back({left_lat, left_lon});
    env.right.push_back({right_lat, right_lon});
  }
  env.degenerate = env.max_rate <= 0.0;
  return env;
}

double default_scale(double batch_max_rate, double max_half_width_degrees) {
  if (!(max_half_width_degrees > 0.0))
    throw Error::at("max half-width {} must be positive", max_half_width_degrees);
  if (batch_max_rate <= 0.0) return 1.0;
  return max_half_width_degrees / batch_max_rate;
}

std::vector<GeoPoint> noon_markers(const hurdat2::StormTrack& track) {
  std::vector<GeoPoint> out;
  if (track.points.size() < 2) return out;
  Instant first = track.points.front().timestamp;
  Instant last = track.points.back().timestamp;
  Day day = cal::day_of(first);
  if (cal::start_of(day) < first) day += std::chrono::days{1};
  for (; cal::start_of(day) + std::chrono::days{1} <= last; day += std::chrono::days{1}) {
    hurdat2::Kinematics kin = hurdat2::track_kinematics(track, cal::noon_of(day));
    out.push_back({kin.lat, kin.lon});
  }
  return out;
}

std::string emit_geojson(const std::vector<EnvelopePolygon>& envelopes,
                         const std::vector<hurdat2::StormTrack>& tracks, int season) {
  if (envelopes.size() != tracks.size())
    throw Error::at("{} envelopes for {} tracks", envelopes.size(), tracks.size());

  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = nlohmann::ordered_json::array();

  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const hurdat2::StormTrack& track = tracks[i];
    const EnvelopePolygon& env = envelopes[i];

    nlohmann::ordered_json props{{"name", track.name},
                                 {"season", season},
                                 {"k", env.k},
                                 {"max_rate", env.max_rate}};

    nlohmann::ordered_json ring = nlohmann::ordered_json::array();
    for (const GeoPoint& p : env.ring()) ring.push_back({p.lon, p.lat});
    nlohmann::ordered_json polygon{{"type", "Feature"},
                                   {"properties", props},
                                   {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}}};
    polygon["properties"]["degenerate"] = env.degenerate;
    doc["features"].push_back(std::move(polygon));

    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const GeoPoint& p : noon_markers(track)) points.push_back({p.lon, p.lat});
    doc["features"].push_back(nlohmann::ordered_json{
        {"type", "Feature"},
        {"properties", props},
        {"geometry", {{"type", "MultiPoint"}, {"coordinates", points}}}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace stormlens::mapgen
