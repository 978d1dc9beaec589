#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include <fmt/format.h>

#include "stormlens/mapgen.hpp"

// Plain-plane geometry oracles, written directly against the definitions,
// plus a structural RFC 7946 GeoJSON check. Shared by the unit tests and
// the acceptance gate.
namespace geo_oracles {

inline int orientation_sign(const stormlens::mapgen::GeoPoint& a, const stormlens::mapgen::GeoPoint& b,
                            const stormlens::mapgen::GeoPoint& c) {
  double v = (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
  if (v > 1e-12) return 1;
  if (v < -1e-12) return -1;
  return 0;
}

inline bool within_box(const stormlens::mapgen::GeoPoint& a, const stormlens::mapgen::GeoPoint& b,
                       const stormlens::mapgen::GeoPoint& p) {
  return std::min(a.lon, b.lon) - 1e-12 <= p.lon && p.lon <= std::max(a.lon, b.lon) + 1e-12 &&
         std::min(a.lat, b.lat) - 1e-12 <= p.lat && p.lat <= std::max(a.lat, b.lat) + 1e-12;
}

inline bool segments_intersect(const stormlens::mapgen::GeoPoint& p1, const stormlens::mapgen::GeoPoint& p2,
                               const stormlens::mapgen::GeoPoint& q1, const stormlens::mapgen::GeoPoint& q2) {
  int o1 = orientation_sign(p1, p2, q1);
  int o2 = orientation_sign(p1, p2, q2);
  int o3 = orientation_sign(q1, q2, p1);
  int o4 = orientation_sign(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && within_box(p1, p2, q1)) return true;
  if (o2 == 0 && within_box(p1, p2, q2)) return true;
  if (o3 == 0 && within_box(q1, q2, p1)) return true;
  if (o4 == 0 && within_box(q1, q2, p2)) return true;
  return false;
}

/// O(n²) pairwise check over a closed ring's segments, skipping shared
/// endpoints of adjacent segments and the closing adjacency.
inline bool ring_is_simple(const std::vector<stormlens::mapgen::GeoPoint>& ring) {
  std::size_t n = ring.size() - 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1) continue;
      if (i == 0 && j == n - 1) continue;
      if (segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1])) return false;
    }
  return true;
}

inline bool on_ring(const std::vector<stormlens::mapgen::GeoPoint>& ring,
                    const stormlens::mapgen::GeoPoint& p) {
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    if (orientation_sign(ring[i], ring[i + 1], p) == 0 && within_box(ring[i], ring[i + 1], p)) return true;
  return false;
}

inline bool inside_or_on(const std::vector<stormlens::mapgen::GeoPoint>& ring,
                         const stormlens::mapgen::GeoPoint& p) {
  if (on_ring(ring, p)) return true;
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const auto& a = ring[i];
    const auto& b = ring[i + 1];
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      double x = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
      if (x > p.lon) inside = !inside;
    }
  }
  return inside;
}

inline double shoelace(const nlohmann::json& ring) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    double x0 = ring[i][0].get<double>(), y0 = ring[i][1].get<double>();
    double x1 = ring[i + 1][0].get<double>(), y1 = ring[i + 1][1].get<double>();
    acc += x0 * y1 - x1 * y0;
  }
  return 0.5 * acc;
}

/// Structural check against RFC 7946: object types, position arrays, ring
/// closure and length, value ranges, and right-hand-rule winding. Returns
/// an empty string when the document is valid, else the first violation.
inline std::string geojson_violation(const nlohmann::json& doc) {
  if (!doc.is_object()) return "top level is not an object";
  if (doc.value("type", "") != std::string("FeatureCollection")) return "type is not FeatureCollection";
  if (!doc.contains("features") || !doc.at("features").is_array()) return "features is not an array";

  auto position_violation = [](const nlohmann::json& pos) -> std::string {
    if (!pos.is_array() || pos.size() != 2) return "position is not a [lon, lat] pair";
    if (!pos[0].is_number() || !pos[1].is_number()) return "position holds a non-number";
    double lon = pos[0].get<double>();
    double lat = pos[1].get<double>();
    if (!std::isfinite(lon) || !std::isfinite(lat)) return "position is not finite";
    if (lon < -180.0 || lon > 180.0) return fmt::format("longitude {} out of range", lon);
    if (lat < -90.0 || lat > 90.0) return fmt::format("latitude {} out of range", lat);
    return {};
  };

  std::size_t index = 0;
  for (const auto& feature : doc.at("features")) {
    auto where = [&](const std::string& what) { return fmt::format("feature {}: {}", index, what); };
    if (feature.value("type", "") != std::string("Feature")) return where("type is not Feature");
    if (!feature.contains("properties")) return where("missing properties");
    if (!feature.contains("geometry")) return where("missing geometry");
    const auto& geometry = feature.at("geometry");
    const std::string kind = geometry.value("type", "");
    if (!geometry.contains("coordinates") || !geometry.at("coordinates").is_array())
      return where("coordinates is not an array");
    const auto& coords = geometry.at("coordinates");
    if (kind == "Polygon") {
      if (coords.empty()) return where("polygon has no rings");
      for (std::size_t r = 0; r < coords.size(); ++r) {
        const auto& ring = coords[r];
        if (!ring.is_array() || ring.size() < 4) return where("ring has fewer than 4 positions");
        for (const auto& pos : ring)
          if (auto v = position_violation(pos); !v.empty()) return where(v);
        if (ring.front() != ring.back()) return where("ring is not closed");
        double area = shoelace(ring);
        if (area != 0.0) {
          if (r == 0 && area < 0.0) return where("exterior ring is clockwise");
          if (r > 0 && area > 0.0) return where("interior ring is counterclockwise");
        }
      }
    } else if (kind == "MultiPoint") {
      for (const auto& pos : coords)
        if (auto v = position_violation(pos); !v.empty()) return where(v);
    } else {
      return where("unexpected geometry type " + kind);
    }
    ++index;
  }
  return {};
}

}  // namespace geo_oracles
