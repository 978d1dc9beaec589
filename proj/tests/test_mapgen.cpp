#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "stormlens/calendar.hpp"
#include "stormlens/error.hpp"
#include "stormlens/mapgen.hpp"
#include "stormlens/rng.hpp"

#include "geo_oracles.hpp"

using namespace stormlens;

namespace {

corpus::UsageRateSeries make_daily(const std::string& start, const std::vector<double>& rates) {
  corpus::UsageRateSeries s{corpus::StormPattern::hashtag("test"), corpus::CorpusKind::organic, "en",
                            cal::parse_day(start)};
  for (double r : rates) {
    s.rates.push_back(r);
    s.counts.push_back(std::nullopt);
  }
  return s;
}

hurdat2::TrackPoint at(const std::string& timestamp, double lat, double lon) {
  hurdat2::TrackPoint p;
  p.timestamp = cal::parse_instant(timestamp);
  p.status = hurdat2::StormStatus::HU;
  p.lat = lat;
  p.lon = lon;
  return p;
}

hurdat2::StormTrack eastward_track() {
  hurdat2::StormTrack track;
  track.basin_id = "AL012030";
  track.name = "ALPHA";
  for (int i = 0; i <= 12; ++i) {
    Instant t = cal::parse_instant("2030-07-02T00:00:00") + std::chrono::hours{6 * i};
    hurdat2::TrackPoint p;
    p.timestamp = t;
    p.status = hurdat2::StormStatus::HU;
    p.lat = 0.0;
    p.lon = -50.0 + 0.5 * i;
    track.points.push_back(p);
  }
  return track;
}

std::vector<Instant> timestamps_of(const hurdat2::StormTrack& track) {
  std::vector<Instant> out;
  for (const auto& p : track.points) out.push_back(p.timestamp);
  return out;
}

// Oracles live in geo_oracles.hpp, shared with the acceptance gate.
using geo_oracles::inside_or_on;
using geo_oracles::orientation_sign;
using geo_oracles::ring_is_simple;
using geo_oracles::shoelace;

void validate_geojson(const nlohmann::json& doc) {
  REQUIRE(geo_oracles::geojson_violation(doc) == "");
}

}  // namespace

TEST_CASE("smoothing a constant rate returns the constant everywhere") {
  auto daily = make_daily("2030-07-01", std::vector<double>(6, 2.0e-4));
  std::vector<Instant> ts;
  for (int h = 0; h <= 120; h += 6) ts.push_back(cal::parse_instant("2030-07-01T00:00:00") + std::chrono::hours{h});
  auto smoothed = mapgen::smooth_rates(daily, ts);
  REQUIRE(smoothed.samples.size() == ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(smoothed.samples[i].timestamp == ts[i]);
    CHECK(smoothed.samples[i].rate == doctest::Approx(2.0e-4).epsilon(1e-12));
  }
}

TEST_CASE("smoothing a one-day impulse spreads it by window overlap") {
  const double c = 4.8e-4;
  auto daily = make_daily("2030-07-01", {0.0, 0.0, c, 0.0, 0.0});
  // 3-hourly samples wide enough to catch every window touching the impulse.
  std::vector<Instant> ts;
  Instant first = cal::parse_instant("2030-07-02T00:00:00");
  for (int h = 0; h <= 72; h += 3) ts.push_back(first + std::chrono::hours{h});
  auto smoothed = mapgen::smooth_rates(daily, ts);

  auto rate_at = [&](const std::string& s) {
    Instant t = cal::parse_instant(s);
    for (const auto& sample : smoothed.samples)
      if (sample.timestamp == t) return sample.rate;
    FAIL("sample not found");
    return 0.0;
  };
  CHECK(rate_at("2030-07-03T00:00:00") == doctest::Approx(c * 12.0 / 24.0));
  CHECK(rate_at("2030-07-03T03:00:00") == doctest::Approx(c * 15.0 / 24.0));
  CHECK(rate_at("2030-07-03T12:00:00") == doctest::Approx(c));
  CHECK(rate_at("2030-07-02T21:00:00") == doctest::Approx(c * 9.0 / 24.0));
  CHECK(rate_at("2030-07-02T12:00:00") == doctest::Approx(0.0));

  // With 3-hour spacing, eight samples tile each 24 h window, so the sum
  // reproduces the impulse mass exactly.
  double sum = 0.0;
  for (const auto& sample : smoothed.samples) sum += sample.rate;
  CHECK(sum == doctest::Approx(8.0 * c).epsilon(1e-12));
  for (const auto& sample : smoothed.samples) CHECK(sample.rate >= 0.0);
}

TEST_CASE("smoothing outside the series span gives zeros") {
  auto daily = make_daily("2030-07-01", {1.0e-4, 2.0e-4});
  std::vector<Instant> before{cal::parse_instant("2030-06-20T00:00:00"), cal::parse_instant("2030-06-25T06:00:00")};
  for (const auto& sample : mapgen::smooth_rates(daily, before).samples) CHECK(sample.rate == 0.0);
  std::vector<Instant> after{cal::parse_instant("2030-08-01T12:00:00")};
  CHECK(mapgen::smooth_rates(daily, after).samples[0].rate == 0.0);
}

TEST_CASE("smoothing renormalizes truncated edge windows") {
  const double a = 1.0e-4, b = 3.0e-4;
  auto daily = make_daily("2030-07-01", {a, b});
  std::vector<Instant> ts{cal::parse_instant("2030-07-01T00:00:00"), cal::parse_instant("2030-07-02T00:00:00"),
                          cal::parse_instant("2030-07-03T00:00:00")};
  auto smoothed = mapgen::smooth_rates(daily, ts);
  CHECK(smoothed.samples[0].rate == doctest::Approx(a));            // only day one in reach
  CHECK(smoothed.samples[1].rate == doctest::Approx((a + b) / 2));  // balanced interior window
  CHECK(smoothed.samples[2].rate == doctest::Approx(b));            // only day two in reach

  std::vector<Instant> unsorted{ts[1], ts[0]};
  CHECK_THROWS_AS(mapgen::smooth_rates(daily, unsorted), Error);
}

TEST_CASE("straight eastward track yields a rectangle") {
  auto track = eastward_track();
  const double f0 = 3.0e-4;
  auto daily = make_daily("2030-06-28", std::vector<double>(10, f0));
  auto smoothed = mapgen::smooth_rates(daily, timestamps_of(track));
  const double k = 5000.0;
  auto env = mapgen::build_envelope(track, smoothed, k);

  const double w = k * f0;  // 1.5 degrees of half-width
  REQUIRE(env.left.size() == track.points.size());
  REQUIRE(env.right.size() == track.points.size());
  CHECK(env.max_rate == doctest::Approx(f0));
  CHECK_FALSE(env.degenerate);
  for (std::size_t i = 0; i < track.points.size(); ++i) {
    CHECK(std::abs(env.left[i].lat - w) < 1e-9);
    CHECK(std::abs(env.left[i].lon - track.points[i].lon) < 1e-9);
    CHECK(std::abs(env.right[i].lat + w) < 1e-9);
    CHECK(std::abs(env.right[i].lon - track.points[i].lon) < 1e-9);
  }

  auto ring = env.ring();
  REQUIRE(ring.size() == 2 * track.points.size() + 1);
  CHECK(ring.front().lat == ring.back().lat);
  CHECK(ring.front().lon == ring.back().lon);
  for (const auto& p : ring) CHECK(std::abs(std::abs(p.lat) - w) < 1e-9);
  CHECK(ring_is_simple(ring));

  double area = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    area += ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
  area *= 0.5;
  CHECK(area > 0.0);  // counterclockwise
  CHECK(area == doctest::Approx(2.0 * w * 6.0).epsilon(1e-9));
}

TEST_CASE("doubling the scale doubles every boundary offset") {
  hurdat2::StormTrack track;
  track.basin_id = "AL022030";
  track.name = "BRAVO";
  Instant t0 = cal::parse_instant("2030-08-10T00:00:00");
  for (int i = 0; i <= 18; ++i) {
    double angle = std::numbers::pi / 2.0 * i / 18.0;
    hurdat2::TrackPoint p;
    p.timestamp = t0 + std::chrono::hours{6 * i};
    p.status = hurdat2::StormStatus::HU;
    p.lat = 20.0 + 5.0 * std::sin(angle);
    p.lon = -60.0 - 5.0 * (1.0 - std::cos(angle));
    track.points.push_back(p);
  }
  auto daily = make_daily("2030-08-08", std::vector<double>(10, 2.0e-4));
  auto smoothed = mapgen::smooth_rates(daily, timestamps_of(track));

  auto env1 = mapgen::build_envelope(track, smoothed, 4000.0);
  auto env2 = mapgen::build_envelope(track, smoothed, 8000.0);
  for (std::size_t i = 0; i < track.points.size(); ++i) {
    double lat = track.points[i].lat, lon = track.points[i].lon;
    CHECK(std::abs((env2.left[i].lat - lat) - 2.0 * (env1.left[i].lat - lat)) < 1e-9);
    CHECK(std::abs((env2.left[i].lon - lon) - 2.0 * (env1.left[i].lon - lon)) < 1e-9);
    CHECK(std::abs((env2.right[i].lat - lat) - 2.0 * (env1.right[i].lat - lat)) < 1e-9);
    CHECK(std::abs((env2.right[i].lon - lon) - 2.0 * (env1.right[i].lon - lon)) < 1e-9);
  }

  // Curved track, half-width below the turning radius: the ring stays simple
  // and covers its own track.
  auto ring = env2.ring();
  CHECK(ring_is_simple(ring));
  for (const auto& p : track.points) CHECK(inside_or_on(ring, {p.lat, p.lon}));
}

TEST_CASE("zero attention produces a degenerate ring") {
  auto track = eastward_track();
  auto daily = make_daily("2030-06-28", std::vector<double>(10, 0.0));
  auto smoothed = mapgen::smooth_rates(daily, timestamps_of(track));
  auto env = mapgen::build_envelope(track, smoothed, 100.0);
  CHECK(env.degenerate);
  CHECK(env.max_rate == 0.0);
  for (std::size_t i = 0; i < track.points.size(); ++i) {
    CHECK(env.left[i].lat == doctest::Approx(track.points[i].lat));
    CHECK(env.left[i].lon == doctest::Approx(track.points[i].lon));
    CHECK(env.right[i].lat == doctest::Approx(track.points[i].lat));
    CHECK(env.right[i].lon == doctest::Approx(track.points[i].lon));
  }
  auto ring = env.ring();
  CHECK(ring.size() == 2 * track.points.size() + 1);
}

TEST_CASE("envelope input validation") {
  auto track = eastward_track();
  auto daily = make_daily("2030-06-28", std::vector<double>(10, 1.0e-4));
  auto smoothed = mapgen::smooth_rates(daily, timestamps_of(track));

  CHECK_THROWS_AS(mapgen::build_envelope(track, smoothed, 0.0), Error);
  CHECK_THROWS_AS(mapgen::build_envelope(track, smoothed, -1.0), Error);

  hurdat2::StormTrack stub = track;
  stub.points.resize(1);
  mapgen::SmoothedSeries one{{smoothed.samples[0]}};
  CHECK_THROWS_AS(mapgen::build_envelope(stub, one, 1.0), Error);

  mapgen::SmoothedSeries short_series{{smoothed.samples[0], smoothed.samples[1]}};
  CHECK_THROWS_WITH_AS(mapgen::build_envelope(track, short_series, 1.0), doctest::Contains("samples"), Error);

  auto shifted = smoothed;
  shifted.samples[3].timestamp += std::chrono::hours{1};
  CHECK_THROWS_AS(mapgen::build_envelope(track, shifted, 1.0), Error);
}

TEST_CASE("default scale pins the batch maximum to the cap") {
  CHECK(mapgen::default_scale(4.0e-4) == doctest::Approx(20000.0));
  CHECK(mapgen::default_scale(4.0e-4, 4.0) == doctest::Approx(10000.0));
  CHECK(mapgen::default_scale(0.0) == 1.0);
  CHECK_THROWS_AS(mapgen::default_scale(1.0e-4, 0.0), Error);
}

TEST_CASE("noon markers cover days fully inside the span") {
  hurdat2::StormTrack track;
  track.basin_id = "AL032030";
  track.name = "CHARLIE";
  track.points.push_back(at("2030-08-20T00:00:00", 10.0, -40.0));
  track.points.push_back(at("2030-08-23T18:00:00", 10.0, -25.0));
  auto markers = mapgen::noon_markers(track);
  REQUIRE(markers.size() == 3);  // Aug 20, 21, 22 lie fully inside
  // Constant eastward speed of 10 degrees lon per 90 h puts the first noon at
  // 12 h in.
  CHECK(markers[0].lat == doctest::Approx(10.0));
  CHECK(markers[0].lon == doctest::Approx(-40.0 + 15.0 * 12.0 / 90.0));
  CHECK(markers[2].lon == doctest::Approx(-40.0 + 15.0 * 60.0 / 90.0));

  hurdat2::StormTrack late;
  late.basin_id = "AL042030";
  late.name = "DELTA";
  late.points.push_back(at("2030-08-20T06:00:00", 10.0, -40.0));
  late.points.push_back(at("2030-08-22T00:00:00", 10.0, -30.0));
  CHECK(mapgen::noon_markers(late).size() == 1);  // only Aug 21 fits fully

  hurdat2::StormTrack brief;
  brief.basin_id = "AL052030";
  brief.name = "ECHO";
  brief.points.push_back(at("2030-08-20T06:00:00", 10.0, -40.0));
  brief.points.push_back(at("2030-08-20T18:00:00", 10.0, -39.0));
  CHECK(mapgen::noon_markers(brief).empty());
}

TEST_CASE("geojson output is a valid feature collection") {
  auto track = eastward_track();
  const double f0 = 3.0e-4;
  auto daily = make_daily("2030-06-28", std::vector<double>(10, f0));
  auto smoothed = mapgen::smooth_rates(daily, timestamps_of(track));
  double k = mapgen::default_scale(f0);
  auto env = mapgen::build_envelope(track, smoothed, k);

  auto text = mapgen::emit_geojson({env}, {track}, 2030);
  auto doc = nlohmann::json::parse(text);
  validate_geojson(doc);

  REQUIRE(doc["features"].size() == 2);
  const auto& polygon = doc["features"][0];
  CHECK(polygon["geometry"]["type"] == "Polygon");
  CHECK(polygon["properties"]["name"] == "ALPHA");
  CHECK(polygon["properties"]["season"] == 2030);
  CHECK(polygon["properties"]["k"].get<double>() == doctest::Approx(k));
  CHECK(polygon["properties"]["max_rate"].get<double>() == doctest::Approx(f0));
  CHECK(polygon["properties"]["degenerate"] == false);
  // Positions are ordered longitude first; the envelope peaks at 8 degrees.
  const auto& ring = polygon["geometry"]["coordinates"][0];
  bool found = false;
  for (const auto& pos : ring)
    if (std::abs(pos[1].get<double>() - 8.0) < 1e-9) found = true;
  CHECK(found);

  const auto& markers = doc["features"][1];
  CHECK(markers["geometry"]["type"] == "MultiPoint");
  CHECK(markers["properties"]["name"] == "ALPHA");
  CHECK(markers["geometry"]["coordinates"].size() == 3);  // Jul 2 through Jul 4 fit fully

  // A degenerate storm is emitted, flagged, and still validates.
  auto zero_daily = make_daily("2030-06-28", std::vector<double>(10, 0.0));
  auto zero_env = mapgen::build_envelope(track, mapgen::smooth_rates(zero_daily, timestamps_of(track)), k);
  auto zero_doc = nlohmann::json::parse(mapgen::emit_geojson({zero_env}, {track}, 2030));
  validate_geojson(zero_doc);
  CHECK(zero_doc["features"][0]["properties"]["degenerate"] == true);

  CHECK_THROWS_AS(mapgen::emit_geojson({env, env}, {track}, 2030), Error);
}
