#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "stormlens/error.hpp"
#include "stormlens/hurdat2.hpp"

using namespace stormlens;
using namespace stormlens::hurdat2;

namespace {

std::string read_file(const std::string& name) {
  std::ifstream in(std::string(STORMLENS_TEST_DATA_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("parses a multi-storm archive") {
  auto tracks = parse_hurdat2(read_file("tracks_sample.txt"));
  REQUIRE(tracks.size() == 5);
  CHECK(tracks[0].basin_id == "AL092017");
  CHECK(tracks[0].name == "HARVEY");
  REQUIRE(tracks[0].points.size() == 8);

  const auto& p0 = tracks[0].points[0];
  CHECK(p0.timestamp == cal::parse_instant("2017-08-25T00:00:00"));
  CHECK(p0.status == StormStatus::HU);
  CHECK(p0.record_id == RecordId::none);
  CHECK(p0.lat == doctest::Approx(25.1));
  CHECK(p0.lon == doctest::Approx(-94.2));
  CHECK(p0.max_wind_kt == 90);
  CHECK(p0.min_pressure_mb == 957);
  CHECK(p0.wind_radii[0] == 140);
  CHECK_FALSE(p0.has_rmw_field);

  // Landfall row with an off-cadence timestamp.
  const auto& landfall = tracks[0].points[4];
  CHECK(landfall.record_id == RecordId::L);
  CHECK(landfall.timestamp == cal::parse_instant("2017-08-26T03:00:00"));

  // Sentinels map to absent values.
  const auto& tail = tracks[0].points[7];
  CHECK_FALSE(tail.wind_radii[4].has_value());
  CHECK(tail.wind_radii[2] == 0);
}

TEST_CASE("parses 21-field rows with radius of maximum wind") {
  auto tracks = parse_hurdat2(read_file("tracks_sample.txt"));
  const auto& dorian = tracks[2];
  CHECK(dorian.name == "DORIAN");
  REQUIRE(dorian.points.size() == 5);
  CHECK(dorian.points[0].has_rmw_field);
  CHECK(dorian.points[0].radius_max_wind_nmi == 5);
  CHECK(dorian.points[4].has_rmw_field);
  CHECK_FALSE(dorian.points[4].radius_max_wind_nmi.has_value());
}

TEST_CASE("serialization round-trips structurally") {
  auto tracks = parse_hurdat2(read_file("tracks_sample.txt"));
  std::string text = serialize_hurdat2(tracks);
  auto again = parse_hurdat2(text);
  REQUIRE(again.size() == tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) CHECK(again[i] == tracks[i]);
  // And the serialized form is itself stable.
  CHECK(serialize_hurdat2(again) == text);
}

TEST_CASE("row-count mismatch names the storm") {
  CHECK_THROWS_WITH_AS(parse_hurdat2(read_file("tracks_bad_count.txt")),
                       doctest::Contains("AL092017"), Error);
}

TEST_CASE("unparseable fields name the storm and line") {
  CHECK_THROWS_WITH_AS(parse_hurdat2(read_file("tracks_bad_field.txt")),
                       doctest::Contains("AL092017 line 3"), Error);
}

TEST_CASE("non-monotone timestamps are rejected") {
  CHECK_THROWS_WITH_AS(parse_hurdat2(read_file("tracks_bad_order.txt")),
                       doctest::Contains("strictly increasing"), Error);
}

TEST_CASE("more rows than declared is rejected") {
  std::string text =
      "AL012030,              ALPHA,      1,\n"
      "20300701, 0000,  , TS, 20.0N, 60.0W,  45, 1000,   60,   60,   30,   60, -999, -999, -999, -999, -999, -999, -999, -999,\n"
      "20300701, 0600,  , TS, 20.5N, 60.5W,  50,  997,   60,   60,   30,   60, -999, -999, -999, -999, -999, -999, -999, -999,\n";
  CHECK_THROWS_WITH_AS(parse_hurdat2(text), doctest::Contains("more data rows"), Error);
}

TEST_CASE("out-of-range coordinates are rejected") {
  std::string text =
      "AL012030,              ALPHA,      1,\n"
      "20300701, 0000,  , TS, 95.0N, 60.0W,  45, 1000,   60,   60,   30,   60, -999, -999, -999, -999, -999, -999, -999, -999,\n";
  CHECK_THROWS_WITH_AS(parse_hurdat2(text), doctest::Contains("out of range"), Error);
}

TEST_CASE("southern and eastern hemispheres get negative and positive signs") {
  std::string text =
      "SP012019,               TEST,      1,\n"
      "20190101, 0000,  , TS, 15.0S, 170.0E,  45, 1000, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n";
  auto tracks = parse_hurdat2(text);
  CHECK(tracks[0].points[0].lat == doctest::Approx(-15.0));
  CHECK(tracks[0].points[0].lon == doctest::Approx(170.0));
  auto rt = parse_hurdat2(serialize_hurdat2(tracks));
  CHECK(rt[0] == tracks[0]);
}

TEST_CASE("saffir-simpson categories follow the wind thresholds") {
  CHECK_FALSE(saffir_simpson_category(0).has_value());
  CHECK_FALSE(saffir_simpson_category(63).has_value());
  CHECK(saffir_simpson_category(64) == 1);
  CHECK(saffir_simpson_category(82) == 1);
  CHECK(saffir_simpson_category(83) == 2);
  CHECK(saffir_simpson_category(95) == 2);
  CHECK(saffir_simpson_category(96) == 3);
  CHECK(saffir_simpson_category(112) == 3);
  CHECK(saffir_simpson_category(113) == 4);
  CHECK(saffir_simpson_category(136) == 4);
  CHECK(saffir_simpson_category(137) == 5);
  CHECK(saffir_simpson_category(185) == 5);
  CHECK_THROWS_AS(saffir_simpson_category(-1), Error);

  SaffirSimpsonScale lowered{{50, 60, 70, 80, 90}};
  CHECK(saffir_simpson_category(55, lowered) == 1);
  CHECK(saffir_simpson_category(90, lowered) == 5);
}

TEST_CASE("kinematics interpolates position along the track") {
  std::string text =
      "AL012030,              ALPHA,      3,\n"
      "20300701, 0000,  , TS, 20.0N, 60.0W,  45, 1000, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n"
      "20300701, 0600,  , TS, 21.0N, 61.0W,  50,  997, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n"
      "20300701, 1200,  , TS, 22.0N, 61.0W,  55,  995, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n";
  auto track = parse_hurdat2(text)[0];

  auto mid = track_kinematics(track, cal::parse_instant("2030-07-01T03:00:00"));
  CHECK(mid.lat == doctest::Approx(20.5));
  CHECK(mid.lon == doctest::Approx(-60.5));

  // Second segment is due north: velocity +y only, left normal points west.
  auto later = track_kinematics(track, cal::parse_instant("2030-07-01T09:00:00"));
  CHECK(later.vx == doctest::Approx(0.0));
  CHECK(later.vy == doctest::Approx(1.0 / 6.0));
  CHECK(later.nx == doctest::Approx(-1.0));
  CHECK(later.ny == doctest::Approx(0.0));
  CHECK(std::hypot(later.nx, later.ny) == doctest::Approx(1.0));

  // Endpoint queries are inside the span; beyond them is an error.
  CHECK_NOTHROW(track_kinematics(track, cal::parse_instant("2030-07-01T00:00:00")));
  CHECK_NOTHROW(track_kinematics(track, cal::parse_instant("2030-07-01T12:00:00")));
  CHECK_THROWS_WITH_AS(track_kinematics(track, cal::parse_instant("2030-07-01T12:00:01")),
                       doctest::Contains("outside the track span"), Error);
  CHECK_THROWS_AS(track_kinematics(track, cal::parse_instant("2030-06-30T23:59:59")), Error);
}

TEST_CASE("velocity scales x by the cosine of the reference latitude") {
  std::string text =
      "AL012030,              ALPHA,      2,\n"
      "20300701, 0000,  , TS, 60.0N, 60.0W,  45, 1000, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n"
      "20300701, 0600,  , TS, 60.0N, 59.0W,  50,  997, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n";
  auto track = parse_hurdat2(text)[0];
  auto k = track_kinematics(track, cal::parse_instant("2030-07-01T03:00:00"));
  // One degree of longitude in six hours at 60N is half a degree of arc.
  CHECK(k.vx == doctest::Approx(0.5 / 6.0).epsilon(1e-6));
  CHECK(k.vy == doctest::Approx(0.0));
}

TEST_CASE("stationary segments borrow the nearest moving direction") {
  std::string text =
      "AL012030,              ALPHA,      3,\n"
      "20300701, 0000,  , TS, 20.0N, 60.0W,  45, 1000, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n"
      "20300701, 0600,  , TS, 20.0N, 60.0W,  50,  997, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n"
      "20300701, 1200,  , TS, 21.0N, 60.0W,  55,  995, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n";
  auto track = parse_hurdat2(text)[0];
  auto k = track_kinematics(track, cal::parse_instant("2030-07-01T03:00:00"));
  CHECK(k.lat == doctest::Approx(20.0));
  CHECK(k.vy == doctest::Approx(1.0 / 6.0));

  std::string frozen =
      "AL022030,              BRAVO,      2,\n"
      "20300701, 0000,  , TS, 20.0N, 60.0W,  45, 1000, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n"
      "20300701, 0600,  , TS, 20.0N, 60.0W,  50,  997, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,\n";
  auto still = parse_hurdat2(frozen)[0];
  CHECK_THROWS_WITH_AS(track_kinematics(still, cal::parse_instant("2030-07-01T03:00:00")),
                       doctest::Contains("never moves"), Error);
}
