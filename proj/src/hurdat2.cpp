#include "stormlens/hurdat2.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stormlens/error.hpp"
#include "stormlens/log.hpp"

namespace stormlens::hurdat2 {

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  // Archive lines end with a trailing comma; drop the empty tail field.
  if (out.size() > 1 && out.back().empty()) out.pop_back();
  return out;
}

int parse_int(const std::string& field, const std::string& storm, int line_no,
              const char* what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw Error::at("{} line {}: bad {} '{}'", storm, line_no, what, field);
  return value;
}

std::optional<int> parse_sentinel_int(const std::string& field, int sentinel,
                                      const std::string& storm, int line_no,
                                      const char* what) {
  int value = parse_int(field, storm, line_no, what);
  if (value == sentinel) return std::nullopt;
  if (value < 0)
    throw Error::at("{} line {}: negative {} '{}'", storm, line_no, what, field);
  return value;
}

double parse_angle(const std::string& field, char pos_hemi, char neg_hemi, double limit,
                   const std::string& storm, int line_no, const char* what) {
  if (field.size() < 2)
    throw Error::at("{} line {}: bad {} '{}'", storm, line_no, what, field);
  char hemi = field.back();
  double sign;
  if (hemi == pos_hemi)
    sign = 1.0;
  else if (hemi == neg_hemi)
    sign = -1.0;
  else
    throw Error::at("{} line {}: bad {} hemisphere '{}'", storm, line_no, what, field);
  std::string digits = field.substr(0, field.size() - 1);
  double magnitude = 0.0;
  try {
    size_t used = 0;
    magnitude = std::stod(digits, &used);
    if (used != digits.size()) throw std::invalid_argument(digits);
  } catch (const std::exception&) {
    throw Error::at("{} line {}: bad {} '{}'", storm, line_no, what, field);
  }
  double value = sign * magnitude;
  if (std::abs(value) > limit)
    throw Error::at("{} line {}: {} {} out of range", storm, line_no, what, value);
  return value;
}

RecordId parse_record_id(const std::string& field, const std::string& storm, int line_no) {
  if (field.empty()) return RecordId::none;
  if (field.size() == 1) {
    switch (field[0]) {
      case 'L': return RecordId::L;
      case 'W': return RecordId::W;
      case 'P': return RecordId::P;
      case 'I': return RecordId::I;
      case 'C': return RecordId::C;
      case 'S': return RecordId::S;
      case 'T': return RecordId::T;
      default: break;
    }
  }
  throw Error::at("{} line {}: unknown record identifier '{}'", storm, line_no, field);
}

StormStatus parse_status(const std::string& field, const std::string& storm, int line_no) {
  if (field == "TD") return StormStatus::TD;
  if (field == "TS") return StormStatus::TS;
  if (field == "HU") return StormStatus::HU;
  if (field == "EX") return StormStatus::EX;
  if (field == "SD") return StormStatus::SD;
  if (field == "SS") return StormStatus::SS;
  if (field == "LO") return StormStatus::LO;
  if (field == "WV") return StormStatus::WV;
  if (field == "DB") return StormStatus::DB;
  throw Error::at("{} line {}: unknown status '{}'", storm, line_no, field);
}

Instant parse_timestamp(const std::string& date, const std::string& time,
                        const std::string& storm, int line_no) {
  if (date.size() != 8)
    throw Error::at("{} line {}: bad date '{}'", storm, line_no, date);
  if (time.size() != 4)
    throw Error::at("{} line {}: bad time '{}'", storm, line_no, time);
  std::string iso = fmt::format("{}-{}-{}T{}:{}:00", date.substr(0, 4), date.substr(4, 2),
                                date.substr(6, 2), time.substr(0, 2), time.substr(2, 2));
  try {
    return cal::parse_instant(iso);
  } catch (const Error&) {
    throw Error::at("{} line {}: bad timestamp '{} {}'", storm, line_no, date, time);
  }
}

TrackPoint parse_data_row(const std::vector<std::string>& f, const std::string& storm,
                          int line_no) {
  if (f.size() != 20 && f.size() != 21)
    throw Error::at("{} line {}: expected 20 or 21 fields, found {}", storm, line_no,
                    f.size());
  TrackPoint p;
  p.timestamp = parse_timestamp(f[0], f[1], storm, line_no);
  p.record_id = parse_record_id(f[2], storm, line_no);
  p.status = parse_status(f[3], storm, line_no);
  p.lat = parse_angle(f[4], 'N', 'S', 90.0, storm, line_no, "latitude");
  p.lon = parse_angle(f[5], 'E', 'W', 180.0, storm, line_no, "longitude");
  p.max_wind_kt = parse_sentinel_int(f[6], -99, storm, line_no, "max wind");
  p.min_pressure_mb = parse_sentinel_int(f[7], -999, storm, line_no, "pressure");
  for (size_t i = 0; i < 12; ++i)
    p.wind_radii[i] = parse_sentinel_int(f[8 + i], -999, storm, line_no, "wind radius");
  if (f.size() == 21) {
    p.has_rmw_field = true;
    p.radius_max_wind_nmi =
        parse_sentinel_int(f[20], -999, storm, line_no, "radius of max wind");
  }
  return p;
}

void check_cadence(const StormTrack& track) {
  using namespace std::chrono;
  int irregular = 0;
  for (size_t i = 1; i < track.points.size(); ++i) {
    auto delta = track.points[i].timestamp - track.points[i - 1].timestamp;
    if (delta != hours(3) && delta != hours(6)) ++irregular;
  }
  if (irregular > 0)
    log::warn("{}: {} interval(s) off the 3/6-hour cadence", track.basin_id, irregular);
}

}  // namespace

std::string_view to_string(RecordId id) {
  switch (id) {
    case RecordId::none: return "";
    case RecordId::L: return "L";
    case RecordId::W: return "W";
    case RecordId::P: return "P";
    case RecordId::I: return "I";
    case RecordId::C: return "C";
    case RecordId::S: return "S";
    case RecordId::T: return "T";
  }
  return "";
}

std::string_view to_string(StormStatus st) {
  switch (st) {
    case StormStatus::TD: return "TD";
    case StormStatus::TS: return "TS";
    case StormStatus::HU: return "HU";
    case StormStatus::EX: return "EX";
    case StormStatus::SD: return "SD";
    case StormStatus::SS: return "SS";
    case StormStatus::LO: return "LO";
    case StormStatus::WV: return "WV";
    case StormStatus::DB: return "DB";
  }
  return "";
}

std::vector<StormTrack> parse_hurdat2(std::string_view text) {
  std::vector<StormTrack> tracks;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto header = split_fields(line);
    if (header.size() >= 20)
      throw Error::at("line {}: data row outside of any storm block", line_no);
    if (header.size() != 3)
      throw Error::at("line {}: expected storm header with 3 fields, found {}", line_no,
                      header.size());
    StormTrack track;
    track.basin_id = header[0];
    track.name = header[1];
    if (track.basin_id.size() != 8 ||
        !std::isalpha(static_cast<unsigned char>(track.basin_id[0])) ||
        !std::isalpha(static_cast<unsigned char>(track.basin_id[1])))
      throw Error::at("line {}: bad storm id '{}'", line_no, track.basin_id);
    int declared = parse_int(header[2], track.basin_id, line_no, "row count");
    if (declared <= 0)
      throw Error::at("{} line {}: non-positive row count {}", track.basin_id, line_no,
                      declared);
    track.points.reserve(static_cast<size_t>(declared));
    for (int i = 0; i < declared; ++i) {
      if (!std::getline(in, line))
        throw Error::at("{}: header declares {} rows but the file ends after {}",
                        track.basin_id, declared, i);
      ++line_no;
      auto fields = split_fields(line);
      if (fields.size() < 20)
        throw Error::at("{}: header declares {} rows but row {} (line {}) is not a data row",
                        track.basin_id, declared, i + 1, line_no);
      track.points.push_back(parse_data_row(fields, track.basin_id, line_no));
      if (i > 0 && track.points[i].timestamp <= track.points[i - 1].timestamp)
        throw Error::at("{} line {}: timestamps not strictly increasing", track.basin_id,
                        line_no);
    }
    // A data row here means the block ran past its declared count.
    auto peek = in.tellg();
    while (std::getline(in, line)) {
      if (trim(line).empty()) {
        ++line_no;
        peek = in.tellg();
        continue;
      }
      if (split_fields(line).size() >= 20)
        throw Error::at("{}: more data rows than the declared {}", track.basin_id, declared);
      in.seekg(peek);
      break;
    }
    check_cadence(track);
    tracks.push_back(std::move(track));
  }
  return tracks;
}

namespace {

std::string format_angle(double value, char pos_hemi, char neg_hemi) {
  char hemi = value < 0 ? neg_hemi : pos_hemi;
  return fmt::format("{:.1f}{}", std::abs(value), hemi);
}

std::string format_sentinel(const std::optional<int>& value, int sentinel) {
  return fmt::format("{}", value ? *value : sentinel);
}

}  // namespace

std::string serialize_hurdat2(const std::vector<StormTrack>& tracks) {
  std::string out;
  for (const auto& track : tracks) {
    out += fmt::format("{},{:>19},{:>7},\n", track.basin_id, track.name,
                       track.points.size());
    for (const auto& p : track.points) {
      auto days = std::chrono::floor<std::chrono::days>(p.timestamp);
      std::chrono::year_month_day ymd{days};
      std::chrono::hh_mm_ss hms{p.timestamp - days};
      out += fmt::format("{:04}{:02}{:02}, {:02}{:02},{:>2},{:>3},{:>6},{:>7},{:>4},{:>5}",
                         int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()),
                         hms.hours().count(), hms.minutes().count(),
                         to_string(p.record_id), to_string(p.status),
                         format_angle(p.lat, 'N', 'S'), format_angle(p.lon, 'E', 'W'),
                         format_sentinel(p.max_wind_kt, -99),
                         format_sentinel(p.min_pressure_mb, -999));
      for (const auto& radius : p.wind_radii)
        out += fmt::format(",{:>5}", format_sentinel(radius, -999));
      if (p.has_rmw_field)
        out += fmt::format(",{:>5}", format_sentinel(p.radius_max_wind_nmi, -999));
      out += ",\n";
    }
  }
  return out;
}

std::optional<int> saffir_simpson_category(int max_wind_kt, const SaffirSimpsonScale& scale) {
  if (max_wind_kt < 0) throw Error::at("negative wind speed {}", max_wind_kt);
  std::optional<int> category;
  for (int c = 0; c < 5; ++c)
    if (max_wind_kt >= scale.lower_kt[static_cast<size_t>(c)]) category = c + 1;
  return category;
}

Projection track_projection(const StormTrack& track) {
  if (track.points.empty()) throw Error::at("{}: empty track", track.basin_id);
  double mean_lat = 0.0;
  for (const auto& p : track.points) mean_lat += p.lat;
  mean_lat /= static_cast<double>(track.points.size());
  Projection proj;
  proj.lat_ref = mean_lat;
  proj.cos_ref = std::cos(mean_lat * std::numbers::pi / 180.0);
  return proj;
}

Kinematics track_kinematics(const StormTrack& track, Instant t) {
  if (track.points.empty()) throw Error::at("{}: empty track", track.basin_id);
  const auto& pts = track.points;
  if (t < pts.front().timestamp || t > pts.back().timestamp)
    throw Error::at("{}: time {} outside the track span [{}, {}]", track.basin_id,
                    cal::format_instant(t), cal::format_instant(pts.front().timestamp),
                    cal::format_instant(pts.back().timestamp));
  Projection proj = track_projection(track);

  auto segment_velocity = [&](size_t i) -> std::optional<std::pair<double, double>> {
    auto [x0, y0] = proj.project(pts[i].lat, pts[i].lon);
    auto [x1, y1] = proj.project(pts[i + 1].lat, pts[i + 1].lon);
    if (x0 == x1 && y0 == y1) return std::nullopt;
    double hours = std::chrono::duration<double, std::ratio<3600>>(pts[i + 1].timestamp -
                                                                   pts[i].timestamp)
                       .count();
    return std::make_pair((x1 - x0) / hours, (y1 - y0) / hours);
  };

  size_t seg = 0;
  while (seg + 2 < pts.size() && pts[seg + 1].timestamp < t) ++seg;
  if (pts.size() < 2) throw Error::at("{}: track has a single sample", track.basin_id);

  double span = std::chrono::duration<double>(pts[seg + 1].timestamp - pts[seg].timestamp)
                    .count();
  double frac = std::chrono::duration<double>(t - pts[seg].timestamp).count() / span;
  auto [x0, y0] = proj.project(pts[seg].lat, pts[seg].lon);
  auto [x1, y1] = proj.project(pts[seg + 1].lat, pts[seg + 1].lon);
  double x = x0 + frac * (x1 - x0);
  double y = y0 + frac * (y1 - y0);

  auto velocity = segment_velocity(seg);
  // A stationary segment borrows the nearest moving one's direction.
  for (size_t step = 1; !velocity && step < pts.size(); ++step) {
    if (seg + step + 1 < pts.size()) velocity = segment_velocity(seg + step);
    if (!velocity && seg >= step) velocity = segment_velocity(seg - step);
  }
  if (!velocity) throw Error::at("{}: track never moves", track.basin_id);

  Kinematics k;
  std::tie(k.lat, k.lon) = proj.unproject(x, y);
  k.vx = velocity->first;
  k.vy = velocity->second;
  double speed = std::hypot(k.vx, k.vy);
  k.nx = -k.vy / speed;
  k.ny = k.vx / speed;
  return k;
}

}  // namespace stormlens::hurdat2
