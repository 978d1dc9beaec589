#pragma once

#include <string>
#include <vector>

#include "stormlens/calendar.hpp"
#include "stormlens/corpus.hpp"
#include "stormlens/hurdat2.hpp"

namespace stormlens::mapgen {

struct SmoothedSample {
  Instant timestamp{};
  double rate = 0.0;
};

/// Usage rate resampled onto track timestamps: laid out as a daily step
/// function, then averaged over a centered +-12 h window with uniform
/// weights. Windows sticking out past the series span are truncated and
/// renormalized to the covered length.
struct SmoothedSeries {
  std::vector<SmoothedSample> samples;
};

SmoothedSeries smooth_rates(const corpus::UsageRateSeries& daily, const std::vector<Instant>& track_timestamps);

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

/// Attention envelope around a track: at each sample the boundary sits at
/// half-width k * smoothed rate along the track normal, built in the
/// projected plane and stored unprojected.
struct EnvelopePolygon {
  std::vector<GeoPoint> left;   // position + w * normal
  std::vector<GeoPoint> right;  // position - w * normal
  double k = 0.0;               // degrees of half-width per unit usage rate
  double max_rate = 0.0;        // largest smoothed rate along the track
  bool degenerate = false;      // every half-width is zero

  /// Closed ring: left boundary forward, right boundary reversed, first
  /// point repeated at the end. Wound counterclockwise in the (lon, lat)
  /// plane; a zero-area ring is returned as assembled.
  std::vector<GeoPoint> ring() const;
};

/// Builds the envelope for one track. The smoothed series must carry exactly
/// the track's timestamps. Samples where the local velocity is degenerate
/// take their normal from the nearest moving segment; a track that never
/// moves is an error. Requires at least 2 track points and k > 0.
EnvelopePolygon build_envelope(const hurdat2::StormTrack& track, const SmoothedSeries& smoothed, double k);

/// Scale that maps the largest smoothed rate in a rendering batch to
/// `max_half_width_degrees`. A batch with no attention at all gets scale 1;
/// every ring it produces is degenerate regardless of k.
double default_scale(double batch_max_rate, double max_half_width_degrees = 8.0);

/// Noon-UTC interpolated positions, one per UTC day lying fully inside the
/// track's time span.
std::vector<GeoPoint> noon_markers(const hurdat2::StormTrack& track);

/// GeoJSON FeatureCollection with two features per storm: the envelope
/// Polygon and a MultiPoint of noon markers, both carrying properties
/// {name, season, k, max_rate} (the polygon adds `degenerate`).
/// envelopes[i] must belong to tracks[i].
std::string emit_geojson(const std::vector<EnvelopePolygon>& envelopes,
                         const std::vector<hurdat2::StormTrack>& tracks, int season);

}  // namespace stormlens::mapgen
