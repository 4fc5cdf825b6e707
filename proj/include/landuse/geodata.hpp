#ifndef LANDUSE_GEODATA_HPP
#define LANDUSE_GEODATA_HPP

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "landuse/taxonomy.hpp"

namespace landuse {

/// Geographic coordinate in degrees.
struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

/// True when both coordinates are finite and within [-180,180] x [-90,90].
bool is_valid(const GeoPoint& p);

/// Closed vertex sequence (first vertex repeated at the end).
using Ring = std::vector<GeoPoint>;

/// A ground polygon with its (possibly empty) set of fine ground-truth classes.
struct Parcel {
  std::string id;
  std::vector<Ring> rings;         // rings[0] is the exterior, the rest are holes
  std::vector<ClassIndex> truth;   // sorted, unique fine class indices
  nlohmann::json geometry;         // GeoJSON Polygon geometry as read from input

  const Ring& exterior() const { return rings.front(); }
};

/// Builds a parcel and its GeoJSON geometry from rings (no validation).
Parcel make_parcel(std::string id, std::vector<Ring> rings, std::vector<ClassIndex> truth = {});

/// FeatureCollection with one Polygon feature per parcel and its truth as "landuse".
std::string parcels_to_geojson(std::span<const Parcel> parcels, const Taxonomy& taxonomy = builtin_taxonomy());

/// Problems found with a single ring; empty when the ring is usable.
std::vector<std::string> validate_ring(const Ring& ring);

/**
 * Parses a GeoJSON FeatureCollection of Polygon / MultiPolygon features.
 *
 * The optional "landuse" property is an array of fine class names. A
 * MultiPolygon with id "P" yields parcels "P#0", "P#1", ... Feature ids come
 * from the feature "id" member, then properties.id, then "feature-<n>".
 *
 * Throws ParseError (with byte offset) on malformed JSON and ValidationError
 * listing every offending feature otherwise.
 */
std::vector<Parcel> parse_parcels(std::string_view document, const Taxonomy& taxonomy = builtin_taxonomy());

/// Even-odd containment; points on any ring edge count as inside.
bool contains(const Parcel& parcel, const GeoPoint& p);

/// Meters from `p` to the nearest ring edge, measured in the parcel's local
/// equirectangular frame centred on its bounding box.
double boundary_distance_m(const Parcel& parcel, const GeoPoint& p);

inline constexpr double kMetersPerDegree = 111320.0;
inline constexpr double kDefaultDilationM = 5.0;

enum class Containment { Inside, Dilated };
std::string_view to_string(Containment c);

struct ParcelHit {
  std::string parcel_id;
  Containment mode = Containment::Inside;
  bool operator==(const ParcelHit&) const = default;
};

/// Parcels one image was assigned to, sorted by parcel id.
struct Assignment {
  std::string image_id;
  std::vector<ParcelHit> parcels;
  bool operator==(const Assignment&) const = default;
};

struct GeoRecord {
  std::string image_id;
  GeoPoint geo;
};

/**
 * Assigns each record to every parcel containing it. A record inside no parcel
 * goes to every parcel whose boundary lies within `dilation_m`; records that
 * match nothing are dropped. Output is sorted by image id.
 */
std::vector<Assignment> assign(std::span<const GeoRecord> records, std::span<const Parcel> parcels,
                               double dilation_m = kDefaultDilationM);

/// One JSON object per (image, parcel) pair: {"image","parcel","mode"}.
std::string assignments_to_jsonl(std::span<const Assignment> assignments);
std::vector<Assignment> assignments_from_jsonl(std::string_view text);

}  // namespace landuse

#endif  // LANDUSE_GEODATA_HPP
