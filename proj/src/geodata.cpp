#include "landuse/geodata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "landuse/error.hpp"

namespace landuse {

using json = nlohmann::json;

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lon) && std::isfinite(p.lat) && p.lon >= -180.0 && p.lon <= 180.0 &&
         p.lat >= -90.0 && p.lat <= 90.0;
}

std::string_view to_string(Containment c) { return c == Containment::Inside ? "inside" : "dilated"; }

namespace {

double cross(const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) {
  return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

bool within_box(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
         p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
  return cross(a, b, p) == 0.0 && within_box(a, b, p);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool segments_intersect(const GeoPoint& p1, const GeoPoint& p2, const GeoPoint& q1, const GeoPoint& q2) {
  const int d1 = sign(cross(q1, q2, p1));
  const int d2 = sign(cross(q1, q2, p2));
  const int d3 = sign(cross(p1, p2, q1));
  const int d4 = sign(cross(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && within_box(q1, q2, p1)) || (d2 == 0 && within_box(q1, q2, p2)) ||
         (d3 == 0 && within_box(p1, p2, q1)) || (d4 == 0 && within_box(p1, p2, q2));
}

// Ring without its closing vertex and without consecutive duplicates.
std::vector<GeoPoint> open_vertices(const Ring& ring) {
  std::vector<GeoPoint> v;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    if (v.empty() || !(v.back() == ring[i])) v.push_back(ring[i]);
  while (v.size() > 1 && v.back() == v.front()) v.pop_back();
  return v;
}

}  // namespace

std::vector<std::string> validate_ring(const Ring& ring) {
  std::vector<std::string> issues;
  for (const auto& p : ring)
    if (!is_valid(p)) {
      issues.emplace_back("coordinate out of range or not finite");
      return issues;
    }
  if (ring.size() < 4 || !(ring.front() == ring.back())) {
    issues.emplace_back("ring is not closed (needs >= 4 positions, first == last)");
    return issues;
  }
  const auto v = open_vertices(ring);
  std::set<std::pair<double, double>> distinct;
  for (const auto& p : v) distinct.emplace(p.lon, p.lat);
  if (distinct.size() < 3) {
    issues.emplace_back("ring has fewer than 3 distinct vertices");
    return issues;
  }
  if (distinct.size() != v.size()) {
    issues.emplace_back("ring is self-intersecting (repeated vertex)");
    return issues;
  }
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const GeoPoint& a = v[i];
    const GeoPoint& b = v[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const GeoPoint& c = v[j];
      const GeoPoint& d = v[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      bool bad;
      if (!adjacent) {
        bad = segments_intersect(a, b, c, d);
      } else if (j == i + 1) {
        // share b == c: overlapping only if they fold back onto each other
        bad = on_segment(b, d, a) || on_segment(a, b, d);
      } else {
        // share a == d
        bad = on_segment(a, b, c) || on_segment(c, a, b);
      }
      if (bad) {
        issues.emplace_back("ring is self-intersecting (edges " + std::to_string(i) + " and " +
                            std::to_string(j) + ")");
        return issues;
      }
    }
  }
  return issues;
}

namespace {

Ring parse_ring(const json& coords) {
  if (!coords.is_array()) throw std::invalid_argument("ring is not an array");
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
      throw std::invalid_argument("position is not [lon, lat]");
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  return ring;
}

std::string feature_id(const json& feature, std::size_t n) {
  auto as_id = [](const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    return v.dump();
  };
  if (feature.contains("id") && !feature["id"].is_null()) return as_id(feature["id"]);
  if (feature.contains("properties") && feature["properties"].is_object() &&
      feature["properties"].contains("id"))
    return as_id(feature["properties"]["id"]);
  return "feature-" + std::to_string(n);
}

}  // namespace

std::vector<Parcel> parse_parcels(std::string_view document, const Taxonomy& taxonomy) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed GeoJSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array())
    throw ValidationError({"document is not a GeoJSON FeatureCollection"});

  std::vector<Parcel> parcels;
  std::vector<std::string> issues;
  std::set<std::string> seen;
  std::size_t n = 0;
  for (const auto& feature : doc["features"]) {
    const std::string fid = feature_id(feature, n++);
    auto fail = [&](const std::string& what) { issues.push_back("feature '" + fid + "': " + what); };
    if (!feature.is_object() || !feature.contains("geometry") || !feature["geometry"].is_object()) {
      fail("missing geometry");
      continue;
    }
    const json& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    if ((type != "Polygon" && type != "MultiPolygon") || !geom.contains("coordinates")) {
      fail("geometry type '" + type + "' is not Polygon or MultiPolygon");
      continue;
    }

    std::vector<ClassIndex> truth;
    bool truth_ok = true;
    if (feature.contains("properties") && feature["properties"].is_object() &&
        feature["properties"].contains("landuse") && !feature["properties"]["landuse"].is_null()) {
      const json& lu = feature["properties"]["landuse"];
      if (!lu.is_array()) {
        fail("property 'landuse' is not an array of class names");
        truth_ok = false;
      } else {
        for (const auto& name : lu) {
          if (!name.is_string()) {
            fail("landuse entry " + name.dump() + " is not a string");
            truth_ok = false;
            continue;
          }
          auto i = taxonomy.find(Level::Fine, name.get<std::string>());
          if (!i) {
            fail("unknown land-use class '" + name.get<std::string>() + "'");
            truth_ok = false;
          } else {
            truth.push_back(*i);
          }
        }
      }
    }
    if (!truth_ok) continue;
    std::sort(truth.begin(), truth.end());
    truth.erase(std::unique(truth.begin(), truth.end()), truth.end());

    std::vector<json> polygons;
    if (type == "Polygon") {
      polygons.push_back(geom["coordinates"]);
    } else if (geom["coordinates"].is_array()) {
      for (const auto& member : geom["coordinates"]) polygons.push_back(member);
    }
    if (polygons.empty()) {
      fail("no polygons");
      continue;
    }
    for (std::size_t k = 0; k < polygons.size(); ++k) {
      Parcel parcel;
      parcel.id = type == "Polygon" ? fid : fid + "#" + std::to_string(k);
      parcel.truth = truth;
      const json& coords = polygons[k];
      bool ok = coords.is_array() && !coords.empty();
      if (!ok) fail("polygon " + std::to_string(k) + " has no rings");
      for (std::size_t r = 0; ok && r < coords.size(); ++r) {
        try {
          parcel.rings.push_back(parse_ring(coords[r]));
        } catch (const std::invalid_argument& e) {
          fail(std::string("ring ") + std::to_string(r) + ": " + e.what());
          ok = false;
          break;
        }
        for (const auto& issue : validate_ring(parcel.rings.back())) {
          fail("polygon " + std::to_string(k) + " ring " + std::to_string(r) + ": " + issue);
          ok = false;
        }
      }
      if (!ok) continue;
      if (!seen.insert(parcel.id).second) {
        fail("duplicate parcel id '" + parcel.id + "'");
        continue;
      }
      parcel.geometry = json{{"type", "Polygon"}, {"coordinates", coords}};
      parcels.push_back(std::move(parcel));
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return parcels;
}

Parcel make_parcel(std::string id, std::vector<Ring> rings, std::vector<ClassIndex> truth) {
  Parcel parcel;
  parcel.id = std::move(id);
  json coords = json::array();
  for (const Ring& ring : rings) {
    json r = json::array();
    for (const GeoPoint& v : ring) r.push_back({v.lon, v.lat});
    coords.push_back(std::move(r));
  }
  parcel.geometry = json{{"type", "Polygon"}, {"coordinates", std::move(coords)}};
  parcel.rings = std::move(rings);
  std::sort(truth.begin(), truth.end());
  truth.erase(std::unique(truth.begin(), truth.end()), truth.end());
  parcel.truth = std::move(truth);
  return parcel;
}

std::string parcels_to_geojson(std::span<const Parcel> parcels, const Taxonomy& taxonomy) {
  json features = json::array();
  for (const Parcel& parcel : parcels) {
    json landuse = json::array();
    for (ClassIndex c : parcel.truth) landuse.push_back(taxonomy.name(Level::Fine, c));
    features.push_back({{"type", "Feature"},
                        {"id", parcel.id},
                        {"geometry", parcel.geometry},
                        {"properties", {{"landuse", std::move(landuse)}}}});
  }
  json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return doc.dump(1) + "\n";
}

bool contains(const Parcel& parcel, const GeoPoint& p) {
  bool inside = false;
  for (const Ring& ring : parcel.rings) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const GeoPoint& a = ring[i];
      const GeoPoint& b = ring[i + 1];
      if (on_segment(a, b, p)) return true;
      if ((a.lat > p.lat) != (b.lat > p.lat)) {
        const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
        if (p.lon < x) inside = !inside;
      }
    }
  }
  return inside;
}

namespace {

struct Box {
  double min_lon = std::numeric_limits<double>::infinity();
  double max_lon = -std::numeric_limits<double>::infinity();
  double min_lat = std::numeric_limits<double>::infinity();
  double max_lat = -std::numeric_limits<double>::infinity();
};

Box bounding_box(const Parcel& parcel) {
  Box box;
  for (const Ring& ring : parcel.rings)
    for (const GeoPoint& v : ring) {
      box.min_lon = std::min(box.min_lon, v.lon);
      box.max_lon = std::max(box.max_lon, v.lon);
      box.min_lat = std::min(box.min_lat, v.lat);
      box.max_lat = std::max(box.max_lat, v.lat);
    }
  return box;
}

}  // namespace

double boundary_distance_m(const Parcel& parcel, const GeoPoint& p) {
  const Box box = bounding_box(parcel);
  const double lon0 = 0.5 * (box.min_lon + box.max_lon);
  const double lat0 = 0.5 * (box.min_lat + box.max_lat);
  const double kx = std::cos(lat0 * M_PI / 180.0) * kMetersPerDegree;
  const double ky = kMetersPerDegree;
  const double px = (p.lon - lon0) * kx;
  const double py = (p.lat - lat0) * ky;

  double best = std::numeric_limits<double>::infinity();
  for (const Ring& ring : parcel.rings) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const double ax = (ring[i].lon - lon0) * kx, ay = (ring[i].lat - lat0) * ky;
      const double bx = (ring[i + 1].lon - lon0) * kx, by = (ring[i + 1].lat - lat0) * ky;
      const double dx = bx - ax, dy = by - ay;
      const double len2 = dx * dx + dy * dy;
      if (len2 == 0.0) continue;
      const double t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
      best = std::min(best, std::hypot(px - (ax + t * dx), py - (ay + t * dy)));
    }
  }
  if (!std::isfinite(best)) throw DomainError("parcel '" + parcel.id + "' has only degenerate edges");
  return best;
}

std::vector<Assignment> assign(std::span<const GeoRecord> records, std::span<const Parcel> parcels,
                               double dilation_m) {
  if (!(dilation_m >= 0.0)) throw DomainError("dilation must be >= 0");

  // Boxes grown by the dilation in each parcel's own local frame; a point outside
  // its grown box cannot be within dilation_m of the boundary.
  std::vector<Box> grown;
  grown.reserve(parcels.size());
  for (const Parcel& parcel : parcels) {
    Box b = bounding_box(parcel);
    const double lat0 = 0.5 * (b.min_lat + b.max_lat);
    const double dlat = dilation_m / kMetersPerDegree * (1.0 + 1e-9);
    const double dlon = dilation_m / (kMetersPerDegree * std::cos(lat0 * M_PI / 180.0)) * (1.0 + 1e-9);
    b.min_lon -= dlon;
    b.max_lon += dlon;
    b.min_lat -= dlat;
    b.max_lat += dlat;
    grown.push_back(b);
  }

  std::vector<Assignment> out;
  for (const GeoRecord& rec : records) {
    Assignment a{rec.image_id, {}};
    std::vector<std::size_t> near;
    for (std::size_t k = 0; k < parcels.size(); ++k) {
      const Box& b = grown[k];
      if (rec.geo.lon < b.min_lon || rec.geo.lon > b.max_lon || rec.geo.lat < b.min_lat || rec.geo.lat > b.max_lat)
        continue;
      near.push_back(k);
      if (contains(parcels[k], rec.geo)) a.parcels.push_back({parcels[k].id, Containment::Inside});
    }
    if (a.parcels.empty() && dilation_m > 0.0) {
      for (std::size_t k : near)
        if (boundary_distance_m(parcels[k], rec.geo) <= dilation_m)
          a.parcels.push_back({parcels[k].id, Containment::Dilated});
    }
    if (a.parcels.empty()) continue;
    std::sort(a.parcels.begin(), a.parcels.end(),
              [](const ParcelHit& x, const ParcelHit& y) { return x.parcel_id < y.parcel_id; });
    out.push_back(std::move(a));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Assignment& x, const Assignment& y) { return x.image_id < y.image_id; });
  return out;
}

std::string assignments_to_jsonl(std::span<const Assignment> assignments) {
  std::string out;
  for (const Assignment& a : assignments)
    for (const ParcelHit& hit : a.parcels) {
      json line = {{"image", a.image_id}, {"parcel", hit.parcel_id}, {"mode", std::string(to_string(hit.mode))}};
      out += line.dump();
      out += '\n';
    }
  return out;
}

std::vector<Assignment> assignments_from_jsonl(std::string_view text) {
  std::map<std::string, std::vector<ParcelHit>> grouped;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    const std::size_t start = pos;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed assignment line: ") + e.what(), start + e.byte);
    }
    if (!obj.is_object() || !obj.contains("image") || !obj.contains("parcel") || !obj["image"].is_string() ||
        !obj["parcel"].is_string())
      throw ParseError("assignment line lacks string 'image'/'parcel'", start);
    const std::string mode = obj.value("mode", "inside");
    if (mode != "inside" && mode != "dilated") throw ParseError("unknown assignment mode '" + mode + "'", start);
    grouped[obj["image"].get<std::string>()].push_back(
        {obj["parcel"].get<std::string>(), mode == "inside" ? Containment::Inside : Containment::Dilated});
  }
  std::vector<Assignment> out;
  for (auto& [image, hits] : grouped) {
    std::sort(hits.begin(), hits.end(), [](const ParcelHit& x, const ParcelHit& y) { return x.parcel_id < y.parcel_id; });
    out.push_back({image, std::move(hits)});
  }
  return out;
}

}  // namespace landuse
