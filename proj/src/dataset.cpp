#include "landuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "binary_io.hpp"
#include "landuse/error.hpp"

namespace landuse {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Domain d) { return d == Domain::A ? "A" : "B"; }

Dataset::Dataset(std::vector<ImageRecord> records) : records_(std::move(records)) {
  if (records_.empty()) return;
  for (const auto& [stream, v] : records_.front().features) dims_[stream] = static_cast<std::size_t>(v.size());
  for (const ImageRecord& r : records_) {
    if (r.features.size() != dims_.size())
      throw LoadError("record '" + r.id + "' has a different set of feature streams");
    for (const auto& [stream, v] : r.features) {
      auto it = dims_.find(stream);
      if (it == dims_.end()) throw LoadError("record '" + r.id + "' has unexpected stream '" + stream + "'");
      if (static_cast<std::size_t>(v.size()) != it->second)
        throw LoadError("record '" + r.id + "' has " + std::to_string(v.size()) + "-dim '" + stream +
                        "' features, expected " + std::to_string(it->second));
      if (!v.allFinite()) throw LoadError("record '" + r.id + "' has non-finite '" + stream + "' features");
    }
  }
}

std::size_t Dataset::dim(const std::string& stream) const {
  auto it = dims_.find(stream);
  if (it == dims_.end()) throw DomainError("dataset has no stream '" + stream + "'");
  return it->second;
}

Eigen::MatrixXd Dataset::gather(const std::string& stream, std::span<const std::size_t> indices) const {
  const auto d = static_cast<Eigen::Index>(dim(stream));
  Eigen::MatrixXd x(d, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j)
    x.col(static_cast<Eigen::Index>(j)) = records_.at(indices[j]).features.at(stream);
  return x;
}

std::vector<ClassIndex> Dataset::labels(std::span<const std::size_t> indices) const {
  std::vector<ClassIndex> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const ImageRecord& r = records_.at(i);
    if (!r.label) throw DomainError("record '" + r.id + "' has no label");
    out.push_back(*r.label);
  }
  return out;
}

Dataset Dataset::relabelled(const Taxonomy& taxonomy, Level target) const {
  std::vector<ImageRecord> copy = records_;
  for (ImageRecord& r : copy)
    if (r.label) r.label = taxonomy.roll_up(*r.label, target);
  return Dataset(std::move(copy));
}

FeatureTable read_feature_sidecar(const fs::path& path) {
  const std::string data = detail::read_file(path.string());
  detail::Reader in(data, "feature sidecar '" + path.string() + "'");
  if (in.bytes(5) != "LUFV1") throw LoadError("feature sidecar '" + path.string() + "': bad magic, expected LUFV1");
  FeatureTable t;
  const auto count = in.get<std::uint32_t>();
  t.dim = in.get<std::uint32_t>();
  t.ids.reserve(count);
  t.rows.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = in.get<std::uint32_t>();
    t.ids.emplace_back(in.bytes(len));
    std::vector<float> row(t.dim);
    for (auto& v : row) v = in.get<float>();
    t.rows.push_back(std::move(row));
  }
  if (!in.at_end()) throw LoadError("feature sidecar '" + path.string() + "': trailing bytes");
  return t;
}

void write_feature_sidecar(const fs::path& path, const FeatureTable& table) {
  std::string out = "LUFV1";
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.ids.size()));
  detail::put_le<std::uint32_t>(out, table.dim);
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    if (table.rows[i].size() != table.dim) throw DomainError("sidecar row '" + table.ids[i] + "' has wrong length");
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.ids[i].size()));
    out += table.ids[i];
    for (float v : table.rows[i]) detail::put_le<float>(out, v);
  }
  detail::write_file(path.string(), out);
}

namespace {

Domain parse_domain(const json& v, const std::string& id) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "A" || s == "a" || s == "google") return Domain::A;
    if (s == "B" || s == "b" || s == "flickr") return Domain::B;
  }
  throw LoadError("record '" + id + "': unknown domain " + v.dump());
}

}  // namespace

Dataset load_manifest(const fs::path& path, const Taxonomy& taxonomy) {
  const std::string text = detail::read_file(path.string());
  std::map<fs::path, std::map<std::string, Eigen::VectorXd>> sidecars;
  std::vector<ImageRecord> records;

  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    const std::size_t start = pos;
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      if (line.find("NaN") != std::string_view::npos || line.find("Infinity") != std::string_view::npos)
        throw LoadError("manifest '" + path.string() + "' line " + std::to_string(line_no) +
                        ": non-finite feature value");
      throw ParseError("manifest '" + path.string() + "' line " + std::to_string(line_no) + ": " + e.what(),
                       start + e.byte);
    } catch (const json::out_of_range&) {
      throw LoadError("manifest '" + path.string() + "' line " + std::to_string(line_no) +
                      ": number out of double range");
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string())
      throw LoadError("manifest line " + std::to_string(line_no) + ": missing string 'id'");

    ImageRecord r;
    r.id = obj["id"].get<std::string>();
    r.domain = parse_domain(obj.value("domain", json("A")), r.id);
    if (obj.contains("lon") || obj.contains("lat")) {
      if (!obj.contains("lon") || !obj.contains("lat") || !obj["lon"].is_number() || !obj["lat"].is_number())
        throw LoadError("record '" + r.id + "': geotag needs numeric 'lon' and 'lat'");
      GeoPoint g{obj["lon"].get<double>(), obj["lat"].get<double>()};
      if (!is_valid(g)) throw LoadError("record '" + r.id + "': geotag out of range");
      r.geo = g;
    }
    if (obj.contains("label") && !obj["label"].is_null()) {
      if (!obj["label"].is_string()) throw LoadError("record '" + r.id + "': label must be a class name");
      auto idx = taxonomy.find(Level::Fine, obj["label"].get<std::string>());
      if (!idx) throw LoadError("record '" + r.id + "': unknown class '" + obj["label"].get<std::string>() + "'");
      r.label = *idx;
    }
    if (obj.contains("features")) {
      if (!obj["features"].is_object()) throw LoadError("record '" + r.id + "': 'features' must be an object");
      for (const auto& [stream, values] : obj["features"].items()) {
        if (!values.is_array()) throw LoadError("record '" + r.id + "': stream '" + stream + "' is not an array");
        Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
        for (std::size_t k = 0; k < values.size(); ++k) {
          // NaN/Inf are dumped as null by JSON writers
          if (!values[k].is_number())
            throw LoadError("record '" + r.id + "': non-finite or non-numeric feature in '" + stream + "'");
          v(static_cast<Eigen::Index>(k)) = values[k].get<double>();
        }
        r.features.emplace(stream, std::move(v));
      }
    }
    if (obj.contains("features_ref")) {
      if (!obj["features_ref"].is_object())
        throw LoadError("record '" + r.id + "': 'features_ref' must map stream names to sidecar paths");
      for (const auto& [stream, ref] : obj["features_ref"].items()) {
        if (!ref.is_string()) throw LoadError("record '" + r.id + "': sidecar path for '" + stream + "' is not a string");
        fs::path sidecar = path.parent_path() / ref.get<std::string>();
        auto it = sidecars.find(sidecar);
        if (it == sidecars.end()) {
          FeatureTable t = read_feature_sidecar(sidecar);
          std::map<std::string, Eigen::VectorXd> table;
          for (std::size_t k = 0; k < t.ids.size(); ++k)
            table[t.ids[k]] = Eigen::Map<const Eigen::VectorXf>(t.rows[k].data(), t.dim).cast<double>();
          it = sidecars.emplace(sidecar, std::move(table)).first;
        }
        auto row = it->second.find(r.id);
        if (row == it->second.end())
          throw LoadError("record '" + r.id + "' not found in sidecar '" + sidecar.string() + "'");
        r.features[stream] = row->second;
      }
    }
    if (r.features.empty()) throw LoadError("record '" + r.id + "' has no features");
    records.push_back(std::move(r));
  }
  return Dataset(std::move(records));
}

void write_manifest(const fs::path& path, const Dataset& dataset, const Taxonomy& taxonomy) {
  std::string out;
  for (const ImageRecord& r : dataset.records()) {
    json obj;
    obj["id"] = r.id;
    obj["domain"] = std::string(to_string(r.domain));
    if (r.geo) {
      obj["lon"] = r.geo->lon;
      obj["lat"] = r.geo->lat;
    }
    if (r.label) obj["label"] = taxonomy.name(Level::Fine, *r.label);
    json feats = json::object();
    for (const auto& [stream, v] : r.features) feats[stream] = std::vector<double>(v.data(), v.data() + v.size());
    obj["features"] = std::move(feats);
    out += obj.dump();
    out += '\n';
  }
  detail::write_file(path.string(), out);
}

std::vector<Batch> stratified_batches(const Dataset& dataset, std::size_t batch_size, double domain_ratio,
                                      std::uint64_t seed) {
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
  if (!(domain_ratio >= 0.0 && domain_ratio <= 1.0)) throw ConfigError("domain ratio must lie in [0, 1]");

  std::vector<std::size_t> pools[2];
  for (std::size_t i = 0; i < dataset.size(); ++i)
    pools[dataset[i].domain == Domain::A ? 0 : 1].push_back(i);

  const auto quota_a = static_cast<std::size_t>(std::llround(static_cast<double>(batch_size) * domain_ratio));
  const std::size_t quota[2] = {quota_a, batch_size - quota_a};
  for (int d = 0; d < 2; ++d)
    if (quota[d] > 0 && pools[d].empty())
      throw ConfigError(std::string("domain ") + (d == 0 ? "A" : "B") + " is empty but the batch ratio requires " +
                        std::to_string(quota[d]) + " records per batch from it");

  std::size_t num_batches = 0;
  for (int d = 0; d < 2; ++d)
    if (quota[d] > 0) num_batches = std::max(num_batches, pools[d].size() / quota[d]);

  std::mt19937_64 rng(seed);
  for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng);

  std::size_t cursor[2] = {0, 0};
  std::vector<Batch> batches(num_batches);
  for (Batch& batch : batches) {
    batch.records.reserve(batch_size);
    for (int d = 0; d < 2; ++d) {
      for (std::size_t k = 0; k < quota[d]; ++k) {
        if (cursor[d] == pools[d].size()) {
          std::shuffle(pools[d].begin(), pools[d].end(), rng);
          cursor[d] = 0;
        }
        batch.records.push_back(pools[d][cursor[d]++]);
      }
    }
  }
  return batches;
}

}  // namespace landuse
