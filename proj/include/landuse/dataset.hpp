#ifndef LANDUSE_DATASET_HPP
#define LANDUSE_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "landuse/geodata.hpp"
#include "landuse/taxonomy.hpp"

namespace landuse {

/// Source domain of an image. A is the clean web-search domain (Google images
/// in the original setting), B the user-photo domain (Flickr).
enum class Domain { A, B };
std::string_view to_string(Domain d);

/// One image: precomputed per-stream feature vectors plus optional geotag and label.
struct ImageRecord {
  std::string id;
  std::optional<GeoPoint> geo;
  Domain domain = Domain::A;
  std::optional<ClassIndex> label;  // at the dataset's label level (fine unless relabelled)
  std::map<std::string, Eigen::VectorXd> features;
};

/// Immutable, validated collection of records with a fixed dimension per stream.
class Dataset {
 public:
  Dataset() = default;
  /// Throws LoadError if any record has non-finite features, a stream missing or
  /// a dimension differing from the rest.
  explicit Dataset(std::vector<ImageRecord> records);

  const std::vector<ImageRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const ImageRecord& operator[](std::size_t i) const { return records_[i]; }
  /// Stream name -> dimension.
  const std::map<std::string, std::size_t>& dims() const { return dims_; }
  std::size_t dim(const std::string& stream) const;

  /// Stacks features of `indices` for `stream` as columns (D x m).
  Eigen::MatrixXd gather(const std::string& stream, std::span<const std::size_t> indices) const;
  /// Labels of `indices`; throws DomainError on an unlabeled record.
  std::vector<ClassIndex> labels(std::span<const std::size_t> indices) const;

  /// Copy with every label rolled up from fine to `target`.
  Dataset relabelled(const Taxonomy& taxonomy, Level target) const;

 private:
  std::vector<ImageRecord> records_;
  std::map<std::string, std::size_t> dims_;
};

/**
 * Reads a JSON-lines manifest. Each line is an object with "id", "domain"
 * ("A"/"B", or "google"/"flickr"), optional "lon"/"lat", optional "label"
 * (fine class name), and either inline "features": {stream: [numbers]} or
 * "features_ref": {stream: sidecar path relative to the manifest}.
 */
Dataset load_manifest(const std::filesystem::path& path, const Taxonomy& taxonomy = builtin_taxonomy());

/// Writes records with inline features; labels are written as fine class names.
void write_manifest(const std::filesystem::path& path, const Dataset& dataset,
                    const Taxonomy& taxonomy = builtin_taxonomy());

/// Sidecar feature file: "LUFV1", u32 count, u32 D, then (u32 id length, id, D x f32) per record.
struct FeatureTable {
  std::uint32_t dim = 0;
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;
};
FeatureTable read_feature_sidecar(const std::filesystem::path& path);
void write_feature_sidecar(const std::filesystem::path& path, const FeatureTable& table);

/// Record indices forming one training batch.
struct Batch {
  std::vector<std::size_t> records;
  std::size_t size() const { return records.size(); }
};

/**
 * One epoch of domain-stratified batches. Each batch holds
 * round(batch_size * domain_ratio) domain-A records and the rest domain-B.
 * The domain that supplies the most full batches is consumed exactly once in a
 * seeded order; the other recycles with a fresh shuffle when exhausted. The
 * trailing partial batch is dropped.
 */
std::vector<Batch> stratified_batches(const Dataset& dataset, std::size_t batch_size, double domain_ratio,
                                      std::uint64_t seed);

}  // namespace landuse

#endif  // LANDUSE_DATASET_HPP
