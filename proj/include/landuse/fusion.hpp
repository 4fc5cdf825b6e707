#ifndef LANDUSE_FUSION_HPP
#define LANDUSE_FUSION_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "landuse/classifier.hpp"
#include "landuse/geodata.hpp"

namespace landuse {

/// Non-negative per-stream weights summing to one.
class FusionWeights {
 public:
  /// Throws DomainError if any weight is negative or the sum is not 1 (+-1e-9).
  explicit FusionWeights(std::map<std::string, double> weights);
  static FusionWeights equal(std::span<const std::string> streams);

  const std::map<std::string, double>& weights() const { return weights_; }
  double operator[](const std::string& stream) const;

 private:
  std::map<std::string, double> weights_;
};

/// Convex combination sum_k w_k s_k of same-length score vectors.
ScoreVector fuse(std::span<const ScoreVector> scores, std::span<const double> weights);
/// Same, keyed by stream; the stream sets of `scores` and `weights` must match.
ScoreVector fuse(const std::map<std::string, ScoreVector>& scores, const FusionWeights& weights);

struct ImagePrediction {
  ClassIndex index = 0;
  ScoreVector scores;
};

/// Fused scores of every model on the record; prediction is the argmax (lowest index on ties).
ImagePrediction predict_image(std::span<const SoftmaxModel> models, const ImageRecord& record,
                              const FusionWeights& weights);

struct ParcelPrediction {
  std::string parcel_id;
  std::map<ClassIndex, std::size_t> histogram;  // class -> image votes
  ClassIndex majority = 0;
  std::size_t support = 0;
};

/// Majority vote of per-image predictions inside each parcel, sorted by parcel id.
/// Ties go to the lowest class index. Throws DomainError for an image without a prediction.
std::vector<ParcelPrediction> aggregate_parcels(std::span<const Assignment> assignments,
                                                const std::map<std::string, ClassIndex>& predictions);

/// Variant where the majority is the argmax of summed image scores; the
/// histogram still counts argmax votes.
std::vector<ParcelPrediction> aggregate_parcel_scores(std::span<const Assignment> assignments,
                                                      const std::map<std::string, ScoreVector>& scores);

/**
 * GeoJSON FeatureCollection with one feature per predicted parcel. Class
 * indices are given at `source` level and reported at `target` level.
 * Properties: parcel, landuse_pred, support, histogram (name -> votes).
 * `extra` members, if any, are added to the top-level object.
 */
std::string export_map(std::span<const Parcel> parcels, std::span<const ParcelPrediction> predictions,
                       const Taxonomy& taxonomy, Level source, Level target,
                       const nlohmann::json& extra = nlohmann::json::object());

}  // namespace landuse

#endif  // LANDUSE_FUSION_HPP
