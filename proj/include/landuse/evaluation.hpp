#ifndef LANDUSE_EVALUATION_HPP
#define LANDUSE_EVALUATION_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "landuse/geodata.hpp"
#include "landuse/taxonomy.hpp"

namespace landuse {

using PredictionMap = std::map<std::string, ClassIndex>;

/// Fraction of predicted images whose class equals their label (0 when empty).
/// Throws DomainError if a predicted image has no label.
double image_accuracy(const PredictionMap& predictions, const PredictionMap& labels);

/// Per-class image accuracy counts, indexed by label class.
struct ImageClassStats {
  std::vector<std::size_t> correct;
  std::vector<std::size_t> total;
};
ImageClassStats image_class_stats(const PredictionMap& predictions, const PredictionMap& labels,
                                  std::size_t num_classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // ground-truth (parcel, class) records
  std::size_t recalled = 0;
  std::size_t predicted = 0;  // mappings predicting this class
  std::size_t correct = 0;
};

struct MappingReport {
  Level level = Level::Fine;
  std::size_t correct = 0;
  std::size_t predictions = 0;
  std::size_t gt_records = 0;
  std::size_t recalled = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1_micro = 0.0;
  double f1_macro = 0.0;
  std::map<ClassIndex, ClassMetrics> per_class;  // every class of the level
};

enum class CountMode {
  Pair,    // one mapping per (image, parcel) assignment
  Parcel,  // one mapping per parcel, using its majority vote
};

struct MappingOptions {
  /// Count mappings on parcels without ground truth as (incorrect) predictions.
  bool include_untruthed = false;
  CountMode count = CountMode::Pair;
};

/**
 * Shapefile-level mapping precision / recall / F1.
 *
 * Predictions are given at `prediction_level` and rolled up to `level`;
 * parcel truth (fine) is rolled up likewise. A mapping is correct when its
 * predicted class is in the parcel's truth set. A ground-truth record is a
 * (parcel, class) pair, recalled when any image on that parcel predicts the
 * class. Throws DomainError if `prediction_level` is coarser than `level` or
 * an assigned image lacks a prediction.
 */
MappingReport mapping_metrics(std::span<const Assignment> assignments, const PredictionMap& predictions,
                              Level prediction_level, std::span<const Parcel> parcels, const Taxonomy& taxonomy,
                              Level level, const MappingOptions& options = {});

/// JSON object mirroring MappingReport; per_class is keyed by class name.
nlohmann::json report_to_json(const MappingReport& report, const Taxonomy& taxonomy);

/**
 * CSV with one row per class of the report's level. Columns:
 * class,image_accuracy,image_support,mapping_precision,mapping_recall,mapping_f1,gt_support,predicted
 * Undefined ratios (zero support) are left empty.
 */
std::string per_class_report(const MappingReport& report, const Taxonomy& taxonomy,
                             const std::optional<ImageClassStats>& images = std::nullopt);

}  // namespace landuse

#endif  // LANDUSE_EVALUATION_HPP
