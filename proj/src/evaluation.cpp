#include "landuse/evaluation.hpp"

#include <cstdio>
#include <set>

#include "landuse/error.hpp"

namespace landuse {

using json = nlohmann::json;

double image_accuracy(const PredictionMap& predictions, const PredictionMap& labels) {
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& [id, pred] : predictions) {
    auto it = labels.find(id);
    if (it == labels.end()) throw DomainError("no label for image '" + id + "'");
    hits += pred == it->second;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

ImageClassStats image_class_stats(const PredictionMap& predictions, const PredictionMap& labels,
                                  std::size_t num_classes) {
  ImageClassStats s{std::vector<std::size_t>(num_classes, 0), std::vector<std::size_t>(num_classes, 0)};
  for (const auto& [id, pred] : predictions) {
    auto it = labels.find(id);
    if (it == labels.end()) throw DomainError("no label for image '" + id + "'");
    const auto y = static_cast<std::size_t>(it->second);
    if (y >= num_classes) throw DomainError("label of image '" + id + "' out of range");
    ++s.total[y];
    s.correct[y] += pred == it->second;
  }
  return s;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

MappingReport mapping_metrics(std::span<const Assignment> assignments, const PredictionMap& predictions,
                              Level prediction_level, std::span<const Parcel> parcels, const Taxonomy& taxonomy,
                              Level level, const MappingOptions& options) {
  if (!is_coarser_or_equal(level, prediction_level))
    throw DomainError("predictions at level " + std::string(to_string(prediction_level)) +
                      " cannot be scored at finer level " + std::string(to_string(level)));

  std::map<std::string, std::set<ClassIndex>> truth;  // truthed parcels only
  std::set<std::string> known;
  for (const Parcel& p : parcels) {
    known.insert(p.id);
    if (p.truth.empty()) continue;
    auto& t = truth[p.id];
    for (ClassIndex c : p.truth) t.insert(taxonomy.roll_up(c, level));
  }

  MappingReport r;
  r.level = level;
  for (std::size_t c = 0; c < taxonomy.size(level); ++c) r.per_class[static_cast<ClassIndex>(c)];

  std::map<std::string, std::set<ClassIndex>> predicted_on;  // parcel -> classes any image predicted
  std::map<std::string, std::map<ClassIndex, std::size_t>> votes;
  auto count_mapping = [&](const std::string& parcel, ClassIndex pred) {
    auto t = truth.find(parcel);
    if (t == truth.end() && !options.include_untruthed) return;
    ++r.predictions;
    ClassMetrics& m = r.per_class.at(pred);
    ++m.predicted;
    if (t != truth.end() && t->second.count(pred)) {
      ++r.correct;
      ++m.correct;
    }
  };

  for (const Assignment& a : assignments) {
    auto it = predictions.find(a.image_id);
    if (it == predictions.end()) throw DomainError("no prediction for image '" + a.image_id + "'");
    const ClassIndex pred = taxonomy.roll_up(it->second, prediction_level, level);
    for (const ParcelHit& hit : a.parcels) {
      if (!known.count(hit.parcel_id)) throw DomainError("assignment refers to unknown parcel '" + hit.parcel_id + "'");
      predicted_on[hit.parcel_id].insert(pred);
      if (options.count == CountMode::Pair)
        count_mapping(hit.parcel_id, pred);
      else
        ++votes[hit.parcel_id][pred];
    }
  }
  if (options.count == CountMode::Parcel) {
    for (const auto& [parcel, hist] : votes) {
      ClassIndex best = hist.begin()->first;
      for (const auto& [c, n] : hist)
        if (n > hist.at(best)) best = c;
      count_mapping(parcel, best);
    }
  }

  for (const auto& [parcel, classes] : truth) {
    const auto seen = predicted_on.find(parcel);
    for (ClassIndex c : classes) {
      ClassMetrics& m = r.per_class.at(c);
      ++r.gt_records;
      ++m.support;
      if (seen != predicted_on.end() && seen->second.count(c)) {
        ++r.recalled;
        ++m.recalled;
      }
    }
  }

  r.precision = ratio(r.correct, r.predictions);
  r.recall = ratio(r.recalled, r.gt_records);
  r.f1_micro = harmonic(r.precision, r.recall);
  double f1_sum = 0.0;
  std::size_t supported = 0;
  for (auto& [c, m] : r.per_class) {
    m.precision = ratio(m.correct, m.predicted);
    m.recall = ratio(m.recalled, m.support);
    m.f1 = harmonic(m.precision, m.recall);
    if (m.support > 0) {
      f1_sum += m.f1;
      ++supported;
    }
  }
  r.f1_macro = supported == 0 ? 0.0 : f1_sum / static_cast<double>(supported);
  return r;
}

json report_to_json(const MappingReport& report, const Taxonomy& taxonomy) {
  json per_class = json::object();
  for (const auto& [c, m] : report.per_class)
    per_class[taxonomy.name(report.level, c)] = {{"precision", m.precision}, {"recall", m.recall},
                                                 {"f1", m.f1},               {"support", m.support},
                                                 {"recalled", m.recalled},   {"predicted", m.predicted},
                                                 {"correct", m.correct}};
  return {{"level", std::string(to_string(report.level))},
          {"correct", report.correct},
          {"predictions", report.predictions},
          {"gt_records", report.gt_records},
          {"recalled", report.recalled},
          {"precision", report.precision},
          {"recall", report.recall},
          {"f1_micro", report.f1_micro},
          {"f1_macro", report.f1_macro},
          {"per_class", std::move(per_class)}};
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string per_class_report(const MappingReport& report, const Taxonomy& taxonomy,
                             const std::optional<ImageClassStats>& images) {
  std::string out =
      "class,image_accuracy,image_support,mapping_precision,mapping_recall,mapping_f1,gt_support,predicted\n";
  for (std::size_t c = 0; c < taxonomy.size(report.level); ++c) {
    const auto ci = static_cast<ClassIndex>(c);
    const ClassMetrics& m = report.per_class.at(ci);
    out += csv_field(taxonomy.name(report.level, ci));
    out += ',';
    if (images && c < images->total.size() && images->total[c] > 0)
      out += fixed6(ratio(images->correct[c], images->total[c]));
    out += ',';
    out += images && c < images->total.size() ? std::to_string(images->total[c]) : "";
    out += ',';
    if (m.predicted > 0) out += fixed6(m.precision);
    out += ',';
    if (m.support > 0) out += fixed6(m.recall);
    out += ',';
    if (m.support > 0) out += fixed6(m.f1);
    out += ',' + std::to_string(m.support) + ',' + std::to_string(m.predicted) + '\n';
  }
  return out;
}

}  // namespace landuse
