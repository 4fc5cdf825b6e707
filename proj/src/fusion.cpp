#include "landuse/fusion.hpp"

#include <cmath>

namespace landuse {

using json = nlohmann::json;

FusionWeights::FusionWeights(std::map<std::string, double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw DomainError("fusion needs at least one stream weight");
  double total = 0.0;
  for (const auto& [stream, w] : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("fusion weight for '" + stream + "' must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("fusion weights must sum to 1");
}

FusionWeights FusionWeights::equal(std::span<const std::string> streams) {
  std::map<std::string, double> w;
  for (const auto& s : streams) w[s] = 1.0 / static_cast<double>(streams.size());
  return FusionWeights(std::move(w));
}

double FusionWeights::operator[](const std::string& stream) const {
  auto it = weights_.find(stream);
  if (it == weights_.end()) throw DomainError("no fusion weight for stream '" + stream + "'");
  return it->second;
}

ScoreVector fuse(std::span<const ScoreVector> scores, std::span<const double> weights) {
  if (scores.empty() || scores.size() != weights.size()) throw DomainError("one weight per score vector required");
  ScoreVector out = ScoreVector::Zero(scores.front().size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (scores[k].size() != out.size()) throw DomainError("score vectors differ in length");
    out += weights[k] * scores[k];
  }
  return out;
}

ScoreVector fuse(const std::map<std::string, ScoreVector>& scores, const FusionWeights& weights) {
  if (scores.size() != weights.weights().size()) throw DomainError("score streams do not match fusion weights");
  std::vector<ScoreVector> s;
  std::vector<double> w;
  for (const auto& [stream, v] : scores) {
    s.push_back(v);
    w.push_back(weights[stream]);
  }
  return fuse(s, w);
}

ImagePrediction predict_image(std::span<const SoftmaxModel> models, const ImageRecord& record,
                              const FusionWeights& weights) {
  std::map<std::string, ScoreVector> per_stream;
  for (const SoftmaxModel& m : models) {
    auto it = record.features.find(m.stream);
    if (it == record.features.end())
      throw DomainError("record '" + record.id + "' has no features for stream '" + m.stream + "'");
    per_stream[m.stream] = forward(m, it->second);
  }
  ImagePrediction p;
  p.scores = fuse(per_stream, weights);
  p.index = argmax(p.scores);
  return p;
}

namespace {

ClassIndex histogram_majority(const std::map<ClassIndex, std::size_t>& histogram) {
  ClassIndex best = histogram.begin()->first;
  std::size_t votes = histogram.begin()->second;
  for (const auto& [c, n] : histogram)
    if (n > votes) {
      best = c;
      votes = n;
    }
  return best;
}

}  // namespace

std::vector<ParcelPrediction> aggregate_parcels(std::span<const Assignment> assignments,
                                                const std::map<std::string, ClassIndex>& predictions) {
  std::map<std::string, ParcelPrediction> by_parcel;
  for (const Assignment& a : assignments) {
    auto it = predictions.find(a.image_id);
    if (it == predictions.end()) throw DomainError("no prediction for image '" + a.image_id + "'");
    for (const ParcelHit& hit : a.parcels) {
      ParcelPrediction& p = by_parcel[hit.parcel_id];
      p.parcel_id = hit.parcel_id;
      ++p.histogram[it->second];
      ++p.support;
    }
  }
  std::vector<ParcelPrediction> out;
  out.reserve(by_parcel.size());
  for (auto& [id, p] : by_parcel) {
    p.majority = histogram_majority(p.histogram);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ParcelPrediction> aggregate_parcel_scores(std::span<const Assignment> assignments,
                                                      const std::map<std::string, ScoreVector>& scores) {
  std::map<std::string, ClassIndex> votes;
  for (const auto& [id, s] : scores) votes[id] = argmax(s);
  std::vector<ParcelPrediction> out = aggregate_parcels(assignments, votes);

  std::map<std::string, ScoreVector> sums;
  for (const Assignment& a : assignments)
    for (const ParcelHit& hit : a.parcels) {
      const ScoreVector& s = scores.at(a.image_id);
      auto [it, fresh] = sums.try_emplace(hit.parcel_id, ScoreVector::Zero(s.size()));
      if (it->second.size() != s.size()) throw DomainError("score vectors differ in length");
      it->second += s;
    }
  for (ParcelPrediction& p : out) p.majority = argmax(sums.at(p.parcel_id));
  return out;
}

std::string export_map(std::span<const Parcel> parcels, std::span<const ParcelPrediction> predictions,
                       const Taxonomy& taxonomy, Level source, Level target, const json& extra) {
  std::map<std::string, const ParcelPrediction*> by_id;
  for (const ParcelPrediction& p : predictions) by_id[p.parcel_id] = &p;

  json features = json::array();
  for (const Parcel& parcel : parcels) {
    auto it = by_id.find(parcel.id);
    if (it == by_id.end()) continue;
    const ParcelPrediction& pred = *it->second;
    json histogram = json::object();
    for (const auto& [c, n] : pred.histogram) {
      const std::string& name = taxonomy.name(target, taxonomy.roll_up(c, source, target));
      histogram[name] = histogram.value(name, std::size_t{0}) + n;
    }
    json feature = {
        {"type", "Feature"},
        {"id", parcel.id},
        {"geometry", parcel.geometry},
        {"properties",
         {{"parcel", parcel.id},
          {"landuse_pred", taxonomy.name(target, taxonomy.roll_up(pred.majority, source, target))},
          {"support", pred.support},
          {"histogram", std::move(histogram)}}}};
    features.push_back(std::move(feature));
  }
  json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  for (const auto& [key, value] : extra.items()) doc[key] = value;
  return doc.dump(1) + "\n";
}

}  // namespace landuse
