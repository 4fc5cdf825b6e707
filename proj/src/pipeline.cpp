#include "landuse/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "landuse/synth.hpp"

namespace landuse {

using json = nlohmann::json;
namespace fs = std::filesystem;

Subcommand parse_subcommand(std::string_view name) {
  if (name == "filter") return Subcommand::Filter;
  if (name == "train") return Subcommand::Train;
  if (name == "adapt") return Subcommand::Adapt;
  if (name == "predict") return Subcommand::Predict;
  if (name == "map") return Subcommand::Map;
  if (name == "eval") return Subcommand::Eval;
  if (name == "synth") return Subcommand::Synth;
  if (name == "all") return Subcommand::All;
  throw ConfigError("unknown subcommand '" + std::string(name) + "'");
}

std::string_view to_string(Subcommand s) {
  switch (s) {
    case Subcommand::Filter: return "filter";
    case Subcommand::Train: return "train";
    case Subcommand::Adapt: return "adapt";
    case Subcommand::Predict: return "predict";
    case Subcommand::Map: return "map";
    case Subcommand::Eval: return "eval";
    case Subcommand::Synth: return "synth";
    case Subcommand::All: return "all";
  }
  return "all";
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

Schedule read_schedule(const Config& c, const std::string& prefix, Schedule d, std::uint64_t seed) {
  d.initial_lr = c.get_double(prefix + ".lr", d.initial_lr);
  d.decay_factor = c.get_double(prefix + ".decay_factor", d.decay_factor);
  d.decay_every = static_cast<int>(c.get_int(prefix + ".decay_every", d.decay_every));
  d.total_epochs = static_cast<int>(c.get_int(prefix + ".epochs", d.total_epochs));
  d.batch_size = static_cast<std::size_t>(c.get_int(prefix + ".batch_size", static_cast<long long>(d.batch_size)));
  d.domain_ratio = c.get_double(prefix + ".domain_ratio", d.domain_ratio);
  d.momentum = c.get_double(prefix + ".momentum", d.momentum);
  d.weight_decay = c.get_double(prefix + ".weight_decay", d.weight_decay);
  d.seed = seed;
  d.validate();
  return d;
}

}  // namespace

PipelineConfig PipelineConfig::from(const Config& config, const std::optional<std::string>& out_dir_override) {
  PipelineConfig p;
  p.raw = config;
  p.seed = config.get_u64("seed");
  p.out_dir = out_dir_override ? fs::path(*out_dir_override)
                               : (config.has("out_dir") ? config.path("out_dir") : config.base_dir() / "out");
  p.config_hash = config.hash({"out_dir"});
  if (auto t = config.optional_path("taxonomy")) p.custom_taxonomy = Taxonomy::from_text(detail::read_file(t->string()));
  p.level = parse_level(config.get_string("level", "fine"));
  p.streams = split(config.get_string("streams", "object,scene"), ',');
  if (p.streams.empty()) throw ConfigError("streams must name at least one feature stream");
  p.dilation_m = config.get_double("dilation_m", kDefaultDilationM);
  if (!(p.dilation_m >= 0.0)) throw ConfigError("dilation_m must be >= 0");
  p.train = read_schedule(config, "train", Schedule{}, p.seed);
  p.gate.mode = parse_gate_mode(config.get_string("gate.mode", "hard"));
  p.gate.threshold = config.get_double("gate.threshold", 0.5);
  p.gate.weight_by_p = config.get_bool("gate.weight_by_p", false);
  p.gate.finetune = read_schedule(config, "finetune", GateConfig{}.finetune, p.seed);
  p.gate.validate();
  if (auto w = config.get("fusion.weights"); w && !w->empty()) {
    std::map<std::string, double> weights;
    for (const std::string& item : split(*w, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError("fusion.weights entries must be stream:weight");
      Config tmp;
      tmp.set("w", item.substr(colon + 1));
      weights[item.substr(0, colon)] = tmp.get_double("w", 0.0);
    }
    try {
      p.fusion = FusionWeights(std::move(weights));
    } catch (const DomainError& e) {
      throw ConfigError(std::string("fusion.weights: ") + e.what());
    }
  }
  const std::string models = config.get_string("predict.models", "adapted");
  if (models != "adapted" && models != "base") throw ConfigError("predict.models must be 'adapted' or 'base'");
  p.predict_adapted = models == "adapted";
  p.map_level = parse_level(config.get_string("map.level", std::string(to_string(p.level))));
  const std::string vote = config.get_string("map.vote", "hard");
  if (vote != "hard" && vote != "score_sum") throw ConfigError("map.vote must be 'hard' or 'score_sum'");
  p.vote = vote == "hard" ? VoteMode::Hard : VoteMode::ScoreSum;
  p.eval_level = parse_level(config.get_string("eval.level", std::string(to_string(p.level))));
  p.eval.include_untruthed = config.get_bool("eval.include_untruthed", false);
  const std::string count = config.get_string("eval.count", "pair");
  if (count != "pair" && count != "parcel") throw ConfigError("eval.count must be 'pair' or 'parcel'");
  p.eval.count = count == "pair" ? CountMode::Pair : CountMode::Parcel;
  return p;
}

FusionWeights PipelineConfig::fusion_weights() const {
  if (fusion) return *fusion;
  return FusionWeights::equal(streams);
}

namespace {

constexpr const char* kAssignments = "assignments.jsonl";
constexpr const char* kPredictions = "predictions.jsonl";
constexpr const char* kValPredictions = "val_predictions.jsonl";
constexpr const char* kMap = "map.geojson";
constexpr const char* kReport = "report.json";
constexpr const char* kPerClass = "per_class.csv";
constexpr const char* kTrainTrace = "train_trace.json";
constexpr const char* kAdaptTrace = "adapt_trace.json";
constexpr const char* kProvenance = "provenance.json";

std::string model_file(const std::string& stream, bool adapted) {
  return "model." + stream + (adapted ? ".adapted" : "") + ".lusm";
}

json provenance(const PipelineConfig& cfg, Subcommand s) {
  return {{"subcommand", std::string(to_string(s))}, {"config_hash", cfg.config_hash}, {"seed", cfg.seed}};
}

fs::path require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw ConfigError(what + " '" + p.string() + "' does not exist");
  return p;
}

fs::path input(const PipelineConfig& cfg, const std::string& key) {
  return require_file(cfg.raw.path(key), "config key '" + key + "':");
}

fs::path artifact(const PipelineConfig& cfg, const std::string& name) {
  return require_file(cfg.out_dir / name, "artifact");
}

void record_provenance(const PipelineConfig& cfg, Subcommand s, const std::vector<std::string>& files) {
  const fs::path path = cfg.out_dir / kProvenance;
  json doc = json::object();
  if (fs::is_regular_file(path)) {
    try {
      doc = json::parse(detail::read_file(path.string()));
    } catch (const json::parse_error&) {
      doc = json::object();
    }
  }
  if (!doc.contains("artifacts") || !doc["artifacts"].is_object()) doc["artifacts"] = json::object();
  for (const auto& f : files) doc["artifacts"][f] = provenance(cfg, s);
  detail::write_file(path.string(), doc.dump(1) + "\n");
}

std::vector<Parcel> read_parcels(const PipelineConfig& cfg) {
  return parse_parcels(detail::read_file(input(cfg, "parcels").string()), cfg.taxonomy());
}

Dataset read_training(const PipelineConfig& cfg, const std::string& key) {
  return load_manifest(input(cfg, key), cfg.taxonomy()).relabelled(cfg.taxonomy(), cfg.level);
}

struct PredictionFile {
  Level level = Level::Fine;
  PredictionMap classes;
  std::map<std::string, ScoreVector> scores;
};

PredictionFile read_predictions(const fs::path& path) {
  const std::string text = detail::read_file(path.string());
  PredictionFile out;
  bool first = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    const std::size_t start = pos;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("malformed prediction line: " + std::string(e.what()), start + e.byte);
    }
    const Level level = parse_level(obj.at("level").get<std::string>());
    if (first) out.level = level;
    if (level != out.level) throw LoadError("prediction file mixes taxonomy levels");
    first = false;
    const std::string id = obj.at("image").get<std::string>();
    out.classes[id] = obj.at("index").get<ClassIndex>();
    const auto s = obj.at("scores").get<std::vector<double>>();
    out.scores[id] = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  }
  return out;
}

std::vector<SoftmaxModel> read_models(const PipelineConfig& cfg, bool adapted) {
  std::vector<SoftmaxModel> models;
  for (const std::string& stream : cfg.streams) {
    SoftmaxModel m = load_model(artifact(cfg, model_file(stream, adapted)));
    if (m.stream != stream) throw LoadError("model file for '" + stream + "' holds stream '" + m.stream + "'");
    if (static_cast<std::size_t>(m.classes()) != cfg.taxonomy().size(cfg.level))
      throw ConfigError("model '" + stream + "' has " + std::to_string(m.classes()) + " classes but level " +
                        std::string(to_string(cfg.level)) + " has " + std::to_string(cfg.taxonomy().size(cfg.level)));
    models.push_back(std::move(m));
  }
  return models;
}

void run_filter(const PipelineConfig& cfg) {
  const auto parcels = read_parcels(cfg);
  const Dataset images = load_manifest(input(cfg, "map_manifest"), cfg.taxonomy());
  std::vector<GeoRecord> geo;
  for (const ImageRecord& r : images.records())
    if (r.geo) geo.push_back({r.id, *r.geo});
  const auto assignments = assign(geo, parcels, cfg.dilation_m);
  detail::write_file((cfg.out_dir / kAssignments).string(), assignments_to_jsonl(assignments));
}

json trace_json(const TrainResult& r) { return {{"epoch_loss", r.epoch_loss}, {"val_accuracy", r.val_accuracy}}; }

void run_train(const PipelineConfig& cfg) {
  const Dataset train_ds = read_training(cfg, "train_manifest");
  std::optional<Dataset> val;
  if (cfg.raw.optional_path("val_manifest")) val = read_training(cfg, "val_manifest");
  json traces = json::object();
  for (const std::string& stream : cfg.streams) {
    SoftmaxModel m = init_model(static_cast<Eigen::Index>(cfg.taxonomy().size(cfg.level)),
                                static_cast<Eigen::Index>(train_ds.dim(stream)), stream);
    TrainResult r = train(std::move(m), train_ds, cfg.train, val ? &*val : nullptr);
    save_model(r.model, cfg.out_dir / model_file(stream, false));
    traces[stream] = trace_json(r);
  }
  json doc = {{"provenance", provenance(cfg, Subcommand::Train)}, {"streams", std::move(traces)}};
  detail::write_file((cfg.out_dir / kTrainTrace).string(), doc.dump(1) + "\n");
}

void run_adapt(const PipelineConfig& cfg) {
  const Dataset train_ds = read_training(cfg, "train_manifest");
  std::optional<Dataset> val;
  if (cfg.raw.optional_path("val_manifest")) val = read_training(cfg, "val_manifest");
  json traces = json::object();
  for (SoftmaxModel& m : read_models(cfg, false)) {
    const std::string stream = m.stream;
    TrainResult r = adaptive_finetune(std::move(m), train_ds, cfg.gate, val ? &*val : nullptr);
    save_model(r.model, cfg.out_dir / model_file(stream, true));
    traces[stream] = trace_json(r);
  }
  json doc = {{"provenance", provenance(cfg, Subcommand::Adapt)},
              {"gate", {{"mode", std::string(to_string(cfg.gate.mode))}, {"threshold", cfg.gate.threshold}}},
              {"streams", std::move(traces)}};
  detail::write_file((cfg.out_dir / kAdaptTrace).string(), doc.dump(1) + "\n");
}

void write_predictions(const PipelineConfig& cfg, const std::vector<SoftmaxModel>& models, const Dataset& images,
                       const fs::path& path) {
  const FusionWeights w = cfg.fusion_weights();
  std::string out;
  for (const ImageRecord& r : images.records()) {
    const ImagePrediction p = predict_image(models, r, w);
    json line = {{"image", r.id},
                 {"level", std::string(to_string(cfg.level))},
                 {"class", cfg.taxonomy().name(cfg.level, p.index)},
                 {"index", p.index},
                 {"scores", std::vector<double>(p.scores.data(), p.scores.data() + p.scores.size())}};
    out += line.dump();
    out += '\n';
  }
  detail::write_file(path.string(), out);
}

void run_predict(const PipelineConfig& cfg) {
  const auto models = read_models(cfg, cfg.predict_adapted);
  write_predictions(cfg, models, load_manifest(input(cfg, "map_manifest"), cfg.taxonomy()),
                    cfg.out_dir / kPredictions);
  if (cfg.raw.optional_path("val_manifest"))
    write_predictions(cfg, models, load_manifest(input(cfg, "val_manifest"), cfg.taxonomy()),
                      cfg.out_dir / kValPredictions);
}

void run_map(const PipelineConfig& cfg) {
  const auto parcels = read_parcels(cfg);
  const auto assignments = assignments_from_jsonl(detail::read_file(artifact(cfg, kAssignments).string()));
  const PredictionFile preds = read_predictions(artifact(cfg, kPredictions));
  const auto parcel_preds = cfg.vote == VoteMode::Hard ? aggregate_parcels(assignments, preds.classes)
                                                       : aggregate_parcel_scores(assignments, preds.scores);
  if (!is_coarser_or_equal(cfg.map_level, preds.level))
    throw ConfigError("map.level is finer than the prediction level");
  const std::string doc = export_map(parcels, parcel_preds, cfg.taxonomy(), preds.level, cfg.map_level,
                                     {{"provenance", provenance(cfg, Subcommand::Map)}});
  detail::write_file((cfg.out_dir / kMap).string(), doc);
}

// Labels of a manifest rolled up to `level`, keyed by image id.
PredictionMap labels_at(const Dataset& ds, const Taxonomy& taxonomy, Level level) {
  PredictionMap out;
  for (const ImageRecord& r : ds.records())
    if (r.label) out[r.id] = taxonomy.roll_up(*r.label, level);
  return out;
}

PredictionMap rolled(const PredictionFile& p, const Taxonomy& taxonomy, Level level) {
  PredictionMap out;
  for (const auto& [id, c] : p.classes) out[id] = taxonomy.roll_up(c, p.level, level);
  return out;
}

PredictionMap only_labeled(const PredictionMap& preds, const PredictionMap& labels) {
  PredictionMap out;
  for (const auto& [id, c] : preds)
    if (labels.count(id)) out[id] = c;
  return out;
}

void run_eval(const PipelineConfig& cfg) {
  const Taxonomy& tax = cfg.taxonomy();
  const auto parcels = read_parcels(cfg);
  const auto assignments = assignments_from_jsonl(detail::read_file(artifact(cfg, kAssignments).string()));
  const PredictionFile preds = read_predictions(artifact(cfg, kPredictions));
  const MappingReport report =
      mapping_metrics(assignments, preds.classes, preds.level, parcels, tax, cfg.eval_level, cfg.eval);

  json doc = report_to_json(report, tax);
  doc["provenance"] = provenance(cfg, Subcommand::Eval);

  const Dataset images = load_manifest(input(cfg, "map_manifest"), tax);
  const PredictionMap labels = labels_at(images, tax, cfg.eval_level);
  const PredictionMap labeled = only_labeled(rolled(preds, tax, cfg.eval_level), labels);
  std::optional<ImageClassStats> stats;
  if (!labeled.empty()) {
    doc["image_accuracy"] = image_accuracy(labeled, labels);
    stats = image_class_stats(labeled, labels, tax.size(cfg.eval_level));
  }
  if (cfg.raw.optional_path("val_manifest") && fs::is_regular_file(cfg.out_dir / kValPredictions)) {
    const PredictionFile vp = read_predictions(cfg.out_dir / kValPredictions);
    const Dataset val = load_manifest(input(cfg, "val_manifest"), tax);
    const PredictionMap vl = labels_at(val, tax, cfg.eval_level);
    const PredictionMap vpl = only_labeled(rolled(vp, tax, cfg.eval_level), vl);
    if (!vpl.empty()) doc["validation_accuracy"] = image_accuracy(vpl, vl);
  }
  detail::write_file((cfg.out_dir / kReport).string(), doc.dump(1) + "\n");
  detail::write_file((cfg.out_dir / kPerClass).string(), per_class_report(report, tax, stats));
}

void run_synth(const PipelineConfig& cfg) {
  const Config& c = cfg.raw;
  synth::BlobSpec blobs;
  blobs.classes = static_cast<int>(c.get_int("synth.classes", static_cast<long long>(cfg.taxonomy().size(Level::Fine))));
  if (blobs.classes < 2 || static_cast<std::size_t>(blobs.classes) > cfg.taxonomy().size(Level::Fine))
    throw ConfigError("synth.classes must lie in [2, number of fine classes]");
  blobs.dim = static_cast<int>(c.get_int("synth.dim", 16));
  blobs.separation = c.get_double("synth.separation", 4.0);
  blobs.noise_sd = c.get_double("synth.noise_sd", 1.0);
  blobs.complementary = c.get_bool("synth.complementary", true);
  blobs.domain_shift = c.get_double("synth.domain_shift", 0.5);
  blobs.streams = cfg.streams;
  blobs.seed = cfg.seed;
  const synth::BlobWorld world(blobs);

  const double noise = c.get_double("synth.noise", 0.3);
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("synth.noise must lie in [0, 1]");
  const Dataset train_ds =
      world.sample(static_cast<int>(c.get_int("synth.train_per_class", 60)), noise, cfg.seed + 1, "train");
  const Dataset val_ds = world.sample(static_cast<int>(c.get_int("synth.val_per_class", 20)), 0.0, cfg.seed + 2, "val");

  synth::CitySpec city_spec;
  city_spec.rows = static_cast<int>(c.get_int("synth.rows", 8));
  city_spec.cols = static_cast<int>(c.get_int("synth.cols", 8));
  city_spec.cell_m = c.get_double("synth.cell_m", city_spec.cell_m);
  city_spec.gap_m = c.get_double("synth.gap_m", city_spec.gap_m);
  city_spec.truth_rate = c.get_double("synth.truth_rate", city_spec.truth_rate);
  city_spec.mixed_use_rate = c.get_double("synth.mixed_use_rate", city_spec.mixed_use_rate);
  city_spec.images_per_parcel = static_cast<int>(c.get_int("synth.images_per_parcel", city_spec.images_per_parcel));
  city_spec.geotag_sigma_m = c.get_double("synth.geotag_sigma_m", city_spec.geotag_sigma_m);
  city_spec.stray_images = static_cast<int>(c.get_int("synth.stray_images", 20));
  city_spec.seed = cfg.seed + 3;
  const synth::City city = synth::make_city(city_spec, world);

  const Taxonomy& tax = cfg.taxonomy();
  detail::write_file((cfg.out_dir / "parcels.geojson").string(), parcels_to_geojson(city.parcels, tax));
  write_manifest(cfg.out_dir / "train.jsonl", train_ds, tax);
  write_manifest(cfg.out_dir / "val.jsonl", val_ds, tax);
  write_manifest(cfg.out_dir / "map.jsonl", city.images, tax);

  std::ostringstream conf;
  conf << "# synthetic city fixture\n"
       << "seed = " << cfg.seed << "\n"
       << "streams = " << c.get_string("streams", "object,scene") << "\n"
       << "parcels = parcels.geojson\n"
       << "train_manifest = train.jsonl\n"
       << "val_manifest = val.jsonl\n"
       << "map_manifest = map.jsonl\n"
       << "out_dir = run\n";
  detail::write_file((cfg.out_dir / "pipeline.conf").string(), conf.str());
}

}  // namespace

std::vector<std::string> artifacts_of(Subcommand subcommand, const PipelineConfig& cfg) {
  std::vector<std::string> out;
  switch (subcommand) {
    case Subcommand::Filter: return {kAssignments};
    case Subcommand::Train:
      for (const auto& s : cfg.streams) out.push_back(model_file(s, false));
      out.push_back(kTrainTrace);
      return out;
    case Subcommand::Adapt:
      for (const auto& s : cfg.streams) out.push_back(model_file(s, true));
      out.push_back(kAdaptTrace);
      return out;
    case Subcommand::Predict:
      out.push_back(kPredictions);
      if (cfg.raw.optional_path("val_manifest")) out.push_back(kValPredictions);
      return out;
    case Subcommand::Map: return {kMap};
    case Subcommand::Eval: return {kReport, kPerClass};
    case Subcommand::Synth: return {"parcels.geojson", "train.jsonl", "val.jsonl", "map.jsonl", "pipeline.conf"};
    case Subcommand::All:
      for (Subcommand s : {Subcommand::Filter, Subcommand::Train, Subcommand::Adapt, Subcommand::Predict,
                           Subcommand::Map, Subcommand::Eval})
        for (auto& f : artifacts_of(s, cfg)) out.push_back(std::move(f));
      return out;
  }
  return out;
}

void run(Subcommand subcommand, const PipelineConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.out_dir.string() + "'");
  switch (subcommand) {
    case Subcommand::Filter: run_filter(cfg); break;
    case Subcommand::Train: run_train(cfg); break;
    case Subcommand::Adapt: run_adapt(cfg); break;
    case Subcommand::Predict: run_predict(cfg); break;
    case Subcommand::Map: run_map(cfg); break;
    case Subcommand::Eval: run_eval(cfg); break;
    case Subcommand::Synth: run_synth(cfg); break;
    case Subcommand::All:
      for (Subcommand s : {Subcommand::Filter, Subcommand::Train, Subcommand::Adapt, Subcommand::Predict,
                           Subcommand::Map, Subcommand::Eval})
        run(s, cfg);
      return;
  }
  record_provenance(cfg, subcommand, artifacts_of(subcommand, cfg));
}

}  // namespace landuse
