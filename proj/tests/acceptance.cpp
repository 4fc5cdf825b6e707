// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Each criterion also has a wall-clock budget that counts towards its verdict.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geometry_oracle.hpp"
#include "landuse/adaptive.hpp"
#include "landuse/evaluation.hpp"
#include "landuse/fusion.hpp"
#include "landuse/geodata.hpp"
#include "landuse/pipeline.hpp"
#include "landuse/synth.hpp"
#include "landuse/taxonomy.hpp"

using namespace landuse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("landuse-acceptance-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Eigen::VectorXd random_distribution(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> temp(0.0, 6.0);
  const double t = temp(rng);
  Eigen::VectorXd z(n);
  for (auto& v : z) v = t * g(rng);
  return softmax(z);
}

// ---------------------------------------------------------------------------

Outcome discard_probability_closed_forms() {
  Outcome out;
  for (int n : {2, 5, 16, 45})
    out.require(discard_probability(Eigen::VectorXd::Constant(n, 1.0 / n)) == 1.0, "uniform p = 1");
  Eigen::VectorXd hot = Eigen::VectorXd::Zero(45);
  hot(0) = 1.0;
  out.require(discard_probability(hot) == 0.0, "one-hot p = 0");
  Eigen::VectorXd five(5);
  five << 0.4, 0.15, 0.15, 0.15, 0.15;
  const double p = discard_probability(five);
  out.require(std::abs(p - 0.778597) <= 1e-6, "n=5 example within 1e-6");
  out.note("p(n=5 example) = " + fmt("%.9f", p));

  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<int> classes(2, 45);
  const GateConfig hard;
  int disagreements = 0, kept = 0;
  for (int k = 0; k < 10000; ++k) {
    const int n = classes(rng);
    const Eigen::VectorXd y = random_distribution(rng, n);
    const bool closed_form = y.maxCoeff() > 1.0 / n + std::log(1.5);
    const bool keep = gate(y, hard).weight == 1.0;
    disagreements += closed_form != keep;
    kept += keep;
  }
  out.require(disagreements == 0, "hard-gate closed form");
  out.note("10000 distributions, " + std::to_string(kept) + " kept, " + std::to_string(disagreements) +
           " disagreements");
  return out;
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  Outcome out;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> wdist(0.0, 2.0);
  std::uniform_int_distribution<int> size(2, 12);
  const double h = 1e-6;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = size(rng), d = size(rng), m = size(rng);
    SoftmaxModel model = init_model(n, d, "s");
    model.weights = model.weights.unaryExpr([&](double) { return 0.5 * g(rng); });
    model.bias = model.bias.unaryExpr([&](double) { return 0.5 * g(rng); });
    Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(d, m, [&] { return g(rng); });
    Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(m, [&] { return wdist(rng); });
    w(0) = 0.0;  // a zero-weight sample in every batch
    std::vector<ClassIndex> y(static_cast<std::size_t>(m));
    for (auto& c : y) c = static_cast<ClassIndex>(rng() % static_cast<unsigned>(n));
    const std::span<const ClassIndex> labels(y);

    const LossGrad<double> lg = loss_grad(model, x, labels, w);
    auto loss_at = [&](const SoftmaxModel& mm) { return loss_grad(mm, x, labels, w).loss; };
    Eigen::MatrixXd num_w(n, d);
    Eigen::VectorXd num_b(n);
    for (int c = 0; c < n; ++c) {
      for (int k = 0; k < d; ++k) {
        SoftmaxModel p = model, q = model;
        p.weights(c, k) += h;
        q.weights(c, k) -= h;
        num_w(c, k) = (loss_at(p) - loss_at(q)) / (2 * h);
      }
      SoftmaxModel p = model, q = model;
      p.bias(c) += h;
      q.bias(c) -= h;
      num_b(c) = (loss_at(p) - loss_at(q)) / (2 * h);
    }
    Eigen::VectorXd analytic(n * d + n), numeric(n * d + n);
    analytic << lg.grad_weights.reshaped(), lg.grad_bias;
    numeric << num_w.reshaped(), num_b;
    const double rel = (analytic - numeric).norm() / std::max(analytic.norm() + numeric.norm(), 1e-300) * 2.0;
    worst = std::max(worst, rel);
  }
  out.require(worst < 1e-5, "max relative error < 1e-5");
  out.note("20 triples, max relative error " + fmt("%.2e", worst));
  return out;
}

// ---------------------------------------------------------------------------

constexpr double kLon0 = -122.42, kLat0 = 37.77;
double lon_per_m() { return 1.0 / (kMetersPerDegree * std::cos(kLat0 * M_PI / 180.0)); }
double lat_per_m() { return 1.0 / kMetersPerDegree; }

// Great-circle distance on a sphere of the WGS84 mean radius.
double haversine_m(GeoPoint a, GeoPoint b) {
  const double r = 6371008.8, rad = M_PI / 180.0;
  const double dlat = (b.lat - a.lat) * rad, dlon = (b.lon - a.lon) * rad;
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2 * r * std::asin(std::sqrt(s));
}

Outcome geometry_oracle() {
  Outcome out;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  std::size_t points = 0, mismatches = 0, holed = 0;
  for (int poly = 0; poly < 60; ++poly) {
    const bool convex = poly % 2 == 0;
    const bool with_hole = poly % 3 == 0;
    // Holed polygons use at least 8 vertices with radii >= 0.4, so every edge
    // stays farther than 0.3 from the centre and the hole (radius <= 0.25) fits.
    const int k = with_hole ? 8 + poly % 9 : 3 + poly % 14;
    std::vector<Ring> rings{oracle::star_ring(rng, 0.0, 0.0, k, convex ? 1.0 : 0.4, 1.0, poly % 4 != 0)};
    if (with_hole) {
      rings.push_back(oracle::star_ring(rng, 0.0, 0.0, 3 + poly % 6, 0.05, 0.25, poly % 2 == 0));
      ++holed;
    }
    const Parcel p = make_parcel("p" + std::to_string(poly), rings);
    for (int i = 0; i < 1000; ++i) {
      const GeoPoint pt{u(rng), u(rng)};
      mismatches += contains(p, pt) != oracle::contains(p, pt);
      ++points;
    }
    for (const Ring& r : p.rings)
      for (const GeoPoint& v : r) {
        mismatches += contains(p, v) != oracle::contains(p, v);
        ++points;
      }
  }
  out.require(mismatches == 0, "contains() agrees with winding oracle");
  out.note(std::to_string(points) + " point tests on 60 polygons (" + std::to_string(holed) + " with holes), " +
           std::to_string(mismatches) + " mismatches");

  // monotone in dilation on a grid of parcels with scattered photos
  std::vector<Parcel> parcels;
  std::vector<GeoRecord> records;
  std::uniform_real_distribution<double> v(0.0, 1.0);
  for (int i = 0; i < 16; ++i) {
    const double cx = kLon0 + (i % 4) * 90.0 * lon_per_m(), cy = kLat0 + (i / 4) * 90.0 * lat_per_m();
    const double half = 30.0 + 15.0 * v(rng);
    parcels.push_back(make_parcel("P" + std::to_string(i),
                                  {{{cx - half * lon_per_m(), cy - half * lat_per_m()},
                                    {cx + half * lon_per_m(), cy - half * lat_per_m()},
                                    {cx + half * lon_per_m(), cy + half * lat_per_m()},
                                    {cx - half * lon_per_m(), cy + half * lat_per_m()},
                                    {cx - half * lon_per_m(), cy - half * lat_per_m()}}}));
  }
  for (int i = 0; i < 2000; ++i)
    records.push_back({"i" + std::to_string(i), {kLon0 + (-60 + 390 * v(rng)) * lon_per_m(),
                                                 kLat0 + (-60 + 390 * v(rng)) * lat_per_m()}});
  auto pairs = [&](double d) {
    std::set<std::pair<std::string, std::string>> s;
    for (const auto& a : assign(records, parcels, d))
      for (const auto& hit : a.parcels) s.emplace(a.image_id, hit.parcel_id);
    return s;
  };
  bool monotone = true;
  std::size_t prev_size = 0;
  std::set<std::pair<std::string, std::string>> prev;
  for (double d : {0.0, 1.0, 2.5, 5.0, 7.5, 10.0, 20.0, 40.0}) {
    const auto cur = pairs(d);
    monotone &= std::includes(cur.begin(), cur.end(), prev.begin(), prev.end());
    monotone &= cur.size() >= prev_size;
    prev_size = cur.size();
    prev = cur;
  }
  out.require(monotone, "assign() monotone in dilation");
  out.note("dilation 0..40 m nested, " + std::to_string(prev_size) + " pairs at 40 m");

  // 100 m square; a point 4 m and one 6 m due east of the eastern edge midpoint
  const Parcel sq = make_parcel("sq", {{{kLon0 - 50 * lon_per_m(), kLat0 - 50 * lat_per_m()},
                                        {kLon0 + 50 * lon_per_m(), kLat0 - 50 * lat_per_m()},
                                        {kLon0 + 50 * lon_per_m(), kLat0 + 50 * lat_per_m()},
                                        {kLon0 - 50 * lon_per_m(), kLat0 + 50 * lat_per_m()},
                                        {kLon0 - 50 * lon_per_m(), kLat0 - 50 * lat_per_m()}}});
  const GeoPoint mid{kLon0 + 50 * lon_per_m(), kLat0};
  const GeoPoint four{kLon0 + 54 * lon_per_m(), kLat0}, six{kLon0 + 56 * lon_per_m(), kLat0};
  const double d4 = boundary_distance_m(sq, four), d6 = boundary_distance_m(sq, six);
  out.require(std::abs(d4 - 4.0) <= 0.1 && std::abs(haversine_m(mid, four) - 4.0) <= 0.1, "4 m fixture");
  out.require(std::abs(d6 - 6.0) <= 0.1 && std::abs(haversine_m(mid, six) - 6.0) <= 0.1, "6 m fixture");
  const std::vector<Parcel> one{sq};
  const std::vector<GeoRecord> r4{{"four", four}}, r6{{"six", six}};
  const auto a4 = assign(r4, one, kDefaultDilationM);
  out.require(a4.size() == 1 && a4[0].parcels.size() == 1 && a4[0].parcels[0].mode == Containment::Dilated,
              "4 m point kept as dilated");
  out.require(assign(r6, one, kDefaultDilationM).empty(), "6 m point dropped");
  out.note("fixtures " + fmt("%.4f", d4) + " m / " + fmt("%.4f", d6) + " m (great-circle " +
           fmt("%.4f", haversine_m(mid, four)) + " / " + fmt("%.4f", haversine_m(mid, six)) + ")");
  return out;
}

// ---------------------------------------------------------------------------

Outcome adaptive_direction() {
  Outcome out;
  const Schedule stage1{0.01, 10.0, 5, 12, 256, 0, 0.5, 0.0, 0.0};
  double sum_adapt = 0, sum_plain = 0, sum_base = 0, max_shift = 0, kept = 0, max_score = 0;
  const int seeds = 5;
  for (int s = 1; s <= seeds; ++s) {
    synth::BlobSpec spec;
    spec.classes = 10;
    spec.dim = 16;
    // stage one lands near 90% here and the gate keeps a minority of samples;
    // at separation 3 nothing clears the gate, above 30 there is no headroom
    spec.separation = 10.0;
    spec.noise_sd = 3.0;
    spec.seed = 1000 + s;
    const synth::BlobWorld world(spec);
    const Dataset train_ds = world.sample(200, 0.3, 2000 + s, "train");
    const Dataset val = world.sample(100, 0.0, 3000 + s, "val");

    Schedule first = stage1;
    first.seed = s;
    const SoftmaxModel base = train(init_model(10, 16, "object"), train_ds, first).model;
    GateConfig cfg;  // hard gate at 0.5, 4 epochs at lr 1e-5
    cfg.finetune.seed = s;
    const SoftmaxModel adapted_model = adaptive_finetune(base, train_ds, cfg).model;
    const double adapted = accuracy(adapted_model, val);
    const double plain = accuracy(train(base, train_ds, cfg.finetune).model, val);
    const Eigen::MatrixXd scores = forward_batch(base, train_ds.gather("object", [&] {
      std::vector<std::size_t> all(train_ds.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      return all;
    }()));
    kept += gate_weights(scores, cfg).mean() / seeds;
    max_score = std::max(max_score, scores.maxCoeff());
    max_shift = std::max(max_shift, (adapted_model.weights - base.weights).norm() / base.weights.norm());
    sum_base += accuracy(base, val);
    sum_adapt += adapted;
    sum_plain += plain;
  }
  const double delta = 100.0 * (sum_adapt - sum_plain) / seeds;
  out.require(delta >= 2.0, "adaptive beats plain fine-tuning by >= 2 points");
  out.note("mean clean accuracy: stage one " + fmt("%.2f%%", 100 * sum_base / seeds) + ", adaptive " +
           fmt("%.2f%%", 100 * sum_adapt / seeds) + ", plain " + fmt("%.2f%%", 100 * sum_plain / seeds) +
           ", delta " + fmt("%+.2f", delta) + " points; fine-tuning moves W by at most " +
           fmt("%.1e", max_shift) + " relative; the gate keeps " + fmt("%.1f%%", 100 * kept) +
           " of training samples (largest stage-one score " + fmt("%.3f", max_score) + ")");
  return out;
}

// ---------------------------------------------------------------------------

Outcome fusion_properties() {
  Outcome out;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> wd(0.01, 0.99);
  std::uniform_int_distribution<int> size(2, 45);
  int identity_fail = 0, uniform_fail = 0;
  for (int k = 0; k < 1000; ++k) {
    const int n = size(rng);
    const Eigen::VectorXd s = random_distribution(rng, n);
    const double w = wd(rng);
    const std::vector<ScoreVector> same{s, s}, with_uniform{s, Eigen::VectorXd::Constant(n, 1.0 / n)};
    const std::vector<double> eq{0.5, 0.5}, weights{w, 1.0 - w};
    identity_fail += fuse(same, eq) != s;
    uniform_fail += argmax(fuse(with_uniform, weights)) != argmax(s);
  }
  out.require(identity_fail == 0, "fuse(s,s) = s");
  out.require(uniform_fail == 0, "uniform-stream argmax invariance");
  out.note("1000 vectors: " + std::to_string(identity_fail) + " identity, " + std::to_string(uniform_fail) +
           " argmax violations");

  const std::vector<std::string> streams{"object", "scene"};
  const FusionWeights equal = FusionWeights::equal(streams);
  for (int s = 1; s <= 3; ++s) {
    synth::BlobSpec spec;
    spec.classes = 10;
    spec.complementary = true;
    spec.seed = 500 + s;
    const synth::BlobWorld world(spec);
    const Dataset tr = world.sample(150, 0.0, 600 + s, "tr");
    const Dataset val = world.sample(100, 0.0, 700 + s, "val");
    Schedule sched;
    sched.seed = s;
    std::vector<SoftmaxModel> models;
    for (const auto& st : streams) models.push_back(train(init_model(10, spec.dim, st), tr, sched).model);
    std::size_t correct = 0;
    for (const ImageRecord& r : val.records()) correct += predict_image(models, r, equal).index == *r.label;
    const double fused = static_cast<double>(correct) / static_cast<double>(val.size());
    const double a = accuracy(models[0], val), b = accuracy(models[1], val);
    out.require(fused >= std::max(a, b) - 0.01, "fused >= best single stream - 1 point (seed " + std::to_string(s) + ")");
    out.note("seed " + std::to_string(s) + ": object " + fmt("%.1f%%", 100 * a) + ", scene " +
             fmt("%.1f%%", 100 * b) + ", fused " + fmt("%.1f%%", 100 * fused));
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome rollup_accuracy() {
  Outcome out;
  const Taxonomy& tax = builtin_taxonomy();
  for (int s = 1; s <= 5; ++s) {
    synth::BlobSpec spec;
    spec.classes = 45;
    spec.separation = 1.5 + 0.5 * s;  // from poor to good classifiers
    spec.seed = 40 + s;
    const synth::BlobWorld world(spec);
    const Dataset tr = world.sample(20, 0.2, 50 + s, "tr");
    const Dataset val = world.sample(10, 0.0, 60 + s, "val");
    Schedule sched;
    sched.batch_size = 64;
    sched.seed = s;
    const SoftmaxModel model = train(init_model(45, spec.dim, "object"), tr, sched).model;
    const auto preds = predict_classes(model, val);
    std::array<std::size_t, 3> correct{};
    for (std::size_t i = 0; i < val.size(); ++i)
      for (Level lv : {Level::Fine, Level::Middle, Level::Top})
        correct[static_cast<std::size_t>(lv)] += tax.roll_up(preds[i], lv) == tax.roll_up(*val[i].label, lv);
    out.require(correct[2] >= correct[1] && correct[1] >= correct[0], "top >= middle >= fine");
    const double n = static_cast<double>(val.size());
    out.note("run " + std::to_string(s) + ": " + fmt("%.1f", 100 * correct[0] / n) + "/" +
             fmt("%.1f", 100 * correct[1] / n) + "/" + fmt("%.1f%%", 100 * correct[2] / n));
  }
  return out;
}

// ---------------------------------------------------------------------------

Parcel unit_square(const std::string& id, double x0, std::vector<ClassIndex> truth) {
  return make_parcel(id, {{{x0, 0}, {x0 + 1, 0}, {x0 + 1, 1}, {x0, 1}, {x0, 0}}}, std::move(truth));
}

Outcome metrics_fixture() {
  Outcome out;
  const Taxonomy& tax = builtin_taxonomy();
  auto fine = [&](const char* n) { return tax.index(Level::Fine, n); };
  const std::vector<Parcel> parcels{unit_square("P1", 0, {fine("restaurant"), fine("bar")}),
                                    unit_square("P2", 2, {fine("bank")})};
  const std::vector<Assignment> as{{"i1", {{"P1", Containment::Inside}}},
                                   {"i2", {{"P1", Containment::Inside}}},
                                   {"i3", {{"P2", Containment::Inside}}}};
  const PredictionMap preds{{"i1", fine("restaurant")}, {"i2", fine("school")}, {"i3", fine("bank")}};
  const MappingReport r = mapping_metrics(as, preds, Level::Fine, parcels, tax, Level::Fine);
  out.require(r.precision == 2.0 / 3.0 && r.recall == 2.0 / 3.0 && r.f1_micro == 2.0 / 3.0,
              "hand fixture P = R = F1 = 2/3");
  out.note("fixture P " + fmt("%.17g", r.precision) + " R " + fmt("%.17g", r.recall) + " F1 " +
           fmt("%.17g", r.f1_micro));

  // random synthetic evaluations: city fixtures scored by a noisy oracle classifier
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<ClassIndex> any(0, 44);
  int precision_drops = 0, recall_drops = 0;
  synth::BlobSpec spec;
  spec.classes = 45;
  spec.dim = 2;
  const synth::BlobWorld world(spec);
  for (int e = 0; e < 100; ++e) {
    synth::CitySpec cs;
    cs.rows = 5;
    cs.cols = 5;
    cs.seed = 9000 + static_cast<std::uint64_t>(e);
    const synth::City city = synth::make_city(cs, world);
    std::vector<GeoRecord> geo;
    for (const auto& img : city.images.records()) geo.push_back({img.id, *img.geo});
    const auto assigned = assign(geo, city.parcels, kDefaultDilationM);
    const double hit = u(rng);
    PredictionMap p;
    for (const auto& img : city.images.records()) p[img.id] = u(rng) < hit ? *img.label : any(rng);
    std::array<MappingReport, 3> at;
    for (Level lv : {Level::Fine, Level::Middle, Level::Top})
      at[static_cast<std::size_t>(lv)] = mapping_metrics(assigned, p, Level::Fine, city.parcels, tax, lv);
    for (std::size_t k = 1; k < 3; ++k) {
      precision_drops += at[k].precision < at[k - 1].precision;
      recall_drops += at[k].recall < at[k - 1].recall;
    }
  }
  out.require(precision_drops == 0, "precision non-decreasing under roll-up");
  out.require(recall_drops == 0, "recall non-decreasing under roll-up");
  out.note("100 evaluations x 2 roll-ups: " + std::to_string(precision_drops) + " precision drops, " +
           std::to_string(recall_drops) + " recall drops");
  return out;
}

// ---------------------------------------------------------------------------

Outcome determinism_and_round_trips() {
  Outcome out;
  const Taxonomy& tax = builtin_taxonomy();
  const fs::path dir = scratch("determinism");

  // model save/load
  synth::BlobSpec spec;
  const synth::BlobWorld world(spec);
  const Dataset ds = world.sample(30, 0.1, 3, "m");
  Schedule sched;
  sched.batch_size = 64;
  const SoftmaxModel model = train(init_model(10, spec.dim, "object"), ds, sched).model;
  save_model(model, dir / "m.lusm");
  const SoftmaxModel back = load_model(dir / "m.lusm");
  bool same_forward = back == model;
  for (const ImageRecord& r : ds.records())
    same_forward &= forward(model, r.features.at("object")) == forward(back, r.features.at("object"));
  out.require(same_forward, "model save/load forward-identical");

  // taxonomy text and GeoJSON
  const std::string text = tax.to_text();
  const Taxonomy reparsed = Taxonomy::from_text(text);
  out.require(reparsed == tax && reparsed.to_text() == text, "taxonomy text round trip byte-stable");
  synth::CitySpec cs;
  cs.seed = 4;
  const synth::City city = synth::make_city(cs, world);
  const std::string geo = parcels_to_geojson(city.parcels, tax);
  const std::string geo2 = parcels_to_geojson(parse_parcels(geo, tax), tax);
  out.require(geo == geo2, "GeoJSON round trip byte-stable");

  // whole pipeline twice
  {
    std::ofstream(dir / "synth.conf") << "seed = 11\nout_dir = .\n";
    run(Subcommand::Synth, PipelineConfig::from(Config::load(dir / "synth.conf")));
  }
  std::vector<std::string> files{"provenance.json"};
  PipelineConfig runs[2];
  for (int k = 0; k < 2; ++k) {
    Config c = Config::load(dir / "pipeline.conf");
    c.set("out_dir", "run" + std::to_string(k));
    runs[k] = PipelineConfig::from(c);
    run(Subcommand::All, runs[k]);
  }
  for (Subcommand s : {Subcommand::Filter, Subcommand::Train, Subcommand::Adapt, Subcommand::Predict, Subcommand::Map,
                       Subcommand::Eval})
    for (const auto& f : artifacts_of(s, runs[0])) files.push_back(f);
  std::size_t differing = 0, bytes = 0;
  for (const auto& f : files) {
    const std::string a = read_text(runs[0].out_dir / f), b = read_text(runs[1].out_dir / f);
    differing += a.empty() || a != b;
    bytes += a.size();
  }
  out.require(differing == 0, "`all` byte-identical across runs");
  out.note(std::to_string(files.size()) + " artifacts (" + std::to_string(bytes) + " bytes) compared, " +
           std::to_string(differing) + " differ");
  fs::remove_all(dir);
  return out;
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"discard probability closed forms", 1.0, discard_probability_closed_forms},
      {"gradient correctness", 5.0, gradient_correctness},
      {"geometry oracle", 10.0, geometry_oracle},
      {"adaptive training direction", 60.0, adaptive_direction},
      {"fusion properties", 30.0, fusion_properties},
      {"roll-up accuracy ordering", 5.0, rollup_accuracy},
      {"metrics fixture and roll-up", 5.0, metrics_fixture},
      {"determinism and round trips", 60.0, determinism_and_round_trips},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < c.budget_s, "runtime budget " + fmt("%.0f s", c.budget_s));
    failed += !o.pass;
    std::printf("%s %zu %s: %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", i + 1, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  fs::remove_all(fs::temp_directory_path() / ("landuse-acceptance-" + std::to_string(::getpid())));
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
