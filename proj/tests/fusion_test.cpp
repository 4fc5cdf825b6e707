#include "landuse/fusion.hpp"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "landuse/geodata.hpp"

namespace landuse {
namespace {

const Taxonomy& tax() { return builtin_taxonomy(); }
ClassIndex fine(const char* name) { return tax().index(Level::Fine, name); }

ScoreVector random_scores(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 2.0);
  Eigen::VectorXd z(n);
  for (auto& v : z) v = g(rng);
  return softmax(z);
}

Parcel unit_square(const std::string& id, double x0, std::vector<ClassIndex> truth = {}) {
  return make_parcel(id, {{{x0, 0}, {x0 + 1, 0}, {x0 + 1, 1}, {x0, 1}, {x0, 0}}}, std::move(truth));
}

Assignment assigned(const std::string& image, std::vector<std::string> parcels) {
  Assignment a{image, {}};
  for (auto& p : parcels) a.parcels.push_back({p, Containment::Inside});
  return a;
}

TEST(FusionWeights, Validation) {
  EXPECT_THROW(FusionWeights({{"a", 0.7}, {"b", 0.4}}), DomainError);
  EXPECT_THROW(FusionWeights({{"a", 1.2}, {"b", -0.2}}), DomainError);
  EXPECT_THROW(FusionWeights({}), DomainError);
  const std::vector<std::string> s{"object", "scene"};
  const FusionWeights eq = FusionWeights::equal(s);
  EXPECT_EQ(eq["object"], 0.5);
  EXPECT_THROW(eq["depth"], DomainError);
}

TEST(Fuse, Examples) {
  const std::vector<ScoreVector> two{Eigen::Vector2d(0.6, 0.4), Eigen::Vector2d(0.2, 0.8)};
  const std::vector<double> eq{0.5, 0.5};
  const ScoreVector f = fuse(two, eq);
  EXPECT_NEAR(f(0), 0.4, 1e-15);
  EXPECT_NEAR(f(1), 0.6, 1e-15);

  const std::vector<ScoreVector> split{Eigen::Vector2d(0.55, 0.45), Eigen::Vector2d(0.1, 0.9)};
  const ScoreVector g = fuse(split, eq);
  EXPECT_NEAR(g(0), 0.325, 1e-15);
  EXPECT_NEAR(g(1), 0.675, 1e-15);
  EXPECT_EQ(argmax(g), 1);

  const std::vector<ScoreVector> bad{Eigen::Vector2d(0.5, 0.5), Eigen::Vector3d(0.2, 0.3, 0.5)};
  EXPECT_THROW(fuse(bad, eq), DomainError);
  const std::map<std::string, ScoreVector> keyed{{"object", two[0]}};
  const std::vector<std::string> streams{"object", "scene"};
  EXPECT_THROW(fuse(keyed, FusionWeights::equal(streams)), DomainError);
}

TEST(Fuse, Properties) {
  std::mt19937_64 rng(1);
  const std::vector<double> eq{0.5, 0.5};
  const std::vector<double> third{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (int k = 0; k < 500; ++k) {
    const ScoreVector a = random_scores(rng, 16), b = random_scores(rng, 16), c = random_scores(rng, 16);
    const std::vector<ScoreVector> same{a, a};
    EXPECT_EQ(fuse(same, eq), a);
    const std::vector<ScoreVector> ab{a, b}, ba{b, a};
    const ScoreVector f = fuse(ab, eq);
    EXPECT_EQ(f, fuse(ba, eq));
    EXPECT_TRUE(is_distribution(f));
    const std::vector<ScoreVector> abc{a, b, c}, cab{c, a, b};
    EXPECT_LT((fuse(abc, third) - fuse(cab, third)).cwiseAbs().maxCoeff(), 1e-15);
    const std::vector<ScoreVector> au{a, Eigen::VectorXd::Constant(16, 1.0 / 16)};
    EXPECT_EQ(argmax(fuse(au, eq)), argmax(a));
  }
}

TEST(PredictImage, ZeroAndSingleTrainedStream) {
  std::vector<SoftmaxModel> models{init_model(4, 3, "object"), init_model(4, 2, "scene")};
  const std::vector<std::string> streams{"object", "scene"};
  const FusionWeights w = FusionWeights::equal(streams);
  ImageRecord r{"i", std::nullopt, Domain::B, std::nullopt,
                {{"object", Eigen::Vector3d(1, 2, 3)}, {"scene", Eigen::Vector2d(-1, 1)}}};
  ImagePrediction p = predict_image(models, r, w);
  EXPECT_EQ(p.index, 0);
  EXPECT_LT((p.scores.array() - 0.25).abs().maxCoeff(), 1e-15);

  models[1].weights.setRandom();
  models[1].bias.setRandom();
  p = predict_image(models, r, w);
  EXPECT_EQ(p.index, argmax(forward(models[1], r.features.at("scene"))));

  r.features.erase("scene");
  EXPECT_THROW(predict_image(models, r, w), DomainError);
}

TEST(AggregateParcels, MajorityAndTies) {
  const std::vector<Assignment> as{assigned("a", {"P1"}), assigned("b", {"P1"}), assigned("c", {"P1"}),
                                   assigned("d", {"P1"}), assigned("e", {"P2"}), assigned("f", {"P2"}),
                                   assigned("g", {"P2"}), assigned("h", {"P2"})};
  const ClassIndex restaurant = fine("restaurant"), bar = fine("bar");
  const std::map<std::string, ClassIndex> preds{{"a", restaurant}, {"b", restaurant}, {"c", restaurant}, {"d", bar},
                            {"e", bar},        {"f", restaurant}, {"g", bar},        {"h", restaurant}};
  const auto out = aggregate_parcels(as, preds);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].parcel_id, "P1");
  EXPECT_EQ(out[0].majority, restaurant);
  EXPECT_EQ(out[0].support, 4u);
  EXPECT_EQ(out[0].histogram.at(bar), 1u);
  EXPECT_EQ(out[1].majority, std::min(restaurant, bar));

  const std::map<std::string, ClassIndex> missing{{"a", 0}};
  try {
    aggregate_parcels(as, missing);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
}

TEST(AggregateParcels, MultiAssignmentAndOrder) {
  std::vector<Assignment> as{assigned("x", {"P1", "P2"}), assigned("y", {"P2"}), assigned("z", {})};
  const std::map<std::string, ClassIndex> preds{{"x", 3}, {"y", 5}, {"z", 7}};
  auto out = aggregate_parcels(as, preds);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].histogram, (std::map<ClassIndex, std::size_t>{{3, 1}}));
  EXPECT_EQ(out[1].histogram, (std::map<ClassIndex, std::size_t>{{3, 1}, {5, 1}}));
  std::size_t support = 0;
  for (const auto& p : out) support += p.support;
  EXPECT_EQ(support, 3u);

  std::mt19937_64 rng(2);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(as.begin(), as.end(), rng);
    const auto again = aggregate_parcels(as, preds);
    ASSERT_EQ(again.size(), out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_EQ(again[i].parcel_id, out[i].parcel_id);
      EXPECT_EQ(again[i].histogram, out[i].histogram);
      EXPECT_EQ(again[i].majority, out[i].majority);
    }
  }
}

TEST(AggregateParcels, ScoreSum) {
  // two weak votes for class 0 lose to one confident vote for class 1
  const std::vector<Assignment> as{assigned("a", {"P"}), assigned("b", {"P"}), assigned("c", {"P"})};
  const std::map<std::string, ScoreVector> scores{
      {"a", Eigen::Vector2d(0.55, 0.45)}, {"b", Eigen::Vector2d(0.55, 0.45)}, {"c", Eigen::Vector2d(0.0, 1.0)}};
  const auto out = aggregate_parcel_scores(as, scores);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].majority, 1);
  EXPECT_EQ(out[0].histogram.at(0), 2u);
}

TEST(ExportMap, RollsUpAndReparses) {
  const std::vector<Parcel> parcels{unit_square("P1", 0, {fine("bakery")}), unit_square("P2", 2)};
  ParcelPrediction p{"P1", {{fine("bakery"), 3}, {fine("bank"), 1}}, fine("bakery"), 4};
  const std::vector<ParcelPrediction> preds{p};
  const auto doc = nlohmann::json::parse(export_map(parcels, preds, tax(), Level::Fine, Level::Top));
  ASSERT_EQ(doc["features"].size(), 1u);
  const auto& props = doc["features"][0]["properties"];
  EXPECT_EQ(props["landuse_pred"], "General sales or services");
  EXPECT_EQ(props["parcel"], "P1");
  EXPECT_EQ(props["support"], 4);
  EXPECT_EQ(props["histogram"]["General sales or services"], 4);
  EXPECT_EQ(doc["features"][0]["geometry"], parcels[0].geometry);

  // geometry survives the parcel parser once a landuse property is attached
  auto reparse = doc;
  reparse["features"][0]["properties"]["landuse"] = {"bakery"};
  const auto back = parse_parcels(reparse.dump(), tax());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].rings, parcels[0].rings);

  const auto empty = nlohmann::json::parse(export_map(parcels, {}, tax(), Level::Fine, Level::Fine));
  EXPECT_EQ(empty["type"], "FeatureCollection");
  EXPECT_TRUE(empty["features"].empty());
}

}  // namespace
}  // namespace landuse
