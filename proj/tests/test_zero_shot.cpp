#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "setmatch/zero_shot.hpp"
#include "test_support.hpp"

using namespace setmatch;

namespace {

std::map<std::string, EmbeddingVector> random_labels(std::mt19937_64& rng, std::size_t classes, std::size_t dim) {
  std::map<std::string, EmbeddingVector> labels;
  for (std::size_t c = 0; c < classes; ++c) labels.emplace("class_" + std::to_string(c), fixtures::random_unit(rng, dim));
  return labels;
}

}  // namespace

TEST(LabelOnly, ExactMatchScoresOne) {
  std::map<std::string, EmbeddingVector> labels{{"a", fixtures::basis(3, 0)}, {"b", fixtures::basis(3, 1)}};
  const auto r = classify_label_only(fixtures::basis(3, 0), labels);
  EXPECT_EQ(r.predicted_class, "a");
  EXPECT_DOUBLE_EQ(r.scores.at("a"), 1.0);
  EXPECT_EQ(r.score_kind, ScoreKind::Cosine);
}

TEST(LabelOnly, ThirtyDegreesFromA) {
  std::map<std::string, EmbeddingVector> labels{{"a", fixtures::basis(2, 0)}, {"b", fixtures::basis(2, 1)}};
  const double t = std::numbers::pi / 6;
  const auto r = classify_label_only(normalize({std::cos(t), std::sin(t)}), labels);
  EXPECT_EQ(r.predicted_class, "a");
  EXPECT_NEAR(r.scores.at("a"), std::sqrt(3.0) / 2, 1e-12);
  EXPECT_NEAR(r.scores.at("b"), 0.5, 1e-12);
}

TEST(LabelOnly, MatchesExhaustiveMax) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto labels = random_labels(rng, 5, 8);
    const auto image = fixtures::random_unit(rng, 8);
    std::string best;
    double best_sim = -2.0;
    for (const auto& [cls, v] : labels) {
      double s = 0.0;
      for (std::size_t i = 0; i < 8; ++i) s += image[i] * v[i];
      if (s > best_sim) best_sim = s, best = cls;
    }
    EXPECT_EQ(classify_label_only(image, labels).predicted_class, best);
  }
}

TEST(LabelOnly, EmptyClassListRejected) {
  try {
    classify_label_only(fixtures::basis(2, 0), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyClassList);
  }
}

TEST(ArgmaxClass, TiesGoToSmallestId) {
  EXPECT_EQ(argmax_class({{"zebra", 1.0}, {"ant", 1.0}, {"bee", 0.5}}), "ant");
  EXPECT_EQ(argmax_class({{"zebra", 1.0}, {"ant", 0.0}}), "zebra");
}

TEST(DescriptorMean, IdenticalSetsTieLexicographically) {
  std::mt19937_64 rng(4);
  const auto shared = fixtures::random_descriptor_set(rng, "x", 4, 6);
  std::map<std::string, DescriptorSet> sets{{"b", shared}, {"a", shared}, {"c", shared}};
  const auto r = classify_descriptor_mean(fixtures::random_unit(rng, 6), sets);
  EXPECT_EQ(r.predicted_class, "a");
  EXPECT_EQ(r.scores.at("a"), r.scores.at("c"));
  EXPECT_EQ(r.score_kind, ScoreKind::MeanCosine);
}

TEST(DescriptorMean, SingleDescriptorReducesToLabelOnly) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto labels = random_labels(rng, 4, 5);
    std::map<std::string, DescriptorSet> sets;
    for (const auto& [cls, v] : labels) sets.emplace(cls, DescriptorSet::untitled(cls, {v}));
    const auto image = fixtures::random_unit(rng, 5);
    const auto a = classify_label_only(image, labels);
    const auto b = classify_descriptor_mean(image, sets);
    EXPECT_EQ(a.predicted_class, b.predicted_class);
    EXPECT_EQ(a.scores, b.scores);
  }
}

TEST(DescriptorMean, MatchesMeanThenArgmax) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    std::map<std::string, DescriptorSet> sets;
    for (int c = 0; c < 4; ++c) {
      const std::string id = "c" + std::to_string(c);
      sets.emplace(id, fixtures::random_descriptor_set(rng, id, 1 + (t + c) % 5, 6));
    }
    const auto image = fixtures::random_unit(rng, 6);
    std::string best;
    double best_mean = -2.0;
    for (const auto& [cls, set] : sets) {
      double total = 0.0;
      for (const auto& d : set.embeddings())
        for (std::size_t i = 0; i < 6; ++i) total += image[i] * d[i];
      const double mean = total / set.size();
      if (mean > best_mean) best_mean = mean, best = cls;
    }
    const auto r = classify_descriptor_mean(image, sets);
    EXPECT_EQ(r.predicted_class, best);
    EXPECT_NEAR(r.scores.at(best), best_mean, 1e-12);
  }
}

TEST(Dnd, OrthogonalBasesPickAlignedClass) {
  std::map<std::string, DescriptorSet> sets{
      {"a", DescriptorSet::untitled("a", {fixtures::basis(4, 0), fixtures::basis(4, 1)})},
      {"b", DescriptorSet::untitled("b", {fixtures::basis(4, 2), fixtures::basis(4, 3)})}};
  FeatureSet query({fixtures::basis(4, 0), fixtures::basis(4, 1), fixtures::basis(4, 0), fixtures::basis(4, 1)});
  const auto r = classify_dnd(query, sets);
  EXPECT_EQ(r.predicted_class, "a");
  EXPECT_NEAR(r.scores.at("a"), 0.0, 1e-6);
  EXPECT_NEAR(r.scores.at("b"), -1.0, 1e-6);
  EXPECT_EQ(r.score_kind, ScoreKind::NegEmd);
}

TEST(Dnd, SingleVectorsAgreeWithLabelOnly) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const auto labels = random_labels(rng, 5, 6);
    std::map<std::string, DescriptorSet> sets;
    for (const auto& [cls, v] : labels) sets.emplace(cls, DescriptorSet::untitled(cls, {v}));
    const auto image = fixtures::random_unit(rng, 6);
    const auto dnd = classify_dnd(FeatureSet({image}), sets);
    EXPECT_EQ(dnd.predicted_class, classify_label_only(image, labels).predicted_class);
    for (const auto& [cls, v] : labels) EXPECT_NEAR(dnd.scores.at(cls), dot(image, v) - 1.0, 1e-12);
  }
}

TEST(Dnd, ArgminMatchesExactOracle) {
  std::mt19937_64 rng(8);
  ot::SinkhornConfig cfg;
  cfg.epsilon = 1e-3;
  cfg.max_iters = 500;
  int disagreements = 0;
  for (int t = 0; t < 200; ++t) {
    const auto query = fixtures::random_feature_set(rng, 3, 5);
    std::map<std::string, DescriptorSet> sets;
    for (int c = 0; c < 3; ++c) sets.emplace("c" + std::to_string(c), fixtures::random_descriptor_set(rng, "c", 3, 5));
    std::map<std::string, double> exact;
    for (const auto& [cls, set] : sets) {
      fixtures::Matrix m(3, std::vector<double>(3));
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) m[i][j] = 1.0 - dot(query.members()[i], set.embeddings()[j]);
      exact[cls] = fixtures::brute_force_emd(m);
    }
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& [cls, v] : exact) ranked.emplace_back(v, cls);
    std::sort(ranked.begin(), ranked.end());
    // A near-tie inside the solver tolerance is not a meaningful disagreement.
    if (ranked[1].first - ranked[0].first < 1e-2) continue;
    disagreements += classify_dnd(query, sets, cfg).predicted_class != ranked[0].second;
  }
  EXPECT_EQ(disagreements, 0);
}

TEST(Dnd, RelabelingPermutesScores) {
  std::mt19937_64 rng(9);
  const auto query = fixtures::random_feature_set(rng, 4, 6);
  std::map<std::string, DescriptorSet> sets, relabeled;
  const std::vector<std::string> ids{"a", "b", "c"}, renamed{"z", "y", "x"};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto d = fixtures::random_descriptor_set(rng, ids[c], 3, 6);
    sets.emplace(ids[c], d);
    relabeled.emplace(renamed[c], d);
  }
  const auto a = classify_dnd(query, sets);
  const auto b = classify_dnd(query, relabeled);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(a.scores.at(ids[c]), b.scores.at(renamed[c]));
}

TEST(Dnd, SeparabilityFixtureIsPerfect) {
  fixtures::SeparabilityFixture fx;
  std::mt19937_64 rng(10);
  for (int t = 0; t < 60; ++t) {
    const std::size_t cls = t % 3;
    EXPECT_EQ(classify_dnd(fx.query(rng, cls), fx.descriptor_sets).predicted_class, fx.classes[cls]);
  }
}

TEST(Dnd, Deterministic) {
  fixtures::SeparabilityFixture fx;
  std::mt19937_64 rng(11);
  const auto q = fx.query(rng, 1);
  const auto a = classify_dnd(q, fx.descriptor_sets);
  const auto b = classify_dnd(q, fx.descriptor_sets);
  EXPECT_EQ(a.scores, b.scores);
}
