#pragma once

// Zero-shot classifiers: nearest label prompt, mean similarity over
// label+descriptor prompts, and minimum set-to-set EMD between an image's
// crops and each class's descriptors.

#include <limits>
#include <map>
#include <string>
#include <string_view>

#include "setmatch/embedding.hpp"
#include "setmatch/error.hpp"
#include "setmatch/ot.hpp"

namespace setmatch {

enum class ScoreKind { Cosine, MeanCosine, NegEmd, Fused };

inline std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::Cosine: return "cosine";
    case ScoreKind::MeanCosine: return "mean_cosine";
    case ScoreKind::NegEmd: return "neg_emd";
    case ScoreKind::Fused: return "fused";
  }
  return "unknown";
}

/// Scores for every class (higher is better) and the winning class.
struct ClassificationResult {
  std::string predicted_class;
  std::map<std::string, double> scores;
  ScoreKind score_kind = ScoreKind::Cosine;
};

/// Highest score wins; exact ties go to the lexicographically smallest id.
inline std::string argmax_class(const std::map<std::string, double>& scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyClassList, "no classes to rank");
  auto best = scores.begin();
  for (auto it = std::next(scores.begin()); it != scores.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

inline ClassificationResult make_result(std::map<std::string, double> scores, ScoreKind kind) {
  ClassificationResult r;
  r.predicted_class = argmax_class(scores);
  r.scores = std::move(scores);
  r.score_kind = kind;
  return r;
}

inline ClassificationResult classify_label_only(
    const EmbeddingVector& image, const std::map<std::string, EmbeddingVector>& labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptyClassList, "no label embeddings");
  std::map<std::string, double> scores;
  for (const auto& [cls, label] : labels) scores.emplace(cls, dot(image, label));
  return make_result(std::move(scores), ScoreKind::Cosine);
}

/// The descriptor sets must hold embeddings of the combined
/// "a photo of {class} which has {descriptor}" prompts.
inline ClassificationResult classify_descriptor_mean(
    const EmbeddingVector& image, const std::map<std::string, DescriptorSet>& descriptor_sets) {
  if (descriptor_sets.empty()) throw Error(ErrorCode::EmptyClassList, "no descriptor sets");
  std::map<std::string, double> scores;
  for (const auto& [cls, set] : descriptor_sets) {
    if (set.size() == 0) throw Error(ErrorCode::EmptyDescriptorSet, "class '" + cls + "'");
    double total = 0.0;
    for (const auto& d : set.embeddings()) total += dot(image, d);
    scores.emplace(cls, total / static_cast<double>(set.size()));
  }
  return make_result(std::move(scores), ScoreKind::MeanCosine);
}

/// EMD(X, D_c) for every class, uniform masses on both sides.
inline std::map<std::string, double> descriptor_emds(
    const FeatureSet& query, const std::map<std::string, DescriptorSet>& descriptor_sets,
    const ot::SinkhornConfig& sinkhorn) {
  std::map<std::string, double> emds;
  for (const auto& [cls, set] : descriptor_sets) {
    if (set.size() == 0) throw Error(ErrorCode::EmptyDescriptorSet, "class '" + cls + "'");
    emds.emplace(cls, ot::set_emd(query.members(), set.embeddings(), sinkhorn));
  }
  return emds;
}

/// Predicts the class whose descriptor set is nearest in EMD; scores are -EMD.
inline ClassificationResult classify_dnd(const FeatureSet& query,
                                         const std::map<std::string, DescriptorSet>& descriptor_sets,
                                         const ot::SinkhornConfig& sinkhorn = {}) {
  if (descriptor_sets.empty()) throw Error(ErrorCode::EmptyClassList, "no descriptor sets");
  auto scores = descriptor_emds(query, descriptor_sets, sinkhorn);
  for (auto& [cls, v] : scores) v = -v;
  return make_result(std::move(scores), ScoreKind::NegEmd);
}

}  // namespace setmatch
