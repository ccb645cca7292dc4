#pragma once

// Local-aware key-value cache built from few-shot training crops, the
// EMD-based affinity between a query crop set and a class cache, fusion with
// the zero-shot descriptor EMD, and a streaming test-time variant that grows
// the cache from confident predictions.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "setmatch/embedding.hpp"
#include "setmatch/error.hpp"
#include "setmatch/ot.hpp"
#include "setmatch/zero_shot.hpp"

namespace setmatch {

/// Descriptor-only prompt embeddings for one class (no class name in the
/// prompt text).
struct DescriptorOnlyPromptSet {
  std::string class_id;
  std::vector<EmbeddingVector> embeddings;

  DescriptorOnlyPromptSet() = default;
  DescriptorOnlyPromptSet(std::string cls, std::vector<EmbeddingVector> embs)
      : class_id(std::move(cls)), embeddings(std::move(embs)) {
    if (embeddings.empty()) {
      throw Error(ErrorCode::EmptyInput, "descriptor-only prompt set '" + class_id + "' is empty");
    }
  }

  std::size_t size() const { return embeddings.size(); }
};

struct CacheEntry {
  FeatureSet features;
  // Prediction entropy at admission; zero for entries built from labels.
  double admission_entropy = 0.0;
};

struct ClassCache {
  std::string class_id;
  std::vector<CacheEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

using CacheMap = std::map<std::string, ClassCache>;
using PromptMap = std::map<std::string, DescriptorOnlyPromptSet>;
using DescriptorMap = std::map<std::string, DescriptorSet>;

struct FusionConfig {
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
      throw Error(ErrorCode::InvalidArgument, "alpha must be >= 0");
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidArgument, "beta must be > 0");
  }
};

/// For each prompt, the crop with the highest cosine similarity (lowest crop
/// index on ties). A crop may be picked by several prompts.
inline FeatureSet select_cache_entry(const FeatureSet& crops, const DescriptorOnlyPromptSet& prompts) {
  if (crops.size() == 0 || prompts.size() == 0) {
    throw Error(ErrorCode::EmptyInput, "cache entry selection needs crops and prompts");
  }
  std::vector<EmbeddingVector> picked;
  std::optional<std::vector<CropRect>> rects;
  if (crops.crop_rects()) rects.emplace();
  picked.reserve(prompts.size());
  for (const auto& prompt : prompts.embeddings) {
    std::size_t best = 0;
    double best_sim = dot(crops.members()[0], prompt);
    for (std::size_t h = 1; h < crops.size(); ++h) {
      const double sim = dot(crops.members()[h], prompt);
      if (sim > best_sim) {
        best_sim = sim;
        best = h;
      }
    }
    picked.push_back(crops.members()[best]);
    if (rects) rects->push_back((*crops.crop_rects())[best]);
  }
  return FeatureSet(std::move(picked), crops.source_id(), std::move(rects));
}

struct TrainingExample {
  FeatureSet crops;
  std::string label;
};

/// One cache per prompt class (possibly empty); entries keep training order.
inline CacheMap build_cache(std::span<const TrainingExample> training, const PromptMap& prompts) {
  CacheMap caches;
  for (const auto& [cls, set] : prompts) caches[cls].class_id = cls;
  for (const auto& example : training) {
    const auto it = prompts.find(example.label);
    if (it == prompts.end()) {
      throw Error(ErrorCode::MissingPromptSet, "no descriptor-only prompts for class '" + example.label + "'");
    }
    caches[example.label].entries.push_back({select_cache_entry(example.crops, it->second), 0.0});
  }
  return caches;
}

struct CacheDistance {
  double total = 0.0;
  bool empty_cache = false;  // total is +inf
};

/// Sum of EMD(query, V) over the class's cache entries.
inline CacheDistance class_emd_sum(const FeatureSet& query, const ClassCache& cache,
                                   const ot::SinkhornConfig& sinkhorn = {}) {
  if (query.size() == 0) throw Error(ErrorCode::EmptyInput, "empty query");
  if (cache.empty()) return {std::numeric_limits<double>::infinity(), true};
  double total = 0.0;
  for (const auto& entry : cache.entries) {
    total += ot::set_emd(query.members(), entry.features.members(), sinkhorn);
  }
  return {total, false};
}

/// exp(-beta * emd_sum); an infinite sum maps to zero affinity.
inline double affinity(double emd_sum, double beta) {
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be > 0");
  if (std::isinf(emd_sum)) return 0.0;
  return std::exp(-beta * emd_sum);
}

/// Per-class ingredients of the fused score, kept separate so several alphas
/// can be evaluated without re-solving any transport problem.
struct FusionParts {
  std::map<std::string, double> text_emd;
  std::map<std::string, double> cache_emd;
};

inline void check_same_classes(const CacheMap& caches, const DescriptorMap& descriptor_sets) {
  bool same = caches.size() == descriptor_sets.size();
  auto b = descriptor_sets.begin();
  for (auto a = caches.begin(); same && a != caches.end(); ++a, ++b) same = a->first == b->first;
  if (!same) throw Error(ErrorCode::KeyMismatch, "cache classes differ from descriptor classes");
}

inline FusionParts fusion_parts(const FeatureSet& query, const CacheMap& caches,
                                const DescriptorMap& descriptor_sets,
                                const ot::SinkhornConfig& sinkhorn = {}) {
  check_same_classes(caches, descriptor_sets);
  if (descriptor_sets.empty()) throw Error(ErrorCode::EmptyClassList, "no classes");
  FusionParts parts;
  parts.text_emd = descriptor_emds(query, descriptor_sets, sinkhorn);
  for (const auto& [cls, cache] : caches) parts.cache_emd.emplace(cls, class_emd_sum(query, cache, sinkhorn).total);
  return parts;
}

/// score_c = alpha * exp(-beta * EMD_cache_c) - EMD(X, D_c)
inline ClassificationResult fuse(const FusionParts& parts, const FusionConfig& fusion) {
  fusion.validate();
  std::map<std::string, double> scores;
  for (const auto& [cls, text] : parts.text_emd) {
    const double a = affinity(parts.cache_emd.at(cls), fusion.beta);
    scores.emplace(cls, fusion.alpha * a - text);
  }
  return make_result(std::move(scores), ScoreKind::Fused);
}

inline ClassificationResult classify_fused(const FeatureSet& query, const CacheMap& caches,
                                           const DescriptorMap& descriptor_sets,
                                           const FusionConfig& fusion = {},
                                           const ot::SinkhornConfig& sinkhorn = {}) {
  fusion.validate();
  return fuse(fusion_parts(query, caches, descriptor_sets, sinkhorn), fusion);
}

/// Shannon entropy (nats) of softmax(scores / temperature).
inline double softmax_entropy(const std::map<std::string, double>& scores, double temperature = 1.0) {
  if (scores.empty()) return 0.0;
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& [_, s] : scores) hi = std::max(hi, s / temperature);
  double z = 0.0;
  for (const auto& [_, s] : scores) z += std::exp(s / temperature - hi);
  double h = 0.0;
  for (const auto& [_, s] : scores) {
    const double logp = s / temperature - hi - std::log(z);
    h -= std::exp(logp) * logp;
  }
  return std::max(0.0, h);
}

struct TtaConfig {
  std::size_t capacity = 3;
  // Admit when prediction entropy is strictly below this; unset means ln(C),
  // which admits everything except a perfectly flat prediction.
  std::optional<double> admission;
  double temperature = 1.0;

  void validate() const {
    if (capacity < 1) throw Error(ErrorCode::InvalidArgument, "capacity must be >= 1");
    if (admission && (!(*admission >= 0.0) || !std::isfinite(*admission))) {
      throw Error(ErrorCode::InvalidArgument, "admission threshold must be >= 0");
    }
    if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
  }

  double threshold(std::size_t num_classes) const {
    return admission ? *admission : std::log(static_cast<double>(num_classes));
  }
};

struct TtaOutcome {
  ClassificationResult result;
  double entropy = 0.0;
  bool admitted = false;
  std::optional<double> evicted_entropy;
};

/// Drops the highest-entropy entry while over capacity. Among equal
/// entropies the most recently admitted entry goes first.
inline std::optional<double> evict_over_capacity(ClassCache& cache, std::size_t capacity) {
  std::optional<double> evicted;
  while (cache.entries.size() > capacity) {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < cache.entries.size(); ++i) {
      if (cache.entries[i].admission_entropy >= cache.entries[worst].admission_entropy) worst = i;
    }
    evicted = cache.entries[worst].admission_entropy;
    cache.entries.erase(cache.entries.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  return evicted;
}

/// One streaming step: classify against the current caches, then admit the
/// query into the predicted class's cache when the prediction is confident.
/// `state` is only touched after every fallible computation has succeeded.
inline TtaOutcome tta_step(const FeatureSet& query, CacheMap& state, const PromptMap& prompts,
                           const DescriptorMap& descriptor_sets, const FusionConfig& fusion,
                           const ot::SinkhornConfig& sinkhorn, const TtaConfig& tta) {
  tta.validate();
  TtaOutcome out;
  out.result = classify_fused(query, state, descriptor_sets, fusion, sinkhorn);
  out.entropy = softmax_entropy(out.result.scores, tta.temperature);
  if (!(out.entropy < tta.threshold(descriptor_sets.size()))) return out;

  const auto prompt_it = prompts.find(out.result.predicted_class);
  if (prompt_it == prompts.end()) {
    throw Error(ErrorCode::MissingPromptSet,
                "no descriptor-only prompts for class '" + out.result.predicted_class + "'");
  }
  ClassCache updated = state.at(out.result.predicted_class);
  updated.entries.push_back({select_cache_entry(query, prompt_it->second), out.entropy});
  out.evicted_entropy = evict_over_capacity(updated, tta.capacity);
  out.admitted = true;
  state[out.result.predicted_class] = std::move(updated);
  return out;
}

/// Empty caches keyed like `descriptor_sets`, the starting state for TTA.
inline CacheMap empty_caches(const DescriptorMap& descriptor_sets) {
  CacheMap caches;
  for (const auto& [cls, _] : descriptor_sets) caches[cls].class_id = cls;
  return caches;
}

}  // namespace setmatch
