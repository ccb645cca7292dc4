#pragma once

// Prompt-sensitivity diagnostics: accuracy under label-only,
// descriptor-only and hybrid prompts, plus intra/cross hybrid similarity
// statistics. Similarities are reported as cosine x 100.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "setmatch/crop_plan.hpp"
#include "setmatch/embedding.hpp"
#include "setmatch/error.hpp"

namespace setmatch::diagnostics {

struct HybridPrompt {
  EmbeddingVector embedding;
  std::string label_class;
  std::string source_class;  // class the descriptor was written for

  bool intra() const { return label_class == source_class; }
};

struct ClassPrompts {
  EmbeddingVector label;
  std::vector<EmbeddingVector> descriptor_only;
};

struct PromptSuite {
  std::map<std::string, ClassPrompts> classes;
  std::vector<HybridPrompt> hybrids;

  void validate() const {
    if (classes.empty()) throw Error(ErrorCode::EmptySuite, "prompt suite has no classes");
    for (const auto& h : hybrids) {
      if (!classes.contains(h.label_class) || !classes.contains(h.source_class)) {
        throw Error(ErrorCode::InvalidArgument, "hybrid prompt references unknown class '" +
                                                    h.label_class + "'/'" + h.source_class + "'");
      }
    }
  }
};

struct LabeledEmbedding {
  EmbeddingVector image;
  std::string true_class;
};

enum class DescriptorAggregation { Mean, Max };

struct PromptTypeAccuracy {
  double label_only = 0.0;
  double descriptor_only = 0.0;
};

struct SimilarityStats {
  double mean_intra = 0.0;
  double mean_cross = 0.0;
  double delta_sim = 0.0;
  double delta_label_sim = 0.0;
};

namespace detail {

inline void require_tests(std::span<const LabeledEmbedding> tests, const PromptSuite& suite) {
  suite.validate();
  if (tests.empty()) throw Error(ErrorCode::EmptySuite, "no test embeddings");
  for (const auto& t : tests) {
    if (!suite.classes.contains(t.true_class)) {
      throw Error(ErrorCode::InvalidArgument, "test image labelled with unknown class '" + t.true_class + "'");
    }
  }
}

// First maximum in map order, i.e. lexicographic tie-break.
template <typename ScoreFn>
std::string best_class(const PromptSuite& suite, ScoreFn&& score) {
  std::string best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& [cls, prompts] : suite.classes) {
    const double s = score(prompts);
    if (best.empty() || s > best_score) {
      best = cls;
      best_score = s;
    }
  }
  return best;
}

inline double aggregate_descriptor_only(const EmbeddingVector& image, const ClassPrompts& prompts,
                                        DescriptorAggregation agg) {
  if (prompts.descriptor_only.empty()) return -std::numeric_limits<double>::infinity();
  double acc = agg == DescriptorAggregation::Max ? -std::numeric_limits<double>::infinity() : 0.0;
  for (const auto& d : prompts.descriptor_only) {
    const double s = dot(image, d);
    acc = agg == DescriptorAggregation::Max ? std::max(acc, s) : acc + s;
  }
  return agg == DescriptorAggregation::Max ? acc
                                           : acc / static_cast<double>(prompts.descriptor_only.size());
}

}  // namespace detail

inline std::string predict_label_only(const EmbeddingVector& image, const PromptSuite& suite) {
  return detail::best_class(suite, [&](const ClassPrompts& p) { return dot(image, p.label); });
}

inline std::string predict_descriptor_only(const EmbeddingVector& image, const PromptSuite& suite,
                                           DescriptorAggregation agg = DescriptorAggregation::Mean) {
  return detail::best_class(
      suite, [&](const ClassPrompts& p) { return detail::aggregate_descriptor_only(image, p, agg); });
}

inline PromptTypeAccuracy eval_prompt_types(std::span<const LabeledEmbedding> tests,
                                            const PromptSuite& suite,
                                            DescriptorAggregation agg = DescriptorAggregation::Mean) {
  detail::require_tests(tests, suite);
  const bool any_descriptors = std::any_of(suite.classes.begin(), suite.classes.end(),
                                           [](const auto& kv) { return !kv.second.descriptor_only.empty(); });
  if (!any_descriptors) throw Error(ErrorCode::EmptySuite, "no descriptor-only prompts");
  std::size_t label_hits = 0;
  std::size_t descriptor_hits = 0;
  for (const auto& t : tests) {
    label_hits += predict_label_only(t.image, suite) == t.true_class;
    descriptor_hits += predict_descriptor_only(t.image, suite, agg) == t.true_class;
  }
  const auto n = static_cast<double>(tests.size());
  return {static_cast<double>(label_hits) / n, static_cast<double>(descriptor_hits) / n};
}

/// Index of the most similar hybrid prompt over the pooled intra and cross
/// prompts; the earliest prompt wins ties.
inline std::size_t best_hybrid(const EmbeddingVector& image, const PromptSuite& suite) {
  std::size_t best = 0;
  double best_sim = dot(image, suite.hybrids.front().embedding);
  for (std::size_t i = 1; i < suite.hybrids.size(); ++i) {
    const double s = dot(image, suite.hybrids[i].embedding);
    if (s > best_sim) {
      best_sim = s;
      best = i;
    }
  }
  return best;
}

/// Correct only when the winning hybrid carries the true label AND a
/// descriptor written for the true class.
inline double eval_hybrid_strict(std::span<const LabeledEmbedding> tests, const PromptSuite& suite) {
  detail::require_tests(tests, suite);
  if (suite.hybrids.empty()) throw Error(ErrorCode::NoHybrids, "suite has no hybrid prompts");
  for (const auto& [cls, _] : suite.classes) {
    const bool has_intra = std::any_of(suite.hybrids.begin(), suite.hybrids.end(), [&](const HybridPrompt& h) {
      return h.intra() && h.label_class == cls;
    });
    if (!has_intra) throw Error(ErrorCode::NoHybrids, "class '" + cls + "' has no intra hybrid");
  }
  std::size_t hits = 0;
  for (const auto& t : tests) {
    const auto& h = suite.hybrids[best_hybrid(t.image, suite)];
    hits += h.label_class == t.true_class && h.source_class == t.true_class;
  }
  return static_cast<double>(hits) / static_cast<double>(tests.size());
}

struct ImageSimilarity {
  double intra = 0.0;        // mean x100 over own-class intra hybrids
  double cross = 0.0;        // mean x100 over true-label hybrids with borrowed descriptors
  double label_margin = 0.0;  // x100 true label minus mean x100 other labels
};

inline ImageSimilarity image_similarity(const LabeledEmbedding& t, const PromptSuite& suite) {
  double intra = 0.0;
  double cross = 0.0;
  std::size_t n_intra = 0;
  std::size_t n_cross = 0;
  for (const auto& h : suite.hybrids) {
    if (h.label_class != t.true_class) continue;
    const double s = 100.0 * dot(t.image, h.embedding);
    if (h.intra()) {
      intra += s;
      ++n_intra;
    } else {
      cross += s;
      ++n_cross;
    }
  }
  if (n_intra == 0 || n_cross == 0) {
    throw Error(ErrorCode::MissingCrossHybrids,
                "class '" + t.true_class + "' needs both intra and cross hybrids");
  }
  if (suite.classes.size() < 2) {
    throw Error(ErrorCode::EmptySuite, "label margin needs at least two classes");
  }
  double own = 0.0;
  double others = 0.0;
  for (const auto& [cls, prompts] : suite.classes) {
    const double s = 100.0 * dot(t.image, prompts.label);
    if (cls == t.true_class) {
      own = s;
    } else {
      others += s;
    }
  }
  return {intra / static_cast<double>(n_intra), cross / static_cast<double>(n_cross),
          own - others / static_cast<double>(suite.classes.size() - 1)};
}

inline SimilarityStats similarity_deltas(std::span<const LabeledEmbedding> tests, const PromptSuite& suite) {
  detail::require_tests(tests, suite);
  SimilarityStats s;
  for (const auto& t : tests) {
    const auto img = image_similarity(t, suite);
    s.mean_intra += img.intra;
    s.mean_cross += img.cross;
    s.delta_label_sim += img.label_margin;
  }
  const auto n = static_cast<double>(tests.size());
  s.mean_intra /= n;
  s.mean_cross /= n;
  s.delta_label_sim /= n;
  s.delta_sim = s.mean_intra - s.mean_cross;
  return s;
}

struct ClassBreakdown {
  std::size_t count = 0;
  double acc_label_only = 0.0;
  double acc_descriptor_only = 0.0;
  double acc_hybrid_strict = 0.0;
  SimilarityStats similarity;
};

struct DiagnosticReport {
  double acc_label_only = 0.0;
  double acc_descriptor_only = 0.0;
  double acc_hybrid_strict = 0.0;
  SimilarityStats similarity;
  std::map<std::string, ClassBreakdown> per_class;
};

inline DiagnosticReport diagnose(std::span<const LabeledEmbedding> tests, const PromptSuite& suite,
                                 DescriptorAggregation agg = DescriptorAggregation::Mean) {
  DiagnosticReport report;
  const auto acc = eval_prompt_types(tests, suite, agg);
  report.acc_label_only = acc.label_only;
  report.acc_descriptor_only = acc.descriptor_only;
  report.acc_hybrid_strict = eval_hybrid_strict(tests, suite);
  report.similarity = similarity_deltas(tests, suite);

  std::map<std::string, std::vector<LabeledEmbedding>> by_class;
  for (const auto& t : tests) by_class[t.true_class].push_back(t);
  for (const auto& [cls, items] : by_class) {
    ClassBreakdown b;
    b.count = items.size();
    const auto a = eval_prompt_types(items, suite, agg);
    b.acc_label_only = a.label_only;
    b.acc_descriptor_only = a.descriptor_only;
    b.acc_hybrid_strict = eval_hybrid_strict(items, suite);
    b.similarity = similarity_deltas(items, suite);
    report.per_class.emplace(cls, b);
  }
  return report;
}

/// Seeded choice of `count` descriptor-source classes to borrow from for
/// `label_class`'s cross hybrids. Deterministic in (classes, label, seed).
inline std::vector<std::string> sample_cross_sources(const std::vector<std::string>& classes,
                                                     const std::string& label_class, std::size_t count,
                                                     std::uint64_t seed) {
  const Philox4x32 rng(fnv1a64(label_class) ^ seed);
  std::vector<std::pair<double, std::string>> keyed;
  for (std::uint32_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == label_class) continue;
    const auto r = rng({i, 0u, 2u, 0u});
    keyed.emplace_back(unit_double(r[0], r[1]), classes[i]);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < keyed.size() && i < count; ++i) out.push_back(keyed[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

/// Keeps every intra hybrid and, per label class, only the cross hybrids
/// whose source is among `count` seeded sources. count == 0 keeps all.
inline PromptSuite restrict_cross_sources(PromptSuite suite, std::size_t count, std::uint64_t seed) {
  if (count == 0) return suite;
  std::vector<std::string> classes;
  for (const auto& [cls, _] : suite.classes) classes.push_back(cls);
  std::map<std::string, std::vector<std::string>> allowed;
  for (const auto& cls : classes) allowed[cls] = sample_cross_sources(classes, cls, count, seed);
  std::erase_if(suite.hybrids, [&](const HybridPrompt& h) {
    if (h.intra()) return false;
    const auto& keep = allowed[h.label_class];
    return !std::binary_search(keep.begin(), keep.end(), h.source_class);
  });
  return suite;
}

}  // namespace setmatch::diagnostics
