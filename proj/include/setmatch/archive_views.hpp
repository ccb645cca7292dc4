#pragma once

// Builds classifier inputs from EMBA archives, and serializes caches back
// into them.
//
// Manifest conventions:
//   image / crop          group = source image id, class_id = true label
//                         (may be empty for unlabeled queries)
//   label_prompt          one per class
//   descriptor_prompt     descriptor-only text, class_id = owning class
//   hybrid_prompt         class_id = label class, group = descriptor source
//                         class (empty means the label class, i.e. intra)
//   cache entries         kind crop, class_id = cache class,
//                         group = "<class>/<entry index>"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "setmatch/archive.hpp"
#include "setmatch/cache_adapter.hpp"
#include "setmatch/diagnostics.hpp"
#include "setmatch/embedding.hpp"
#include "setmatch/error.hpp"

namespace setmatch {

struct QueryImage {
  std::string id;
  std::string true_class;
  std::optional<EmbeddingVector> image;
  std::optional<FeatureSet> crops;
};

/// Image-side entries grouped per source image, in order of first
/// appearance.
inline std::vector<QueryImage> collect_queries(const EmbeddingArchive& archive) {
  struct Pending {
    QueryImage query;
    std::vector<EmbeddingVector> crops;
    std::vector<CropRect> rects;
  };
  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> index;
  auto slot = [&](const ManifestRecord& r) -> Pending& {
    const std::string id = r.group.empty() ? r.entry_id : r.group;
    auto [it, inserted] = index.emplace(id, pending.size());
    if (inserted) {
      pending.emplace_back();
      pending.back().query.id = id;
      pending.back().query.true_class = r.class_id;
    }
    Pending& p = pending[it->second];
    if (p.query.true_class != r.class_id) {
      throw Error(ErrorCode::MalformedManifest, "image '" + id + "' has conflicting class labels");
    }
    return p;
  };
  for (const auto& e : archive.entries) {
    if (e.record.kind == EntryKind::Image) {
      auto& p = slot(e.record);
      if (p.query.image) throw Error(ErrorCode::MalformedManifest, "image '" + p.query.id + "' embedded twice");
      p.query.image = e.vector;
    } else if (e.record.kind == EntryKind::Crop) {
      if (e.record.group.empty()) {
        throw Error(ErrorCode::MalformedManifest, "crop '" + e.record.entry_id + "' has no source image group");
      }
      auto& p = slot(e.record);
      p.crops.push_back(e.vector);
      p.rects.push_back(e.record.rect.value_or(CropRect{}));
    }
  }
  std::vector<QueryImage> out;
  out.reserve(pending.size());
  for (auto& p : pending) {
    if (!p.crops.empty()) p.query.crops = FeatureSet(std::move(p.crops), p.query.id, std::move(p.rects));
    out.push_back(std::move(p.query));
  }
  return out;
}

inline std::map<std::string, EmbeddingVector> label_embeddings(const EmbeddingArchive& archive) {
  std::map<std::string, EmbeddingVector> labels;
  for (const auto& e : archive.entries) {
    if (e.record.kind != EntryKind::LabelPrompt) continue;
    if (!labels.emplace(e.record.class_id, e.vector).second) {
      throw Error(ErrorCode::MalformedManifest, "class '" + e.record.class_id + "' has two label prompts");
    }
  }
  return labels;
}

/// Which text embeddings stand in for a class's descriptor set.
enum class TextKind {
  Combined,        // intra hybrid prompts "a photo of {class} which has {descriptor}"
  DescriptorOnly,  // descriptor-only prompts
};

inline DescriptorMap descriptor_sets(const EmbeddingArchive& archive, TextKind kind) {
  std::map<std::string, std::pair<std::vector<std::string>, std::vector<EmbeddingVector>>> grouped;
  for (const auto& e : archive.entries) {
    const auto& r = e.record;
    const bool take = kind == TextKind::Combined
                          ? r.kind == EntryKind::HybridPrompt && (r.group.empty() || r.group == r.class_id)
                          : r.kind == EntryKind::DescriptorPrompt;
    if (!take) continue;
    auto& [texts, embs] = grouped[r.class_id];
    texts.push_back(r.text.value_or(r.entry_id));
    embs.push_back(e.vector);
  }
  DescriptorMap out;
  for (auto& [cls, te] : grouped) out.emplace(cls, DescriptorSet(cls, std::move(te.first), std::move(te.second)));
  return out;
}

inline PromptMap descriptor_only_prompts(const EmbeddingArchive& archive) {
  std::map<std::string, std::vector<EmbeddingVector>> grouped;
  for (const auto& e : archive.entries) {
    if (e.record.kind == EntryKind::DescriptorPrompt) grouped[e.record.class_id].push_back(e.vector);
  }
  PromptMap out;
  for (auto& [cls, embs] : grouped) out.emplace(cls, DescriptorOnlyPromptSet(cls, std::move(embs)));
  return out;
}

inline diagnostics::PromptSuite prompt_suite(const EmbeddingArchive& archive) {
  diagnostics::PromptSuite suite;
  const auto labels = label_embeddings(archive);
  for (const auto& [cls, emb] : labels) suite.classes[cls].label = emb;
  for (const auto& e : archive.entries) {
    const auto& r = e.record;
    if (r.kind == EntryKind::DescriptorPrompt) {
      if (!labels.contains(r.class_id)) {
        throw Error(ErrorCode::MalformedManifest, "descriptor prompt for class '" + r.class_id + "' without label prompt");
      }
      suite.classes[r.class_id].descriptor_only.push_back(e.vector);
    } else if (r.kind == EntryKind::HybridPrompt) {
      suite.hybrids.push_back({e.vector, r.class_id, r.group.empty() ? r.class_id : r.group});
    }
  }
  return suite;
}

inline EmbeddingArchive cache_to_archive(const CacheMap& caches, std::uint32_t dim) {
  EmbeddingArchive archive;
  archive.dim = dim;
  for (const auto& [cls, cache] : caches) {
    for (std::size_t i = 0; i < cache.entries.size(); ++i) {
      const auto& fs = cache.entries[i].features;
      const std::string group = cls + "/" + std::to_string(i);
      for (std::size_t k = 0; k < fs.size(); ++k) {
        ManifestRecord r;
        r.entry_id = group + "/" + std::to_string(k);
        r.kind = EntryKind::Crop;
        r.class_id = cls;
        r.group = group;
        r.rect = fs.crop_rects() ? (*fs.crop_rects())[k] : CropRect{};
        archive.entries.push_back({std::move(r), fs.members()[k]});
      }
    }
  }
  return archive;
}

/// Inverse of cache_to_archive. Classes in `classes` without entries get an
/// empty cache so the result keys match the descriptor sets.
inline CacheMap cache_from_archive(const EmbeddingArchive& archive, const DescriptorMap& classes) {
  CacheMap caches = empty_caches(classes);
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::string, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < archive.entries.size(); ++i) {
    const auto& r = archive.entries[i].record;
    if (r.kind != EntryKind::Crop) continue;
    auto [it, inserted] = groups.try_emplace(r.group, r.class_id, std::vector<std::size_t>{});
    if (inserted) order.push_back(r.group);
    it->second.second.push_back(i);
  }
  for (const auto& g : order) {
    const auto& [cls, idx] = groups.at(g);
    if (!caches.contains(cls)) {
      throw Error(ErrorCode::KeyMismatch, "cache class '" + cls + "' has no descriptor set");
    }
    std::vector<EmbeddingVector> members;
    std::vector<CropRect> rects;
    for (auto i : idx) {
      members.push_back(archive.entries[i].vector);
      rects.push_back(archive.entries[i].record.rect.value_or(CropRect{}));
    }
    caches[cls].entries.push_back({FeatureSet(std::move(members), g, std::move(rects)), 0.0});
  }
  return caches;
}

}  // namespace setmatch
