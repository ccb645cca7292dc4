#pragma once

// Embedding-space domain types shared by every stage: unit vectors, the
// per-image crop feature set, and the per-class descriptor set.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "setmatch/error.hpp"

namespace setmatch {

/// Axis-aligned crop in relative image coordinates.
struct CropRect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }

  bool operator==(const CropRect&) const = default;
};

/// Feature vector in the shared image/text space. Entries are always finite;
/// vectors produced by normalize() have unit L2 norm.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  /// Wraps values that the producer already normalized. Only finiteness is
  /// enforced; use norm() to audit.
  static EmbeddingVector wrap(std::vector<double> values) {
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::InvalidArgument, "embedding has a non-finite entry");
      }
    }
    EmbeddingVector out;
    out.values_ = std::move(values);
    return out;
  }

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  double norm() const {
    double sq = 0.0;
    for (double v : values_) sq += v * v;
    return std::sqrt(sq);
  }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

inline EmbeddingVector normalize(std::span<const double> raw) {
  double sq = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::ZeroVector, "vector has non-finite entries");
    }
    sq += v * v;
  }
  if (sq == 0.0) {
    throw Error(ErrorCode::ZeroVector, "vector has no nonzero entry");
  }
  const double n = std::sqrt(sq);
  std::vector<double> out(raw.begin(), raw.end());
  for (double& v : out) v /= n;
  return EmbeddingVector::wrap(std::move(out));
}

inline EmbeddingVector normalize(std::initializer_list<double> raw) {
  return normalize(std::span<const double>(raw.begin(), raw.size()));
}

inline EmbeddingVector normalize(const EmbeddingVector& v) { return normalize(v.values()); }

/// Cosine similarity for unit vectors.
inline double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimMismatch,
                "dot of dims " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

/// One image decomposed into crop embeddings.
class FeatureSet {
 public:
  FeatureSet() = default;

  FeatureSet(std::vector<EmbeddingVector> members, std::string source_id = {},
             std::optional<std::vector<CropRect>> crop_rects = std::nullopt)
      : members_(std::move(members)),
        source_id_(std::move(source_id)),
        crop_rects_(std::move(crop_rects)) {
    if (members_.empty()) {
      throw Error(ErrorCode::EmptyInput, "feature set '" + source_id_ + "' has no members");
    }
    for (const auto& m : members_) {
      if (m.dim() != members_.front().dim()) {
        throw Error(ErrorCode::DimMismatch, "feature set '" + source_id_ + "' mixes dimensions");
      }
    }
    if (crop_rects_ && crop_rects_->size() != members_.size()) {
      throw Error(ErrorCode::CountMismatch,
                  "feature set '" + source_id_ + "' has " + std::to_string(crop_rects_->size()) +
                      " rects for " + std::to_string(members_.size()) + " members");
    }
  }

  const std::vector<EmbeddingVector>& members() const { return members_; }
  const std::string& source_id() const { return source_id_; }
  const std::optional<std::vector<CropRect>>& crop_rects() const { return crop_rects_; }
  std::size_t size() const { return members_.size(); }
  std::size_t dim() const { return members_.empty() ? 0 : members_.front().dim(); }

  bool operator==(const FeatureSet&) const = default;

 private:
  std::vector<EmbeddingVector> members_;
  std::string source_id_;
  std::optional<std::vector<CropRect>> crop_rects_;
};

/// Per-class descriptor embeddings with their source texts. Duplicate texts
/// are dropped at construction, keeping the first occurrence.
class DescriptorSet {
 public:
  DescriptorSet() = default;

  DescriptorSet(std::string class_id, std::vector<std::string> texts,
                std::vector<EmbeddingVector> embeddings)
      : class_id_(std::move(class_id)) {
    if (texts.size() != embeddings.size()) {
      throw Error(ErrorCode::CountMismatch, "descriptor set '" + class_id_ +
                                                "': texts and embeddings differ in length");
    }
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!seen.insert(texts[i]).second) continue;
      texts_.push_back(std::move(texts[i]));
      embeddings_.push_back(std::move(embeddings[i]));
    }
    if (embeddings_.empty()) {
      throw Error(ErrorCode::EmptyDescriptorSet, "descriptor set '" + class_id_ + "' is empty");
    }
    for (const auto& e : embeddings_) {
      if (e.dim() != embeddings_.front().dim()) {
        throw Error(ErrorCode::DimMismatch, "descriptor set '" + class_id_ + "' mixes dimensions");
      }
    }
  }

  /// Convenience for fixtures without texts: each embedding gets a distinct
  /// synthetic text so nothing is deduplicated.
  static DescriptorSet untitled(std::string class_id, std::vector<EmbeddingVector> embeddings) {
    std::vector<std::string> texts;
    texts.reserve(embeddings.size());
    for (std::size_t i = 0; i < embeddings.size(); ++i) texts.push_back("#" + std::to_string(i));
    return DescriptorSet(std::move(class_id), std::move(texts), std::move(embeddings));
  }

  const std::string& class_id() const { return class_id_; }
  const std::vector<std::string>& texts() const { return texts_; }
  const std::vector<EmbeddingVector>& embeddings() const { return embeddings_; }
  std::size_t size() const { return embeddings_.size(); }
  std::size_t dim() const { return embeddings_.empty() ? 0 : embeddings_.front().dim(); }

 private:
  std::string class_id_;
  std::vector<std::string> texts_;
  std::vector<EmbeddingVector> embeddings_;
};

}  // namespace setmatch
