#pragma once

// EMBA embedding archive: a little-endian binary container of float32
// embeddings described by a JSON manifest.
//
//   offset  size  field
//   0       4     magic "EMBA"
//   4       2     version (u16) = 1
//   6       4     dim (u32)
//   10      8     entry count (u64)
//   18      1     dtype tag, 0 = float32
//   19      8     manifest byte length (u64)
//   27      *     UTF-8 JSON manifest, one record per entry
//   ...     *     entry_count x dim float32 values, row-major, manifest order

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "setmatch/embedding.hpp"
#include "setmatch/error.hpp"

namespace setmatch {

inline constexpr std::array<char, 4> kArchiveMagic = {'E', 'M', 'B', 'A'};
inline constexpr std::uint16_t kArchiveVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;
inline constexpr std::size_t kArchiveHeaderBytes = 27;

enum class EntryKind { Crop, Image, LabelPrompt, DescriptorPrompt, HybridPrompt };

inline std::string_view to_string(EntryKind kind) {
  switch (kind) {
    case EntryKind::Crop: return "crop";
    case EntryKind::Image: return "image";
    case EntryKind::LabelPrompt: return "label_prompt";
    case EntryKind::DescriptorPrompt: return "descriptor_prompt";
    case EntryKind::HybridPrompt: return "hybrid_prompt";
  }
  return "unknown";
}

inline std::optional<EntryKind> parse_entry_kind(std::string_view s) {
  for (auto k : {EntryKind::Crop, EntryKind::Image, EntryKind::LabelPrompt,
                 EntryKind::DescriptorPrompt, EntryKind::HybridPrompt}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline bool is_prompt_kind(EntryKind kind) {
  return kind == EntryKind::LabelPrompt || kind == EntryKind::DescriptorPrompt ||
         kind == EntryKind::HybridPrompt;
}

/// One manifest record. `group` ties related entries together: the source
/// image for crop/image entries, the descriptor source class for hybrid
/// prompts. It is omitted from the JSON when empty.
struct ManifestRecord {
  std::string entry_id;
  EntryKind kind = EntryKind::Image;
  std::string class_id;
  std::string group;
  std::optional<CropRect> rect;  // kind == Crop
  std::optional<std::string> text;  // prompt kinds

  bool operator==(const ManifestRecord&) const = default;
};

struct ArchiveEntry {
  ManifestRecord record;
  EmbeddingVector vector;

  bool operator==(const ArchiveEntry&) const = default;
};

struct EmbeddingArchive {
  std::uint32_t dim = 0;
  std::vector<ArchiveEntry> entries;

  bool operator==(const EmbeddingArchive&) const = default;
};

struct ReadOptions {
  double norm_tolerance = 1e-3;
  bool norm_violation_is_error = false;
};

struct NormWarning {
  std::size_t index = 0;
  std::string entry_id;
  double norm = 0.0;
};

namespace detail {

inline nlohmann::json record_to_json(const ManifestRecord& r) {
  nlohmann::json j;
  j["entry_id"] = r.entry_id;
  j["kind"] = std::string(to_string(r.kind));
  j["class_id"] = r.class_id;
  if (!r.group.empty()) j["group"] = r.group;
  nlohmann::json payload = nlohmann::json::object();
  if (r.kind == EntryKind::Crop) {
    if (!r.rect) throw Error(ErrorCode::InvalidArgument, "crop entry '" + r.entry_id + "' lacks a rect");
    payload = {{"x0", r.rect->x0}, {"y0", r.rect->y0}, {"x1", r.rect->x1}, {"y1", r.rect->y1}};
  } else if (is_prompt_kind(r.kind)) {
    if (!r.text) throw Error(ErrorCode::InvalidArgument, "prompt entry '" + r.entry_id + "' lacks text");
    payload = {{"text", *r.text}};
  }
  j["payload"] = std::move(payload);
  return j;
}

inline ManifestRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedManifest, "manifest record is not an object");
  ManifestRecord r;
  try {
    r.entry_id = j.at("entry_id").get<std::string>();
    const auto kind_name = j.at("kind").get<std::string>();
    auto kind = parse_entry_kind(kind_name);
    if (!kind) throw Error(ErrorCode::MalformedManifest, "unknown kind '" + kind_name + "'");
    r.kind = *kind;
    r.class_id = j.at("class_id").get<std::string>();
    if (j.contains("group")) r.group = j.at("group").get<std::string>();
    const auto& payload = j.at("payload");
    if (r.kind == EntryKind::Crop) {
      r.rect = CropRect{payload.at("x0").get<double>(), payload.at("y0").get<double>(),
                        payload.at("x1").get<double>(), payload.at("y1").get<double>()};
    } else if (is_prompt_kind(r.kind)) {
      r.text = payload.at("text").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedManifest, e.what());
  }
  return r;
}

template <typename UInt>
void put_le(std::ostream& os, UInt v) {
  std::array<char, sizeof(UInt)> buf{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFFu);
  }
  os.write(buf.data(), buf.size());
}

template <typename UInt>
UInt get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<UInt>(v);
}

// Reads exactly n bytes or throws `code`.
inline void read_exact(std::istream& is, char* dst, std::size_t n, ErrorCode code,
                       std::string_view what) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) {
    throw Error(code, std::string(what) + ": expected " + std::to_string(n) + " bytes, got " +
                          std::to_string(is.gcount()));
  }
}

}  // namespace detail

/// Serializes `archive` in EMBA format. Values are narrowed to float32.
/// Returns the number of bytes written.
inline std::uint64_t write_archive(const EmbeddingArchive& archive, std::ostream& os) {
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& e : archive.entries) {
    if (e.vector.dim() != archive.dim) {
      throw Error(ErrorCode::DimMismatch, "entry '" + e.record.entry_id + "' has dim " +
                                              std::to_string(e.vector.dim()) + ", archive dim " +
                                              std::to_string(archive.dim));
    }
    manifest.push_back(detail::record_to_json(e.record));
  }
  const std::string manifest_bytes = manifest.dump();

  os.write(kArchiveMagic.data(), kArchiveMagic.size());
  detail::put_le<std::uint16_t>(os, kArchiveVersion);
  detail::put_le<std::uint32_t>(os, archive.dim);
  detail::put_le<std::uint64_t>(os, archive.entries.size());
  detail::put_le<std::uint8_t>(os, kDtypeFloat32);
  detail::put_le<std::uint64_t>(os, manifest_bytes.size());
  os.write(manifest_bytes.data(), static_cast<std::streamsize>(manifest_bytes.size()));
  for (const auto& e : archive.entries) {
    for (double v : e.vector.values()) {
      detail::put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (!os) throw Error(ErrorCode::IoFailure, "write to archive sink failed");
  return kArchiveHeaderBytes + manifest_bytes.size() +
         static_cast<std::uint64_t>(archive.entries.size()) * archive.dim * 4u;
}

/// Parses an EMBA stream. Vectors are checked against unit norm but never
/// renormalized; violations go to `warnings` or throw NormViolation when
/// options.norm_violation_is_error is set.
inline EmbeddingArchive read_archive(std::istream& is, const ReadOptions& options = {},
                                     std::vector<NormWarning>* warnings = nullptr) {
  std::array<unsigned char, kArchiveHeaderBytes> header{};
  is.read(reinterpret_cast<char*>(header.data()), header.size());
  const auto got = static_cast<std::size_t>(is.gcount());
  if (got < 4 || std::memcmp(header.data(), kArchiveMagic.data(), 4) != 0) {
    throw Error(ErrorCode::BadMagic, "stream does not start with EMBA");
  }
  if (got < header.size()) {
    throw Error(ErrorCode::TruncatedPayload, "header is " + std::to_string(got) + " bytes");
  }
  const auto version = detail::get_le<std::uint16_t>(header.data() + 4);
  if (version != kArchiveVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
  }
  EmbeddingArchive archive;
  archive.dim = detail::get_le<std::uint32_t>(header.data() + 6);
  const auto count = detail::get_le<std::uint64_t>(header.data() + 10);
  const auto dtype = header[18];
  const auto manifest_len = detail::get_le<std::uint64_t>(header.data() + 19);
  if (dtype != kDtypeFloat32) {
    throw Error(ErrorCode::UnsupportedDtype, "dtype tag " + std::to_string(dtype));
  }

  std::string manifest_bytes;
  constexpr std::size_t kChunk = 1 << 16;
  for (std::uint64_t remaining = manifest_len; remaining > 0;) {
    const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, kChunk));
    const auto old = manifest_bytes.size();
    manifest_bytes.resize(old + n);
    detail::read_exact(is, manifest_bytes.data() + old, n, ErrorCode::TruncatedPayload, "manifest");
    remaining -= n;
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_bytes);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedManifest, e.what());
  }
  if (!manifest.is_array()) throw Error(ErrorCode::MalformedManifest, "manifest is not an array");
  if (manifest.size() != count) {
    throw Error(ErrorCode::CountMismatch, "header declares " + std::to_string(count) +
                                              " entries, manifest has " +
                                              std::to_string(manifest.size()));
  }

  archive.entries.reserve(manifest.size());
  std::vector<unsigned char> row(static_cast<std::size_t>(archive.dim) * 4u);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    ArchiveEntry entry;
    entry.record = detail::record_from_json(manifest[i]);
    detail::read_exact(is, reinterpret_cast<char*>(row.data()), row.size(),
                       ErrorCode::TruncatedPayload, "vector " + std::to_string(i));
    std::vector<double> values(archive.dim);
    for (std::uint32_t d = 0; d < archive.dim; ++d) {
      values[d] = std::bit_cast<float>(detail::get_le<std::uint32_t>(row.data() + 4u * d));
    }
    try {
      entry.vector = EmbeddingVector::wrap(std::move(values));
    } catch (const Error&) {
      throw Error(ErrorCode::NormViolation, "entry '" + entry.record.entry_id + "' is non-finite");
    }
    const double n = entry.vector.norm();
    if (archive.dim > 0 && std::abs(n - 1.0) > options.norm_tolerance) {
      if (options.norm_violation_is_error) {
        throw Error(ErrorCode::NormViolation,
                    "entry '" + entry.record.entry_id + "' has norm " + std::to_string(n));
      }
      if (warnings) warnings->push_back({i, entry.record.entry_id, n});
    }
    archive.entries.push_back(std::move(entry));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::TrailingData, "bytes remain after the declared payload");
  }
  return archive;
}

inline std::uint64_t save_archive(const EmbeddingArchive& archive, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for writing");
  return write_archive(archive, os);
}

inline EmbeddingArchive load_archive(const std::string& path, const ReadOptions& options = {},
                                     std::vector<NormWarning>* warnings = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");
  return read_archive(is, options, warnings);
}

}  // namespace setmatch
