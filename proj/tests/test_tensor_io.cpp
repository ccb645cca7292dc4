#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "setmatch/archive.hpp"
#include "setmatch/embedding.hpp"
#include "test_support.hpp"

using namespace setmatch;

namespace {

std::string serialize(const EmbeddingArchive& a) {
  std::ostringstream os(std::ios::binary);
  write_archive(a, os);
  return os.str();
}

EmbeddingArchive parse(const std::string& bytes, const ReadOptions& opts = {},
                       std::vector<NormWarning>* warnings = nullptr) {
  std::istringstream is(bytes, std::ios::binary);
  return read_archive(is, opts, warnings);
}

ErrorCode parse_error(const std::string& bytes) {
  try {
    parse(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

EmbeddingArchive random_archive(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim_d(1, 16), count_d(0, 12), kind_d(0, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EmbeddingArchive a;
  a.dim = static_cast<std::uint32_t>(dim_d(rng));
  const int count = count_d(rng);
  for (int i = 0; i < count; ++i) {
    ManifestRecord r;
    r.entry_id = "e" + std::to_string(i);
    r.kind = static_cast<EntryKind>(kind_d(rng));
    r.class_id = "class_" + std::to_string(i % 3);
    if (i % 2) r.group = "img" + std::to_string(i / 2);
    if (r.kind == EntryKind::Crop) {
      const double x0 = u(rng) * 0.5, y0 = u(rng) * 0.5;
      r.rect = CropRect{x0, y0, x0 + 0.25 + u(rng) * 0.25, y0 + 0.5};
    } else if (is_prompt_kind(r.kind)) {
      r.text = "a photo of a thing which has \"quoted\" \xc3\xa9 text " + std::to_string(i);
    }
    a.entries.push_back({r, fixtures::random_unit_f32(rng, a.dim)});
  }
  return a;
}

}  // namespace

TEST(Normalize, ThreeFourFive) {
  const auto v = normalize({3.0, 4.0});
  EXPECT_DOUBLE_EQ(v[0], 0.6);
  EXPECT_DOUBLE_EQ(v[1], 0.8);
}

TEST(Normalize, AlreadyUnit) {
  const auto v = normalize({1.0, 0.0, 0.0});
  EXPECT_EQ(v, EmbeddingVector::wrap({1.0, 0.0, 0.0}));
}

TEST(Normalize, ZeroAndNonFiniteRejected) {
  try {
    normalize({0.0, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
  }
  EXPECT_THROW(normalize({1.0, std::nan("")}), Error);
  EXPECT_THROW(normalize({INFINITY, 1.0}), Error);
}

TEST(Normalize, IdempotentAndUnitNorm) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> raw(1 + t % 17);
    for (auto& x : raw) x = u(rng);
    const auto once = normalize(raw);
    const auto twice = normalize(once);
    EXPECT_NEAR(once.norm(), 1.0, 1e-12);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      EXPECT_NEAR(once[i], twice[i], 1e-7);
      EXPECT_GT(once[i] * raw[i], -1e-300);  // direction preserved
    }
  }
}

TEST(FeatureSet, Invariants) {
  EXPECT_THROW(FeatureSet({}, "x"), Error);
  EXPECT_THROW(FeatureSet({normalize({1.0, 0.0}), normalize({1.0, 0.0, 0.0})}), Error);
  EXPECT_THROW(FeatureSet({normalize({1.0, 0.0})}, "x", std::vector<CropRect>(2)), Error);
}

TEST(DescriptorSet, DeduplicatesTexts) {
  DescriptorSet d("cat", {"fluffy tail", "whiskers", "fluffy tail"},
                  {normalize({1.0, 0.0}), normalize({0.0, 1.0}), normalize({1.0, 1.0})});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.texts()[1], "whiskers");
  EXPECT_EQ(d.embeddings()[0], normalize({1.0, 0.0}));
  EXPECT_THROW(DescriptorSet("cat", {}, {}), Error);
  EXPECT_THROW(DescriptorSet("cat", {"a"}, {}), Error);
}

TEST(Archive, EmptyArchiveIsHeaderAndManifestOnly) {
  EmbeddingArchive a;
  a.dim = 512;
  const auto bytes = serialize(a);
  ASSERT_EQ(bytes.size(), kArchiveHeaderBytes + 2);  // manifest "[]"
  EXPECT_EQ(bytes.substr(0, 4), "EMBA");
  EXPECT_EQ(bytes.substr(27), "[]");
  EXPECT_EQ(parse(bytes), a);
}

TEST(Archive, HeaderLayoutIsLittleEndian) {
  EmbeddingArchive a;
  a.dim = 2;
  a.entries.push_back({{"e0", EntryKind::Image, "cat", "img0", {}, {}}, EmbeddingVector::wrap({1.0, 0.0})});
  const auto bytes = serialize(a);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  EXPECT_EQ(p[4], 1);
  EXPECT_EQ(p[5], 0);
  EXPECT_EQ(p[6], 2);
  EXPECT_EQ(p[7] | p[8] | p[9], 0);
  EXPECT_EQ(p[10], 1);
  for (int i = 11; i < 18; ++i) EXPECT_EQ(p[i], 0);
  EXPECT_EQ(p[18], 0);  // float32 tag
  std::uint64_t manifest_len = 0;
  for (int i = 0; i < 8; ++i) manifest_len |= static_cast<std::uint64_t>(p[19 + i]) << (8 * i);
  ASSERT_EQ(bytes.size(), kArchiveHeaderBytes + manifest_len + 8);
  // Payload is exactly 1.0f, 0.0f little-endian.
  const std::string payload = bytes.substr(kArchiveHeaderBytes + manifest_len);
  EXPECT_EQ(payload, std::string("\x00\x00\x80\x3f\x00\x00\x00\x00", 8));
  const auto manifest = nlohmann::json::parse(bytes.substr(kArchiveHeaderBytes, manifest_len));
  EXPECT_EQ(manifest[0]["kind"], "image");
  EXPECT_EQ(manifest[0]["group"], "img0");
}

TEST(Archive, RandomRoundTripIsBitExact) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_archive(rng);
    const auto bytes = serialize(a);
    const auto back = parse(bytes);
    EXPECT_EQ(back, a);
    EXPECT_EQ(serialize(back), bytes);
  }
}

TEST(Archive, WriteRejectsDimMismatch) {
  EmbeddingArchive a;
  a.dim = 3;
  a.entries.push_back({{"e0", EntryKind::Image, "", "", {}, {}}, normalize({1.0, 0.0})});
  std::ostringstream os;
  try {
    write_archive(a, os);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
  }
}

TEST(Archive, CorruptedHeadersRaiseSpecificErrors) {
  std::mt19937_64 rng(5);
  EmbeddingArchive a;
  a.dim = 4;
  for (int i = 0; i < 3; ++i) {
    a.entries.push_back({{"e" + std::to_string(i), EntryKind::Image, "c", "", {}, {}}, fixtures::random_unit_f32(rng, 4)});
  }
  const auto good = serialize(a);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(parse_error(bad_magic), ErrorCode::BadMagic);
  EXPECT_EQ(parse_error("EM"), ErrorCode::BadMagic);

  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(parse_error(bad_version), ErrorCode::UnsupportedVersion);

  auto bad_dtype = good;
  bad_dtype[18] = 1;
  EXPECT_EQ(parse_error(bad_dtype), ErrorCode::UnsupportedDtype);

  EXPECT_EQ(parse_error(good.substr(0, 20)), ErrorCode::TruncatedPayload);
  EXPECT_EQ(parse_error(good.substr(0, 40)), ErrorCode::TruncatedPayload);
  EXPECT_EQ(parse_error(good.substr(0, good.size() - 1)), ErrorCode::TruncatedPayload);
  EXPECT_EQ(parse_error(good + "x"), ErrorCode::TrailingData);

  auto bad_count = good;
  bad_count[10] = 4;
  EXPECT_EQ(parse_error(bad_count), ErrorCode::CountMismatch);

  auto bad_json = good;
  bad_json[kArchiveHeaderBytes] = '{';
  EXPECT_EQ(parse_error(bad_json), ErrorCode::MalformedManifest);
}

TEST(Archive, NormViolationWarnsOrFails) {
  EmbeddingArchive a;
  a.dim = 2;
  a.entries.push_back({{"ok", EntryKind::Image, "", "", {}, {}}, EmbeddingVector::wrap({1.0, 0.0})});
  a.entries.push_back({{"long", EntryKind::Image, "", "", {}, {}}, EmbeddingVector::wrap({1.0, 1.0})});
  const auto bytes = serialize(a);

  std::vector<NormWarning> warnings;
  const auto back = parse(bytes, {}, &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings[0].entry_id, "long");
  EXPECT_NEAR(warnings[0].norm, std::sqrt(2.0), 1e-6);
  EXPECT_EQ(back.entries[1].vector, EmbeddingVector::wrap({1.0, 1.0}));  // not renormalized

  ReadOptions strict;
  strict.norm_violation_is_error = true;
  try {
    parse(bytes, strict);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NormViolation);
  }
}
