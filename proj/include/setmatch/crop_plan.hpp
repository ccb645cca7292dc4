#pragma once

// Seeded random-crop geometry. Every draw comes from Philox4x32-10 keyed by
// fnv1a64(image_id) ^ seed, with the counter encoding (rect index, attempt,
// purpose), so a plan depends only on its inputs and never on call order,
// thread count or platform.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "setmatch/embedding.hpp"
#include "setmatch/error.hpp"

namespace setmatch {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3").
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(Key key) : key_(key) {}
  explicit Philox4x32(std::uint64_t key)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  Key key_;
};

/// 53-bit uniform in [0, 1) from two 32-bit words.
inline double unit_double(std::uint32_t a, std::uint32_t b) {
  return (static_cast<double>(a >> 5) * 67108864.0 + static_cast<double>(b >> 6)) *
         (1.0 / 9007199254740992.0);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct CropPlanConfig {
  std::size_t count = 9;
  double min_scale = 0.10;
  double max_scale = 0.75;
  double aspect_lo = 3.0 / 4.0;
  double aspect_hi = 4.0 / 3.0;
  bool include_full_image = false;

  void validate() const {
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "crop count must be >= 1");
    if (!(min_scale > 0.0 && min_scale <= max_scale && max_scale <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "crop scales must satisfy 0 < min <= max <= 1");
    }
    if (!(aspect_lo > 0.0 && aspect_lo <= aspect_hi && std::isfinite(aspect_hi))) {
      throw Error(ErrorCode::InvalidArgument, "aspect bounds must satisfy 0 < lo <= hi");
    }
  }
};

struct CropPlan {
  std::string image_id;
  std::uint64_t seed = 0;
  std::vector<CropRect> rects;
  std::size_t square_fallbacks = 0;  // rects whose aspect draws never fit

  bool operator==(const CropPlan& o) const {
    return image_id == o.image_id && seed == o.seed && rects == o.rects;
  }
};

inline constexpr int kCropAspectAttempts = 32;

/// Each rect: area ~ U[min_scale, max_scale], log-aspect ~ U[ln lo, ln hi],
/// width = sqrt(area * aspect), height = sqrt(area / aspect). Aspect draws
/// that do not fit the unit square are retried up to 32 times before falling
/// back to a square of the drawn area. The offset is uniform over all
/// positions that keep the rect inside the image.
inline CropPlan generate_crop_plan(std::string image_id, std::uint64_t seed,
                                   const CropPlanConfig& config = {}) {
  config.validate();
  const Philox4x32 rng(fnv1a64(image_id) ^ seed);
  const double log_lo = std::log(config.aspect_lo);
  const double log_hi = std::log(config.aspect_hi);

  CropPlan plan;
  plan.image_id = std::move(image_id);
  plan.seed = seed;
  if (config.include_full_image) plan.rects.push_back(CropRect{0.0, 0.0, 1.0, 1.0});

  for (std::uint32_t index = 0; index < config.count; ++index) {
    double w = 0.0;
    double h = 0.0;
    double area = 0.0;
    std::uint32_t attempt = 0;
    bool fits = false;
    for (; attempt < static_cast<std::uint32_t>(kCropAspectAttempts); ++attempt) {
      const auto r = rng({index, attempt, 0u, 0u});
      area = config.min_scale + (config.max_scale - config.min_scale) * unit_double(r[0], r[1]);
      const double aspect = std::exp(log_lo + (log_hi - log_lo) * unit_double(r[2], r[3]));
      w = std::sqrt(area * aspect);
      h = std::sqrt(area / aspect);
      if (w <= 1.0 && h <= 1.0) {
        fits = true;
        break;
      }
    }
    if (!fits) {
      // Keeps the area of the last draw; a square of area <= 1 always fits.
      w = h = std::sqrt(area);
      ++plan.square_fallbacks;
      attempt = kCropAspectAttempts - 1;
    }
    const auto p = rng({index, attempt, 1u, 0u});
    const double x0 = (1.0 - w) * unit_double(p[0], p[1]);
    const double y0 = (1.0 - h) * unit_double(p[2], p[3]);
    plan.rects.push_back(CropRect{x0, y0, std::min(1.0, x0 + w), std::min(1.0, y0 + h)});
  }
  return plan;
}

inline nlohmann::json to_json(const CropPlan& plan) {
  nlohmann::json rects = nlohmann::json::array();
  for (const auto& r : plan.rects) rects.push_back({{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}});
  return {{"image_id", plan.image_id}, {"seed", plan.seed}, {"rects", std::move(rects)}};
}

inline CropPlan crop_plan_from_json(const nlohmann::json& j) {
  try {
    CropPlan plan;
    plan.image_id = j.at("image_id").get<std::string>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& r : j.at("rects")) {
      plan.rects.push_back(CropRect{r.at("x0").get<double>(), r.at("y0").get<double>(),
                                    r.at("x1").get<double>(), r.at("y1").get<double>()});
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("crop plan: ") + e.what());
  }
}

/// The crop-plan file: a JSON array of {image_id, seed, rects}.
inline nlohmann::json crop_plans_to_json(const std::vector<CropPlan>& plans) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : plans) out.push_back(to_json(p));
  return out;
}

inline std::vector<CropPlan> crop_plans_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, "crop plan file must be a JSON array");
  std::vector<CropPlan> plans;
  for (const auto& item : j) plans.push_back(crop_plan_from_json(item));
  return plans;
}

}  // namespace setmatch
