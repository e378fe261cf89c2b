#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nslf/render/angle_eval.hpp"

namespace nslf {

inline constexpr int kMetricsSchemaVersion = 1;

struct FrameMetrics {
  std::size_t index = 0;
  double timestamp = 0.0;
  std::optional<double> psnr;  // absent when no pixel is valid in both images
  std::optional<double> ssim;
  std::size_t covered_pixels = 0;
  std::size_t uncovered_pixels = 0;
  double render_seconds = 0.0;
};

struct MetricsReport {
  int schema_version = kMetricsSchemaVersion;
  std::string model;
  std::vector<FrameMetrics> frames;
  std::vector<AngleBucket> buckets;
  std::size_t angle_evaluated_pixels = 0;
  std::size_t angle_unmatched_pixels = 0;

  // aggregates, recomputed by finalize()
  std::optional<double> mean_psnr;
  std::optional<double> mean_ssim;
  double mean_render_seconds = 0.0;

  /// Recomputes the aggregates from the per-frame entries.
  void finalize();

  nlohmann::json to_json() const;
  /// Throws DataError on an unknown schema version or missing fields.
  static MetricsReport from_json(const nlohmann::json& j);
  /// Human-readable form, generated from to_json().
  std::string to_text() const;
};

}  // namespace nslf
