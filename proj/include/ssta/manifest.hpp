#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "ssta/attack.hpp"
#include "ssta/metrics.hpp"

namespace ssta {

inline constexpr const char* kManifestSchema = "ssta-manifest/1";
inline constexpr const char* kToolVersion = "0.1.0";

nlohmann::json config_to_json(const AttackConfig& cfg);
AttackConfig config_from_json(const nlohmann::json& j);

/// psnr's infinity sentinel serializes as null.
nlohmann::json metric_report_to_json(const MetricReport& report);

/// One attacked image, as recorded in a run manifest.
struct ImageRecord {
  std::string input;
  int label = 0;
  int pred_before = 0;
  int pred_after = 0;
  bool success = false;
  int iterations = 0;
  int final_tau = 0;
  double final_xi = 0.0;
  double mask_area_fraction = 0.0;
  MetricReport metrics;
  std::map<std::string, std::string> outputs;
};

nlohmann::json image_record_to_json(const ImageRecord& rec);

/// Success rate plus per-metric means over the fooled examples (finite
/// values only; a metric with no finite fooled value serializes null).
nlohmann::json aggregate_records(const std::vector<ImageRecord>& records);

nlohmann::json new_manifest(const std::string& command);

void write_manifest(const nlohmann::json& manifest, const std::string& path);

/// Parse a manifest and recompute its aggregate blocks from the per-image
/// records; any disagreement throws format_error.
nlohmann::json load_and_verify_manifest(const std::string& path);

}  // namespace ssta
