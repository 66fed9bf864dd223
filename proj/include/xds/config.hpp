#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xds/costvolume.hpp"
#include "xds/dp.hpp"
#include "xds/features.hpp"
#include "xds/fill.hpp"

namespace xds {

enum class FeatureSource { Census, B2ft };

struct PipelineConfig {
  DPParams dp;
  FmNormalization normalization = FmNormalization::PerLine;
  FillMode fill_mode = FillMode::Poisson;
  double tau = 2.0;
  FeatureSource feature_source = FeatureSource::Census;
  CensusOptions census;
  int parallelism = 1;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;

  /// Throws UsageError on values outside their domains.
  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& cfg);
/// Unknown keys are rejected; missing keys keep their defaults.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& cfg, const std::filesystem::path& path);

/// XDS_PARALLELISM and XDS_OUT_DIR override the corresponding fields.
void apply_env_overrides(PipelineConfig& cfg);

std::string to_string(FmNormalization s);
std::string to_string(FillMode m);
std::string to_string(FeatureSource s);
FmNormalization parse_normalization(const std::string& s);
FillMode parse_fill_mode(const std::string& s);
FeatureSource parse_feature_source(const std::string& s);

/// One stereo pair of a dataset manifest.  Relative paths resolve against the
/// manifest's directory.
struct DatasetEntry {
  std::string name;
  std::filesystem::path left, right;
  std::optional<std::filesystem::path> gt;
  std::optional<std::filesystem::path> calib;
  std::optional<std::filesystem::path> left_features, right_features;
  std::optional<std::filesystem::path> prior;
  /// Precomputed disparity maps of other methods, by method name.
  std::vector<std::pair<std::string, std::filesystem::path>> methods;
};

/// Manifest: {"entries": [{name, im0, im1, gt?, calib?, features0?, features1?,
/// prior?, methods?}]} or a bare array of entries.  Every referenced file must exist.
std::vector<DatasetEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<DatasetEntry>& entries, const std::filesystem::path& path);

}  // namespace xds
