#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xds/config.hpp"
#include "xds/metrics.hpp"
#include "xds/synth.hpp"

namespace xds {

/// Width-doubled feature volumes ready for the cost volume.
struct FeaturePair {
  FeatureVolume left;
  FeatureVolume right;
};

FeaturePair census_features(const ImageF& left, const ImageF& right, const CensusOptions& opts);
/// Loads B2FT volumes, checks them against the geometry and doubles them if needed.
FeaturePair load_feature_pair(const std::filesystem::path& left, const std::filesystem::path& right,
                              const EpipolarGeometry& geom);

/// Left-view classification of the cyclopean solution.
struct LeftMasks {
  /// No trusted match lands on the pixel.
  Mask occluded;
  /// No trusted match, but a homogeneous cell lands on the pixel.
  Mask homogeneous;
  /// A trusted match lands on the pixel.
  Mask data;
};
LeftMasks left_view_masks(const CyclopeanSolution& sol);

/// Full disparity (2 * refined d) on the 2N x H cyclopean grid; +inf where
/// the cell is not a data cell.
Raster<float> cyclopean_raster(const CyclopeanSolution& sol);

struct MatchResult {
  CyclopeanSolution cyclopean;
  DisparityMap disparity;
  LeftMasks masks;
  double seconds = 0.0;
};

MatchResult run_match(const FeaturePair& features, const EpipolarGeometry& geom, const PipelineConfig& cfg);

/// Geometry for images without a calibration file.
EpipolarGeometry geometry_for(int width, int height, int max_full_disparity);

/// Stand-in for a monocular network: GT min-max normalised, blurred, bent by a
/// gamma curve and a gentle ramp, plus mild noise.  Deterministic in seed.
Raster<float> synthetic_prior(const DisparityMap& gt, std::uint64_t seed);

/// Recovery scores of a left-view estimate against a generated scene.
struct SceneScore {
  /// Fraction of GT-visible left pixels whose estimate equals GT exactly.
  double exact = 0.0;
  /// Fraction of GT-visible left pixels estimated within 0.5 px.
  double within_half = 0.0;
  /// IoU between the GT left occlusion mask and the estimate's invalid pixels.
  double occlusion_iou = 1.0;
  /// RMSE over GT-visible pixels the estimate covers.
  double rmse = 0.0;
  std::size_t visible = 0;
  std::size_t covered = 0;
};
SceneScore score_scene(const DisparityMap& est, const GroundTruth& gt);

nlohmann::json to_json(const MetricReport& r);
nlohmann::json to_json(const SceneSpec& s);
SceneSpec scene_from_json(const nlohmann::json& j);

struct CompareRow {
  std::string entry;
  std::string method;
  MetricReport report;
};

/// Evaluates every method of every entry against its GT.  Entries with images
/// and a prior also get "B2FS" (match + fill) and "prior_affine" (the prior
/// min/max-mapped onto the GT range).  Per-entry outputs go to out/<name>/.
std::vector<CompareRow> run_compare(const std::vector<DatasetEntry>& entries, const PipelineConfig& cfg);

/// Aligned-column text table.
std::string format_table(const std::vector<CompareRow>& rows);

/// Writes a generated scene as a dataset entry (images, GT, masks, calib,
/// prior, spec sidecar) and returns it.
DatasetEntry write_scene(const SynthScene& scene, const SceneSpec& spec, const std::filesystem::path& dir,
                         const std::string& name);

}  // namespace xds
