#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tubekit/datamodel.hpp"

namespace tubekit {

// Ordered from fastest to slowest motion.
enum class MotionCategory { Large = 0, Medium = 1, Small = 2 };

inline constexpr MotionCategory kMotionCategories[] = {MotionCategory::Large, MotionCategory::Medium,
                                                       MotionCategory::Small};

const char* to_string(MotionCategory c);
// "large" / "medium" / "small", case-insensitive. Throws InvalidInput otherwise.
MotionCategory parse_motion_category(const std::string& s);

struct MotionIouResult {
  double value = 1.0;
  std::vector<int> offsets_used;
};

// Two-level mean of same-tube box IoUs: for each usable offset d (length > d)
// the mean of iou2d(box_t, box_{t+d}) over all windows, then the mean over
// usable offsets. A tube shorter than every offset reports 1.0 and no offsets.
// Throws InvalidInput if offsets is empty or holds a non-positive value.
MotionIouResult motion_iou(const TubeGeometry& tube, const std::vector<int>& offsets);

// [0, b1] -> Large, (b1, b2] -> Medium, (b2, 1] -> Small.
MotionCategory classify_motion(double value, const DatasetConfig& config);

struct MotionLabel {
  double motion_iou = 1.0;
  MotionCategory category = MotionCategory::Small;
  std::vector<int> offsets_used;
  friend bool operator==(const MotionLabel&, const MotionLabel&) = default;
};

using MotionLabeling = std::map<TubeKey, MotionLabel>;

// Labels every ground-truth tube with the config's offsets and bins.
// jobs > 1 spreads tubes over worker threads; the result does not depend on it.
MotionLabeling label_dataset(const std::vector<GroundTruthTube>& gts, const DatasetConfig& config, int jobs = 1);

struct CdfPoint {
  double edge = 0.0;
  double cumulative_fraction = 0.0;
};

struct MotionCdf {
  std::vector<CdfPoint> points;
  // Tubes with length <= the pair offset carry no pair and are left out.
  std::size_t excluded_tubes = 0;
  std::size_t included_tubes = 0;
};

// Mean IoU over every in-tube pair (t, t + offset); nullopt if the tube is too short.
std::optional<double> pair_iou(const TubeGeometry& tube, int pair_offset_frames);

// Cumulative fraction of included tubes whose pair IoU is <= each edge.
// Throws InvalidInput on an empty or non-ascending edge list or offset < 1.
MotionCdf motion_cdf(const std::vector<GroundTruthTube>& gts, int pair_offset_frames,
                     const std::vector<double>& edges);

// CSV with header "edge,cumulative_fraction,excluded_tubes", six decimals.
std::string motion_cdf_csv(const MotionCdf& cdf);

// Thresholds splitting the values into three groups of (near) equal size.
std::pair<double, double> tertile_thresholds(std::vector<double> values);

// JSON document {"schema":"tubekit.motion.v1","dataset":...,"labels":[...]}.
std::string motion_labeling_json(const MotionLabeling& labels, const DatasetConfig& config);
void save_motion_labeling(const MotionLabeling& labels, const DatasetConfig& config,
                          const std::filesystem::path& path);
MotionLabeling load_motion_labeling(const std::filesystem::path& path);

}  // namespace tubekit
