#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tubekit/geometry.hpp"

namespace tubekit {

// (videoId, tubeId) pair identifying a ground-truth tube or track.
using TubeKey = std::pair<std::string, std::string>;

struct GroundTruthTube {
  std::string video_id;
  std::string tube_id;
  int class_id = 0;
  TubeGeometry geometry;

  TubeKey key() const { return {video_id, tube_id}; }
  friend bool operator==(const GroundTruthTube&, const GroundTruthTube&) = default;
};

struct Track {
  std::string video_id;
  std::string track_id;
  TubeGeometry geometry;
  // Detector confidences aligned 1:1 with geometry.boxes() when present.
  std::optional<std::vector<double>> box_scores;

  TubeKey key() const { return {video_id, track_id}; }
  friend bool operator==(const Track&, const Track&) = default;
};

struct Detection {
  Box box;
  int class_id = 0;
  double score = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

struct FrameDetections {
  std::string video_id;
  int frame = 0;
  std::vector<Detection> entries;
  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

struct ActionTube {
  std::string video_id;
  int class_id = 0;
  TubeGeometry geometry;
  double tube_score = 0.0;
  // Aligned 1:1 with geometry.boxes().
  std::vector<double> frame_scores;
  friend bool operator==(const ActionTube&, const ActionTube&) = default;
};

// Per-frame class scores for one track, used to trim tracks into action tubes.
struct TrackClassScores {
  std::string video_id;
  std::string track_id;
  int start = 0;
  // scores[i][c] is the score of class c at frame start + i.
  std::vector<std::vector<double>> scores;
  friend bool operator==(const TrackClassScores&, const TrackClassScores&) = default;
};

struct DatasetConfig {
  std::string name;
  double fps = 25.0;
  std::vector<std::string> class_names;
  // Two ascending thresholds in (0, 1) separating Large | Medium | Small.
  std::pair<double, double> motion_bins{0.0, 1.0};
  std::vector<int> motion_offsets;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

// Throws ValidationError if bins or offsets violate their invariants.
void validate_config(const DatasetConfig& config);

// "multisports" or "ucf24"; anything else throws InvalidInput.
DatasetConfig builtin_config(const std::string& name);

// Mean of the values; 0 for an empty list.
double mean_score(const std::vector<double>& scores);

// Canonical ordering used by loaders and writers.
void sort_canonical(std::vector<GroundTruthTube>& gts);
void sort_canonical(std::vector<Track>& tracks);
void sort_canonical(std::vector<FrameDetections>& dets);
void sort_canonical(std::vector<ActionTube>& tubes);

}  // namespace tubekit
