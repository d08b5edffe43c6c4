#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tubekit/datamodel.hpp"
#include "tubekit/motion.hpp"
#include "tubekit/tensor.hpp"

namespace tubekit {

struct DetectionNoise {
  double jitter_sigma = 0.0;  // pixels, per coordinate
  double drop_rate = 0.0;     // probability a GT box yields no detection
  double spurious_rate = 0.0; // probability per frame of one random false detection
};

struct TrackNoise {
  double fragmentation_rate = 0.0;  // probability per frame that a track is cut
};

// Seeded synthetic fixture. Tubes move horizontally at constant velocity in
// their own lane; the velocity is solved so that the tube's motion IoU hits
// its target. Targets are assigned cyclically.
struct SynthSpec {
  std::uint64_t seed = 7;
  int num_videos = 20;
  int frames_per_video = 96;
  int num_classes = 3;
  int tubes_per_video = 3;
  int min_tube_length = 40;
  int max_tube_length = 80;
  std::vector<double> motion_targets = {0.1, 0.35, 0.8, 1.0};
  double box_width = 64.0;
  double box_height = 128.0;
  double image_width = 1920.0;
  double image_height = 1080.0;
  // Motion bins and offsets come from this builtin dataset.
  std::string dataset = "multisports";
  DetectionNoise detection;
  TrackNoise track;
  // Random feature clip written for the first video, frames [0, feature_frames).
  int feature_frames = 16;
  int feature_channels = 576;
  double feature_stride = 240.0;
};

// Throws ValidationError when a field violates its invariant.
void validate_synth_spec(const SynthSpec& spec);

// Parses the JSON spec document; absent fields keep their defaults.
SynthSpec parse_synth_spec(const std::string& json_text, const std::string& source = "<spec>");
SynthSpec load_synth_spec(const std::filesystem::path& path);
std::string synth_spec_json(const SynthSpec& spec);

struct PlantedTube {
  std::string video_id;
  std::string tube_id;
  int class_id = 0;
  double motion_target = 1.0;
  double motion_iou = 1.0;
  MotionCategory category = MotionCategory::Small;
  double velocity = 0.0;  // pixels per frame, signed
};

struct SynthOutput {
  DatasetConfig config;
  std::vector<GroundTruthTube> gts;
  std::vector<FrameDetections> detections;
  std::vector<Track> tracks;
  std::vector<TrackClassScores> track_scores;
  std::vector<PlantedTube> oracle;
  Tensor features;  // T x C x H x W for the first video
  double feature_stride = 16.0;
};

// Deterministic under spec.seed, independent of jobs. Throws InvalidInput
// naming the tube when a motion target cannot be realized inside the image.
SynthOutput generate(const SynthSpec& spec, int jobs = 1);

// Horizontal speed (pixels/frame) at which a spec.box_width x spec.box_height
// box moving over `length` frames reaches the target motion IoU. Throws
// InvalidInput if infeasible.
double solve_velocity(const SynthSpec& spec, const DatasetConfig& config, int length, double target,
                      const std::string& tube_name);

std::string oracle_json(const SynthOutput& out);

// Writes gt.ndjson, det.ndjson, tracks.ndjson, scores.ndjson, config.json,
// oracle.json and features.tkt into dir (created if needed).
void write_synth(const SynthOutput& out, const std::filesystem::path& dir);

}  // namespace tubekit
