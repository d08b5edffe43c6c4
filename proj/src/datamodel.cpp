#include "tubekit/datamodel.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <tuple>

#include "tubekit/error.hpp"

namespace tubekit {

namespace {

const std::vector<int> kMotionOffsets = {4, 8, 16, 24, 36};

std::vector<std::string> numbered_names(const std::string& prefix, int n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%02d", prefix.c_str(), i);
    out.emplace_back(buf);
  }
  return out;
}

}  // namespace

void validate_config(const DatasetConfig& config) {
  const auto [b1, b2] = config.motion_bins;
  if (!(b1 > 0.0 && b1 < b2 && b2 < 1.0)) {
    throw ValidationError("dataset config '" + config.name +
                          "': motion bins must satisfy 0 < b1 < b2 < 1");
  }
  if (!(config.fps > 0.0)) throw ValidationError("dataset config '" + config.name + "': fps must be positive");
  for (int d : config.motion_offsets) {
    if (d <= 0) throw ValidationError("dataset config '" + config.name + "': offsets must be positive");
  }
}

DatasetConfig builtin_config(const std::string& name) {
  DatasetConfig c;
  c.name = name;
  c.fps = 25.0;
  c.motion_offsets = kMotionOffsets;
  if (name == "multisports") {
    // Official evaluation protocol uses 60 of the 66 annotated classes.
    c.class_names = numbered_names("multisports", 60);
    c.motion_bins = {0.21, 0.51};
  } else if (name == "ucf24") {
    c.class_names = {"Basketball",      "BasketballDunk", "Biking",           "CliffDiving",
                     "CricketBowling",  "Diving",         "Fencing",          "FloorGymnastics",
                     "GolfSwing",       "HorseRiding",    "IceDancing",       "LongJump",
                     "PoleVault",       "RopeClimbing",   "SalsaSpin",        "SkateBoarding",
                     "Skiing",          "Skijet",         "SoccerJuggling",   "Surfing",
                     "TennisSwing",     "TrampolineJumping", "VolleyballSpiking", "WalkingWithDog"};
    c.motion_bins = {0.49, 0.66};
  } else {
    throw InvalidInput("unknown dataset '" + name + "' (expected multisports or ucf24)");
  }
  return c;
}

double mean_score(const std::vector<double>& scores) {
  if (scores.empty()) return 0.0;
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

void sort_canonical(std::vector<GroundTruthTube>& gts) {
  std::stable_sort(gts.begin(), gts.end(), [](const auto& a, const auto& b) {
    return std::tie(a.video_id, a.tube_id) < std::tie(b.video_id, b.tube_id);
  });
}

void sort_canonical(std::vector<Track>& tracks) {
  std::stable_sort(tracks.begin(), tracks.end(), [](const auto& a, const auto& b) {
    return std::tie(a.video_id, a.track_id) < std::tie(b.video_id, b.track_id);
  });
}

void sort_canonical(std::vector<FrameDetections>& dets) {
  std::stable_sort(dets.begin(), dets.end(), [](const auto& a, const auto& b) {
    return std::tie(a.video_id, a.frame) < std::tie(b.video_id, b.frame);
  });
}

void sort_canonical(std::vector<ActionTube>& tubes) {
  std::stable_sort(tubes.begin(), tubes.end(), [](const auto& a, const auto& b) {
    const int ae = a.geometry.end();
    const int be = b.geometry.end();
    const int as = a.geometry.start();
    const int bs = b.geometry.start();
    return std::tie(a.video_id, a.class_id, as, ae) < std::tie(b.video_id, b.class_id, bs, be);
  });
}

}  // namespace tubekit
