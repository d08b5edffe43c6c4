#pragma once

// Newline-delimited JSON readers and writers for the tubekit file formats.
//
// Every non-empty file starts with a header record {"schema": "..."}; each
// following line is one record. Coordinates and scores are written with six
// fractional digits, so a file produced by a writer reloads to the same
// in-memory values and re-serializes byte-identically. An empty file loads
// as an empty collection.
//
//   tubekit.gt.v1     {"video","tube","class","start","boxes":[[x1,y1,x2,y2],...]}
//   tubekit.det.v1    {"video","frame","dets":[[x1,y1,x2,y2,class,score],...]}
//   tubekit.track.v1  {"video","track","start","boxes":[...],"scores":[...]}
//   tubekit.tube.v1   {"video","class","start","boxes":[...],"frame_scores":[...],"score"}
//   tubekit.scores.v1 {"video","track","start","scores":[[s_0,...,s_C-1],...]}
//
// Loaders return records in canonical order and reject malformed input with
// a "source:line" locator. When a DatasetConfig is supplied, class ids are
// checked against its class count.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tubekit/datamodel.hpp"

namespace tubekit {

inline constexpr const char* kGroundTruthSchema = "tubekit.gt.v1";
inline constexpr const char* kDetectionSchema = "tubekit.det.v1";
inline constexpr const char* kTrackSchema = "tubekit.track.v1";
inline constexpr const char* kTubeSchema = "tubekit.tube.v1";
inline constexpr const char* kScoresSchema = "tubekit.scores.v1";

// Fixed six-fractional-digit rendering shared by every writer.
std::string format_fixed6(double value);

std::vector<GroundTruthTube> read_ground_truth(std::istream& in, const std::string& source,
                                               const DatasetConfig* config = nullptr);
std::vector<FrameDetections> read_detections(std::istream& in, const std::string& source,
                                             const DatasetConfig* config = nullptr);
std::vector<Track> read_tracks(std::istream& in, const std::string& source);
std::vector<ActionTube> read_action_tubes(std::istream& in, const std::string& source,
                                          const DatasetConfig* config = nullptr);
std::vector<TrackClassScores> read_track_scores(std::istream& in, const std::string& source);

void write_ground_truth(std::ostream& out, std::vector<GroundTruthTube> gts);
void write_detections(std::ostream& out, std::vector<FrameDetections> dets);
void write_tracks(std::ostream& out, std::vector<Track> tracks);
void write_action_tubes(std::ostream& out, std::vector<ActionTube> tubes);
void write_track_scores(std::ostream& out, std::vector<TrackClassScores> scores);

std::vector<GroundTruthTube> load_ground_truth(const std::filesystem::path& path,
                                               const DatasetConfig* config = nullptr);
std::vector<FrameDetections> load_detections(const std::filesystem::path& path,
                                             const DatasetConfig* config = nullptr);
std::vector<Track> load_tracks(const std::filesystem::path& path);
std::vector<ActionTube> load_action_tubes(const std::filesystem::path& path,
                                          const DatasetConfig* config = nullptr);
std::vector<TrackClassScores> load_track_scores(const std::filesystem::path& path);

void save_ground_truth(const std::vector<GroundTruthTube>& gts, const std::filesystem::path& path);
void save_detections(const std::vector<FrameDetections>& dets, const std::filesystem::path& path);
void save_tracks(const std::vector<Track>& tracks, const std::filesystem::path& path);
void save_action_tubes(const std::vector<ActionTube>& tubes, const std::filesystem::path& path);
void save_track_scores(const std::vector<TrackClassScores>& scores, const std::filesystem::path& path);

// Dataset config as a single JSON object:
// {"name","fps","class_names":[...],"motion_bins":[b1,b2],"motion_offsets":[...]}
DatasetConfig load_config(const std::filesystem::path& path);
void save_config(const DatasetConfig& config, const std::filesystem::path& path);

}  // namespace tubekit
