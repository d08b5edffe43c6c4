#pragma once

#include <map>
#include <string>
#include <vector>

#include "tubekit/datamodel.hpp"

namespace tubekit {

struct LinkParams {
  double iou_gate = 0.1;
  int max_misses = 5;
  int min_len = 8;
};

struct TrimParams {
  double alpha = 3.0;  // cost per label change
  int min_segment_length = 4;
};

// An untrimmed path hypothesis. Frames where the path found no detection hold
// a copy of the last matched box with score 0.
struct PathState {
  int class_id = 0;
  TubeGeometry geometry;
  std::vector<double> frame_scores;
  int last_matched_frame = 0;
  int miss_count = 0;
  std::size_t creation_index = 0;

  double mean_score() const { return tubekit::mean_score(frame_scores); }
};

// Greedy per-class linking over one video's frames (sorted by frame; frames
// absent from the list count as empty). At each frame, live paths in order of
// mean score claim the best-scoring unclaimed detection whose IoU with their
// last box is >= iou_gate; unclaimed detections seed new paths. Paths that
// exceed max_misses consecutive misses end, dropping the trailing placeholders;
// paths shorter than min_len are discarded. Output ordered by start frame,
// then creation.
std::vector<PathState> greedy_link(const std::vector<FrameDetections>& frames, int class_id,
                                   const LinkParams& params);

struct Segment {
  int start = 0;  // inclusive, index into the score sequence
  int end = 0;    // inclusive
  friend bool operator==(const Segment&, const Segment&) = default;
};

// Exact 2-state labeling maximizing sum(label ? s : 1 - s) - alpha * changes.
// Ties pick label 0 at the last frame and otherwise keep the current label.
std::vector<int> optimal_labeling(const std::vector<double>& frame_scores, double alpha);

// Energy of a given 0/1 labeling under the trimming objective.
double labeling_energy(const std::vector<double>& frame_scores, const std::vector<int>& labels, double alpha);

// Maximal runs of label 1 in the optimal labeling with length >= min_segment_length.
std::vector<Segment> trim_path(const std::vector<double>& frame_scores, const TrimParams& params);

// Links and trims every (video, class) independently. Output is sorted by
// (video, class, start frame).
std::vector<ActionTube> build_tubes(const std::vector<FrameDetections>& dets, const LinkParams& link,
                                    const TrimParams& trim, int jobs = 1);

// Trims each track per class on that class's score sequence; each kept
// segment becomes an action tube carved from the track geometry. Throws
// InvalidInput if a track frame has no score vector.
std::vector<ActionTube> tracks_to_tubes(const std::vector<Track>& tracks, const std::vector<TrackClassScores>& scores,
                                        const TrimParams& trim, int jobs = 1);

}  // namespace tubekit
