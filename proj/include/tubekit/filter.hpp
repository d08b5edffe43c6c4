#pragma once

#include <vector>

#include "tubekit/datamodel.hpp"

namespace tubekit {

struct FilterParams {
  double match_iou = 0.5;
  double score_thresh = 0.05;
};

// Keeps a detection iff its score is >= score_thresh and some track of the same
// video has a box at the same frame with iou2d >= match_iou. Class labels play
// no part in the match. Frame records are kept (possibly empty) and survivors
// keep their order. Throws InvalidInput for parameters outside [0, 1].
std::vector<FrameDetections> filter_by_tracks(const std::vector<FrameDetections>& dets,
                                              const std::vector<Track>& tracks, const FilterParams& params,
                                              int jobs = 1);

}  // namespace tubekit
