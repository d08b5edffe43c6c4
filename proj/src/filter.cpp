#include "tubekit/filter.hpp"

#include <map>
#include <string>

#include "tubekit/error.hpp"
#include "tubekit/parallel.hpp"

namespace tubekit {

std::vector<FrameDetections> filter_by_tracks(const std::vector<FrameDetections>& dets,
                                              const std::vector<Track>& tracks, const FilterParams& params,
                                              int jobs) {
  if (!(params.match_iou >= 0.0 && params.match_iou <= 1.0)) throw InvalidInput("match IoU outside [0, 1]");
  if (!(params.score_thresh >= 0.0 && params.score_thresh <= 1.0)) throw InvalidInput("score threshold outside [0, 1]");

  std::map<std::string, std::vector<const Track*>> by_video;
  for (const auto& t : tracks) by_video[t.video_id].push_back(&t);

  std::vector<FrameDetections> out(dets.size());
  parallel_for(dets.size(), jobs, [&](std::size_t i) {
    const FrameDetections& fd = dets[i];
    out[i].video_id = fd.video_id;
    out[i].frame = fd.frame;
    auto it = by_video.find(fd.video_id);
    if (it == by_video.end()) return;
    std::vector<const Box*> track_boxes;
    for (const Track* t : it->second) {
      if (t->geometry.covers(fd.frame)) track_boxes.push_back(&t->geometry.at(fd.frame));
    }
    for (const auto& d : fd.entries) {
      if (d.score < params.score_thresh) continue;
      for (const Box* b : track_boxes) {
        if (iou2d(d.box, *b) >= params.match_iou) {
          out[i].entries.push_back(d);
          break;
        }
      }
    }
  });
  return out;
}

}  // namespace tubekit
