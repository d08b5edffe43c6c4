#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tubekit/datamodel.hpp"

namespace fixture {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool chance(Rng& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

inline tubekit::Box random_box(Rng& rng, double extent = 100.0, double min_side = 1.0, double max_side = 40.0) {
  const double x = uniform(rng, 0.0, extent), y = uniform(rng, 0.0, extent);
  return {x, y, x + uniform(rng, min_side, max_side), y + uniform(rng, min_side, max_side)};
}

// Box with coordinates snapped to a 1/4 pixel lattice.
inline tubekit::Box lattice_box(Rng& rng, int extent = 40) {
  auto q = [&](int lo, int hi) { return uniform_int(rng, lo, hi) / 4.0; };
  const double x1 = q(0, 4 * extent), y1 = q(0, 4 * extent);
  return {x1, y1, x1 + q(1, 4 * extent / 2), y1 + q(1, 4 * extent / 2)};
}

inline tubekit::Box jitter(Rng& rng, const tubekit::Box& b, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  tubekit::Box out{b.x1 + n(rng), b.y1 + n(rng), b.x2 + n(rng), b.y2 + n(rng)};
  if (out.x2 < out.x1) std::swap(out.x1, out.x2);
  if (out.y2 < out.y1) std::swap(out.y1, out.y2);
  return out;
}

inline tubekit::TubeGeometry random_tube(Rng& rng, int max_len, int max_start, double extent = 100.0) {
  const int len = uniform_int(rng, 1, max_len);
  const int start = uniform_int(rng, 0, max_start);
  std::vector<tubekit::Box> boxes;
  tubekit::Box b = random_box(rng, extent);
  for (int i = 0; i < len; ++i) {
    boxes.push_back(b);
    b = b.translated(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0));
  }
  return {start, boxes};
}

// Scores with occasional ties, drawn from a coarse set.
inline double coarse_score(Rng& rng) { return uniform_int(rng, 1, 12) / 12.0; }

struct FrameInstance {
  std::vector<tubekit::GroundTruthTube> gts;
  std::vector<tubekit::FrameDetections> dets;
};

// At most max_gt GT boxes and max_det detections over a handful of frames.
inline FrameInstance random_frame_instance(Rng& rng, int max_gt = 10, int max_det = 20, int max_classes = 3) {
  FrameInstance inst;
  const int classes = uniform_int(rng, 1, max_classes);
  const int videos = uniform_int(rng, 1, 2);
  int gt_boxes = 0;
  const int gt_budget = uniform_int(rng, 0, max_gt);
  int tube_no = 0;
  while (gt_boxes < gt_budget) {
    const int len = std::min(uniform_int(rng, 1, 3), gt_budget - gt_boxes);
    tubekit::GroundTruthTube gt;
    gt.video_id = "v" + std::to_string(uniform_int(rng, 0, videos - 1));
    gt.tube_id = "t" + std::to_string(tube_no++);
    gt.class_id = uniform_int(rng, 0, classes - 1);
    std::vector<tubekit::Box> boxes;
    tubekit::Box b = random_box(rng, 60.0, 8.0, 30.0);
    for (int i = 0; i < len; ++i) boxes.push_back(b.translated(i * 2.0, 0.0));
    gt.geometry = tubekit::TubeGeometry(uniform_int(rng, 0, 3), boxes);
    gt_boxes += len;
    inst.gts.push_back(std::move(gt));
  }
  std::map<std::pair<std::string, int>, tubekit::FrameDetections> frames;
  const int det_count = uniform_int(rng, 0, max_det);
  for (int i = 0; i < det_count; ++i) {
    tubekit::Detection d;
    d.score = coarse_score(rng);
    std::string video;
    int frame = 0;
    if (!inst.gts.empty() && chance(rng, 0.75)) {
      const auto& gt = inst.gts[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(inst.gts.size()) - 1))];
      frame = uniform_int(rng, gt.geometry.start(), gt.geometry.end());
      video = gt.video_id;
      d.box = jitter(rng, gt.geometry.at(frame), uniform(rng, 0.0, 4.0));
      d.class_id = chance(rng, 0.8) ? gt.class_id : uniform_int(rng, 0, classes - 1);
    } else {
      video = "v" + std::to_string(uniform_int(rng, 0, videos - 1));
      frame = uniform_int(rng, 0, 5);
      d.box = random_box(rng, 60.0, 8.0, 30.0);
      d.class_id = uniform_int(rng, 0, classes - 1);
    }
    auto& fd = frames[{video, frame}];
    fd.video_id = video;
    fd.frame = frame;
    fd.entries.push_back(d);
  }
  for (auto& [k, fd] : frames) inst.dets.push_back(std::move(fd));
  return inst;
}

struct VideoInstance {
  std::vector<tubekit::GroundTruthTube> gts;
  std::vector<tubekit::ActionTube> tubes;
};

inline VideoInstance random_video_instance(Rng& rng, int max_gt = 10, int max_det = 20, int max_classes = 3) {
  VideoInstance inst;
  const int classes = uniform_int(rng, 1, max_classes);
  const int videos = uniform_int(rng, 1, 3);
  const int gt_count = uniform_int(rng, 0, max_gt);
  for (int i = 0; i < gt_count; ++i) {
    tubekit::GroundTruthTube gt;
    gt.video_id = "v" + std::to_string(uniform_int(rng, 0, videos - 1));
    gt.tube_id = "t" + std::to_string(i);
    gt.class_id = uniform_int(rng, 0, classes - 1);
    gt.geometry = random_tube(rng, 12, 10, 60.0);
    inst.gts.push_back(std::move(gt));
  }
  const int det_count = uniform_int(rng, 0, max_det);
  for (int i = 0; i < det_count; ++i) {
    tubekit::ActionTube t;
    t.tube_score = coarse_score(rng);
    if (!inst.gts.empty() && chance(rng, 0.75)) {
      const auto& gt = inst.gts[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(inst.gts.size()) - 1))];
      t.video_id = gt.video_id;
      t.class_id = chance(rng, 0.8) ? gt.class_id : uniform_int(rng, 0, classes - 1);
      const int first = uniform_int(rng, gt.geometry.start() - 2, gt.geometry.end());
      const int last = uniform_int(rng, std::max(first, gt.geometry.start()), gt.geometry.end() + 2);
      std::vector<tubekit::Box> boxes;
      for (int f = std::max(first, 0); f <= last; ++f) boxes.push_back(jitter(rng, gt.geometry.clamped_at(f), 2.0));
      t.geometry = tubekit::TubeGeometry(std::max(first, 0), boxes);
    } else {
      t.video_id = "v" + std::to_string(uniform_int(rng, 0, videos - 1));
      t.class_id = uniform_int(rng, 0, classes - 1);
      t.geometry = random_tube(rng, 12, 10, 60.0);
    }
    t.frame_scores.assign(t.geometry.length(), t.tube_score);
    inst.tubes.push_back(std::move(t));
  }
  return inst;
}

// Exactly representable scores k/256.
inline std::vector<double> dyadic_scores(Rng& rng, int length) {
  std::vector<double> s(static_cast<std::size_t>(length));
  for (auto& v : s) v = uniform_int(rng, 0, 256) / 256.0;
  return s;
}

}  // namespace fixture
