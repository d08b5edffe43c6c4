#include "tubekit/linker.hpp"

#include <algorithm>
#include <array>
#include <iterator>
#include <map>
#include <optional>
#include <set>

#include "tubekit/error.hpp"
#include "tubekit/io.hpp"
#include "tubekit/parallel.hpp"

namespace tubekit {

namespace {

struct WorkingPath {
  int start = 0;
  std::vector<Box> boxes;
  std::vector<double> scores;
  double score_sum = 0.0;
  int last_matched = 0;
  int misses = 0;
  std::size_t creation = 0;

  double mean() const { return score_sum / static_cast<double>(scores.size()); }

  void drop_trailing_misses() {
    const auto keep = boxes.size() - static_cast<std::size_t>(misses);
    boxes.resize(keep);
    scores.resize(keep);
    misses = 0;
  }
};

PathState finish(WorkingPath&& w, int class_id) {
  PathState p;
  p.class_id = class_id;
  p.geometry = TubeGeometry(w.start, std::move(w.boxes));
  p.frame_scores = std::move(w.scores);
  p.last_matched_frame = w.last_matched;
  p.miss_count = w.misses;
  p.creation_index = w.creation;
  return p;
}

void check_trim(const TrimParams& params) {
  if (!(params.alpha >= 0.0)) throw InvalidInput("trim alpha must be >= 0");
  if (params.min_segment_length < 1) throw InvalidInput("minimum segment length must be >= 1");
}

ActionTube carve(const std::string& video, int class_id, const TubeGeometry& geometry,
                 const std::vector<double>& scores, const Segment& seg) {
  ActionTube t;
  t.video_id = video;
  t.class_id = class_id;
  t.geometry = geometry.slice(geometry.start() + seg.start, geometry.start() + seg.end);
  t.frame_scores.assign(scores.begin() + seg.start, scores.begin() + seg.end + 1);
  t.tube_score = mean_score(t.frame_scores);
  return t;
}

}  // namespace

std::vector<PathState> greedy_link(const std::vector<FrameDetections>& frames, int class_id,
                                   const LinkParams& params) {
  if (!(params.iou_gate >= 0.0 && params.iou_gate <= 1.0)) {
    throw InvalidInput("linking IoU gate " + format_fixed6(params.iou_gate) + " outside [0, 1]");
  }
  if (params.max_misses < 0) throw InvalidInput("max misses must be >= 0");
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].frame <= frames[i - 1].frame) throw InvalidInput("greedy_link: frames must be strictly ascending");
  }
  std::vector<PathState> out;
  if (frames.empty()) return out;

  std::vector<WorkingPath> live;
  std::vector<WorkingPath> done;
  std::size_t created = 0;
  std::size_t next_record = 0;
  std::vector<const Detection*> dets;
  std::vector<char> claimed;

  for (int t = frames.front().frame; t <= frames.back().frame; ++t) {
    dets.clear();
    if (next_record < frames.size() && frames[next_record].frame == t) {
      for (const auto& e : frames[next_record].entries) {
        if (e.class_id == class_id) dets.push_back(&e);
      }
      ++next_record;
    }
    claimed.assign(dets.size(), 0);

    std::stable_sort(live.begin(), live.end(), [](const WorkingPath& a, const WorkingPath& b) {
      const double ma = a.mean();
      const double mb = b.mean();
      return ma != mb ? ma > mb : a.creation < b.creation;
    });
    for (auto& path : live) {
      const Box last = path.boxes.back();
      std::optional<std::size_t> best;
      for (std::size_t j = 0; j < dets.size(); ++j) {
        if (claimed[j] || iou2d(last, dets[j]->box) < params.iou_gate) continue;
        if (!best || dets[j]->score > dets[*best]->score) best = j;
      }
      if (best) {
        claimed[*best] = 1;
        path.boxes.push_back(dets[*best]->box);
        path.scores.push_back(dets[*best]->score);
        path.score_sum += dets[*best]->score;
        path.last_matched = t;
        path.misses = 0;
      } else {
        path.boxes.push_back(last);
        path.scores.push_back(0.0);
        ++path.misses;
      }
    }

    for (auto it = live.begin(); it != live.end();) {
      if (it->misses > params.max_misses) {
        it->drop_trailing_misses();
        done.push_back(std::move(*it));
        it = live.erase(it);
      } else {
        ++it;
      }
    }

    std::vector<std::size_t> seeds;
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (!claimed[j]) seeds.push_back(j);
    }
    std::stable_sort(seeds.begin(), seeds.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a]->score > dets[b]->score; });
    for (std::size_t j : seeds) {
      WorkingPath p;
      p.start = t;
      p.boxes.push_back(dets[j]->box);
      p.scores.push_back(dets[j]->score);
      p.score_sum = dets[j]->score;
      p.last_matched = t;
      p.creation = created++;
      live.push_back(std::move(p));
    }
  }
  for (auto& p : live) {
    p.drop_trailing_misses();
    done.push_back(std::move(p));
  }

  std::stable_sort(done.begin(), done.end(), [](const WorkingPath& a, const WorkingPath& b) {
    return a.start != b.start ? a.start < b.start : a.creation < b.creation;
  });
  for (auto& p : done) {
    if (static_cast<int>(p.boxes.size()) < params.min_len) continue;
    out.push_back(finish(std::move(p), class_id));
  }
  return out;
}

std::vector<int> optimal_labeling(const std::vector<double>& frame_scores, double alpha) {
  if (frame_scores.empty()) throw InvalidInput("cannot trim an empty score sequence");
  if (!(alpha >= 0.0)) throw InvalidInput("trim alpha must be >= 0");
  const std::size_t n = frame_scores.size();
  // back[t][l]: label at t-1 on the best path ending in label l at t.
  std::vector<std::array<int, 2>> back(n, {0, 1});
  std::array<double, 2> value = {1.0 - frame_scores[0], frame_scores[0]};
  for (std::size_t t = 1; t < n; ++t) {
    const std::array<double, 2> local = {1.0 - frame_scores[t], frame_scores[t]};
    std::array<double, 2> next{};
    for (int l = 0; l < 2; ++l) {
      const double stay = value[l];
      const double change = value[1 - l] - alpha;
      if (stay >= change) {
        next[l] = stay + local[l];
        back[t][l] = l;
      } else {
        next[l] = change + local[l];
        back[t][l] = 1 - l;
      }
    }
    value = next;
  }
  std::vector<int> labels(n);
  labels[n - 1] = value[1] > value[0] ? 1 : 0;
  for (std::size_t t = n - 1; t > 0; --t) labels[t - 1] = back[t][labels[t]];
  return labels;
}

double labeling_energy(const std::vector<double>& frame_scores, const std::vector<int>& labels, double alpha) {
  if (frame_scores.size() != labels.size()) throw InvalidInput("labeling length differs from score length");
  double unary = 0.0;
  int changes = 0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    unary += labels[t] ? frame_scores[t] : 1.0 - frame_scores[t];
    if (t > 0 && labels[t] != labels[t - 1]) ++changes;
  }
  return unary - alpha * changes;
}

std::vector<Segment> trim_path(const std::vector<double>& frame_scores, const TrimParams& params) {
  check_trim(params);
  const auto labels = optimal_labeling(frame_scores, params.alpha);
  std::vector<Segment> out;
  const int n = static_cast<int>(labels.size());
  for (int t = 0; t < n;) {
    if (!labels[static_cast<std::size_t>(t)]) {
      ++t;
      continue;
    }
    int e = t;
    while (e + 1 < n && labels[static_cast<std::size_t>(e + 1)]) ++e;
    if (e - t + 1 >= params.min_segment_length) out.push_back({t, e});
    t = e + 1;
  }
  return out;
}

std::vector<ActionTube> build_tubes(const std::vector<FrameDetections>& dets, const LinkParams& link,
                                    const TrimParams& trim, int jobs) {
  check_trim(trim);
  std::vector<FrameDetections> sorted = dets;
  sort_canonical(sorted);
  std::map<std::string, std::vector<FrameDetections>> by_video;
  for (auto& fd : sorted) by_video[fd.video_id].push_back(std::move(fd));

  struct Task {
    const std::string* video;
    const std::vector<FrameDetections>* frames;
    int class_id;
  };
  std::vector<Task> tasks;
  for (const auto& [video, frames] : by_video) {
    std::set<int> classes;
    for (const auto& fd : frames) {
      for (const auto& e : fd.entries) classes.insert(e.class_id);
    }
    for (int c : classes) tasks.push_back({&video, &frames, c});
  }

  std::vector<std::vector<ActionTube>> results(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    for (const auto& path : greedy_link(*task.frames, task.class_id, link)) {
      for (const auto& seg : trim_path(path.frame_scores, trim)) {
        results[i].push_back(carve(*task.video, task.class_id, path.geometry, path.frame_scores, seg));
      }
    }
  });
  std::vector<ActionTube> out;
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(out));
  sort_canonical(out);
  return out;
}

std::vector<ActionTube> tracks_to_tubes(const std::vector<Track>& tracks, const std::vector<TrackClassScores>& scores,
                                        const TrimParams& trim, int jobs) {
  check_trim(trim);
  std::map<TubeKey, const TrackClassScores*> index;
  for (const auto& s : scores) index[{s.video_id, s.track_id}] = &s;

  std::vector<std::vector<ActionTube>> results(tracks.size());
  parallel_for(tracks.size(), jobs, [&](std::size_t i) {
    const Track& tr = tracks[i];
    auto it = index.find(tr.key());
    const int first = tr.geometry.start();
    const int last = tr.geometry.end();
    if (it == index.end() || it->second->start > first ||
        it->second->start + static_cast<int>(it->second->scores.size()) - 1 < last) {
      throw InvalidInput("missing class scores for track '" + tr.track_id + "' in video '" + tr.video_id + "'");
    }
    const TrackClassScores& s = *it->second;
    const std::size_t offset = static_cast<std::size_t>(first - s.start);
    const std::size_t num_classes = s.scores[offset].size();
    for (std::size_t c = 0; c < num_classes; ++c) {
      std::vector<double> seq;
      seq.reserve(tr.geometry.length());
      for (std::size_t k = 0; k < tr.geometry.length(); ++k) {
        const auto& row = s.scores[offset + k];
        if (row.size() != num_classes) throw InvalidInput("score vectors of track '" + tr.track_id + "' differ in length");
        seq.push_back(row[c]);
      }
      for (const auto& seg : trim_path(seq, trim)) {
        results[i].push_back(carve(tr.video_id, static_cast<int>(c), tr.geometry, seq, seg));
      }
    }
  });
  std::vector<ActionTube> out;
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(out));
  sort_canonical(out);
  return out;
}

}  // namespace tubekit
