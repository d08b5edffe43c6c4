#include "tubekit/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "tubekit/error.hpp"
#include "tubekit/io.hpp"
#include "tubekit/parallel.hpp"

namespace tubekit {

namespace {

std::vector<std::size_t> rank_by_score(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// Shared greedy core. `candidates(d)` lists GT indices eligible for detection d
// (same video/frame/class), in GT order; `overlap(d, g)` scores the pair.
template <typename Candidates, typename Overlap>
void greedy_assign(const std::vector<std::size_t>& ranked, double threshold, std::vector<char>& gt_taken,
                   std::vector<std::optional<std::size_t>>& match, Candidates&& candidates, Overlap&& overlap) {
  for (std::size_t d : ranked) {
    double best = threshold;
    std::optional<std::size_t> best_gt;
    for (std::size_t g : candidates(d)) {
      if (gt_taken[g]) continue;
      const double o = overlap(d, g);
      if (o > best) {
        best = o;
        best_gt = g;
      }
    }
    if (best_gt) {
      gt_taken[*best_gt] = 1;
      match[d] = best_gt;
    }
  }
}

void check_threshold(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("overlap threshold " + format_fixed6(t) + " outside [0, 1]");
}

MatchTable assemble(EvalLevel level, double threshold, std::vector<GtInstance> gts, const std::vector<int>& det_class,
                    const std::vector<double>& det_score, const std::vector<std::optional<std::size_t>>& match) {
  MatchTable table;
  table.level = level;
  table.threshold = threshold;
  table.gts = std::move(gts);
  for (std::size_t d : rank_by_score(det_score)) table.detections.push_back({det_class[d], det_score[d], match[d]});
  return table;
}

// Detections of each class in global rank order.
std::map<int, std::vector<std::size_t>> ranked_by_class(const std::vector<int>& det_class,
                                                         const std::vector<double>& det_score) {
  std::map<int, std::vector<std::size_t>> out;
  for (std::size_t d : rank_by_score(det_score)) out[det_class[d]].push_back(d);
  return out;
}

}  // namespace

const char* to_string(EvalLevel level) { return level == EvalLevel::Frame ? "frame" : "video"; }

PrCurve pr_curve(std::vector<ScoredMatch> matches, long num_positives) {
  if (num_positives < 0) throw InvalidInput("number of positives must be >= 0");
  std::stable_sort(matches.begin(), matches.end(),
                   [](const ScoredMatch& a, const ScoredMatch& b) { return a.score > b.score; });
  PrCurve curve;
  curve.num_positives = num_positives;
  long tp = 0;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (matches[i].is_tp) ++tp;
    const double precision = static_cast<double>(tp) / static_cast<double>(i + 1);
    const double recall = num_positives > 0 ? static_cast<double>(tp) / static_cast<double>(num_positives) : 0.0;
    curve.points.push_back({recall, precision});
  }
  return curve;
}

std::optional<double> average_precision(std::vector<ScoredMatch> matches, long num_positives) {
  if (num_positives < 0) throw InvalidInput("number of positives must be >= 0");
  if (num_positives == 0) return std::nullopt;
  std::stable_sort(matches.begin(), matches.end(),
                   [](const ScoredMatch& a, const ScoredMatch& b) { return a.score > b.score; });
  long tp = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (!matches[i].is_tp) continue;
    ++tp;
    sum += static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  return std::min(1.0, sum / static_cast<double>(num_positives));
}

MatchTable match_frame_detections(const std::vector<FrameDetections>& dets, const std::vector<GroundTruthTube>& gts,
                                  double iou_threshold, int jobs) {
  check_threshold(iou_threshold);
  std::vector<GtInstance> instances;
  std::vector<const Box*> gt_box;
  std::map<std::tuple<std::string, int, int>, std::vector<std::size_t>> gt_index;
  for (const auto& gt : gts) {
    for (int t = gt.geometry.start(); t <= gt.geometry.end(); ++t) {
      gt_index[{gt.video_id, t, gt.class_id}].push_back(instances.size());
      instances.push_back({gt.class_id, gt.key()});
      gt_box.push_back(&gt.geometry.at(t));
    }
  }

  std::vector<int> det_class;
  std::vector<double> det_score;
  std::vector<const Box*> det_box;
  std::vector<const std::vector<std::size_t>*> det_candidates;
  static const std::vector<std::size_t> kNone;
  for (const auto& fd : dets) {
    for (const auto& e : fd.entries) {
      det_class.push_back(e.class_id);
      det_score.push_back(e.score);
      det_box.push_back(&e.box);
      auto it = gt_index.find({fd.video_id, fd.frame, e.class_id});
      det_candidates.push_back(it == gt_index.end() ? &kNone : &it->second);
    }
  }

  std::vector<std::optional<std::size_t>> match(det_class.size());
  std::vector<char> gt_taken(instances.size(), 0);
  const auto by_class = ranked_by_class(det_class, det_score);
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [c, v] : by_class) groups.push_back(&v);
  // Each class touches a disjoint set of GT instances and detections.
  parallel_for(groups.size(), jobs, [&](std::size_t i) {
    greedy_assign(
        *groups[i], iou_threshold, gt_taken, match, [&](std::size_t d) -> const auto& { return *det_candidates[d]; },
        [&](std::size_t d, std::size_t g) { return iou2d(*det_box[d], *gt_box[g]); });
  });
  return assemble(EvalLevel::Frame, iou_threshold, std::move(instances), det_class, det_score, match);
}

MatchTable match_action_tubes(const std::vector<ActionTube>& tubes, const std::vector<GroundTruthTube>& gts,
                              double st_iou_threshold, int jobs) {
  check_threshold(st_iou_threshold);
  std::vector<GtInstance> instances;
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> gt_index;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    gt_index[{gts[g].video_id, gts[g].class_id}].push_back(g);
    instances.push_back({gts[g].class_id, gts[g].key()});
  }
  std::vector<int> det_class;
  std::vector<double> det_score;
  std::vector<const std::vector<std::size_t>*> det_candidates;
  static const std::vector<std::size_t> kNone;
  for (const auto& t : tubes) {
    det_class.push_back(t.class_id);
    det_score.push_back(t.tube_score);
    auto it = gt_index.find({t.video_id, t.class_id});
    det_candidates.push_back(it == gt_index.end() ? &kNone : &it->second);
  }

  std::vector<std::optional<std::size_t>> match(tubes.size());
  std::vector<char> gt_taken(instances.size(), 0);
  const auto by_class = ranked_by_class(det_class, det_score);
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [c, v] : by_class) groups.push_back(&v);
  parallel_for(groups.size(), jobs, [&](std::size_t i) {
    greedy_assign(
        *groups[i], st_iou_threshold, gt_taken, match,
        [&](std::size_t d) -> const auto& { return *det_candidates[d]; },
        [&](std::size_t d, std::size_t g) { return st_iou(tubes[d].geometry, gts[g].geometry); });
  });
  return assemble(EvalLevel::Video, st_iou_threshold, std::move(instances), det_class, det_score, match);
}

std::vector<ClassResult> class_results(const MatchTable& table, const DatasetConfig* config) {
  std::map<int, long> positives;
  for (const auto& g : table.gts) ++positives[g.class_id];
  std::map<int, std::vector<ScoredMatch>> ranked;
  for (const auto& d : table.detections) ranked[d.class_id].push_back({d.score, d.matched_gt.has_value()});

  std::vector<ClassResult> out;
  for (const auto& [c, npos] : positives) {
    if (config && c >= config->num_classes()) {
      throw ValidationError("class id " + std::to_string(c) + " unknown to dataset '" + config->name + "'");
    }
    ClassResult r;
    r.class_id = c;
    r.name = config ? config->class_names[static_cast<std::size_t>(c)] : std::to_string(c);
    r.num_positives = npos;
    const auto& matches = ranked[c];
    r.num_detections = static_cast<long>(matches.size());
    r.ap = *average_precision(matches, npos);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::vector<MotionCategory> gt_categories(const MatchTable& table, const MotionLabeling& labels) {
  std::vector<MotionCategory> cats;
  cats.reserve(table.gts.size());
  for (const auto& g : table.gts) {
    auto it = labels.find(g.tube);
    if (it == labels.end()) {
      throw InvalidInput("no motion label for ground-truth tube '" + g.tube.second + "' in video '" + g.tube.first + "'");
    }
    cats.push_back(it->second.category);
  }
  return cats;
}

}  // namespace

std::map<MotionCategory, long> motion_positive_counts(const MatchTable& table, const MotionLabeling& labels) {
  std::map<MotionCategory, long> out;
  for (auto c : kMotionCategories) out[c] = 0;
  for (auto c : gt_categories(table, labels)) ++out[c];
  return out;
}

std::map<MotionCategory, std::optional<double>> motion_eval(const MatchTable& table, const MotionLabeling& labels,
                                                            MotionMode mode) {
  const auto cats = gt_categories(table, labels);
  std::map<MotionCategory, std::optional<double>> out;
  for (auto cat : kMotionCategories) {
    std::map<int, long> positives;
    long total = 0;
    for (std::size_t g = 0; g < table.gts.size(); ++g) {
      if (cats[g] != cat) continue;
      ++positives[table.gts[g].class_id];
      ++total;
    }
    std::vector<ScoredMatch> pooled;
    std::map<int, std::vector<ScoredMatch>> per_class;
    for (const auto& d : table.detections) {
      if (d.matched_gt && cats[*d.matched_gt] != cat) continue;
      const ScoredMatch m{d.score, d.matched_gt.has_value()};
      pooled.push_back(m);
      per_class[d.class_id].push_back(m);
    }
    if (mode == MotionMode::MotionAP) {
      out[cat] = average_precision(pooled, total);
      continue;
    }
    if (positives.empty()) {
      out[cat] = std::nullopt;
      continue;
    }
    double sum = 0.0;
    for (const auto& [c, npos] : positives) sum += *average_precision(per_class[c], npos);
    out[cat] = sum / static_cast<double>(positives.size());
  }
  return out;
}

EvalReport make_report(const MatchTable& table, const DatasetConfig* config, const MotionLabeling* labels) {
  EvalReport r;
  r.level = table.level;
  r.threshold = table.threshold;
  r.per_class = class_results(table, config);
  if (!r.per_class.empty()) {
    double sum = 0.0;
    for (const auto& c : r.per_class) sum += c.ap;
    r.map = sum / static_cast<double>(r.per_class.size());
  }
  if (labels) {
    const auto counts = motion_positive_counts(table, *labels);
    const auto ap = motion_eval(table, *labels, MotionMode::MotionAP);
    const auto map = motion_eval(table, *labels, MotionMode::MotionMAP);
    for (auto c : kMotionCategories) r.per_motion.push_back({c, counts.at(c), ap.at(c), map.at(c)});
  }
  return r;
}

EvalReport frame_eval(const std::vector<FrameDetections>& dets, const std::vector<GroundTruthTube>& gts,
                      double iou_threshold, const DatasetConfig* config, const MotionLabeling* labels, int jobs) {
  return make_report(match_frame_detections(dets, gts, iou_threshold, jobs), config, labels);
}

EvalReport video_eval(const std::vector<ActionTube>& tubes, const std::vector<GroundTruthTube>& gts,
                      double st_iou_threshold, const DatasetConfig* config, const MotionLabeling* labels, int jobs) {
  return make_report(match_action_tubes(tubes, gts, st_iou_threshold, jobs), config, labels);
}

SweepResult threshold_sweep(const std::function<EvalReport(double)>& eval, const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw InvalidInput("threshold sweep needs at least one threshold");
  SweepResult out;
  double sum = 0.0;
  bool defined = true;
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw InvalidInput("sweep threshold " + format_fixed6(t) + " outside (0, 1)");
    out.reports.push_back(eval(t));
    if (out.reports.back().map) {
      sum += *out.reports.back().map;
    } else {
      defined = false;
    }
  }
  if (defined) out.mean_map = sum / static_cast<double>(thresholds.size());
  return out;
}

namespace {

std::string opt6(const std::optional<double>& v) { return v ? format_fixed6(*v) : "null"; }

std::string percent1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
  return buf;
}

void put_report_json(std::ostringstream& os, const EvalReport& r, const std::string& indent) {
  os << indent << "{\n";
  os << indent << "  \"level\": \"" << to_string(r.level) << "\",\n";
  os << indent << "  \"threshold\": " << format_fixed6(r.threshold) << ",\n";
  os << indent << "  \"map\": " << opt6(r.map) << ",\n";
  os << indent << "  \"map_percent\": " << (r.map ? percent1(*r.map) : "null") << ",\n";
  os << indent << "  \"per_class\": [";
  for (std::size_t i = 0; i < r.per_class.size(); ++i) {
    const auto& c = r.per_class[i];
    os << (i ? ",\n" : "\n") << indent << "    {\"class\": " << c.class_id
       << ", \"name\": " << nlohmann::json(c.name).dump() << ", \"positives\": " << c.num_positives
       << ", \"detections\": " << c.num_detections << ", \"ap\": " << format_fixed6(c.ap) << "}";
  }
  os << (r.per_class.empty() ? "]" : "\n" + indent + "  ]");
  if (!r.per_motion.empty()) {
    os << ",\n" << indent << "  \"per_motion\": [";
    for (std::size_t i = 0; i < r.per_motion.size(); ++i) {
      const auto& m = r.per_motion[i];
      os << (i ? ",\n" : "\n") << indent << "    {\"category\": \"" << to_string(m.category)
         << "\", \"positives\": " << m.num_positives << ", \"motion_ap\": " << opt6(m.motion_ap)
         << ", \"motion_map\": " << opt6(m.motion_map) << "}";
    }
    os << "\n" << indent << "  ]";
  }
  os << "\n" << indent << "}";
}

std::string cell(const std::string& s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

std::string prefix(EvalLevel level) { return level == EvalLevel::Frame ? "f" : "v"; }

}  // namespace

std::string report_json(const EvalReport& report) {
  std::ostringstream os;
  put_report_json(os, report, "");
  os << "\n";
  return os.str();
}

std::string report_table(const EvalReport& r) {
  std::ostringstream os;
  os << prefix(r.level) << "-mAP@" << format_fixed6(r.threshold) << "\n";
  os << cell("class", 6) << "  " << cell("name", 24, true) << cell("positives", 10) << cell("detections", 11)
     << cell("AP", 10) << cell("AP%", 7) << "\n";
  for (const auto& c : r.per_class) {
    os << cell(std::to_string(c.class_id), 6) << "  " << cell(c.name, 24, true)
       << cell(std::to_string(c.num_positives), 10) << cell(std::to_string(c.num_detections), 11)
       << cell(format_fixed6(c.ap), 10) << cell(percent1(c.ap), 7) << "\n";
  }
  os << "mAP " << opt6(r.map);
  if (r.map) os << " (" << percent1(*r.map) << "%)";
  os << "\n";
  if (!r.per_motion.empty()) {
    os << cell("motion", 8, true) << cell("positives", 10) << cell("motion-AP", 11) << cell("motion-mAP", 12) << "\n";
    for (const auto& m : r.per_motion) {
      os << cell(to_string(m.category), 8, true) << cell(std::to_string(m.num_positives), 10)
         << cell(opt6(m.motion_ap), 11) << cell(opt6(m.motion_map), 12) << "\n";
    }
  }
  return os.str();
}

std::string sweep_json(const SweepResult& sweep) {
  std::ostringstream os;
  os << "{\n  \"mean_map\": " << opt6(sweep.mean_map) << ",\n  \"mean_map_percent\": "
     << (sweep.mean_map ? percent1(*sweep.mean_map) : "null") << ",\n  \"reports\": [\n";
  for (std::size_t i = 0; i < sweep.reports.size(); ++i) {
    if (i) os << ",\n";
    put_report_json(os, sweep.reports[i], "    ");
  }
  os << "\n  ]\n}\n";
  return os.str();
}

std::string sweep_table(const SweepResult& sweep) {
  std::ostringstream os;
  const std::string p = sweep.reports.empty() ? "v" : prefix(sweep.reports.front().level);
  os << cell("threshold", 10) << cell(p + "-mAP", 12) << cell("%", 7) << "\n";
  for (const auto& r : sweep.reports) {
    os << cell(format_fixed6(r.threshold), 10) << cell(opt6(r.map), 12) << cell(r.map ? percent1(*r.map) : "-", 7)
       << "\n";
  }
  os << cell("mean", 10) << cell(opt6(sweep.mean_map), 12)
     << cell(sweep.mean_map ? percent1(*sweep.mean_map) : "-", 7) << "\n";
  return os.str();
}

std::string pr_curves_csv(const MatchTable& table) {
  std::map<int, long> positives;
  for (const auto& g : table.gts) ++positives[g.class_id];
  std::map<int, std::vector<const RankedDetection*>> ranked;
  for (const auto& d : table.detections) ranked[d.class_id].push_back(&d);
  std::ostringstream os;
  os << "class,rank,score,is_tp,recall,precision\n";
  for (const auto& [c, npos] : positives) {
    long tp = 0;
    long rank = 0;
    for (const auto* d : ranked[c]) {
      ++rank;
      if (d->matched_gt) ++tp;
      os << c << ',' << rank << ',' << format_fixed6(d->score) << ',' << (d->matched_gt ? 1 : 0) << ','
         << format_fixed6(static_cast<double>(tp) / static_cast<double>(npos)) << ','
         << format_fixed6(static_cast<double>(tp) / static_cast<double>(rank)) << '\n';
    }
  }
  return os.str();
}

}  // namespace tubekit
