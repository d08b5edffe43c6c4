#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tubekit/datamodel.hpp"
#include "tubekit/motion.hpp"

namespace tubekit {

struct ScoredMatch {
  double score = 0.0;
  bool is_tp = false;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // one per ranked detection
  long num_positives = 0;
};

// Running precision/recall over matches ranked by descending score (stable).
PrCurve pr_curve(std::vector<ScoredMatch> matches, long num_positives);

// Sum of the precision at every true-positive rank divided by num_positives.
// nullopt when num_positives == 0; throws InvalidInput when it is negative.
std::optional<double> average_precision(std::vector<ScoredMatch> matches, long num_positives);

enum class EvalLevel { Frame, Video };
enum class MotionMode { MotionAP, MotionMAP };

const char* to_string(EvalLevel level);

// One ground-truth instance: a box (frame level) or a whole tube (video level).
struct GtInstance {
  int class_id = 0;
  TubeKey tube;  // owning tube, used for motion labels
};

struct RankedDetection {
  int class_id = 0;
  double score = 0.0;
  std::optional<std::size_t> matched_gt;  // index into MatchTable::gts
};

// Greedy matching outcome at one threshold. `detections` is the global
// ranking: descending score, ties in input order.
struct MatchTable {
  EvalLevel level = EvalLevel::Frame;
  double threshold = 0.5;
  std::vector<GtInstance> gts;
  std::vector<RankedDetection> detections;
};

// A detection matches an unmatched same-video, same-frame, same-class GT box
// with iou2d strictly above the threshold; the highest IoU wins, ties go to
// the earlier GT. Each GT is matched at most once.
MatchTable match_frame_detections(const std::vector<FrameDetections>& dets, const std::vector<GroundTruthTube>& gts,
                                  double iou_threshold, int jobs = 1);

// As above with tubes ranked by tube score and overlap measured by st_iou.
MatchTable match_action_tubes(const std::vector<ActionTube>& tubes, const std::vector<GroundTruthTube>& gts,
                              double st_iou_threshold, int jobs = 1);

struct ClassResult {
  int class_id = 0;
  std::string name;
  long num_positives = 0;
  long num_detections = 0;
  double ap = 0.0;
};

struct MotionResult {
  MotionCategory category = MotionCategory::Small;
  long num_positives = 0;
  std::optional<double> motion_ap;
  std::optional<double> motion_map;
};

struct EvalReport {
  EvalLevel level = EvalLevel::Frame;
  double threshold = 0.5;
  std::vector<ClassResult> per_class;  // classes with at least one positive
  std::optional<double> map;
  std::vector<MotionResult> per_motion;  // empty unless motion labels were given
};

// Per-class AP over a match table. Classes without positives are left out.
std::vector<ClassResult> class_results(const MatchTable& table, const DatasetConfig* config = nullptr);

// Per-category results of the motion-restricted evaluation. GT instances of
// other categories are ignored: detections matched to them leave the ranking.
// Categories without positives map to nullopt. Throws InvalidInput if a GT
// tube has no label.
std::map<MotionCategory, std::optional<double>> motion_eval(const MatchTable& table, const MotionLabeling& labels,
                                                            MotionMode mode);

// Positive count per category, from the same labels motion_eval uses.
std::map<MotionCategory, long> motion_positive_counts(const MatchTable& table, const MotionLabeling& labels);

EvalReport make_report(const MatchTable& table, const DatasetConfig* config, const MotionLabeling* labels);

// When a config is given, class ids are checked against it and used for names.
EvalReport frame_eval(const std::vector<FrameDetections>& dets, const std::vector<GroundTruthTube>& gts,
                      double iou_threshold, const DatasetConfig* config = nullptr,
                      const MotionLabeling* labels = nullptr, int jobs = 1);

EvalReport video_eval(const std::vector<ActionTube>& tubes, const std::vector<GroundTruthTube>& gts,
                      double st_iou_threshold, const DatasetConfig* config = nullptr,
                      const MotionLabeling* labels = nullptr, int jobs = 1);

struct SweepResult {
  std::vector<EvalReport> reports;
  std::optional<double> mean_map;  // nullopt if any threshold has no defined mAP
};

// Evaluates every threshold and averages the mAPs. Throws InvalidInput on an
// empty list or a threshold outside (0, 1).
SweepResult threshold_sweep(const std::function<EvalReport(double)>& eval, const std::vector<double>& thresholds);

// Report rendering. Values carry six decimals; mAP is also echoed as a percentage.
std::string report_json(const EvalReport& report);
std::string report_table(const EvalReport& report);
std::string sweep_json(const SweepResult& sweep);
std::string sweep_table(const SweepResult& sweep);

// "class,rank,score,is_tp,recall,precision" rows for every class with positives.
std::string pr_curves_csv(const MatchTable& table);

}  // namespace tubekit
