#include "tubekit/motion.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tubekit/error.hpp"
#include "tubekit/io.hpp"
#include "tubekit/parallel.hpp"

namespace tubekit {

using nlohmann::json;

const char* to_string(MotionCategory c) {
  switch (c) {
    case MotionCategory::Large:
      return "large";
    case MotionCategory::Medium:
      return "medium";
    case MotionCategory::Small:
      return "small";
  }
  return "?";
}

MotionCategory parse_motion_category(const std::string& s) {
  std::string lower;
  for (char ch : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (lower == "large") return MotionCategory::Large;
  if (lower == "medium") return MotionCategory::Medium;
  if (lower == "small") return MotionCategory::Small;
  throw InvalidInput("unknown motion category '" + s + "'");
}

namespace {

// Mean iou2d over every window (t, t + d); precondition length > d.
double windowed_iou(const std::vector<Box>& boxes, std::size_t d) {
  double sum = 0.0;
  const std::size_t windows = boxes.size() - d;
  for (std::size_t t = 0; t < windows; ++t) sum += iou2d(boxes[t], boxes[t + d]);
  return sum / static_cast<double>(windows);
}

}  // namespace

MotionIouResult motion_iou(const TubeGeometry& tube, const std::vector<int>& offsets) {
  if (offsets.empty()) throw InvalidInput("motion_iou: offsets list is empty");
  MotionIouResult r;
  double sum = 0.0;
  for (int d : offsets) {
    if (d <= 0) throw InvalidInput("motion_iou: offsets must be positive");
    if (tube.length() <= static_cast<std::size_t>(d)) continue;
    sum += windowed_iou(tube.boxes(), static_cast<std::size_t>(d));
    r.offsets_used.push_back(d);
  }
  r.value = r.offsets_used.empty() ? 1.0 : sum / static_cast<double>(r.offsets_used.size());
  return r;
}

MotionCategory classify_motion(double value, const DatasetConfig& config) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw InvalidInput("classify_motion: value " + format_fixed6(value) + " outside [0, 1]");
  }
  if (value <= config.motion_bins.first) return MotionCategory::Large;
  if (value <= config.motion_bins.second) return MotionCategory::Medium;
  return MotionCategory::Small;
}

MotionLabeling label_dataset(const std::vector<GroundTruthTube>& gts, const DatasetConfig& config, int jobs) {
  std::vector<MotionLabel> labels(gts.size());
  parallel_for(gts.size(), jobs, [&](std::size_t i) {
    auto m = motion_iou(gts[i].geometry, config.motion_offsets);
    labels[i] = MotionLabel{m.value, classify_motion(m.value, config), std::move(m.offsets_used)};
  });
  MotionLabeling out;
  for (std::size_t i = 0; i < gts.size(); ++i) out.emplace(gts[i].key(), std::move(labels[i]));
  return out;
}

std::optional<double> pair_iou(const TubeGeometry& tube, int pair_offset_frames) {
  if (pair_offset_frames < 1) throw InvalidInput("pair offset must be >= 1 frame");
  if (tube.length() <= static_cast<std::size_t>(pair_offset_frames)) return std::nullopt;
  return windowed_iou(tube.boxes(), static_cast<std::size_t>(pair_offset_frames));
}

MotionCdf motion_cdf(const std::vector<GroundTruthTube>& gts, int pair_offset_frames,
                     const std::vector<double>& edges) {
  if (edges.empty()) throw InvalidInput("motion_cdf: edge list is empty");
  if (!std::is_sorted(edges.begin(), edges.end())) throw InvalidInput("motion_cdf: edges must be ascending");
  if (pair_offset_frames < 1) throw InvalidInput("motion_cdf: pair offset must be >= 1 frame");

  std::vector<double> values;
  MotionCdf cdf;
  for (const auto& gt : gts) {
    if (auto v = pair_iou(gt.geometry, pair_offset_frames)) {
      values.push_back(*v);
    } else {
      ++cdf.excluded_tubes;
    }
  }
  cdf.included_tubes = values.size();
  std::sort(values.begin(), values.end());
  for (double e : edges) {
    const auto at_or_below = std::upper_bound(values.begin(), values.end(), e) - values.begin();
    const double frac = values.empty() ? 0.0 : static_cast<double>(at_or_below) / static_cast<double>(values.size());
    cdf.points.push_back({e, frac});
  }
  return cdf;
}

std::string motion_cdf_csv(const MotionCdf& cdf) {
  std::ostringstream os;
  os << "edge,cumulative_fraction,excluded_tubes\n";
  for (const auto& p : cdf.points) {
    os << format_fixed6(p.edge) << ',' << format_fixed6(p.cumulative_fraction) << ',' << cdf.excluded_tubes << '\n';
  }
  return os.str();
}

std::pair<double, double> tertile_thresholds(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("tertile_thresholds: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const std::size_t i1 = (n + 2) / 3 - 1;
  const std::size_t i2 = (2 * n + 2) / 3 - 1;
  return {values[i1], values[i2]};
}

std::string motion_labeling_json(const MotionLabeling& labels, const DatasetConfig& config) {
  // Written by hand so motion IoUs carry exactly six decimals.
  std::ostringstream os;
  os << "{\"schema\":\"tubekit.motion.v1\",\"dataset\":" << json(config.name).dump() << ",\"bins\":["
     << format_fixed6(config.motion_bins.first) << ',' << format_fixed6(config.motion_bins.second)
     << "],\"labels\":[";
  bool first = true;
  for (const auto& [key, label] : labels) {
    os << (first ? "\n" : ",\n");
    first = false;
    os << "{\"video\":" << json(key.first).dump() << ",\"tube\":" << json(key.second).dump()
       << ",\"motion_iou\":" << format_fixed6(label.motion_iou) << ",\"category\":\"" << to_string(label.category)
       << "\",\"offsets_used\":" << json(label.offsets_used).dump() << '}';
  }
  os << "\n]}\n";
  return os.str();
}

void save_motion_labeling(const MotionLabeling& labels, const DatasetConfig& config,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << motion_labeling_json(labels, config);
}

MotionLabeling load_motion_labeling(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open for reading");
  MotionLabeling out;
  try {
    const json j = json::parse(in);
    if (j.value("schema", "") != "tubekit.motion.v1") throw ParseError(path.string() + ": not a tubekit.motion.v1 file");
    for (const auto& rec : j.at("labels")) {
      MotionLabel l;
      l.motion_iou = rec.at("motion_iou").get<double>();
      l.category = parse_motion_category(rec.at("category").get<std::string>());
      l.offsets_used = rec.at("offsets_used").get<std::vector<int>>();
      out.emplace(TubeKey{rec.at("video").get<std::string>(), rec.at("tube").get<std::string>()}, std::move(l));
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": bad motion labeling: " + e.what());
  }
  return out;
}

}  // namespace tubekit
