#include "tubekit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tubekit/error.hpp"
#include "tubekit/io.hpp"
#include "tubekit/parallel.hpp"

namespace tubekit {

using nlohmann::json;

namespace {

constexpr double kMotionTolerance = 0.02;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Portable counter-based generator over splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix64(state_++); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool bernoulli(double p) { return uniform() < p; }
  double normal() {
    // Box-Muller, first variate only.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t video, std::uint64_t stream) {
  return splitmix64(splitmix64(seed ^ (video * 0x100000001B3ull)) + stream);
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

Box fixed6(const Box& b) { return {round6(b.x1), round6(b.y1), round6(b.x2), round6(b.y2)}; }

std::string numbered(const char* prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, i);
  return buf;
}

TubeGeometry moving_tube(int start, int length, double x0, double y0, double v, double w, double h) {
  std::vector<Box> boxes;
  boxes.reserve(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    const double x = x0 + v * i;
    boxes.push_back(fixed6({x, y0, x + w, y0 + h}));
  }
  return TubeGeometry(start, std::move(boxes));
}

void check_rate(double r, const char* name) {
  if (!(r >= 0.0 && r <= 1.0)) throw ValidationError(std::string("synth spec: ") + name + " must lie in [0, 1]");
}

struct VideoOutput {
  std::vector<GroundTruthTube> gts;
  std::vector<FrameDetections> detections;
  std::vector<Track> tracks;
  std::vector<TrackClassScores> scores;
  std::vector<PlantedTube> oracle;
};

VideoOutput generate_video(const SynthSpec& spec, const DatasetConfig& config, int v) {
  VideoOutput out;
  const std::string video = numbered("v", v, 3);
  Rng gt_rng(stream_seed(spec.seed, static_cast<std::uint64_t>(v), 1));
  Rng det_rng(stream_seed(spec.seed, static_cast<std::uint64_t>(v), 2));
  Rng track_rng(stream_seed(spec.seed, static_cast<std::uint64_t>(v), 3));
  const double lane = spec.image_height / spec.tubes_per_video;

  for (int i = 0; i < spec.tubes_per_video; ++i) {
    const int global = v * spec.tubes_per_video + i;
    const double target = spec.motion_targets[static_cast<std::size_t>(global) % spec.motion_targets.size()];
    const int length = gt_rng.uniform_int(spec.min_tube_length, std::min(spec.max_tube_length, spec.frames_per_video));
    const int start = gt_rng.uniform_int(0, spec.frames_per_video - length);
    const int class_id = gt_rng.uniform_int(0, spec.num_classes - 1);
    const std::string tube_id = numbered("t", i, 2);

    const double speed = solve_velocity(spec, config, length, target, video + "/" + tube_id);
    const double travel = speed * (length - 1);
    const double slack = spec.image_width - spec.box_width - travel;
    const bool leftward = gt_rng.bernoulli(0.5);
    const double offset = gt_rng.uniform(0.0, std::max(0.0, slack));
    const double x0 = leftward ? offset + travel : offset;
    const double velocity = leftward ? -speed : speed;
    const double y0 = i * lane + gt_rng.uniform(0.0, lane - spec.box_height);

    GroundTruthTube gt;
    gt.video_id = video;
    gt.tube_id = tube_id;
    gt.class_id = class_id;
    gt.geometry = moving_tube(start, length, x0, y0, velocity, spec.box_width, spec.box_height);
    const auto m = motion_iou(gt.geometry, config.motion_offsets);
    out.oracle.push_back({video, tube_id, class_id, target, m.value, classify_motion(m.value, config), velocity});
    out.gts.push_back(std::move(gt));
  }

  const bool noisy = spec.detection.jitter_sigma > 0.0 || spec.detection.drop_rate > 0.0 ||
                     spec.detection.spurious_rate > 0.0;
  for (int t = 0; t < spec.frames_per_video; ++t) {
    FrameDetections fd;
    fd.video_id = video;
    fd.frame = t;
    for (const auto& gt : out.gts) {
      if (!gt.geometry.covers(t)) continue;
      if (det_rng.bernoulli(spec.detection.drop_rate)) continue;
      Box b = gt.geometry.at(t);
      if (spec.detection.jitter_sigma > 0.0) {
        const double s = spec.detection.jitter_sigma;
        const double x1 = b.x1 + s * det_rng.normal();
        const double y1 = b.y1 + s * det_rng.normal();
        const double x2 = b.x2 + s * det_rng.normal();
        const double y2 = b.y2 + s * det_rng.normal();
        b = {std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)};
      }
      const double score = noisy ? round6(det_rng.uniform(0.7, 1.0)) : 1.0;
      fd.entries.push_back({fixed6(b), gt.class_id, score});
    }
    if (det_rng.bernoulli(spec.detection.spurious_rate)) {
      const double x = det_rng.uniform(0.0, spec.image_width - spec.box_width);
      const double y = det_rng.uniform(0.0, spec.image_height - spec.box_height);
      const int c = det_rng.uniform_int(0, spec.num_classes - 1);
      const double score = round6(det_rng.uniform(0.05, 0.5));
      fd.entries.push_back({fixed6({x, y, x + spec.box_width, y + spec.box_height}), c, score});
    }
    out.detections.push_back(std::move(fd));
  }

  for (std::size_t i = 0; i < out.gts.size(); ++i) {
    const auto& gt = out.gts[i];
    int piece_start = gt.geometry.start();
    int piece = 0;
    auto emit = [&](int first, int last) {
      Track tr;
      tr.video_id = video;
      tr.track_id = numbered("k", static_cast<int>(i), 2) + numbered("_", piece++, 2);
      tr.geometry = gt.geometry.slice(first, last);
      TrackClassScores s;
      s.video_id = video;
      s.track_id = tr.track_id;
      s.start = first;
      for (int f = first; f <= last; ++f) {
        std::vector<double> row(static_cast<std::size_t>(spec.num_classes), 0.05);
        row[static_cast<std::size_t>(gt.class_id)] = 0.9;
        s.scores.push_back(std::move(row));
      }
      out.tracks.push_back(std::move(tr));
      out.scores.push_back(std::move(s));
    };
    for (int f = gt.geometry.start() + 1; f <= gt.geometry.end(); ++f) {
      if (track_rng.bernoulli(spec.track.fragmentation_rate)) {
        emit(piece_start, f - 1);
        piece_start = f;
      }
    }
    emit(piece_start, gt.geometry.end());
  }
  return out;
}

}  // namespace

void validate_synth_spec(const SynthSpec& s) {
  auto fail = [](const std::string& what) { throw ValidationError("synth spec: " + what); };
  if (s.num_videos < 1) fail("num_videos must be >= 1");
  if (s.frames_per_video < 1) fail("frames_per_video must be >= 1");
  if (s.num_classes < 1) fail("num_classes must be >= 1");
  if (s.tubes_per_video < 0) fail("tubes_per_video must be >= 0");
  if (s.min_tube_length < 1 || s.min_tube_length > s.max_tube_length) fail("need 1 <= min_tube_length <= max_tube_length");
  if (s.min_tube_length > s.frames_per_video) fail("min_tube_length exceeds frames_per_video");
  if (s.motion_targets.empty()) fail("motion_targets must be non-empty");
  for (double t : s.motion_targets) {
    if (!(t >= 0.0 && t <= 1.0)) fail("motion targets must lie in [0, 1]");
  }
  if (!(s.box_width > 0.0 && s.box_height > 0.0)) fail("box size must be positive");
  if (s.box_width > s.image_width) fail("box wider than the image");
  if (s.tubes_per_video * s.box_height > s.image_height) fail("tube lanes do not fit in the image height");
  if (!(s.detection.jitter_sigma >= 0.0)) fail("jitter_sigma must be >= 0");
  check_rate(s.detection.drop_rate, "drop_rate");
  check_rate(s.detection.spurious_rate, "spurious_rate");
  check_rate(s.track.fragmentation_rate, "fragmentation_rate");
  if (s.feature_frames < 1 || s.feature_channels < 1 || !(s.feature_stride > 0.0)) fail("feature clip dims must be positive");
}

SynthSpec parse_synth_spec(const std::string& text, const std::string& source) {
  SynthSpec s;
  try {
    const json j = json::parse(text);
    s.seed = j.value("seed", s.seed);
    s.num_videos = j.value("num_videos", s.num_videos);
    s.frames_per_video = j.value("frames_per_video", s.frames_per_video);
    s.num_classes = j.value("num_classes", s.num_classes);
    s.tubes_per_video = j.value("tubes_per_video", s.tubes_per_video);
    s.min_tube_length = j.value("min_tube_length", s.min_tube_length);
    s.max_tube_length = j.value("max_tube_length", s.max_tube_length);
    s.motion_targets = j.value("motion_targets", s.motion_targets);
    s.box_width = j.value("box_width", s.box_width);
    s.box_height = j.value("box_height", s.box_height);
    s.image_width = j.value("image_width", s.image_width);
    s.image_height = j.value("image_height", s.image_height);
    s.dataset = j.value("dataset", s.dataset);
    if (j.contains("detection")) {
      const auto& d = j.at("detection");
      s.detection.jitter_sigma = d.value("jitter_sigma", s.detection.jitter_sigma);
      s.detection.drop_rate = d.value("drop_rate", s.detection.drop_rate);
      s.detection.spurious_rate = d.value("spurious_rate", s.detection.spurious_rate);
    }
    if (j.contains("track")) s.track.fragmentation_rate = j.at("track").value("fragmentation_rate", 0.0);
    s.feature_frames = j.value("feature_frames", s.feature_frames);
    s.feature_channels = j.value("feature_channels", s.feature_channels);
    s.feature_stride = j.value("feature_stride", s.feature_stride);
  } catch (const json::exception& e) {
    throw ParseError(source + ": bad synth spec: " + e.what());
  }
  validate_synth_spec(s);
  return s;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_synth_spec(ss.str(), path.string());
}

std::string synth_spec_json(const SynthSpec& s) {
  json j;
  j["seed"] = s.seed;
  j["num_videos"] = s.num_videos;
  j["frames_per_video"] = s.frames_per_video;
  j["num_classes"] = s.num_classes;
  j["tubes_per_video"] = s.tubes_per_video;
  j["min_tube_length"] = s.min_tube_length;
  j["max_tube_length"] = s.max_tube_length;
  j["motion_targets"] = s.motion_targets;
  j["box_width"] = s.box_width;
  j["box_height"] = s.box_height;
  j["image_width"] = s.image_width;
  j["image_height"] = s.image_height;
  j["dataset"] = s.dataset;
  j["detection"] = {{"jitter_sigma", s.detection.jitter_sigma},
                    {"drop_rate", s.detection.drop_rate},
                    {"spurious_rate", s.detection.spurious_rate}};
  j["track"] = {{"fragmentation_rate", s.track.fragmentation_rate}};
  j["feature_frames"] = s.feature_frames;
  j["feature_channels"] = s.feature_channels;
  j["feature_stride"] = s.feature_stride;
  return j.dump(2) + "\n";
}

double solve_velocity(const SynthSpec& spec, const DatasetConfig& config, int length, double target,
                      const std::string& tube_name) {
  auto achieved = [&](double v) {
    return motion_iou(moving_tube(0, length, 0.0, 0.0, v, spec.box_width, spec.box_height), config.motion_offsets)
        .value;
  };
  if (achieved(0.0) <= target + kMotionTolerance) return 0.0;
  const double vmax = length > 1 ? (spec.image_width - spec.box_width) / (length - 1) : 0.0;
  if (!(achieved(vmax) <= target + kMotionTolerance)) {
    throw InvalidInput("synth: motion target " + format_fixed6(target) + " for tube " + tube_name +
                       " not reachable inside the image (best " + format_fixed6(achieved(vmax)) + ")");
  }
  // Motion IoU decreases monotonically with speed.
  double lo = 0.0;
  double hi = vmax;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (achieved(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double v = std::abs(achieved(lo) - target) <= std::abs(achieved(hi) - target) ? lo : hi;
  return round6(v);
}

SynthOutput generate(const SynthSpec& spec, int jobs) {
  validate_synth_spec(spec);
  const DatasetConfig base = builtin_config(spec.dataset);
  SynthOutput out;
  out.config.name = "synth-" + spec.dataset;
  out.config.fps = base.fps;
  out.config.motion_bins = base.motion_bins;
  out.config.motion_offsets = base.motion_offsets;
  for (int c = 0; c < spec.num_classes; ++c) out.config.class_names.push_back(numbered("class_", c, 2));

  std::vector<VideoOutput> videos(static_cast<std::size_t>(spec.num_videos));
  parallel_for(videos.size(), jobs,
               [&](std::size_t v) { videos[v] = generate_video(spec, out.config, static_cast<int>(v)); });
  for (auto& v : videos) {
    std::move(v.gts.begin(), v.gts.end(), std::back_inserter(out.gts));
    std::move(v.detections.begin(), v.detections.end(), std::back_inserter(out.detections));
    std::move(v.tracks.begin(), v.tracks.end(), std::back_inserter(out.tracks));
    std::move(v.scores.begin(), v.scores.end(), std::back_inserter(out.track_scores));
    std::move(v.oracle.begin(), v.oracle.end(), std::back_inserter(out.oracle));
  }
  sort_canonical(out.gts);
  sort_canonical(out.detections);
  sort_canonical(out.tracks);

  const auto h = static_cast<std::size_t>(std::ceil(spec.image_height / spec.feature_stride));
  const auto w = static_cast<std::size_t>(std::ceil(spec.image_width / spec.feature_stride));
  out.features = Tensor({static_cast<std::size_t>(spec.feature_frames), static_cast<std::size_t>(spec.feature_channels),
                         std::max<std::size_t>(h, 1), std::max<std::size_t>(w, 1)});
  out.feature_stride = spec.feature_stride;
  Rng feat_rng(stream_seed(spec.seed, 0, 4));
  for (auto& f : out.features.data()) f = static_cast<float>(feat_rng.uniform(-1.0, 1.0));
  return out;
}

std::string oracle_json(const SynthOutput& out) {
  std::ostringstream os;
  os << "{\"schema\":\"tubekit.synth_oracle.v1\",\"dataset\":" << json(out.config.name).dump() << ",\"tubes\":[";
  for (std::size_t i = 0; i < out.oracle.size(); ++i) {
    const auto& p = out.oracle[i];
    os << (i ? ",\n" : "\n") << "{\"video\":" << json(p.video_id).dump() << ",\"tube\":" << json(p.tube_id).dump()
       << ",\"class\":" << p.class_id << ",\"motion_target\":" << format_fixed6(p.motion_target)
       << ",\"motion_iou\":" << format_fixed6(p.motion_iou) << ",\"category\":\"" << to_string(p.category)
       << "\",\"velocity\":" << format_fixed6(p.velocity) << "}";
  }
  os << "\n]}\n";
  return os.str();
}

void write_synth(const SynthOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_ground_truth(out.gts, dir / "gt.ndjson");
  save_detections(out.detections, dir / "det.ndjson");
  save_tracks(out.tracks, dir / "tracks.ndjson");
  save_track_scores(out.track_scores, dir / "scores.ndjson");
  save_config(out.config, dir / "config.json");
  {
    std::ofstream o(dir / "oracle.json", std::ios::binary | std::ios::trunc);
    if (!o) throw Error((dir / "oracle.json").string() + ": cannot open for writing");
    o << oracle_json(out);
  }
  TensorStore features;
  features.emplace("features", out.features);
  features.emplace("spatial_stride", Tensor({1}, std::vector<float>{static_cast<float>(out.feature_stride)}));
  features.emplace("clip_start", Tensor({1}, std::vector<float>{0.0f}));
  save_tensors(features, dir / "features.tkt");
}

}  // namespace tubekit
