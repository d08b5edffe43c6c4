#include "tubekit/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tubekit/error.hpp"

namespace tubekit {

using nlohmann::json;

namespace {

// Location of one NDJSON record, used to prefix error messages.
struct Locator {
  std::string source;
  std::size_t line = 0;

  std::string str() const { return source + ":" + std::to_string(line); }
  [[noreturn]] void parse_fail(const std::string& what) const { throw ParseError(str() + ": " + what); }
  [[noreturn]] void invalid(const std::string& what) const { throw ValidationError(str() + ": " + what); }
};

const json& field(const json& rec, const char* name, const Locator& loc) {
  auto it = rec.find(name);
  if (it == rec.end()) loc.parse_fail(std::string("missing field \"") + name + "\"");
  return *it;
}

std::string get_string(const json& rec, const char* name, const Locator& loc) {
  const json& v = field(rec, name, loc);
  if (!v.is_string()) loc.parse_fail(std::string("field \"") + name + "\" must be a string");
  return v.get<std::string>();
}

int as_int(const json& v, const std::string& what, const Locator& loc) {
  if (v.is_number_integer()) {
    const auto i = v.get<std::int64_t>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
      loc.parse_fail(what + " out of integer range");
    }
    return static_cast<int>(i);
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 2e9) return static_cast<int>(d);
  }
  loc.parse_fail(what + " must be an integer");
}

int get_int(const json& rec, const char* name, const Locator& loc) {
  return as_int(field(rec, name, loc), std::string("field \"") + name + "\"", loc);
}

double as_number(const json& v, const std::string& what, const Locator& loc) {
  if (!v.is_number()) loc.parse_fail(what + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) loc.invalid(what + " must be finite");
  return d;
}

double as_score(const json& v, const std::string& what, const Locator& loc) {
  const double s = as_number(v, what, loc);
  if (s < 0.0 || s > 1.0) loc.invalid(what + " " + format_fixed6(s) + " outside [0, 1]");
  return s;
}

Box as_box(const json& v, std::size_t min_len, const std::string& what, const Locator& loc) {
  if (!v.is_array() || v.size() < min_len) {
    loc.parse_fail(what + " must be an array of at least " + std::to_string(min_len) + " numbers");
  }
  Box b{as_number(v[0], what, loc), as_number(v[1], what, loc), as_number(v[2], what, loc),
        as_number(v[3], what, loc)};
  if (b.x1 > b.x2 || b.y1 > b.y2) loc.invalid(what + " has unordered corners");
  return b;
}

std::vector<Box> get_boxes(const json& rec, const Locator& loc, const std::string& owner) {
  const json& arr = field(rec, "boxes", loc);
  if (!arr.is_array()) loc.parse_fail("field \"boxes\" must be an array");
  if (arr.empty()) loc.invalid(owner + ": boxes must be non-empty");
  std::vector<Box> boxes;
  boxes.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& b = arr[i];
    if (b.size() != 4) loc.parse_fail(owner + ": box " + std::to_string(i) + " must have 4 numbers");
    boxes.push_back(as_box(b, 4, owner + ": box " + std::to_string(i), loc));
  }
  return boxes;
}

std::vector<double> get_scores(const json& arr, const char* name, const Locator& loc) {
  if (!arr.is_array()) loc.parse_fail(std::string("field \"") + name + "\" must be an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(as_score(arr[i], std::string(name) + "[" + std::to_string(i) + "]", loc));
  }
  return out;
}

// Start frame plus optional "end" consistency check.
int get_start(const json& rec, std::size_t count, const Locator& loc, const std::string& owner) {
  const int start = get_int(rec, "start", loc);
  if (start < 0) loc.invalid(owner + ": start frame must be >= 0");
  if (auto it = rec.find("end"); it != rec.end()) {
    const int end = as_int(*it, "field \"end\"", loc);
    if (end - start + 1 != static_cast<int>(count)) {
      loc.invalid(owner + ": contiguity violated, " + std::to_string(count) + " boxes for frames " +
                  std::to_string(start) + ".." + std::to_string(end));
    }
  }
  return start;
}

void check_class(int class_id, const DatasetConfig* config, const Locator& loc, const std::string& owner) {
  if (class_id < 0) loc.invalid(owner + ": class id must be >= 0");
  if (config && class_id >= config->num_classes()) {
    loc.invalid(owner + ": class id " + std::to_string(class_id) + " unknown to dataset '" + config->name +
                "' (" + std::to_string(config->num_classes()) + " classes)");
  }
}

// Reads header + records; calls on_record for every non-empty record line.
void read_ndjson(std::istream& in, const std::string& source, const std::string& schema,
                 const std::function<void(const json&, const Locator&)>& on_record) {
  std::string line;
  bool header_seen = false;
  Locator loc{source, 0};
  while (std::getline(in, line)) {
    ++loc.line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      loc.parse_fail(std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) loc.parse_fail("record must be a JSON object");
    if (!header_seen) {
      auto it = rec.find("schema");
      if (it == rec.end() || !it->is_string()) loc.parse_fail("first record must be a {\"schema\": ...} header");
      if (it->get<std::string>() != schema) {
        loc.parse_fail("schema \"" + it->get<std::string>() + "\" where \"" + schema + "\" was expected");
      }
      header_seen = true;
      continue;
    }
    on_record(rec, loc);
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  return out;
}

void put_box(std::ostream& out, const Box& b) {
  out << '[' << format_fixed6(b.x1) << ',' << format_fixed6(b.y1) << ',' << format_fixed6(b.x2) << ','
      << format_fixed6(b.y2) << ']';
}

void put_boxes(std::ostream& out, const TubeGeometry& g) {
  out << "\"boxes\":[";
  bool first = true;
  for (const auto& b : g.boxes()) {
    if (!first) out << ',';
    first = false;
    put_box(out, b);
  }
  out << ']';
}

void put_scores(std::ostream& out, const std::vector<double>& scores) {
  out << '[';
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i) out << ',';
    out << format_fixed6(scores[i]);
  }
  out << ']';
}

std::string quoted(const std::string& s) { return json(s).dump(); }

void header(std::ostream& out, const char* schema) { out << "{\"schema\":\"" << schema << "\"}\n"; }

}  // namespace

std::string format_fixed6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  if (std::strcmp(buf, "-0.000000") == 0) return "0.000000";
  return buf;
}

std::vector<GroundTruthTube> read_ground_truth(std::istream& in, const std::string& source,
                                               const DatasetConfig* config) {
  std::vector<GroundTruthTube> out;
  std::set<TubeKey> seen;
  read_ndjson(in, source, kGroundTruthSchema, [&](const json& rec, const Locator& loc) {
    GroundTruthTube gt;
    gt.video_id = get_string(rec, "video", loc);
    gt.tube_id = get_string(rec, "tube", loc);
    const std::string owner = "tube '" + gt.tube_id + "'";
    gt.class_id = get_int(rec, "class", loc);
    check_class(gt.class_id, config, loc, owner);
    auto boxes = get_boxes(rec, loc, owner);
    const int start = get_start(rec, boxes.size(), loc, owner);
    gt.geometry = TubeGeometry(start, std::move(boxes));
    if (!seen.insert(gt.key()).second) loc.invalid(owner + ": duplicate tube id in video '" + gt.video_id + "'");
    out.push_back(std::move(gt));
  });
  sort_canonical(out);
  return out;
}

std::vector<FrameDetections> read_detections(std::istream& in, const std::string& source,
                                             const DatasetConfig* config) {
  std::vector<FrameDetections> out;
  std::set<std::pair<std::string, int>> seen;
  read_ndjson(in, source, kDetectionSchema, [&](const json& rec, const Locator& loc) {
    FrameDetections fd;
    fd.video_id = get_string(rec, "video", loc);
    fd.frame = get_int(rec, "frame", loc);
    if (fd.frame < 0) loc.invalid("frame index must be >= 0");
    const json& dets = field(rec, "dets", loc);
    if (!dets.is_array()) loc.parse_fail("field \"dets\" must be an array");
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const json& d = dets[i];
      const std::string what = "detection " + std::to_string(i);
      if (!d.is_array() || d.size() != 6) loc.parse_fail(what + " must be [x1,y1,x2,y2,class,score]");
      Detection det;
      det.box = as_box(d, 6, what, loc);
      det.class_id = as_int(d[4], what + " class", loc);
      check_class(det.class_id, config, loc, what);
      det.score = as_score(d[5], what + " score", loc);
      fd.entries.push_back(det);
    }
    if (!seen.insert({fd.video_id, fd.frame}).second) {
      loc.invalid("duplicate record for video '" + fd.video_id + "' frame " + std::to_string(fd.frame));
    }
    out.push_back(std::move(fd));
  });
  sort_canonical(out);
  return out;
}

std::vector<Track> read_tracks(std::istream& in, const std::string& source) {
  std::vector<Track> out;
  std::set<TubeKey> seen;
  read_ndjson(in, source, kTrackSchema, [&](const json& rec, const Locator& loc) {
    Track tr;
    tr.video_id = get_string(rec, "video", loc);
    tr.track_id = get_string(rec, "track", loc);
    const std::string owner = "track '" + tr.track_id + "'";
    auto boxes = get_boxes(rec, loc, owner);
    const int start = get_start(rec, boxes.size(), loc, owner);
    if (auto it = rec.find("scores"); it != rec.end() && !it->is_null()) {
      auto scores = get_scores(*it, "scores", loc);
      if (scores.size() != boxes.size()) loc.invalid(owner + ": scores do not align with boxes");
      tr.box_scores = std::move(scores);
    }
    tr.geometry = TubeGeometry(start, std::move(boxes));
    if (!seen.insert(tr.key()).second) loc.invalid(owner + ": duplicate track id in video '" + tr.video_id + "'");
    out.push_back(std::move(tr));
  });
  sort_canonical(out);
  return out;
}

std::vector<ActionTube> read_action_tubes(std::istream& in, const std::string& source,
                                          const DatasetConfig* config) {
  std::vector<ActionTube> out;
  read_ndjson(in, source, kTubeSchema, [&](const json& rec, const Locator& loc) {
    ActionTube tube;
    tube.video_id = get_string(rec, "video", loc);
    tube.class_id = get_int(rec, "class", loc);
    const std::string owner = "action tube in video '" + tube.video_id + "'";
    check_class(tube.class_id, config, loc, owner);
    auto boxes = get_boxes(rec, loc, owner);
    const int start = get_start(rec, boxes.size(), loc, owner);
    tube.frame_scores = get_scores(field(rec, "frame_scores", loc), "frame_scores", loc);
    if (tube.frame_scores.size() != boxes.size()) loc.invalid(owner + ": frame_scores do not align with boxes");
    tube.tube_score = as_score(field(rec, "score", loc), "score", loc);
    tube.geometry = TubeGeometry(start, std::move(boxes));
    out.push_back(std::move(tube));
  });
  sort_canonical(out);
  return out;
}

std::vector<TrackClassScores> read_track_scores(std::istream& in, const std::string& source) {
  std::vector<TrackClassScores> out;
  std::set<TubeKey> seen;
  read_ndjson(in, source, kScoresSchema, [&](const json& rec, const Locator& loc) {
    TrackClassScores ts;
    ts.video_id = get_string(rec, "video", loc);
    ts.track_id = get_string(rec, "track", loc);
    ts.start = get_int(rec, "start", loc);
    if (ts.start < 0) loc.invalid("track '" + ts.track_id + "': start frame must be >= 0");
    const json& arr = field(rec, "scores", loc);
    if (!arr.is_array() || arr.empty()) loc.parse_fail("field \"scores\" must be a non-empty array");
    for (const auto& row : arr) {
      ts.scores.push_back(get_scores(row, "scores", loc));
      if (ts.scores.back().size() != ts.scores.front().size()) {
        loc.invalid("track '" + ts.track_id + "': score vectors differ in length");
      }
    }
    if (!seen.insert({ts.video_id, ts.track_id}).second) loc.invalid("duplicate scores for track '" + ts.track_id + "'");
    out.push_back(std::move(ts));
  });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.video_id, a.track_id) < std::tie(b.video_id, b.track_id);
  });
  return out;
}

void write_ground_truth(std::ostream& out, std::vector<GroundTruthTube> gts) {
  sort_canonical(gts);
  header(out, kGroundTruthSchema);
  for (const auto& gt : gts) {
    out << "{\"video\":" << quoted(gt.video_id) << ",\"tube\":" << quoted(gt.tube_id) << ",\"class\":" << gt.class_id
        << ",\"start\":" << gt.geometry.start() << ',';
    put_boxes(out, gt.geometry);
    out << "}\n";
  }
}

void write_detections(std::ostream& out, std::vector<FrameDetections> dets) {
  sort_canonical(dets);
  header(out, kDetectionSchema);
  for (const auto& fd : dets) {
    out << "{\"video\":" << quoted(fd.video_id) << ",\"frame\":" << fd.frame << ",\"dets\":[";
    for (std::size_t i = 0; i < fd.entries.size(); ++i) {
      const auto& d = fd.entries[i];
      if (i) out << ',';
      out << '[' << format_fixed6(d.box.x1) << ',' << format_fixed6(d.box.y1) << ',' << format_fixed6(d.box.x2)
          << ',' << format_fixed6(d.box.y2) << ',' << d.class_id << ',' << format_fixed6(d.score) << ']';
    }
    out << "]}\n";
  }
}

void write_tracks(std::ostream& out, std::vector<Track> tracks) {
  sort_canonical(tracks);
  header(out, kTrackSchema);
  for (const auto& tr : tracks) {
    out << "{\"video\":" << quoted(tr.video_id) << ",\"track\":" << quoted(tr.track_id)
        << ",\"start\":" << tr.geometry.start() << ',';
    put_boxes(out, tr.geometry);
    if (tr.box_scores) {
      out << ",\"scores\":";
      put_scores(out, *tr.box_scores);
    }
    out << "}\n";
  }
}

void write_action_tubes(std::ostream& out, std::vector<ActionTube> tubes) {
  sort_canonical(tubes);
  header(out, kTubeSchema);
  for (const auto& t : tubes) {
    out << "{\"video\":" << quoted(t.video_id) << ",\"class\":" << t.class_id << ",\"start\":" << t.geometry.start()
        << ',';
    put_boxes(out, t.geometry);
    out << ",\"frame_scores\":";
    put_scores(out, t.frame_scores);
    out << ",\"score\":" << format_fixed6(t.tube_score) << "}\n";
  }
}

void write_track_scores(std::ostream& out, std::vector<TrackClassScores> scores) {
  std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    return std::tie(a.video_id, a.track_id) < std::tie(b.video_id, b.track_id);
  });
  header(out, kScoresSchema);
  for (const auto& s : scores) {
    out << "{\"video\":" << quoted(s.video_id) << ",\"track\":" << quoted(s.track_id) << ",\"start\":" << s.start
        << ",\"scores\":[";
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      if (i) out << ',';
      put_scores(out, s.scores[i]);
    }
    out << "]}\n";
  }
}

std::vector<GroundTruthTube> load_ground_truth(const std::filesystem::path& path, const DatasetConfig* config) {
  auto in = open_in(path);
  return read_ground_truth(in, path.string(), config);
}

std::vector<FrameDetections> load_detections(const std::filesystem::path& path, const DatasetConfig* config) {
  auto in = open_in(path);
  return read_detections(in, path.string(), config);
}

std::vector<Track> load_tracks(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_tracks(in, path.string());
}

std::vector<ActionTube> load_action_tubes(const std::filesystem::path& path, const DatasetConfig* config) {
  auto in = open_in(path);
  return read_action_tubes(in, path.string(), config);
}

std::vector<TrackClassScores> load_track_scores(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_track_scores(in, path.string());
}

void save_ground_truth(const std::vector<GroundTruthTube>& gts, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_ground_truth(out, gts);
}

void save_detections(const std::vector<FrameDetections>& dets, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_detections(out, dets);
}

void save_tracks(const std::vector<Track>& tracks, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_tracks(out, tracks);
}

void save_action_tubes(const std::vector<ActionTube>& tubes, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_action_tubes(out, tubes);
}

void save_track_scores(const std::vector<TrackClassScores>& scores, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_track_scores(out, scores);
}

DatasetConfig load_config(const std::filesystem::path& path) {
  auto in = open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON: " + e.what());
  }
  Locator loc{path.string(), 1};
  DatasetConfig c;
  try {
    c.name = get_string(j, "name", loc);
    c.fps = as_number(field(j, "fps", loc), "fps", loc);
    c.class_names = field(j, "class_names", loc).get<std::vector<std::string>>();
    const auto bins = field(j, "motion_bins", loc).get<std::vector<double>>();
    if (bins.size() != 2) loc.invalid("motion_bins must hold exactly two thresholds");
    c.motion_bins = {bins[0], bins[1]};
    c.motion_offsets = field(j, "motion_offsets", loc).get<std::vector<int>>();
  } catch (const json::exception& e) {
    loc.parse_fail(std::string("bad dataset config: ") + e.what());
  }
  validate_config(c);
  return c;
}

void save_config(const DatasetConfig& config, const std::filesystem::path& path) {
  json j;
  j["name"] = config.name;
  j["fps"] = config.fps;
  j["class_names"] = config.class_names;
  j["motion_bins"] = {config.motion_bins.first, config.motion_bins.second};
  j["motion_offsets"] = config.motion_offsets;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace tubekit
