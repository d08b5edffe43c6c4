#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "support/random.hpp"
#include "tubekit/error.hpp"
#include "tubekit/io.hpp"

using namespace tubekit;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tubekit_datamodel_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename E, typename Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const E& e) {
    return e.what();
  }
  return "<no exception>";
}

// Coordinates with at most six fractional digits survive serialization exactly.
double six(fixture::Rng& rng, double lo, double hi) {
  return std::round(fixture::uniform(rng, lo, hi) * 1e6) / 1e6;
}

Box six_box(fixture::Rng& rng) {
  const double x = six(rng, 0, 500), y = six(rng, 0, 500);
  const double w = six(rng, 1, 80), h = six(rng, 1, 80);
  return {x, y, std::round((x + w) * 1e6) / 1e6, std::round((y + h) * 1e6) / 1e6};
}

TubeGeometry six_tube(fixture::Rng& rng) {
  std::vector<Box> boxes;
  const int n = fixture::uniform_int(rng, 1, 6);
  for (int i = 0; i < n; ++i) boxes.push_back(six_box(rng));
  return {fixture::uniform_int(rng, 0, 50), boxes};
}

const char* kTwoTubes =
    "{\"schema\":\"tubekit.gt.v1\"}\n"
    "{\"video\":\"b\",\"tube\":\"t1\",\"class\":1,\"start\":3,\"boxes\":[[0,0,1,1],[1,1,2,2]]}\n"
    "{\"video\":\"a\",\"tube\":\"t9\",\"class\":0,\"start\":0,\"boxes\":[[0,0,5,5]]}\n";

}  // namespace

TEST(BuiltinConfig, MultisportsBins) {
  const auto c = builtin_config("multisports");
  EXPECT_EQ(c.motion_bins.first, 0.21);
  EXPECT_EQ(c.motion_bins.second, 0.51);
  EXPECT_EQ(c.fps, 25.0);
  EXPECT_EQ(c.motion_offsets, (std::vector<int>{4, 8, 16, 24, 36}));
  EXPECT_EQ(c.num_classes(), 60);
}

TEST(BuiltinConfig, Ucf24Bins) {
  const auto c = builtin_config("ucf24");
  EXPECT_EQ(c.motion_bins.first, 0.49);
  EXPECT_EQ(c.motion_bins.second, 0.66);
  EXPECT_EQ(c.fps, 25.0);
  EXPECT_EQ(c.motion_offsets, (std::vector<int>{4, 8, 16, 24, 36}));
  EXPECT_EQ(c.num_classes(), 24);
}

TEST(BuiltinConfig, UnknownNameIsRejected) { EXPECT_THROW(builtin_config("kinetics"), InvalidInput); }

TEST(DatasetConfig, ValidationChecksBinsAndOffsets) {
  auto c = builtin_config("ucf24");
  EXPECT_NO_THROW(validate_config(c));
  auto bad = c;
  bad.motion_bins = {0.6, 0.5};
  EXPECT_THROW(validate_config(bad), Error);
  bad = c;
  bad.motion_bins = {0.0, 0.5};
  EXPECT_THROW(validate_config(bad), Error);
  bad = c;
  bad.motion_offsets = {4, 0};
  EXPECT_THROW(validate_config(bad), Error);
}

TEST(DatasetConfig, FileRoundTrip) {
  const auto c = builtin_config("ucf24");
  const auto path = temp_path("config.json");
  save_config(c, path);
  EXPECT_EQ(load_config(path), c);
}

TEST(LoadGroundTruth, SortsByVideoThenTube) {
  std::istringstream in(kTwoTubes);
  const auto gts = read_ground_truth(in, "gt.ndjson");
  ASSERT_EQ(gts.size(), 2u);
  EXPECT_EQ(gts[0].video_id, "a");
  EXPECT_EQ(gts[1].video_id, "b");
  EXPECT_EQ(gts[1].tube_id, "t1");
  EXPECT_EQ(gts[1].geometry.start(), 3);
  EXPECT_EQ(gts[1].geometry.end(), 4);
}

TEST(LoadGroundTruth, ContiguityViolationNamesTheTube) {
  std::istringstream in(
      "{\"schema\":\"tubekit.gt.v1\"}\n"
      "{\"video\":\"v\",\"tube\":\"runner\",\"class\":0,\"start\":0,\"end\":5,\"boxes\":[[0,0,1,1]]}\n");
  const auto msg = error_message<ValidationError>([&] { read_ground_truth(in, "gt.ndjson"); });
  EXPECT_NE(msg.find("runner"), std::string::npos) << msg;
  EXPECT_NE(msg.find("gt.ndjson:2"), std::string::npos) << msg;
}

TEST(LoadGroundTruth, EmptyFileIsEmptyCollection) {
  const auto path = temp_path("empty.ndjson");
  write_file(path, "");
  EXPECT_TRUE(load_ground_truth(path).empty());
  EXPECT_TRUE(load_detections(path).empty());
  EXPECT_TRUE(load_tracks(path).empty());
  EXPECT_TRUE(load_action_tubes(path).empty());
}

TEST(LoadGroundTruth, ParseErrorsCarryTheLineLocator) {
  std::istringstream in("{\"schema\":\"tubekit.gt.v1\"}\n\n{\"video\":\"v\",\"tube\":\"x\"\n");
  const auto msg = error_message<ParseError>([&] { read_ground_truth(in, "broken.ndjson"); });
  EXPECT_NE(msg.find("broken.ndjson:3"), std::string::npos) << msg;
}

TEST(LoadGroundTruth, WrongSchemaIsRejected) {
  std::istringstream in("{\"schema\":\"tubekit.det.v1\"}\n");
  EXPECT_THROW(read_ground_truth(in, "x"), ParseError);
}

TEST(LoadGroundTruth, UnknownClassWithConfigIsRejected) {
  auto c = builtin_config("ucf24");
  std::istringstream in(
      "{\"schema\":\"tubekit.gt.v1\"}\n"
      "{\"video\":\"v\",\"tube\":\"x\",\"class\":24,\"start\":0,\"boxes\":[[0,0,1,1]]}\n");
  EXPECT_THROW(read_ground_truth(in, "gt", &c), ValidationError);
}

TEST(LoadGroundTruth, DuplicateTubesAreRejected) {
  std::istringstream in(
      "{\"schema\":\"tubekit.gt.v1\"}\n"
      "{\"video\":\"v\",\"tube\":\"x\",\"class\":0,\"start\":0,\"boxes\":[[0,0,1,1]]}\n"
      "{\"video\":\"v\",\"tube\":\"x\",\"class\":0,\"start\":4,\"boxes\":[[0,0,1,1]]}\n");
  EXPECT_THROW(read_ground_truth(in, "gt"), ValidationError);
}

TEST(LoadDetections, ScoreAboveOneIsARangeError) {
  std::istringstream in(
      "{\"schema\":\"tubekit.det.v1\"}\n"
      "{\"video\":\"v\",\"frame\":0,\"dets\":[[0,0,1,1,0,1.5]]}\n");
  const auto msg = error_message<ValidationError>([&] { read_detections(in, "det.ndjson"); });
  EXPECT_NE(msg.find("det.ndjson:2"), std::string::npos) << msg;
}

TEST(LoadDetections, UnknownClassWithConfigIsRejected) {
  auto c = builtin_config("ucf24");
  std::istringstream in(
      "{\"schema\":\"tubekit.det.v1\"}\n"
      "{\"video\":\"v\",\"frame\":0,\"dets\":[[0,0,1,1,30,0.5]]}\n");
  EXPECT_THROW(read_detections(in, "det", &c), ValidationError);
}

TEST(LoadDetections, NegativeFrameIsRejected) {
  std::istringstream in(
      "{\"schema\":\"tubekit.det.v1\"}\n"
      "{\"video\":\"v\",\"frame\":-1,\"dets\":[]}\n");
  EXPECT_THROW(read_detections(in, "det"), ValidationError);
}

TEST(LoadTracks, ScoresMustAlignWithBoxes) {
  std::istringstream in(
      "{\"schema\":\"tubekit.track.v1\"}\n"
      "{\"video\":\"v\",\"track\":\"k\",\"start\":0,\"boxes\":[[0,0,1,1],[0,0,1,1]],\"scores\":[0.5]}\n");
  EXPECT_THROW(read_tracks(in, "tracks"), ValidationError);
}

TEST(RoundTrip, GroundTruthIsIdentity) {
  fixture::Rng rng(5);
  std::vector<GroundTruthTube> gts;
  for (int i = 0; i < 30; ++i)
    gts.push_back({"v" + std::to_string(i % 4), "t" + std::to_string(i), i % 3, six_tube(rng)});
  sort_canonical(gts);
  const auto path = temp_path("gt_rt.ndjson");
  save_ground_truth(gts, path);
  EXPECT_EQ(load_ground_truth(path), gts);
  EXPECT_EQ(load_ground_truth(path), load_ground_truth(path));
}

TEST(RoundTrip, DetectionsAreIdentity) {
  fixture::Rng rng(6);
  std::vector<FrameDetections> dets;
  for (int f = 0; f < 20; ++f) {
    FrameDetections fd{"v" + std::to_string(f % 3), f, {}};
    const int n = fixture::uniform_int(rng, 0, 4);
    for (int i = 0; i < n; ++i) fd.entries.push_back({six_box(rng), i % 2, six(rng, 0, 1)});
    dets.push_back(fd);
  }
  sort_canonical(dets);
  const auto path = temp_path("det_rt.ndjson");
  save_detections(dets, path);
  EXPECT_EQ(load_detections(path), dets);
}

TEST(RoundTrip, TracksAreIdentity) {
  fixture::Rng rng(7);
  std::vector<Track> tracks;
  for (int i = 0; i < 15; ++i) {
    Track t{"v" + std::to_string(i % 2), "k" + std::to_string(i), six_tube(rng), std::nullopt};
    if (i % 3 == 0) {
      t.box_scores = std::vector<double>();
      for (std::size_t j = 0; j < t.geometry.length(); ++j) t.box_scores->push_back(six(rng, 0, 1));
    }
    tracks.push_back(t);
  }
  sort_canonical(tracks);
  const auto path = temp_path("track_rt.ndjson");
  save_tracks(tracks, path);
  EXPECT_EQ(load_tracks(path), tracks);
}

TEST(RoundTrip, ActionTubesAreIdentityAndBytesAreStable) {
  fixture::Rng rng(8);
  std::vector<ActionTube> tubes;
  for (int i = 0; i < 15; ++i) {
    ActionTube t{"v" + std::to_string(i % 2), i % 3, six_tube(rng), 0.0, {}};
    for (std::size_t j = 0; j < t.geometry.length(); ++j) t.frame_scores.push_back(six(rng, 0, 1));
    t.tube_score = six(rng, 0, 1);
    tubes.push_back(t);
  }
  sort_canonical(tubes);
  const auto p1 = temp_path("tube_rt1.ndjson"), p2 = temp_path("tube_rt2.ndjson");
  save_action_tubes(tubes, p1);
  const auto loaded = load_action_tubes(p1);
  EXPECT_EQ(loaded, tubes);
  save_action_tubes(loaded, p2);
  EXPECT_EQ(read_file(p1), read_file(p2));
}

TEST(RoundTrip, TrackScoresAreIdentity) {
  std::vector<TrackClassScores> scores = {{"v", "k0", 2, {{0.25, 0.75}, {0.5, 0.5}}},
                                          {"v", "k1", 0, {{1.0, 0.0}}}};
  const auto path = temp_path("scores_rt.ndjson");
  save_track_scores(scores, path);
  EXPECT_EQ(load_track_scores(path), scores);
}

TEST(RoundTrip, CanonicalFileSavesByteIdentical) {
  const auto p1 = temp_path("canon1.ndjson"), p2 = temp_path("canon2.ndjson");
  std::istringstream in(kTwoTubes);
  save_ground_truth(read_ground_truth(in, "gt"), p1);
  save_ground_truth(load_ground_truth(p1), p2);
  EXPECT_EQ(read_file(p1), read_file(p2));
  EXPECT_EQ(read_file(p1).rfind("{\"schema\":\"tubekit.gt.v1\"}\n", 0), 0u);
}

TEST(FormatFixed6, SixFractionalDigits) {
  EXPECT_EQ(format_fixed6(0.5), "0.500000");
  EXPECT_EQ(format_fixed6(1.0 / 3.0), "0.333333");
  EXPECT_EQ(format_fixed6(-0.0), "0.000000");
}

TEST(MeanScore, ArithmeticMean) {
  EXPECT_DOUBLE_EQ(mean_score({0.25, 0.75, 0.5}), 0.5);
}
