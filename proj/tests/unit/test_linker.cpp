#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "oracles/trim_oracle.hpp"
#include "support/random.hpp"
#include "tubekit/error.hpp"
#include "tubekit/linker.hpp"
#include "tubekit/synth.hpp"

using namespace tubekit;

namespace {

std::vector<FrameDetections> stream(const std::string& video, int first, int last, const Box& box, int cls = 0,
                                    double score = 0.9) {
  std::vector<FrameDetections> out;
  for (int t = first; t <= last; ++t) out.push_back({video, t, {{box, cls, score}}});
  return out;
}

std::vector<FrameDetections> merge(std::vector<FrameDetections> a, const std::vector<FrameDetections>& b) {
  for (const auto& fb : b) {
    auto it = std::find_if(a.begin(), a.end(),
                           [&](const FrameDetections& f) { return f.video_id == fb.video_id && f.frame == fb.frame; });
    if (it == a.end()) {
      a.push_back(fb);
    } else {
      it->entries.insert(it->entries.end(), fb.entries.begin(), fb.entries.end());
    }
  }
  sort_canonical(a);
  return a;
}

// Several drifting streams with distinct random scores and occasional gaps.
std::vector<FrameDetections> random_video(fixture::Rng& rng, int frames, int streams) {
  std::vector<FrameDetections> out;
  std::vector<Box> pos;
  for (int s = 0; s < streams; ++s) pos.push_back(fixture::random_box(rng, 300.0, 20.0, 60.0));
  for (int t = 0; t < frames; ++t) {
    FrameDetections fd{"v", t, {}};
    for (int s = 0; s < streams; ++s) {
      pos[s] = pos[s].translated(fixture::uniform(rng, -4, 4), fixture::uniform(rng, -4, 4));
      if (fixture::chance(rng, 0.15)) continue;
      fd.entries.push_back({fixture::jitter(rng, pos[s], 2.0), 0, fixture::uniform(rng, 0.05, 1.0)});
    }
    out.push_back(fd);
  }
  return out;
}

LinkParams params(double gate, int misses, int min_len) { return {gate, misses, min_len}; }

}  // namespace

TEST(GreedyLink, ConstantStreamFormsOnePath) {
  const auto paths = greedy_link(stream("v", 0, 4, {0, 0, 10, 10}), 0, params(0.1, 5, 1));
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].geometry.start(), 0);
  EXPECT_EQ(paths[0].geometry.length(), 5u);
  EXPECT_EQ(paths[0].frame_scores, std::vector<double>(5, 0.9));
}

TEST(GreedyLink, DisjointStreamsNeverMerge) {
  const auto dets = merge(stream("v", 0, 9, {0, 0, 10, 10}, 0, 0.9), stream("v", 0, 9, {100, 0, 110, 10}, 0, 0.8));
  const auto paths = greedy_link(dets, 0, params(0.1, 5, 1));
  ASSERT_EQ(paths.size(), 2u);
  for (const auto& p : paths) {
    EXPECT_EQ(p.geometry.length(), 10u);
    EXPECT_EQ(p.geometry.boxes().front(), p.geometry.boxes().back());
  }
}

TEST(GreedyLink, SingleGapIsBridgedWithPlaceholder) {
  auto dets = stream("v", 0, 6, {0, 0, 10, 10});
  dets.erase(dets.begin() + 3);
  const auto paths = greedy_link(dets, 0, params(0.1, 1, 1));
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].geometry.length(), 7u);
  EXPECT_EQ(paths[0].frame_scores[3], 0.0);
  EXPECT_EQ(paths[0].geometry.at(3), (Box{0, 0, 10, 10}));
}

TEST(GreedyLink, LongGapTerminatesAndStripsPlaceholders) {
  auto dets = merge(stream("v", 0, 4, {0, 0, 10, 10}), stream("v", 8, 12, {0, 0, 10, 10}));
  const auto paths = greedy_link(dets, 0, params(0.1, 1, 1));
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].geometry.end(), 4);
  EXPECT_EQ(paths[1].geometry.start(), 8);
  EXPECT_EQ(paths[1].geometry.end(), 12);
}

TEST(GreedyLink, TrailingMissesAtEndOfVideoAreStripped) {
  auto dets = stream("v", 0, 4, {0, 0, 10, 10});
  dets.push_back({"v", 5, {}});
  dets.push_back({"v", 6, {}});
  const auto paths = greedy_link(dets, 0, params(0.1, 5, 1));
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].geometry.end(), 4);
}

TEST(GreedyLink, MinLenDiscardsShortPaths) {
  const auto dets = merge(stream("v", 0, 9, {0, 0, 10, 10}), stream("v", 0, 2, {100, 0, 110, 10}));
  EXPECT_EQ(greedy_link(dets, 0, params(0.1, 0, 8)).size(), 1u);
}

TEST(GreedyLink, OtherClassesAreIgnored) {
  const auto dets = merge(stream("v", 0, 9, {0, 0, 10, 10}, 0), stream("v", 0, 9, {0, 0, 10, 10}, 1));
  EXPECT_EQ(greedy_link(dets, 0, params(0.1, 5, 1)).size(), 1u);
  EXPECT_EQ(greedy_link(dets, 1, params(0.1, 5, 1)).size(), 1u);
  EXPECT_TRUE(greedy_link(dets, 2, params(0.1, 5, 1)).empty());
}

TEST(GreedyLink, InvalidParametersAreRejected) {
  EXPECT_THROW(greedy_link({}, 0, params(1.5, 5, 1)), InvalidInput);
  EXPECT_THROW(greedy_link({}, 0, params(-0.1, 5, 1)), InvalidInput);
  EXPECT_THROW(greedy_link({{"v", 2, {}}, {"v", 1, {}}}, 0, params(0.1, 5, 1)), InvalidInput);
}

TEST(GreedyLink, DeterministicAndPermutationInvariant) {
  fixture::Rng rng(8);
  for (int i = 0; i < 30; ++i) {
    const auto dets = random_video(rng, 40, 4);
    const auto a = greedy_link(dets, 0, params(0.3, 3, 1));
    auto shuffled = dets;
    for (auto& f : shuffled) std::shuffle(f.entries.begin(), f.entries.end(), rng);
    const auto b = greedy_link(shuffled, 0, params(0.3, 3, 1));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].geometry, b[k].geometry);
      EXPECT_EQ(a[k].frame_scores, b[k].frame_scores);
    }
  }
}

TEST(GreedyLink, NoDetectionConsumedTwice) {
  fixture::Rng rng(9);
  for (int i = 0; i < 30; ++i) {
    const auto dets = random_video(rng, 40, 5);
    std::set<std::pair<int, double>> used;
    for (const auto& p : greedy_link(dets, 0, params(0.1, 3, 1))) {
      for (std::size_t k = 0; k < p.geometry.length(); ++k) {
        if (p.frame_scores[k] == 0.0) continue;
        ASSERT_TRUE(used.insert({p.geometry.start() + static_cast<int>(k), p.frame_scores[k]}).second);
      }
    }
  }
}

TEST(TrimPath, AllOnesGiveOneFullSegment) {
  EXPECT_EQ(trim_path(std::vector<double>(12, 1.0), {1.0, 1}), (std::vector<Segment>{{0, 11}}));
}

TEST(TrimPath, AllZerosGiveNothing) { EXPECT_TRUE(trim_path(std::vector<double>(12, 0.0), {1.0, 1}).empty()); }

TEST(TrimPath, BridgingBeatsTwoChanges) {
  const std::vector<double> s = {0.9, 0.9, 0.1, 0.9, 0.9};
  EXPECT_EQ(trim_path(s, {0.5, 1}), (std::vector<Segment>{{0, 4}}));
  EXPECT_NEAR(labeling_energy(s, {1, 1, 1, 1, 1}, 0.5), 3.7, 1e-12);
  EXPECT_NEAR(labeling_energy(s, {1, 1, 0, 1, 1}, 0.5), 3.5, 1e-12);
  const auto ex = oracle::exhaustive_trim(s, 0.5);
  EXPECT_EQ(ex.optimal_masks, std::vector<unsigned long>{0b11111});
}

TEST(TrimPath, ShortSegmentsAreDropped) {
  const std::vector<double> s = {0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0};
  EXPECT_EQ(trim_path(s, {0.0, 3}), (std::vector<Segment>{{5, 8}}));
  EXPECT_EQ(trim_path(s, {0.0, 1}), (std::vector<Segment>{{1, 2}, {5, 8}}));
}

TEST(TrimPath, InvalidParametersAreRejected) {
  EXPECT_THROW(trim_path({}, {}), InvalidInput);
  EXPECT_THROW(trim_path({0.5}, {-1.0, 1}), InvalidInput);
  EXPECT_THROW(trim_path({0.5}, {1.0, 0}), InvalidInput);
}

TEST(TrimPath, DynamicProgramIsGloballyOptimal) {
  fixture::Rng rng(10);
  for (int len = 1; len <= 10; ++len) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto s = fixture::dyadic_scores(rng, len);
      for (double alpha : {0.0, 0.5, 3.0}) {
        const auto labels = optimal_labeling(s, alpha);
        const auto ex = oracle::exhaustive_trim(s, alpha);
        ASSERT_EQ(labeling_energy(s, labels, alpha), ex.best_energy);
        ASSERT_EQ(oracle::energy(s, oracle::to_mask(labels), alpha), ex.best_energy);
      }
    }
  }
}

TEST(TrimPath, ChangesNonIncreasingInAlpha) {
  fixture::Rng rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const auto s = fixture::dyadic_scores(rng, fixture::uniform_int(rng, 1, 40));
    int prev = 1 << 30;
    for (double alpha = 0.0; alpha <= 4.0; alpha += 0.125) {
      const int c = oracle::label_changes(optimal_labeling(s, alpha));
      ASSERT_LE(c, prev) << "alpha " << alpha;
      prev = c;
    }
  }
}

TEST(BuildTubes, EmptyInputGivesNothing) { EXPECT_TRUE(build_tubes({}, {}, {}).empty()); }

TEST(BuildTubes, PerfectSyntheticVideoRecoversPlantedTubes) {
  SynthSpec spec;
  spec.num_videos = 4;
  const auto synth = generate(spec);
  const auto tubes = build_tubes(synth.detections, {}, {});
  ASSERT_EQ(tubes.size(), synth.gts.size());
  std::multiset<std::tuple<std::string, int, int, int>> want, got;
  for (const auto& g : synth.gts) want.insert({g.video_id, g.class_id, g.geometry.start(), g.geometry.end()});
  for (const auto& t : tubes) {
    got.insert({t.video_id, t.class_id, t.geometry.start(), t.geometry.end()});
    EXPECT_EQ(t.tube_score, 1.0);
    const auto& g = *std::find_if(synth.gts.begin(), synth.gts.end(), [&](const GroundTruthTube& x) {
      return x.video_id == t.video_id && x.class_id == t.class_id && x.geometry.start() == t.geometry.start();
    });
    EXPECT_EQ(g.geometry, t.geometry);
  }
  EXPECT_EQ(got, want);
}

TEST(BuildTubes, ClassesAreLinkedIndependently) {
  const auto dets = merge(stream("v", 0, 19, {0, 0, 10, 10}, 0, 0.9), stream("v", 5, 24, {0, 0, 10, 10}, 1, 0.8));
  const auto tubes = build_tubes(dets, {}, {});
  ASSERT_EQ(tubes.size(), 2u);
  EXPECT_EQ(tubes[0].class_id, 0);
  EXPECT_EQ(tubes[0].geometry.start(), 0);
  EXPECT_EQ(tubes[0].geometry.end(), 19);
  EXPECT_EQ(tubes[1].class_id, 1);
  EXPECT_EQ(tubes[1].geometry.start(), 5);
  EXPECT_EQ(tubes[1].geometry.end(), 24);
}

TEST(BuildTubes, RespectsSegmentLengthAndInputRange) {
  fixture::Rng rng(12);
  for (int i = 0; i < 10; ++i) {
    const auto dets = random_video(rng, 60, 4);
    const TrimParams trim{1.0, 6};
    const auto one = build_tubes(dets, {0.2, 3, 4}, trim, 1);
    EXPECT_EQ(one, build_tubes(dets, {0.2, 3, 4}, trim, 3));
    for (const auto& t : one) {
      EXPECT_GE(static_cast<int>(t.geometry.length()), trim.min_segment_length);
      EXPECT_GE(t.geometry.start(), 0);
      EXPECT_LE(t.geometry.end(), 59);
      EXPECT_EQ(t.frame_scores.size(), t.geometry.length());
      EXPECT_NEAR(t.tube_score, mean_score(t.frame_scores), 1e-15);
    }
  }
}

TEST(TracksToTubes, DominantClassCoversWholeTrack) {
  Track tr{"v", "k", TubeGeometry(3, std::vector<Box>(10, {0, 0, 5, 5})), std::nullopt};
  TrackClassScores s{"v", "k", 3, std::vector<std::vector<double>>(10, {0.05, 0.9, 0.05})};
  const auto tubes = tracks_to_tubes({tr}, {s}, {});
  ASSERT_EQ(tubes.size(), 1u);
  EXPECT_EQ(tubes[0].class_id, 1);
  EXPECT_EQ(tubes[0].geometry, tr.geometry);
  EXPECT_NEAR(tubes[0].tube_score, 0.9, 1e-15);
}

TEST(TracksToTubes, TwoPhasesBecomeTwoTubes) {
  const int n = 12;
  Track tr{"v", "k", TubeGeometry(0, std::vector<Box>(n, {0, 0, 5, 5})), std::nullopt};
  TrackClassScores s{"v", "k", 0, {}};
  for (int t = 0; t < n; ++t) s.scores.push_back(t < 6 ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0});
  const TrimParams trim{0.5, 2};
  const auto tubes = tracks_to_tubes({tr}, {s}, trim);
  ASSERT_EQ(tubes.size(), 2u);
  for (int c = 0; c < 2; ++c) {
    std::vector<double> seq;
    for (const auto& row : s.scores) seq.push_back(row[c]);
    const auto ex = oracle::exhaustive_trim(seq, trim.alpha);
    ASSERT_EQ(ex.optimal_masks.size(), 1u);
    const unsigned long want = c == 0 ? 0b000000111111UL : 0b111111000000UL;
    EXPECT_EQ(ex.optimal_masks[0], want);
  }
  EXPECT_EQ(tubes[0].class_id, 0);
  EXPECT_EQ(tubes[0].geometry.end(), 5);
  EXPECT_EQ(tubes[1].class_id, 1);
  EXPECT_EQ(tubes[1].geometry.start(), 6);
}

TEST(TracksToTubes, BackgroundScoresGiveNothing) {
  Track tr{"v", "k", TubeGeometry(0, std::vector<Box>(10, {0, 0, 5, 5})), std::nullopt};
  TrackClassScores s{"v", "k", 0, std::vector<std::vector<double>>(10, {0.1, 0.05})};
  EXPECT_TRUE(tracks_to_tubes({tr}, {s}, {}).empty());
}

TEST(TracksToTubes, MissingScoresAreAnError) {
  Track tr{"v", "k", TubeGeometry(0, std::vector<Box>(10, {0, 0, 5, 5})), std::nullopt};
  EXPECT_THROW(tracks_to_tubes({tr}, {}, {}), InvalidInput);
  TrackClassScores partial{"v", "k", 0, std::vector<std::vector<double>>(9, {0.5})};
  EXPECT_THROW(tracks_to_tubes({tr}, {partial}, {}), InvalidInput);
}
