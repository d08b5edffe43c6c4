#include <gtest/gtest.h>

#include "support/process.hpp"

namespace fs = std::filesystem;
using fixture::read_file;
using fixture::run_cli;

namespace {

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fixture::scratch("cli");
    const auto r = run_cli("synth --out " + dir_.string());
    ASSERT_EQ(r.exit_code, 0) << r.out;
  }
  static std::string p(const std::string& name) { return (dir_ / name).string(); }
  static fs::path dir_;
};

fs::path CliTest::dir_;

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_F(CliTest, HelpAndUsageExitCodes) {
  EXPECT_EQ(run_cli("--help").exit_code, 0);
  EXPECT_EQ(run_cli("eval-frames --help").exit_code, 0);
  EXPECT_EQ(run_cli("").exit_code, 2);
  EXPECT_EQ(run_cli("no-such-command").exit_code, 2);
  EXPECT_EQ(run_cli("eval-videos --gt " + p("gt.ndjson")).exit_code, 2);
  EXPECT_EQ(run_cli("eval-frames --gt " + p("gt.ndjson") + " --det " + p("det.ndjson")).exit_code, 2);
  EXPECT_EQ(run_cli("eval-frames --gt a --det b --dataset ucf24 --config c").exit_code, 2);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
  const auto r = run_cli("eval-frames --gt " + p("missing.ndjson") + " --det " + p("det.ndjson") + " --dataset ucf24");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("missing.ndjson"), std::string::npos);
  EXPECT_EQ(run_cli("synth --spec " + p("missing.json") + " --out " + p("x")).exit_code, 1);
}

TEST_F(CliTest, ValidationErrorCarriesLocator) {
  const auto bad = p("bad_det.ndjson");
  fixture::write_file(bad,
                      "{\"schema\":\"tubekit.det.v1\"}\n"
                      "{\"video\":\"v000\",\"frame\":0,\"dets\":[[0,0,10,10,0,1.5]]}\n");
  const auto r = run_cli("eval-frames --gt " + p("gt.ndjson") + " --det " + bad + " --config " + p("config.json"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("bad_det.ndjson:2"), std::string::npos) << r.out;
}

TEST_F(CliTest, ZeroNoiseFrameEvalIsPerfect) {
  const auto r = run_cli("eval-frames --gt " + p("gt.ndjson") + " --det " + p("det.ndjson") + " --config " +
                         p("config.json") + " --format table");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("mAP 1.000000"), std::string::npos) << r.out;
}

TEST_F(CliTest, SweepPrintsNineRowsAndMean) {
  ASSERT_EQ(run_cli("build-tubes --det " + p("det.ndjson") + " --out " + p("tubes.ndjson")).exit_code, 0);
  const auto r = run_cli("eval-videos --gt " + p("gt.ndjson") + " --tubes " + p("tubes.ndjson") +
                         " --sweep 0.1:0.9:0.1 --format table");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_EQ(count_lines(r.out), 11u) << r.out;
  EXPECT_NE(r.out.find("0.900000"), std::string::npos);
  EXPECT_NE(r.out.find("mean    1.000000"), std::string::npos) << r.out;
}

TEST_F(CliTest, FilterKeepsLowScoreDetectionOnTrack) {
  const auto det = p("one_det.ndjson"), trk = p("one_track.ndjson"), out = p("one_out.ndjson");
  fixture::write_file(det,
                      "{\"schema\":\"tubekit.det.v1\"}\n"
                      "{\"video\":\"v\",\"frame\":0,\"dets\":[[10,10,50,90,0,0.06],"
                      "[10,10,50,90,1,0.04]]}\n");
  fixture::write_file(trk,
                      "{\"schema\":\"tubekit.track.v1\"}\n"
                      "{\"video\":\"v\",\"track\":\"k\",\"start\":0,\"boxes\":[[10,10,50,90]]}\n");
  const auto r = run_cli("filter-dets --det " + det + " --tracks " + trk + " --out " + out + " --score-thresh 0.05");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("kept 1 of 2"), std::string::npos) << r.out;
  const auto text = read_file(out);
  EXPECT_NE(text.find("0.060000"), std::string::npos) << text;
  EXPECT_EQ(text.find("0.040000"), std::string::npos) << text;
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  const auto a = p("a.json"), b = p("b.json");
  const std::string base = "label-motion --gt " + p("gt.ndjson") + " --config " + p("config.json") + " --out ";
  ASSERT_EQ(run_cli(base + a).exit_code, 0);
  ASSERT_EQ(run_cli("--jobs 4 " + base + b).exit_code, 0);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_FALSE(read_file(a).empty());
}
