// tubekit command-line frontend.
//
// Exit codes: 0 success, 1 validation or I/O failure, 2 usage error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli_support.hpp"
#include "tubekit/error.hpp"
#include "tubekit/filter.hpp"
#include "tubekit/io.hpp"
#include "tubekit/linker.hpp"
#include "tubekit/metrics.hpp"
#include "tubekit/motion.hpp"
#include "tubekit/synth.hpp"
#include "tubekit/tfa.hpp"
#include "tubekit/toialign.hpp"

namespace {

using namespace tubekit;

struct DatasetFlags {
  std::string dataset;
  std::string config_path;

  void add(CLI::App* cmd, bool required) {
    auto* d = cmd->add_option("--dataset", dataset, "Builtin dataset (multisports, ucf24)");
    auto* c = cmd->add_option("--config", config_path, "Dataset config JSON file");
    d->excludes(c);
    c->excludes(d);
    if (required) {
      // Checked at run time so the message names both alternatives.
      required_ = true;
    }
  }

  std::optional<DatasetConfig> resolve() const {
    if (!dataset.empty()) return builtin_config(dataset);
    if (!config_path.empty()) return load_config(config_path);
    if (required_) throw InvalidInput("one of --dataset or --config is required");
    return std::nullopt;
  }

 private:
  bool required_ = false;
};

enum class Format { Table, Json, Both };

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path + ": cannot open for writing");
  out << text;
}

void emit(Format format, const std::string& table, const std::string& json, const std::string& json_out) {
  if (format == Format::Table || format == Format::Both) std::cout << table;
  if (format == Format::Both) std::cout << "\n";
  if (format == Format::Json || format == Format::Both) std::cout << json;
  if (!json_out.empty()) write_text(json_out, json);
}

void add_format(CLI::App* cmd, Format& format, std::string& json_out) {
  cmd->add_option("--format", format, "Standard output: table, json or both")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Format>{{"table", Format::Table}, {"json", Format::Json}, {"both", Format::Both}},
          CLI::ignore_case))
      ->default_str("both");
  cmd->add_option("--json-out", json_out, "Also write the JSON report to this file");
}

MotionLabeling motion_labels(const std::vector<GroundTruthTube>& gts, const std::optional<DatasetConfig>& config,
                             const std::string& labels_path, int jobs) {
  if (!labels_path.empty()) return load_motion_labeling(labels_path);
  if (!config) throw InvalidInput("--motion needs --dataset or --config for the motion bins");
  return label_dataset(gts, *config, jobs);
}

const DatasetConfig* ptr(const std::optional<DatasetConfig>& c) { return c ? &*c : nullptr; }

std::vector<Track> tracks_for_video(const std::vector<Track>& all, std::string video) {
  if (video.empty()) {
    for (const auto& t : all) {
      if (video.empty()) video = t.video_id;
      if (t.video_id != video) throw InvalidInput("tracks span several videos; pick one with --video");
    }
  }
  std::vector<Track> out;
  for (const auto& t : all) {
    if (t.video_id == video) out.push_back(t);
  }
  if (out.empty() && !all.empty()) throw InvalidInput("no tracks for video '" + video + "'");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tubekit: spatiotemporal action-tube toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  int jobs = 1;
  bool verbose = false;
  app.add_option("--jobs", jobs, "Worker threads")->envname("TUBEKIT_JOBS")->check(CLI::Range(1, 1024));
  app.add_flag("--verbose", verbose, "Print timing information to standard error");

  // eval-frames
  struct {
    std::string gt, det, labels, json_out, pr_csv;
    double iou = 0.5;
    bool motion = false;
    Format format = Format::Both;
    DatasetFlags ds;
  } ef;
  auto* eval_frames = app.add_subcommand("eval-frames", "Frame-level AP / mAP");
  eval_frames->add_option("--gt", ef.gt, "Ground-truth tubes (tubekit.gt.v1)")->required();
  eval_frames->add_option("--det", ef.det, "Frame detections (tubekit.det.v1)")->required();
  eval_frames->add_option("--iou", ef.iou, "IoU threshold (strict)")->capture_default_str();
  eval_frames->add_flag("--motion", ef.motion, "Also report motion-AP and motion-mAP");
  eval_frames->add_option("--labels", ef.labels, "Precomputed motion labels (implies --motion)");
  eval_frames->add_option("--pr-curves", ef.pr_csv, "Write per-class PR curves as CSV");
  ef.ds.add(eval_frames, true);
  add_format(eval_frames, ef.format, ef.json_out);

  // eval-videos
  struct {
    std::string gt, tubes, labels, json_out, sweep, pr_csv;
    double st_iou = 0.5;
    bool motion = false;
    Format format = Format::Both;
    DatasetFlags ds;
  } ev;
  auto* eval_videos = app.add_subcommand("eval-videos", "Video-level AP / mAP (spatiotemporal IoU)");
  eval_videos->add_option("--gt", ev.gt, "Ground-truth tubes (tubekit.gt.v1)")->required();
  eval_videos->add_option("--tubes", ev.tubes, "Action tubes (tubekit.tube.v1)")->required();
  eval_videos->add_option("--st-iou", ev.st_iou, "Spatiotemporal IoU threshold (strict)")->capture_default_str();
  eval_videos->add_option("--sweep", ev.sweep, "Threshold sweep lo:hi:step, e.g. 0.1:0.9:0.1");
  eval_videos->add_flag("--motion", ev.motion, "Also report motion-AP and motion-mAP");
  eval_videos->add_option("--labels", ev.labels, "Precomputed motion labels (implies --motion)");
  eval_videos->add_option("--pr-curves", ev.pr_csv, "Write per-class PR curves as CSV");
  ev.ds.add(eval_videos, false);
  add_format(eval_videos, ev.format, ev.json_out);

  // label-motion
  struct {
    std::string gt, out;
    bool suggest = false;
    DatasetFlags ds;
  } lm;
  auto* label_motion = app.add_subcommand("label-motion", "Assign Large/Medium/Small motion labels");
  label_motion->add_option("--gt", lm.gt, "Ground-truth tubes")->required();
  label_motion->add_option("--out", lm.out, "Output labels JSON")->required();
  label_motion->add_flag("--suggest-bins", lm.suggest, "Print tertile thresholds of the motion IoUs");
  lm.ds.add(label_motion, true);

  // motion-cdf
  struct {
    std::string gt, out, edges = "0:1:0.05";
    double offset_seconds = 1.0;
    DatasetFlags ds;
  } mc;
  auto* cdf = app.add_subcommand("motion-cdf", "Cumulative distribution of pair IoUs at a fixed time offset");
  cdf->add_option("--gt", mc.gt, "Ground-truth tubes")->required();
  cdf->add_option("--offset-seconds", mc.offset_seconds, "Pair separation in seconds")->capture_default_str();
  cdf->add_option("--edges", mc.edges, "Bin edges lo:hi:step")->capture_default_str();
  cdf->add_option("--out", mc.out, "Output CSV")->required();
  mc.ds.add(cdf, false);

  // build-tubes
  struct {
    std::string det, out;
    LinkParams link;
    TrimParams trim;
    DatasetFlags ds;
  } bt;
  auto* build = app.add_subcommand("build-tubes", "Greedy linking plus temporal trimming");
  build->add_option("--det", bt.det, "Frame detections")->required();
  build->add_option("--out", bt.out, "Output action tubes")->required();
  build->add_option("--alpha", bt.trim.alpha, "Label-change cost")->capture_default_str();
  build->add_option("--iou-gate", bt.link.iou_gate, "Linking IoU gate")->capture_default_str();
  build->add_option("--max-misses", bt.link.max_misses, "Consecutive misses before a path ends")->capture_default_str();
  build->add_option("--min-len", bt.link.min_len, "Minimum path length")->capture_default_str();
  build->add_option("--min-seg", bt.trim.min_segment_length, "Minimum trimmed segment length")
      ->capture_default_str();
  bt.ds.add(build, false);

  // trim-tracks
  struct {
    std::string tracks, scores, out;
    TrimParams trim;
  } tt;
  auto* trim = app.add_subcommand("trim-tracks", "Trim tracks into action tubes from per-frame class scores");
  trim->add_option("--tracks", tt.tracks, "Tracks (tubekit.track.v1)")->required();
  trim->add_option("--scores", tt.scores, "Class scores (tubekit.scores.v1)")->required();
  trim->add_option("--out", tt.out, "Output action tubes")->required();
  trim->add_option("--alpha", tt.trim.alpha, "Label-change cost")->capture_default_str();
  trim->add_option("--min-seg", tt.trim.min_segment_length, "Minimum segment length")->capture_default_str();

  // filter-dets
  struct {
    std::string det, tracks, out;
    FilterParams params;
  } fd;
  auto* filter = app.add_subcommand("filter-dets", "Keep detections that overlap a track box");
  filter->add_option("--det", fd.det, "Frame detections")->required();
  filter->add_option("--tracks", fd.tracks, "Tracks")->required();
  filter->add_option("--out", fd.out, "Filtered detections")->required();
  filter->add_option("--score-thresh", fd.params.score_thresh, "Minimum detection score")->capture_default_str();
  filter->add_option("--match-iou", fd.params.match_iou, "Minimum IoU with a track box")->capture_default_str();

  // pool-features
  struct {
    std::string features, tracks, tfa = "maxpool", weights, out, video;
    std::optional<double> stride;
    std::optional<int> clip_start;
    std::size_t output_size = 7, sampling = 2;
    bool only_overlapping = false;
  } pf;
  auto* pool = app.add_subcommand("pool-features", "TOI-Align, spatial average pool and temporal aggregation");
  pool->add_option("--features", pf.features, "Feature grid (.tkt with tensor 'features' T x C x H x W)")->required();
  pool->add_option("--tracks", pf.tracks, "Tracks")->required();
  pool->add_option("--tfa", pf.tfa, "Temporal aggregation")->check(CLI::IsMember({"maxpool", "tcn", "aspp"}))
      ->capture_default_str();
  pool->add_option("--weights", pf.weights, "TFA weights (.tkt)");
  pool->add_option("--out", pf.out, "Output .tkt")->required();
  pool->add_option("--video", pf.video, "Video whose tracks to pool");
  pool->add_option("--stride", pf.stride, "Spatial stride, overrides the file");
  pool->add_option("--clip-start", pf.clip_start, "Absolute frame of clip frame 0, overrides the file");
  pool->add_option("--output-size", pf.output_size, "RoIAlign bins per side")->capture_default_str();
  pool->add_option("--sampling-ratio", pf.sampling, "RoIAlign samples per bin side")->capture_default_str();
  pool->add_flag("--only-overlapping", pf.only_overlapping, "Skip tracks that miss the clip instead of failing");

  // init-weights
  struct {
    std::string tfa, out;
    std::uint64_t seed = 0;
  } iw;
  auto* init = app.add_subcommand("init-weights", "Write seeded random TFA weights");
  init->add_option("--tfa", iw.tfa, "tcn or aspp")->required()->check(CLI::IsMember({"tcn", "aspp"}));
  init->add_option("--seed", iw.seed, "Random seed")->capture_default_str();
  init->add_option("--out", iw.out, "Output .tkt")->required();

  // synth
  struct {
    std::string spec, out;
  } sy;
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic fixture");
  synth->add_option("--spec", sy.spec, "Synth spec JSON (defaults used when omitted)");
  synth->add_option("--out", sy.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
    for (const auto* ds : {&ef.ds, &lm.ds}) {
      const bool active = ds == &ef.ds ? eval_frames->parsed() : label_motion->parsed();
      if (active && ds->dataset.empty() && ds->config_path.empty()) {
        throw CLI::RequiredError("one of --dataset or --config");
      }
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (*eval_frames) {
      const auto config = ef.ds.resolve();
      const auto gts = load_ground_truth(ef.gt, ptr(config));
      const auto dets = load_detections(ef.det, ptr(config));
      std::optional<MotionLabeling> labels;
      if (ef.motion || !ef.labels.empty()) labels = motion_labels(gts, config, ef.labels, jobs);
      const auto table = match_frame_detections(dets, gts, ef.iou, jobs);
      const auto report = make_report(table, ptr(config), labels ? &*labels : nullptr);
      if (!ef.pr_csv.empty()) write_text(ef.pr_csv, pr_curves_csv(table));
      emit(ef.format, report_table(report), report_json(report), ef.json_out);
    } else if (*eval_videos) {
      const auto config = ev.ds.resolve();
      const auto gts = load_ground_truth(ev.gt, ptr(config));
      const auto tubes = load_action_tubes(ev.tubes, ptr(config));
      std::optional<MotionLabeling> labels;
      if (ev.motion || !ev.labels.empty()) labels = motion_labels(gts, config, ev.labels, jobs);
      const MotionLabeling* lp = labels ? &*labels : nullptr;
      if (!ev.sweep.empty()) {
        const auto sweep = threshold_sweep(
            [&](double t) { return video_eval(tubes, gts, t, ptr(config), lp, jobs); }, cli::parse_range(ev.sweep));
        emit(ev.format, sweep_table(sweep), sweep_json(sweep), ev.json_out);
      } else {
        const auto table = match_action_tubes(tubes, gts, ev.st_iou, jobs);
        const auto report = make_report(table, ptr(config), lp);
        if (!ev.pr_csv.empty()) write_text(ev.pr_csv, pr_curves_csv(table));
        emit(ev.format, report_table(report), report_json(report), ev.json_out);
      }
    } else if (*label_motion) {
      const auto config = *lm.ds.resolve();
      const auto gts = load_ground_truth(lm.gt, &config);
      const auto labels = label_dataset(gts, config, jobs);
      save_motion_labeling(labels, config, lm.out);
      long counts[3] = {0, 0, 0};
      std::vector<double> values;
      for (const auto& [key, l] : labels) {
        ++counts[static_cast<int>(l.category)];
        values.push_back(l.motion_iou);
      }
      std::cout << "labeled " << labels.size() << " tubes: large " << counts[0] << ", medium " << counts[1]
                << ", small " << counts[2] << "\n";
      if (lm.suggest && !values.empty()) {
        const auto [b1, b2] = tertile_thresholds(values);
        std::cout << "tertile bins: " << format_fixed6(b1) << " " << format_fixed6(b2) << "\n";
      }
    } else if (*cdf) {
      const auto config = mc.ds.resolve();
      const double fps = config ? config->fps : 25.0;
      const auto gts = load_ground_truth(mc.gt, ptr(config));
      const int offset = static_cast<int>(std::lround(mc.offset_seconds * fps));
      const auto result = motion_cdf(gts, offset, cli::parse_range(mc.edges));
      write_text(mc.out, motion_cdf_csv(result));
      std::cout << "pair offset " << offset << " frames: " << result.included_tubes << " tubes included, "
                << result.excluded_tubes << " excluded\n";
    } else if (*build) {
      const auto config = bt.ds.resolve();
      const auto dets = load_detections(bt.det, ptr(config));
      const auto tubes = build_tubes(dets, bt.link, bt.trim, jobs);
      save_action_tubes(tubes, bt.out);
      std::cout << "built " << tubes.size() << " action tubes\n";
    } else if (*trim) {
      const auto tracks = load_tracks(tt.tracks);
      const auto scores = load_track_scores(tt.scores);
      const auto tubes = tracks_to_tubes(tracks, scores, tt.trim, jobs);
      save_action_tubes(tubes, tt.out);
      std::cout << "trimmed " << tracks.size() << " tracks into " << tubes.size() << " action tubes\n";
    } else if (*filter) {
      const auto dets = load_detections(fd.det);
      const auto tracks = load_tracks(fd.tracks);
      if (tracks.empty()) std::cerr << "warning: no tracks given; every detection will be dropped\n";
      const auto kept = filter_by_tracks(dets, tracks, fd.params, jobs);
      save_detections(kept, fd.out);
      std::size_t before = 0, after = 0;
      for (const auto& f : dets) before += f.entries.size();
      for (const auto& f : kept) after += f.entries.size();
      std::cout << "kept " << after << " of " << before << " detections\n";
    } else if (*pool) {
      const auto store = load_tensors(pf.features);
      auto it = store.find("features");
      if (it == store.end()) throw InvalidInput(pf.features + ": no tensor named 'features'");
      auto scalar = [&](const char* name) -> std::optional<double> {
        auto s = store.find(name);
        if (s == store.end() || s->second.numel() != 1) return std::nullopt;
        return s->second[0];
      };
      const double stride = pf.stride ? *pf.stride : scalar("spatial_stride").value_or(16.0);
      const int clip_start =
          pf.clip_start ? *pf.clip_start : static_cast<int>(std::lround(scalar("clip_start").value_or(0.0)));
      const FeatureGrid grid(it->second, stride, clip_start);
      auto tracks = tracks_for_video(load_tracks(pf.tracks), pf.video);
      if (pf.only_overlapping) {
        const int last = clip_start + static_cast<int>(grid.frames()) - 1;
        std::erase_if(tracks, [&](const Track& t) {
          return t.geometry.end() < clip_start || t.geometry.start() > last;
        });
      }
      const TfaKind kind = parse_tfa_kind(pf.tfa);
      TensorStore weights;
      if (kind != TfaKind::MaxPool) {
        if (pf.weights.empty()) throw InvalidInput("--tfa " + pf.tfa + " needs --weights (see init-weights)");
        weights = load_tensors(pf.weights);
        check_tfa_weights(kind, weights);
      }
      const Tensor aligned = toi_align(grid, tracks, {pf.output_size, pf.sampling}, jobs);
      const Tensor pooled = spatial_avg_pool(aligned);
      const std::size_t N = pooled.dim(0), T = pooled.dim(1), C = pooled.dim(2);
      Tensor aggregated({N, C});
      for (std::size_t n = 0; n < N; ++n) {
        Tensor per_track({T, C}, std::vector<float>(pooled.values().begin() + static_cast<long>(n * T * C),
                                                    pooled.values().begin() + static_cast<long>((n + 1) * T * C)));
        const Tensor agg = tfa_forward(kind, per_track, weights);
        std::copy(agg.values().begin(), agg.values().end(), aggregated.data().begin() + static_cast<long>(n * C));
      }
      TensorStore out;
      out.emplace("track_features", pooled);
      out.emplace("aggregated", aggregated);
      save_tensors(out, pf.out);
      std::cout << "pooled " << N << " tracks over " << T << " frames with " << pf.tfa << "\n";
    } else if (*init) {
      save_tensors(random_tfa_weights(parse_tfa_kind(iw.tfa), iw.seed), iw.out);
      std::cout << "wrote " << iw.tfa << " weights\n";
    } else if (*synth) {
      const SynthSpec spec = sy.spec.empty() ? SynthSpec{} : load_synth_spec(sy.spec);
      const auto out = generate(spec, jobs);
      write_synth(out, sy.out);
      std::cout << "generated " << out.gts.size() << " tubes in " << spec.num_videos << " videos\n";
    }
  } catch (const tubekit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (verbose) {
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "elapsed %.1f ms\n", ms);
  }
  return 0;
}
