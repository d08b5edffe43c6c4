#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tubekit/error.hpp"
#include "tubekit/filter.hpp"
#include "tubekit/geometry.hpp"
#include "tubekit/io.hpp"
#include "tubekit/linker.hpp"
#include "tubekit/metrics.hpp"
#include "tubekit/motion.hpp"
#include "tubekit/synth.hpp"
#include "tubekit/tfa.hpp"
#include "tubekit/toialign.hpp"

namespace py = pybind11;
using namespace tubekit;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Box to_box(const std::array<double, 4>& b) { return {b[0], b[1], b[2], b[3]}; }

TubeGeometry to_tube(int start, const DoubleArray& boxes) {
  if (boxes.ndim() != 2 || boxes.shape(1) != 4) throw InvalidInput("boxes must have shape (T, 4)");
  auto r = boxes.unchecked<2>();
  std::vector<Box> out;
  for (py::ssize_t t = 0; t < r.shape(0); ++t) out.push_back({r(t, 0), r(t, 1), r(t, 2), r(t, 3)});
  return TubeGeometry(start, std::move(out));
}

Tensor to_tensor(const FloatArray& a) {
  std::vector<std::size_t> shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  FloatArray out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

py::dict to_dict(const TensorStore& store) {
  py::dict d;
  for (const auto& [name, t] : store) d[py::str(name)] = to_array(t);
  return d;
}

TensorStore to_store(const py::dict& d) {
  TensorStore store;
  for (const auto& [k, v] : d) store.emplace(k.cast<std::string>(), to_tensor(v.cast<FloatArray>()));
  return store;
}

std::optional<DatasetConfig> resolve_config(const std::optional<std::string>& dataset,
                                            const std::optional<std::filesystem::path>& config) {
  if (dataset && config) throw InvalidInput("pass either dataset or config, not both");
  if (dataset) return builtin_config(*dataset);
  if (config) return load_config(*config);
  return std::nullopt;
}

}  // namespace

PYBIND11_MODULE(_tubekit, m) {
  m.doc() = "Native core of the tubekit action-tube toolkit";

  auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());

  m.def("iou2d", [](const std::array<double, 4>& a, const std::array<double, 4>& b) { return iou2d(to_box(a), to_box(b)); },
        py::arg("a"), py::arg("b"));
  m.def(
      "st_iou",
      [](int start_a, const DoubleArray& a, int start_b, const DoubleArray& b) {
        return st_iou(to_tube(start_a, a), to_tube(start_b, b));
      },
      py::arg("start_a"), py::arg("boxes_a"), py::arg("start_b"), py::arg("boxes_b"));

  m.def(
      "motion_iou", [](const DoubleArray& boxes, const std::vector<int>& offsets) {
        return motion_iou(to_tube(0, boxes), offsets).value;
      },
      py::arg("boxes"), py::arg("offsets"));
  m.def(
      "classify_motion",
      [](double value, const std::string& dataset) { return std::string(to_string(classify_motion(value, builtin_config(dataset)))); },
      py::arg("value"), py::arg("dataset"));
  m.def(
      "motion_bins", [](const std::string& dataset) { return builtin_config(dataset).motion_bins; }, py::arg("dataset"));

  m.def(
      "average_precision",
      [](const std::vector<double>& scores, const std::vector<bool>& is_tp, long num_positives) {
        if (scores.size() != is_tp.size()) throw InvalidInput("scores and is_tp differ in length");
        std::vector<ScoredMatch> matches;
        for (std::size_t i = 0; i < scores.size(); ++i) matches.push_back({scores[i], is_tp[i]});
        return average_precision(std::move(matches), num_positives);
      },
      py::arg("scores"), py::arg("is_tp"), py::arg("num_positives"));

  m.def(
      "eval_frames_json",
      [](const std::filesystem::path& gt, const std::filesystem::path& det, double iou,
         const std::optional<std::string>& dataset, const std::optional<std::filesystem::path>& config, int jobs) {
        const auto cfg = resolve_config(dataset, config);
        const DatasetConfig* c = cfg ? &*cfg : nullptr;
        py::gil_scoped_release release;
        return report_json(frame_eval(load_detections(det, c), load_ground_truth(gt, c), iou, c, nullptr, jobs));
      },
      py::arg("gt"), py::arg("det"), py::arg("iou") = 0.5, py::arg("dataset") = py::none(),
      py::arg("config") = py::none(), py::arg("jobs") = 1);
  m.def(
      "eval_videos_json",
      [](const std::filesystem::path& gt, const std::filesystem::path& tubes, double st_iou_threshold,
         const std::optional<std::string>& dataset, const std::optional<std::filesystem::path>& config, int jobs) {
        const auto cfg = resolve_config(dataset, config);
        const DatasetConfig* c = cfg ? &*cfg : nullptr;
        py::gil_scoped_release release;
        return report_json(
            video_eval(load_action_tubes(tubes, c), load_ground_truth(gt, c), st_iou_threshold, c, nullptr, jobs));
      },
      py::arg("gt"), py::arg("tubes"), py::arg("st_iou") = 0.5, py::arg("dataset") = py::none(),
      py::arg("config") = py::none(), py::arg("jobs") = 1);

  m.def(
      "optimal_labeling", [](const std::vector<double>& scores, double alpha) { return optimal_labeling(scores, alpha); },
      py::arg("scores"), py::arg("alpha"));
  m.def(
      "trim_path",
      [](const std::vector<double>& scores, double alpha, int min_segment_length) {
        std::vector<std::pair<int, int>> out;
        for (const auto& s : trim_path(scores, {alpha, min_segment_length})) out.emplace_back(s.start, s.end);
        return out;
      },
      py::arg("scores"), py::arg("alpha") = 3.0, py::arg("min_segment_length") = 4);
  m.def(
      "build_tubes",
      [](const std::filesystem::path& det, const std::filesystem::path& out, double iou_gate, int max_misses,
         int min_len, double alpha, int min_segment_length, int jobs) {
        py::gil_scoped_release release;
        const auto tubes = build_tubes(load_detections(det), {iou_gate, max_misses, min_len},
                                       {alpha, min_segment_length}, jobs);
        save_action_tubes(tubes, out);
        return tubes.size();
      },
      py::arg("det"), py::arg("out"), py::arg("iou_gate") = 0.1, py::arg("max_misses") = 5, py::arg("min_len") = 8,
      py::arg("alpha") = 3.0, py::arg("min_segment_length") = 4, py::arg("jobs") = 1);
  m.def(
      "filter_detections",
      [](const std::filesystem::path& det, const std::filesystem::path& tracks, const std::filesystem::path& out,
         double match_iou, double score_thresh, int jobs) {
        py::gil_scoped_release release;
        const auto kept = filter_by_tracks(load_detections(det), load_tracks(tracks), {match_iou, score_thresh}, jobs);
        save_detections(kept, out);
        std::size_t n = 0;
        for (const auto& f : kept) n += f.entries.size();
        return n;
      },
      py::arg("det"), py::arg("tracks"), py::arg("out"), py::arg("match_iou") = 0.5, py::arg("score_thresh") = 0.05,
      py::arg("jobs") = 1);

  m.def(
      "roi_align",
      [](const FloatArray& frame, const std::array<double, 4>& box, double stride, std::size_t output_size,
         std::size_t sampling_ratio) {
        if (frame.ndim() != 3) throw InvalidInput("frame must have shape (C, H, W)");
        const FrameView view{std::span<const float>(frame.data(), static_cast<std::size_t>(frame.size())),
                             static_cast<std::size_t>(frame.shape(0)), static_cast<std::size_t>(frame.shape(1)),
                             static_cast<std::size_t>(frame.shape(2))};
        const auto v = roi_align(view, to_box(box), stride, {output_size, sampling_ratio});
        DoubleArray out({static_cast<py::ssize_t>(view.channels), static_cast<py::ssize_t>(output_size),
                         static_cast<py::ssize_t>(output_size)});
        std::copy(v.begin(), v.end(), out.mutable_data());
        return out;
      },
      py::arg("frame"), py::arg("box"), py::arg("stride"), py::arg("output_size") = 7, py::arg("sampling_ratio") = 2);

  m.def(
      "conv1d",
      [](const FloatArray& x, const FloatArray& weight, const std::optional<FloatArray>& bias, std::size_t stride,
         std::size_t padding, std::size_t dilation) {
        if (x.ndim() != 2 || weight.ndim() != 3) throw InvalidInput("conv1d expects x (T, Cin) and weight (Cout, Cin, K)");
        const Conv1dSpec spec{static_cast<std::size_t>(weight.shape(1)), static_cast<std::size_t>(weight.shape(0)),
                              static_cast<std::size_t>(weight.shape(2)), stride, padding, dilation, bias.has_value()};
        const Tensor b = bias ? to_tensor(*bias) : Tensor();
        return to_array(conv1d(to_tensor(x), spec, to_tensor(weight), bias ? &b : nullptr));
      },
      py::arg("x"), py::arg("weight"), py::arg("bias") = py::none(), py::arg("stride") = 1, py::arg("padding") = 0,
      py::arg("dilation") = 1);
  m.def(
      "tfa_forward",
      [](const std::string& kind, const FloatArray& x, const py::dict& weights) {
        return to_array(tfa_forward(parse_tfa_kind(kind), to_tensor(x), to_store(weights)));
      },
      py::arg("kind"), py::arg("x"), py::arg("weights") = py::dict());
  m.def(
      "random_tfa_weights",
      [](const std::string& kind, std::uint64_t seed) { return to_dict(random_tfa_weights(parse_tfa_kind(kind), seed)); },
      py::arg("kind"), py::arg("seed") = 0);
  m.def(
      "load_tensors", [](const std::filesystem::path& path) { return to_dict(load_tensors(path)); }, py::arg("path"));
  m.def(
      "save_tensors", [](const py::dict& tensors, const std::filesystem::path& path) { save_tensors(to_store(tensors), path); },
      py::arg("tensors"), py::arg("path"));

  m.def(
      "synth",
      [](const std::filesystem::path& out, const std::optional<std::string>& spec_json, int jobs) {
        const SynthSpec spec = spec_json ? parse_synth_spec(*spec_json) : SynthSpec{};
        py::gil_scoped_release release;
        const auto result = generate(spec, jobs);
        write_synth(result, out);
        return result.gts.size();
      },
      py::arg("out"), py::arg("spec_json") = py::none(), py::arg("jobs") = 1);
}
