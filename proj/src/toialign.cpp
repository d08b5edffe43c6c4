#include "tubekit/toialign.hpp"

#include <cmath>
#include <string>

#include "tubekit/error.hpp"
#include "tubekit/parallel.hpp"

namespace tubekit {

namespace {

// Adds w * frame(:, y, x) into acc when (y, x) lies on the grid.
inline void accumulate(const FrameView& f, long y, long x, double w, std::vector<double>& acc) {
  if (w == 0.0 || y < 0 || x < 0 || y >= static_cast<long>(f.height) || x >= static_cast<long>(f.width)) return;
  const auto yy = static_cast<std::size_t>(y);
  const auto xx = static_cast<std::size_t>(x);
  for (std::size_t c = 0; c < f.channels; ++c) acc[c] += w * f.at(c, yy, xx);
}

void sample_into(const FrameView& f, double x, double y, std::vector<double>& acc) {
  if (!std::isfinite(x) || !std::isfinite(y)) return;
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  // Far outside: all four neighbours are off the grid.
  if (fx < -1.0 || fy < -1.0 || fx >= static_cast<double>(f.width) || fy >= static_cast<double>(f.height)) return;
  const long x0 = static_cast<long>(fx);
  const long y0 = static_cast<long>(fy);
  const double lx = x - fx;
  const double ly = y - fy;
  accumulate(f, y0, x0, (1.0 - lx) * (1.0 - ly), acc);
  accumulate(f, y0, x0 + 1, lx * (1.0 - ly), acc);
  accumulate(f, y0 + 1, x0, (1.0 - lx) * ly, acc);
  accumulate(f, y0 + 1, x0 + 1, lx * ly, acc);
}

void check_params(const RoiAlignParams& p) {
  if (p.output_size < 1) throw InvalidInput("RoIAlign output size must be >= 1");
  if (p.sampling_ratio < 1) throw InvalidInput("RoIAlign sampling ratio must be >= 1");
}

// Writes the C x P x P pooled block for one box to out[0 .. C*P*P).
template <typename T>
void roi_align_into(const FrameView& frame, const Box& box, double stride, const RoiAlignParams& params,
                    std::span<T> out) {
  const std::size_t P = params.output_size;
  const std::size_t S = params.sampling_ratio;
  const double x1 = box.x1 / stride - 0.5;
  const double y1 = box.y1 / stride - 0.5;
  const double bin_w = (box.x2 / stride - 0.5 - x1) / static_cast<double>(P);
  const double bin_h = (box.y2 / stride - 0.5 - y1) / static_cast<double>(P);
  const double inv_count = 1.0 / static_cast<double>(S * S);
  std::vector<double> acc(frame.channels);
  for (std::size_t ph = 0; ph < P; ++ph) {
    for (std::size_t pw = 0; pw < P; ++pw) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t iy = 0; iy < S; ++iy) {
        const double y = y1 + static_cast<double>(ph) * bin_h + (static_cast<double>(iy) + 0.5) * bin_h / static_cast<double>(S);
        for (std::size_t ix = 0; ix < S; ++ix) {
          const double x =
              x1 + static_cast<double>(pw) * bin_w + (static_cast<double>(ix) + 0.5) * bin_w / static_cast<double>(S);
          sample_into(frame, x, y, acc);
        }
      }
      for (std::size_t c = 0; c < frame.channels; ++c) {
        out[(c * P + ph) * P + pw] = static_cast<T>(acc[c] * inv_count);
      }
    }
  }
}

}  // namespace

FeatureGrid::FeatureGrid(Tensor values, double spatial_stride, int clip_start)
    : values_(std::move(values)), stride_(spatial_stride), clip_start_(clip_start) {
  if (values_.rank() != 4) throw InvalidInput("feature grid must have shape T x C x H x W, got " + shape_string(values_.shape()));
  for (auto d : values_.shape()) {
    if (d < 1) throw InvalidInput("feature grid dimensions must be >= 1");
  }
  if (!(stride_ > 0.0) || !std::isfinite(stride_)) throw InvalidInput("spatial stride must be positive");
  for (float v : values_.data()) {
    if (!std::isfinite(v)) throw InvalidInput("feature grid holds non-finite values");
  }
}

FrameView FeatureGrid::frame(std::size_t t) const {
  const std::size_t per = channels() * height() * width();
  return {values_.data().subspan(t * per, per), channels(), height(), width()};
}

std::vector<double> bilinear_sample(const FrameView& frame, double x, double y) {
  std::vector<double> acc(frame.channels, 0.0);
  sample_into(frame, x, y, acc);
  return acc;
}

std::vector<double> roi_align(const FrameView& frame, const Box& box, double spatial_stride,
                              const RoiAlignParams& params) {
  check_params(params);
  if (!(spatial_stride > 0.0)) throw InvalidInput("spatial stride must be positive");
  validate_box(box);
  std::vector<double> out(frame.channels * params.output_size * params.output_size);
  roi_align_into(frame, box, spatial_stride, params, std::span<double>(out));
  return out;
}

Tensor toi_align(const FeatureGrid& clip, std::span<const Track> tracks, const RoiAlignParams& params, int jobs) {
  check_params(params);
  const std::size_t T = clip.frames();
  const std::size_t C = clip.channels();
  const std::size_t P = params.output_size;
  const int first = clip.clip_start();
  const int last = first + static_cast<int>(T) - 1;
  for (const auto& tr : tracks) {
    if (tr.geometry.empty() || tr.geometry.end() < first || tr.geometry.start() > last) {
      throw InvalidInput("track '" + tr.track_id + "' in video '" + tr.video_id + "' lies outside clip frames " +
                         std::to_string(first) + ".." + std::to_string(last));
    }
  }
  Tensor out({tracks.size(), T, C, P, P});
  const std::size_t block = C * P * P;
  parallel_for(tracks.size() * T, jobs, [&](std::size_t i) {
    const std::size_t n = i / T;
    const std::size_t t = i % T;
    const Box& box = tracks[n].geometry.clamped_at(first + static_cast<int>(t));
    roi_align_into(clip.frame(t), box, clip.spatial_stride(), params, out.data().subspan(i * block, block));
  });
  return out;
}

Tensor spatial_avg_pool(const Tensor& tf) {
  if (tf.rank() != 5) throw InvalidInput("spatial_avg_pool expects N x T x C x P x P, got " + shape_string(tf.shape()));
  const std::size_t cells = tf.dim(3) * tf.dim(4);
  const std::size_t rows = tf.dim(0) * tf.dim(1) * tf.dim(2);
  Tensor out({tf.dim(0), tf.dim(1), tf.dim(2)});
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t k = 0; k < cells; ++k) sum += tf[r * cells + k];
    out[r] = static_cast<float>(sum / static_cast<double>(cells));
  }
  return out;
}

}  // namespace tubekit
