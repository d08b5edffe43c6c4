#pragma once

#include <span>
#include <vector>

#include "tubekit/datamodel.hpp"
#include "tubekit/tensor.hpp"

namespace tubekit {

// Read-only view of one C x H x W feature frame.
struct FrameView {
  std::span<const float> data;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  float at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
};

// Backbone features for a clip: values has shape T x C x H x W. Frame t of the
// grid is absolute video frame clip_start + t.
class FeatureGrid {
 public:
  // Throws InvalidInput unless values is rank 4 with all dims >= 1 and finite,
  // and spatial_stride > 0.
  FeatureGrid(Tensor values, double spatial_stride, int clip_start = 0);

  const Tensor& values() const { return values_; }
  double spatial_stride() const { return stride_; }
  int clip_start() const { return clip_start_; }
  std::size_t frames() const { return values_.dim(0); }
  std::size_t channels() const { return values_.dim(1); }
  std::size_t height() const { return values_.dim(2); }
  std::size_t width() const { return values_.dim(3); }

  FrameView frame(std::size_t t) const;

 private:
  Tensor values_;
  double stride_;
  int clip_start_;
};

// Bilinear interpolation at continuous feature coordinates (x along width,
// y along height). Neighbours outside the grid contribute zero.
std::vector<double> bilinear_sample(const FrameView& frame, double x, double y);

struct RoiAlignParams {
  std::size_t output_size = 7;     // P: bins per side
  std::size_t sampling_ratio = 2;  // s: samples per bin side
};

// Pooled features for a box given in image pixels, row-major C x P x P in
// double precision. The box is mapped with the half-pixel convention
// (corner / stride - 0.5) and each bin averages s x s evenly spaced interior
// samples. No clipping is applied.
std::vector<double> roi_align(const FrameView& frame, const Box& box, double spatial_stride,
                              const RoiAlignParams& params);

// N_t x T x C x P x P features, one tube per track. Clip frames outside a
// track's span reuse its nearest box (last box after the end, first box before
// the start). Throws InvalidInput naming a track that misses the clip entirely.
Tensor toi_align(const FeatureGrid& clip, std::span<const Track> tracks, const RoiAlignParams& params, int jobs = 1);

// Means over the trailing P x P cells: N_t x T x C x P x P -> N_t x T x C.
Tensor spatial_avg_pool(const Tensor& track_features);

}  // namespace tubekit
