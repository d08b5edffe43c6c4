#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tubekit/tensor.hpp"

namespace tubekit {

// Temporal feature aggregation: collapses per-track T x C features to 1 x C.
// Tensors here are time-major, T x C. All kernels accumulate in double and
// store float32 results.

inline constexpr std::size_t kTfaChannels = 576;
inline constexpr std::size_t kAsppReducedChannels = 256;
inline constexpr std::size_t kAsppBranches = 5;

struct Conv1dSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t dilation = 1;
  bool has_bias = true;

  // Output length for an input of `length` frames.
  std::size_t output_length(std::size_t length) const;
};

// Zero-padded cross-correlation. weight is Cout x Cin x K, bias (if spec
// has one) is Cout. Throws InvalidInput on any shape mismatch or when the
// padded input is shorter than the dilated kernel.
Tensor conv1d(const Tensor& input, const Conv1dSpec& spec, const Tensor& weight, const Tensor* bias = nullptr);

// Channel-wise maximum over time: T x C -> 1 x C.
Tensor temporal_max_pool(const Tensor& input);

// Channel-wise mean over time: T x C -> 1 x C.
Tensor temporal_avg_pool(const Tensor& input);

// In-place max(0, x).
void relu_inplace(Tensor& t);

enum class TfaKind { MaxPool, Tcn, Aspp };

const char* to_string(TfaKind kind);
// "maxpool" | "tcn" | "aspp"; throws InvalidInput otherwise.
TfaKind parse_tfa_kind(const std::string& name);

// One convolution of a TFA module, under its canonical weight names.
struct TfaLayer {
  std::string weight_name;
  std::string bias_name;  // empty when the layer has no bias
  Conv1dSpec spec;
};

// TCN:  "tcn"                       576 -> 576, k=3, pad=2, dil=2
// ASPP: "aspp.convs.0"              576 -> 256, k=1 (reduction)
//       "aspp.convs.1.0"            256 -> 576, k=1, ReLU
//       "aspp.convs.2.0"            256 -> 576, k=3, pad=1, ReLU
//       "aspp.convs.3.0"            256 -> 576, k=3, pad=3, dil=3, ReLU
//       "aspp.convs.4.0"            256 -> 576, k=3, pad=5, dil=5, ReLU
//       "aspp.convs.5.1"            global average, 256 -> 576, k=1, ReLU
//       "aspp.project.0"            2880 -> 576, k=1, no bias, ReLU
// Each layer stores "<prefix>.weight" and, when biased, "<prefix>.bias".
std::vector<TfaLayer> tfa_layers(TfaKind kind);

// Conv1d(576, 576, k=3, pad=2, dil=2) then temporal max pool.
Tensor tcn_forward(const Tensor& input, const TensorStore& weights);

// Reduction to 256 channels, five parallel branches (three dilated convs, a
// 1x1 conv and an image-pooling branch broadcast over time), concatenation,
// bias-free 1x1 projection with ReLU, then temporal max pool.
Tensor aspp1d_forward(const Tensor& input, const TensorStore& weights);

// Dispatches on kind; weights are ignored for MaxPool.
Tensor tfa_forward(TfaKind kind, const Tensor& input, const TensorStore& weights);

// Seeded uniform weights in [-k, k] with k = 1 / sqrt(Cin * K) for every layer of kind.
TensorStore random_tfa_weights(TfaKind kind, std::uint64_t seed);

// Throws InvalidInput naming the first missing or mis-shaped tensor.
void check_tfa_weights(TfaKind kind, const TensorStore& weights);

}  // namespace tubekit
