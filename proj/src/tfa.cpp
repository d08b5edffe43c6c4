#include "tubekit/tfa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tubekit/error.hpp"

namespace tubekit {

namespace {

void expect_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2 || t.dim(0) < 1 || t.dim(1) < 1) {
    throw InvalidInput(std::string(what) + " expects a T x C input with T, C >= 1, got " + shape_string(t.shape()));
  }
}

const Tensor& require(const TensorStore& store, const std::string& name, const std::vector<std::size_t>& shape) {
  auto it = store.find(name);
  if (it == store.end()) throw InvalidInput("missing weight tensor '" + name + "'");
  if (it->second.shape() != shape) {
    throw InvalidInput("weight tensor '" + name + "' has shape " + shape_string(it->second.shape()) + ", expected " +
                       shape_string(shape));
  }
  return it->second;
}

Tensor apply_layer(const Tensor& input, const TfaLayer& layer, const TensorStore& weights) {
  const auto& s = layer.spec;
  const Tensor& w = require(weights, layer.weight_name, {s.out_channels, s.in_channels, s.kernel_size});
  const Tensor* b = layer.bias_name.empty() ? nullptr : &require(weights, layer.bias_name, {s.out_channels});
  return conv1d(input, s, w, b);
}

void expect_channels(const Tensor& input, const char* what) {
  expect_rank2(input, what);
  if (input.dim(1) != kTfaChannels) {
    throw InvalidInput(std::string(what) + " expects " + std::to_string(kTfaChannels) + " channels, got " +
                       std::to_string(input.dim(1)));
  }
}

TfaLayer layer(std::string prefix, std::size_t cin, std::size_t cout, std::size_t k, std::size_t pad,
               std::size_t dil, bool bias = true) {
  TfaLayer l;
  l.weight_name = prefix + ".weight";
  l.bias_name = bias ? prefix + ".bias" : "";
  l.spec = Conv1dSpec{cin, cout, k, 1, pad, dil, bias};
  return l;
}

}  // namespace

std::size_t Conv1dSpec::output_length(std::size_t length) const {
  const std::size_t span = dilation * (kernel_size - 1) + 1;
  const std::size_t padded = length + 2 * padding;
  if (padded < span) return 0;
  return (padded - span) / stride + 1;
}

Tensor conv1d(const Tensor& input, const Conv1dSpec& spec, const Tensor& weight, const Tensor* bias) {
  if (spec.in_channels < 1 || spec.out_channels < 1 || spec.kernel_size < 1 || spec.stride < 1 || spec.dilation < 1) {
    throw InvalidInput("conv1d: channels, kernel size, stride and dilation must be >= 1");
  }
  expect_rank2(input, "conv1d");
  if (input.dim(1) != spec.in_channels) {
    throw InvalidInput("conv1d: input has " + std::to_string(input.dim(1)) + " channels, spec expects " +
                       std::to_string(spec.in_channels));
  }
  const std::vector<std::size_t> wshape = {spec.out_channels, spec.in_channels, spec.kernel_size};
  if (weight.shape() != wshape) {
    throw InvalidInput("conv1d: weight shape " + shape_string(weight.shape()) + ", expected " + shape_string(wshape));
  }
  if (spec.has_bias != (bias != nullptr)) throw InvalidInput("conv1d: bias presence disagrees with spec");
  if (bias && bias->shape() != std::vector<std::size_t>{spec.out_channels}) {
    throw InvalidInput("conv1d: bias shape " + shape_string(bias->shape()) + ", expected [" +
                       std::to_string(spec.out_channels) + "]");
  }
  const std::size_t T = input.dim(0);
  const std::size_t out_len = spec.output_length(T);
  if (out_len == 0) throw InvalidInput("conv1d: padded input shorter than the dilated kernel");

  const std::size_t cin = spec.in_channels;
  const std::size_t cout = spec.out_channels;
  const std::size_t K = spec.kernel_size;
  const auto in = input.data();
  const auto w = weight.data();
  Tensor out({out_len, cout});
  for (std::size_t t = 0; t < out_len; ++t) {
    for (std::size_t o = 0; o < cout; ++o) {
      double acc = bias ? static_cast<double>((*bias)[o]) : 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        // Source frame in unpadded coordinates.
        const long src = static_cast<long>(t * spec.stride + k * spec.dilation) - static_cast<long>(spec.padding);
        if (src < 0 || src >= static_cast<long>(T)) continue;
        const float* row = &in[static_cast<std::size_t>(src) * cin];
        const float* wk = &w[o * cin * K + k];
        for (std::size_t i = 0; i < cin; ++i) acc += static_cast<double>(wk[i * K]) * static_cast<double>(row[i]);
      }
      out[t * cout + o] = static_cast<float>(acc);
    }
  }
  return out;
}

Tensor temporal_max_pool(const Tensor& input) {
  expect_rank2(input, "temporal_max_pool");
  const std::size_t T = input.dim(0);
  const std::size_t C = input.dim(1);
  Tensor out({1, C}, -std::numeric_limits<float>::infinity());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) out[c] = std::max(out[c], input[t * C + c]);
  }
  return out;
}

Tensor temporal_avg_pool(const Tensor& input) {
  expect_rank2(input, "temporal_avg_pool");
  const std::size_t T = input.dim(0);
  const std::size_t C = input.dim(1);
  std::vector<double> acc(C, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) acc[c] += input[t * C + c];
  }
  Tensor out({1, C});
  for (std::size_t c = 0; c < C; ++c) out[c] = static_cast<float>(acc[c] / static_cast<double>(T));
  return out;
}

void relu_inplace(Tensor& t) {
  for (auto& v : t.data()) v = v > 0.0f ? v : 0.0f;
}

const char* to_string(TfaKind kind) {
  switch (kind) {
    case TfaKind::MaxPool:
      return "maxpool";
    case TfaKind::Tcn:
      return "tcn";
    case TfaKind::Aspp:
      return "aspp";
  }
  return "?";
}

TfaKind parse_tfa_kind(const std::string& name) {
  if (name == "maxpool") return TfaKind::MaxPool;
  if (name == "tcn") return TfaKind::Tcn;
  if (name == "aspp") return TfaKind::Aspp;
  throw InvalidInput("unknown TFA module '" + name + "' (expected maxpool, tcn or aspp)");
}

std::vector<TfaLayer> tfa_layers(TfaKind kind) {
  constexpr std::size_t C = kTfaChannels;
  constexpr std::size_t R = kAsppReducedChannels;
  switch (kind) {
    case TfaKind::MaxPool:
      return {};
    case TfaKind::Tcn:
      return {layer("tcn", C, C, 3, 2, 2)};
    case TfaKind::Aspp:
      return {layer("aspp.convs.0", C, R, 1, 0, 1),   layer("aspp.convs.1.0", R, C, 1, 0, 1),
              layer("aspp.convs.2.0", R, C, 3, 1, 1), layer("aspp.convs.3.0", R, C, 3, 3, 3),
              layer("aspp.convs.4.0", R, C, 3, 5, 5), layer("aspp.convs.5.1", R, C, 1, 0, 1),
              layer("aspp.project.0", kAsppBranches * C, C, 1, 0, 1, false)};
  }
  return {};
}

void check_tfa_weights(TfaKind kind, const TensorStore& weights) {
  for (const auto& l : tfa_layers(kind)) {
    require(weights, l.weight_name, {l.spec.out_channels, l.spec.in_channels, l.spec.kernel_size});
    if (!l.bias_name.empty()) require(weights, l.bias_name, {l.spec.out_channels});
  }
}

Tensor tcn_forward(const Tensor& input, const TensorStore& weights) {
  expect_channels(input, "tcn_forward");
  const auto layers = tfa_layers(TfaKind::Tcn);
  return temporal_max_pool(apply_layer(input, layers[0], weights));
}

Tensor aspp1d_forward(const Tensor& input, const TensorStore& weights) {
  expect_channels(input, "aspp1d_forward");
  check_tfa_weights(TfaKind::Aspp, weights);
  const auto layers = tfa_layers(TfaKind::Aspp);
  const std::size_t T = input.dim(0);
  constexpr std::size_t C = kTfaChannels;

  const Tensor reduced = apply_layer(input, layers[0], weights);
  Tensor concat({T, kAsppBranches * C});
  for (std::size_t b = 0; b < kAsppBranches; ++b) {
    const TfaLayer& l = layers[b + 1];
    Tensor branch = b + 1 == kAsppBranches ? apply_layer(temporal_avg_pool(reduced), l, weights)
                                           : apply_layer(reduced, l, weights);
    relu_inplace(branch);
    // The pooling branch has one frame and is broadcast over time.
    const bool broadcast = branch.dim(0) == 1;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t src = broadcast ? 0 : t;
      std::copy_n(&branch[src * C], C, &concat[t * kAsppBranches * C + b * C]);
    }
  }
  Tensor projected = apply_layer(concat, layers[kAsppBranches + 1], weights);
  relu_inplace(projected);
  return temporal_max_pool(projected);
}

Tensor tfa_forward(TfaKind kind, const Tensor& input, const TensorStore& weights) {
  switch (kind) {
    case TfaKind::MaxPool:
      return temporal_max_pool(input);
    case TfaKind::Tcn:
      return tcn_forward(input, weights);
    case TfaKind::Aspp:
      return aspp1d_forward(input, weights);
  }
  throw InvalidInput("unknown TFA kind");
}

TensorStore random_tfa_weights(TfaKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Explicit transform so streams match across standard libraries.
  auto uniform = [&](double k) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return static_cast<float>((2.0 * u - 1.0) * k);
  };
  TensorStore store;
  for (const auto& l : tfa_layers(kind)) {
    const auto& s = l.spec;
    const double k = 1.0 / std::sqrt(static_cast<double>(s.in_channels * s.kernel_size));
    Tensor w({s.out_channels, s.in_channels, s.kernel_size});
    for (auto& v : w.data()) v = uniform(k);
    store.emplace(l.weight_name, std::move(w));
    if (!l.bias_name.empty()) {
      Tensor b({s.out_channels});
      for (auto& v : b.data()) v = uniform(k);
      store.emplace(l.bias_name, std::move(b));
    }
  }
  return store;
}

}  // namespace tubekit
