// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace carigan {

/// Normalization layers use batch statistics in train mode and running
/// statistics in inference mode.
enum class Mode { train, inference };

struct GeneratorSpec {
  int in_channels = 8;
  int out_channels = 3;
  int base_width = 64;
  /// Number of stride-2 levels; 0 selects log2(image_size) - 2.
  int depth = 0;
  /// Encoder widths are base_width * 2^level capped at this multiple.
  int max_width_multiplier = 8;
  int image_size = 256;
  /// Running-statistics decay of the normalization layers.
  double norm_momentum = 0.9;

  int resolved_depth() const;
  int level_width(int level) const;
};

struct DiscriminatorSpec {
  int in_channels = 4;
  std::vector<int> conv_widths = {64, 128, 256, 512, 512};
  int image_size = 256;
  double norm_momentum = 0.9;

  /// Side of the last conv activation: image_size / 2^conv_widths.size().
  int feature_side() const;
  /// Length of the flattened last-conv activation.
  std::int64_t feature_length() const;
};

nlohmann::json to_json(const GeneratorSpec& spec);
nlohmann::json to_json(const DiscriminatorSpec& spec);
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);
DiscriminatorSpec discriminator_spec_from_json(const nlohmann::json& j);

/// U-net: stride-2 4x4 convolutions down, stride-2 4x4 transposed
/// convolutions up, every encoder level except the bottleneck concatenated
/// onto the decoder level of the same resolution. Tanh output.
class UNetGeneratorImpl : public torch::nn::Module {
 public:
  /// Throws ContractViolation for non power-of-two sizes or a depth that
  /// does not fit the image.
  explicit UNetGeneratorImpl(GeneratorSpec spec);

  /// Shape of one skip link: the encoder activation at `level` and the
  /// decoder input it was concatenated into.
  struct SkipRecord {
    int level = 0;
    std::int64_t encoder_channels = 0;
    std::int64_t decoder_input_channels = 0;
    std::int64_t spatial = 0;
  };

  /// N x in_channels x S x S -> N x out_channels x S x S in (-1, 1).
  /// When skips is given, it receives one record per skip link.
  torch::Tensor forward(const torch::Tensor& input, std::vector<SkipRecord>* skips = nullptr);

  const GeneratorSpec& spec() const { return spec_; }
  void set_mode(Mode mode) { train(mode == Mode::train); }
  Mode mode() const { return is_training() ? Mode::train : Mode::inference; }

 private:
  GeneratorSpec spec_;
  std::vector<torch::nn::Sequential> down_;
  std::vector<torch::nn::Sequential> up_;
};
TORCH_MODULE(UNetGenerator);

struct DiscriminatorOutput {
  torch::Tensor logit;        ///< N
  torch::Tensor probability;  ///< N, in (0, 1)
  torch::Tensor features;     ///< N x feature_length, last conv activation
};

/// Global discriminator: a stack of stride-2 4x4 convolutions followed by a
/// single dense sigmoid unit.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(DiscriminatorSpec spec);

  DiscriminatorOutput forward(const torch::Tensor& input);

  const DiscriminatorSpec& spec() const { return spec_; }
  void set_mode(Mode mode) { train(mode == Mode::train); }
  Mode mode() const { return is_training() ? Mode::train : Mode::inference; }

 private:
  DiscriminatorSpec spec_;
  torch::nn::Sequential convs_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(Discriminator);

/// Conv, transposed conv and dense weights ~ N(0, 0.02), biases 0;
/// normalization scales ~ N(1, 0.02), shifts 0. Uses the global torch RNG.
void initialize_weights(torch::nn::Module& module);

/// FNV-1a over the raw bytes of every parameter (and buffer, when asked).
std::uint64_t parameter_hash(const torch::nn::Module& module, bool include_buffers = false);

}  // namespace carigan
