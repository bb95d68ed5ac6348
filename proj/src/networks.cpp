// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include "carigan/networks.hpp"

#include <bit>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "carigan/error.hpp"

namespace carigan {
namespace nn = torch::nn;

namespace {

bool is_power_of_two(int v) { return v > 0 && std::has_single_bit(static_cast<unsigned>(v)); }

int log2_exact(int v) { return std::bit_width(static_cast<unsigned>(v)) - 1; }

nn::Conv2d down_conv(int in, int out) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(2).padding(1));
}

nn::ConvTranspose2d up_conv(int in, int out) {
  return nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1));
}

nn::BatchNorm2d batch_norm(int channels, double decay) {
  return nn::BatchNorm2d(nn::BatchNorm2dOptions(channels).momentum(1.0 - decay));
}

nn::LeakyReLU leaky() { return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)); }

void check_input(const torch::Tensor& input, int channels, int size, const char* what) {
  if (input.dim() != 4 || input.size(1) != channels || input.size(2) != size ||
      input.size(3) != size) {
    throw ContractViolation(fmt::format("{} expects N x {} x {} x {}, got {}", what, channels,
                                        size, size, fmt::join(input.sizes(), " x ")));
  }
}

}  // namespace

int GeneratorSpec::resolved_depth() const {
  if (depth > 0) {
    return depth;
  }
  return is_power_of_two(image_size) ? log2_exact(image_size) - 2 : 0;
}

int GeneratorSpec::level_width(int level) const {
  const int mult = std::min(1 << std::min(level - 1, 30), max_width_multiplier);
  return base_width * mult;
}

int DiscriminatorSpec::feature_side() const {
  return image_size >> static_cast<int>(conv_widths.size());
}

std::int64_t DiscriminatorSpec::feature_length() const {
  const std::int64_t side = feature_side();
  return static_cast<std::int64_t>(conv_widths.back()) * side * side;
}

nlohmann::json to_json(const GeneratorSpec& spec) {
  return {{"in_channels", spec.in_channels},
          {"out_channels", spec.out_channels},
          {"base_width", spec.base_width},
          {"depth", spec.resolved_depth()},
          {"max_width_multiplier", spec.max_width_multiplier},
          {"image_size", spec.image_size},
          {"norm_momentum", spec.norm_momentum}};
}

nlohmann::json to_json(const DiscriminatorSpec& spec) {
  return {{"in_channels", spec.in_channels},
          {"conv_widths", spec.conv_widths},
          {"image_size", spec.image_size},
          {"norm_momentum", spec.norm_momentum}};
}

GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  s.in_channels = j.at("in_channels").get<int>();
  s.out_channels = j.at("out_channels").get<int>();
  s.base_width = j.at("base_width").get<int>();
  s.depth = j.at("depth").get<int>();
  s.max_width_multiplier = j.at("max_width_multiplier").get<int>();
  s.image_size = j.at("image_size").get<int>();
  s.norm_momentum = j.at("norm_momentum").get<double>();
  return s;
}

DiscriminatorSpec discriminator_spec_from_json(const nlohmann::json& j) {
  DiscriminatorSpec s;
  s.in_channels = j.at("in_channels").get<int>();
  s.conv_widths = j.at("conv_widths").get<std::vector<int>>();
  s.image_size = j.at("image_size").get<int>();
  s.norm_momentum = j.at("norm_momentum").get<double>();
  return s;
}

UNetGeneratorImpl::UNetGeneratorImpl(GeneratorSpec spec) : spec_(spec) {
  if (!is_power_of_two(spec_.image_size)) {
    throw ContractViolation(
        fmt::format("generator image size {} is not a power of two", spec_.image_size));
  }
  const int depth = spec_.resolved_depth();
  if (depth < 1 || (spec_.image_size >> depth) < 1 || depth > log2_exact(spec_.image_size)) {
    throw ContractViolation(fmt::format("generator depth {} does not fit image size {}", depth,
                                        spec_.image_size));
  }
  if (spec_.in_channels <= 0 || spec_.out_channels <= 0 || spec_.base_width <= 0) {
    throw ContractViolation("generator channel counts must be positive");
  }
  spec_.depth = depth;

  int prev = spec_.in_channels;
  for (int level = 1; level <= depth; ++level) {
    const int width = spec_.level_width(level);
    nn::Sequential block;
    block->push_back(down_conv(prev, width));
    if (level != 1) {
      block->push_back(batch_norm(width, spec_.norm_momentum));
    }
    block->push_back(leaky());
    down_.push_back(register_module(fmt::format("down{}", level), block));
    prev = width;
  }
  up_.resize(static_cast<std::size_t>(depth));
  for (int level = depth; level >= 1; --level) {
    const int width = spec_.level_width(level);
    const int in = level == depth ? width : 2 * width;
    nn::Sequential block;
    if (level == 1) {
      block->push_back(up_conv(in, spec_.out_channels));
      block->push_back(nn::Tanh());
    } else {
      const int out = spec_.level_width(level - 1);
      block->push_back(up_conv(in, out));
      block->push_back(batch_norm(out, spec_.norm_momentum));
      block->push_back(nn::ReLU());
    }
    up_[static_cast<std::size_t>(level - 1)] = register_module(fmt::format("up{}", level), block);
  }
  initialize_weights(*this);
}

torch::Tensor UNetGeneratorImpl::forward(const torch::Tensor& input,
                                         std::vector<SkipRecord>* skips) {
  check_input(input, spec_.in_channels, spec_.image_size, "generator");
  const int depth = spec_.depth;
  std::vector<torch::Tensor> encoded;
  encoded.reserve(static_cast<std::size_t>(depth));
  torch::Tensor h = input;
  for (auto& block : down_) {
    h = block->forward(h);
    encoded.push_back(h);
  }
  h = up_.back()->forward(encoded.back());
  for (int level = depth - 1; level >= 1; --level) {
    const auto& skip = encoded[static_cast<std::size_t>(level - 1)];
    auto joined = torch::cat({h, skip}, 1);
    if (skips) {
      skips->push_back({level, skip.size(1), joined.size(1), skip.size(2)});
    }
    h = up_[static_cast<std::size_t>(level - 1)]->forward(joined);
  }
  return h;
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorSpec spec) : spec_(std::move(spec)) {
  if (spec_.conv_widths.empty()) {
    throw ContractViolation("discriminator needs at least one conv layer");
  }
  if (!is_power_of_two(spec_.image_size) ||
      static_cast<int>(spec_.conv_widths.size()) > log2_exact(spec_.image_size)) {
    throw ContractViolation(fmt::format("discriminator with {} stride-2 convs cannot take {} px",
                                        spec_.conv_widths.size(), spec_.image_size));
  }
  nn::Sequential convs;
  int prev = spec_.in_channels;
  for (std::size_t i = 0; i < spec_.conv_widths.size(); ++i) {
    const int width = spec_.conv_widths[i];
    convs->push_back(down_conv(prev, width));
    if (i != 0) {
      convs->push_back(batch_norm(width, spec_.norm_momentum));
    }
    convs->push_back(leaky());
    prev = width;
  }
  convs_ = register_module("convs", convs);
  head_ = register_module("head", nn::Linear(spec_.feature_length(), 1));
  initialize_weights(*this);
}

DiscriminatorOutput DiscriminatorImpl::forward(const torch::Tensor& input) {
  check_input(input, spec_.in_channels, spec_.image_size, "discriminator");
  DiscriminatorOutput out;
  out.features = convs_->forward(input).flatten(1);
  out.logit = head_->forward(out.features).squeeze(1);
  out.probability = torch::sigmoid(out.logit);
  return out;
}

void initialize_weights(torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  auto init_affine = [](torch::Tensor& weight, torch::Tensor& bias) {
    nn::init::normal_(weight, 0.0, 0.02);
    if (bias.defined()) {
      nn::init::zeros_(bias);
    }
  };
  for (const auto& m : module.modules(/*include_self=*/false)) {
    if (auto* conv = m->as<nn::Conv2d>()) {
      init_affine(conv->weight, conv->bias);
    } else if (auto* deconv = m->as<nn::ConvTranspose2d>()) {
      init_affine(deconv->weight, deconv->bias);
    } else if (auto* dense = m->as<nn::Linear>()) {
      init_affine(dense->weight, dense->bias);
    } else if (auto* bn = m->as<nn::BatchNorm2d>()) {
      nn::init::normal_(bn->weight, 1.0, 0.02);
      nn::init::zeros_(bn->bias);
    }
  }
}

std::uint64_t parameter_hash(const torch::nn::Module& module, bool include_buffers) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const torch::Tensor& t) {
    auto c = t.detach().cpu().contiguous();
    const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
    const auto n = static_cast<std::size_t>(c.numel()) * c.element_size();
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : module.parameters()) {
    mix(p);
  }
  if (include_buffers) {
    for (const auto& b : module.buffers()) {
      mix(b);
    }
  }
  return h;
}

}  // namespace carigan
