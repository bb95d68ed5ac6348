// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include "carigan/conditioning.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <torch/torch.h>

#include "carigan/error.hpp"

namespace carigan {
namespace {

std::string shape_string(const torch::Tensor& t) {
  std::string s = "(";
  for (int64_t i = 0; i < t.dim(); ++i) {
    s += (i ? ", " : "") + std::to_string(t.size(i));
  }
  return s + ")";
}

// Checks that every tensor has the same rank (3 or 4), batch and spatial size
// and the expected channel counts, then concatenates along channels.
torch::Tensor concat_channels(std::initializer_list<std::pair<const torch::Tensor*, int64_t>> parts,
                              const char* what) {
  const torch::Tensor& first = *parts.begin()->first;
  const int64_t rank = first.dim();
  if (rank != 3 && rank != 4) {
    throw ContractViolation(fmt::format("{}: expected C x H x W or N x C x H x W, got {}", what,
                                        shape_string(first)));
  }
  std::vector<torch::Tensor> tensors;
  for (auto [t, channels] : parts) {
    const bool ok = t->dim() == rank && t->size(-3) == channels &&
                    t->size(-2) == first.size(-2) && t->size(-1) == first.size(-1) &&
                    (rank == 3 || t->size(0) == first.size(0));
    if (!ok) {
      throw ContractViolation(fmt::format("{}: shape {} does not match {} with {} channels", what,
                                          shape_string(*t), shape_string(first), channels));
    }
    tensors.push_back(*t);
  }
  return torch::cat(tensors, rank - 3);
}

}  // namespace

int mask_block_size(int size) {
  int k = static_cast<int>(std::lround(11.0 * size / 256.0));
  if (k % 2 == 0) {
    ++k;
  }
  return std::max(k, 1);
}

double default_heatmap_sigma(int size) { return 5.0 * size / 256.0; }

torch::Tensor rasterize_mask(const LandmarkSet& landmarks, int height, int width, int block) {
  if (height <= 0 || width <= 0 || block <= 0) {
    throw ContractViolation("mask dimensions and block size must be positive");
  }
  auto mask = torch::zeros({1, height, width}, torch::kFloat32);
  auto acc = mask.accessor<float, 3>();
  const int half = block / 2;
  for (const Point& p : landmarks.points()) {
    const long cx = std::lround(p.x);
    const long cy = std::lround(p.y);
    const long x0 = std::max<long>(cx - half, 0);
    const long x1 = std::min<long>(cx - half + block - 1, width - 1);
    const long y0 = std::max<long>(cy - half, 0);
    const long y1 = std::min<long>(cy - half + block - 1, height - 1);
    for (long y = y0; y <= y1; ++y) {
      for (long x = x0; x <= x1; ++x) {
        acc[0][y][x] = 1.0f;
      }
    }
  }
  return mask;
}

torch::Tensor rasterize_mask(const LandmarkSet& landmarks, int height, int width) {
  return rasterize_mask(landmarks, height, width, mask_block_size(height));
}

torch::Tensor rasterize_heatmap(const LandmarkSet& landmarks, int height, int width, double sigma) {
  if (!(sigma > 0.0)) {
    throw ContractViolation(fmt::format("heatmap sigma must be positive, got {}", sigma));
  }
  if (height <= 0 || width <= 0) {
    throw ContractViolation("heatmap dimensions must be positive");
  }
  auto heat = torch::zeros({1, height, width}, torch::kFloat32);
  auto acc = heat.accessor<float, 3>();
  const double radius = 3.0 * sigma;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  for (const Point& p : landmarks.points()) {
    const long x0 = std::max<long>(static_cast<long>(std::ceil(p.x - radius)), 0);
    const long x1 = std::min<long>(static_cast<long>(std::floor(p.x + radius)), width - 1);
    const long y0 = std::max<long>(static_cast<long>(std::ceil(p.y - radius)), 0);
    const long y1 = std::min<long>(static_cast<long>(std::floor(p.y + radius)), height - 1);
    for (long y = y0; y <= y1; ++y) {
      for (long x = x0; x <= x1; ++x) {
        const double dx = static_cast<double>(x) - p.x;
        const double dy = static_cast<double>(y) - p.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 > radius * radius) {
          continue;
        }
        const float v = static_cast<float>(std::exp(-d2 * inv_two_var));
        acc[0][y][x] = std::max(acc[0][y][x], v);
      }
    }
  }
  return heat;
}

torch::Tensor rasterize_heatmap(const LandmarkSet& landmarks, int height, int width) {
  return rasterize_heatmap(landmarks, height, width, default_heatmap_sigma(height));
}

torch::Tensor broadcast_noise(std::span<const float> source, int height, int width) {
  if (source.size() != kNoiseDim) {
    throw ContractViolation(
        fmt::format("noise source must have {} components, got {}", kNoiseDim, source.size()));
  }
  auto vec = torch::tensor(std::vector<float>(source.begin(), source.end()), torch::kFloat32);
  return vec.view({kNoiseDim, 1, 1}).expand({kNoiseDim, height, width}).contiguous();
}

torch::Tensor broadcast_noise(const torch::Tensor& source, int height, int width) {
  if (source.dim() != 2 || source.size(1) != kNoiseDim) {
    throw ContractViolation(
        fmt::format("batched noise must be N x {}, got {}", kNoiseDim, shape_string(source)));
  }
  return source.view({source.size(0), kNoiseDim, 1, 1})
      .expand({source.size(0), kNoiseDim, height, width});
}

torch::Tensor pack_generator_input(const torch::Tensor& face, const torch::Tensor& mask,
                                   const torch::Tensor& noise) {
  return concat_channels({{&face, 3}, {&mask, 1}, {&noise, kNoiseDim}}, "generator input");
}

torch::Tensor pack_generator_input(const torch::Tensor& face, const torch::Tensor& noise) {
  return concat_channels({{&face, 3}, {&noise, kNoiseDim}}, "generator input");
}

torch::Tensor pack_discriminator_input(const torch::Tensor& image, const torch::Tensor& mask) {
  return concat_channels({{&image, 3}, {&mask, 1}}, "discriminator input");
}

}  // namespace carigan
