// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include <torch/types.h>

#include "carigan/landmarks.hpp"

// All maps are channel-first float32 tensors (C x H x W), or N x C x H x W
// where a batch dimension is accepted.

namespace carigan {

inline constexpr int kNoiseDim = 4;

/// Side of the square mask block: round(11 * size / 256), forced odd.
int mask_block_size(int size);

/// Default heatmap sigma in pixels: 5 * size / 256.
double default_heatmap_sigma(int size);

/// Binary 1 x H x W mask with a block x block square of ones centred at each
/// landmark (rounded to the nearest pixel), clipped to the image.
torch::Tensor rasterize_mask(const LandmarkSet& landmarks, int height, int width, int block);
torch::Tensor rasterize_mask(const LandmarkSet& landmarks, int height, int width);

/// 1 x H x W heatmap: per pixel, the maximum over landmarks of
/// exp(-d^2 / (2 sigma^2)) at sub-pixel centres, zero beyond 3 sigma of
/// every landmark.
torch::Tensor rasterize_heatmap(const LandmarkSet& landmarks, int height, int width, double sigma);
torch::Tensor rasterize_heatmap(const LandmarkSet& landmarks, int height, int width);

/// 4 x H x W map carrying the same source vector at every location.
/// Throws ContractViolation unless the source has four components.
torch::Tensor broadcast_noise(std::span<const float> source, int height, int width);

/// Batched form: N x 4 noise -> N x 4 x H x W.
torch::Tensor broadcast_noise(const torch::Tensor& source, int height, int width);

/// Channel order (face RGB, mask, noise x 4) -> 8 channels.
torch::Tensor pack_generator_input(const torch::Tensor& face, const torch::Tensor& mask,
                                   const torch::Tensor& noise);

/// Mask-free generator input (face RGB, noise x 4) -> 7 channels.
torch::Tensor pack_generator_input(const torch::Tensor& face, const torch::Tensor& noise);

/// Channel order (image RGB, mask) -> 4 channels.
torch::Tensor pack_discriminator_input(const torch::Tensor& image, const torch::Tensor& mask);

}  // namespace carigan
