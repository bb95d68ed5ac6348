// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include <opencv2/core.hpp>
#include <torch/types.h>

namespace carigan {

/// Reads an image file as 8-bit RGB (channel order R, G, B).
cv::Mat read_rgb(const std::filesystem::path& path);

/// Writes an 8-bit RGB matrix; the format follows the file extension.
void write_rgb(const std::filesystem::path& path, const cv::Mat& rgb);

/// 8-bit RGB (H x W x 3) to a float 3 x H x W tensor in [-1, 1].
torch::Tensor bytes_to_tensor(const cv::Mat& rgb);

/// 3 x H x W tensor in [-1, 1] to 8-bit RGB via round(255 * (v + 1) / 2),
/// saturating values outside the range.
cv::Mat tensor_to_bytes(const torch::Tensor& image);

/// 1 x H x W tensor in [0, 1] to an 8-bit RGB gray image.
cv::Mat gray_tensor_to_bytes(const torch::Tensor& map);

}  // namespace carigan
