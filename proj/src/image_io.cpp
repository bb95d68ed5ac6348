// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include "carigan/image_io.hpp"

#include <cstring>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "carigan/error.hpp"

namespace carigan {

cv::Mat read_rgb(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError(fmt::format("image file {} does not exist", path.string()));
  }
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) {
    throw IoError(fmt::format("cannot decode image {}", path.string()));
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return rgb;
}

void write_rgb(const std::filesystem::path& path, const cv::Mat& rgb) {
  if (rgb.type() != CV_8UC3) {
    throw ContractViolation("write_rgb expects an 8-bit 3-channel image");
  }
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), bgr);
  } catch (const cv::Exception& e) {
    throw IoError(fmt::format("cannot write {}: {}", path.string(), e.what()));
  }
  if (!ok) {
    throw IoError(fmt::format("cannot write {}", path.string()));
  }
}

torch::Tensor bytes_to_tensor(const cv::Mat& rgb) {
  if (rgb.type() != CV_8UC3) {
    throw ContractViolation("bytes_to_tensor expects an 8-bit 3-channel image");
  }
  cv::Mat contiguous = rgb.isContinuous() ? rgb : rgb.clone();
  auto hwc = torch::from_blob(contiguous.data, {contiguous.rows, contiguous.cols, 3},
                              torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).div(127.5).sub(1.0).contiguous();
}

cv::Mat tensor_to_bytes(const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(0) != 3) {
    throw ContractViolation("tensor_to_bytes expects a 3 x H x W tensor");
  }
  auto bytes = image.detach()
                   .to(torch::kFloat32)
                   .add(1.0)
                   .mul(127.5)
                   .round()
                   .clamp(0, 255)
                   .to(torch::kUInt8)
                   .permute({1, 2, 0})
                   .contiguous();
  cv::Mat out(static_cast<int>(bytes.size(0)), static_cast<int>(bytes.size(1)), CV_8UC3);
  std::memcpy(out.data, bytes.data_ptr<std::uint8_t>(), static_cast<std::size_t>(bytes.numel()));
  return out;
}

cv::Mat gray_tensor_to_bytes(const torch::Tensor& map) {
  if (map.dim() != 3 || map.size(0) != 1) {
    throw ContractViolation("gray_tensor_to_bytes expects a 1 x H x W tensor");
  }
  return tensor_to_bytes(map.detach().to(torch::kFloat32).mul(2.0).sub(1.0).expand({3, -1, -1}));
}

}  // namespace carigan
