// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include "carigan/inference.hpp"

#include <random>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "carigan/conditioning.hpp"
#include "carigan/error.hpp"
#include "carigan/image_io.hpp"

namespace carigan {

NoiseVector noise_from_seed(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  NoiseVector z{};
  for (auto& v : z) v = normal(rng);
  return z;
}

CaricatureModel::CaricatureModel(const std::filesystem::path& checkpoint) {
  TrainState state = load_checkpoint(checkpoint);
  generator_ = state.generator;
  config_ = state.config;
  generator_->set_mode(Mode::inference);
}

CaricatureModel::CaricatureModel(UNetGenerator generator, TrainConfig config)
    : generator_(std::move(generator)), config_(std::move(config)) {
  generator_->set_mode(Mode::inference);
}

torch::Tensor CaricatureModel::generate(const torch::Tensor& face, const LandmarkSet& target,
                                        const NoiseVector& noise) const {
  return generate(face, target, std::span<const NoiseVector>(&noise, 1)).squeeze(0);
}

torch::Tensor CaricatureModel::generate(const torch::Tensor& face, const LandmarkSet& target,
                                        std::span<const NoiseVector> noises) const {
  const int size = image_size();
  if (face.dim() != 3 || face.size(0) != 3 || face.size(1) != size || face.size(2) != size) {
    throw ContractViolation(fmt::format("face image is {} but the checkpoint expects 3x{}x{}",
                                        fmt::join(face.sizes(), "x"), size, size));
  }
  if (noises.empty()) {
    throw ContractViolation("generate needs at least one noise vector");
  }
  torch::NoGradGuard no_grad;
  const auto n = static_cast<std::int64_t>(noises.size());
  std::vector<float> flat;
  for (const auto& z : noises) flat.insert(flat.end(), z.begin(), z.end());
  const auto z = torch::tensor(flat, torch::kFloat32).view({n, kNoiseDim});

  Batch batch;
  batch.face = face.to(torch::kFloat32).unsqueeze(0).expand({n, 3, size, size});
  batch.mask = rasterize_mask(target, size, size, config_.resolved_block())
                   .unsqueeze(0)
                   .expand({n, 1, size, size});
  return generator_->forward(generator_input(config_, batch, z));
}

cv::Mat generate(const CaricatureModel& model, const torch::Tensor& face,
                 const LandmarkSet& target, const NoiseVector& noise) {
  return tensor_to_bytes(model.generate(face, target, noise));
}

cv::Mat generate(const GenerationRequest& request) {
  const CaricatureModel model(request.checkpoint_path);
  const auto face = bytes_to_tensor(read_rgb(request.face_path));
  const auto target = read_landmarks(request.landmark_path);
  const NoiseVector noise = std::holds_alternative<NoiseVector>(request.noise)
                                ? std::get<NoiseVector>(request.noise)
                                : noise_from_seed(std::get<std::uint64_t>(request.noise));
  return generate(model, face, target, noise);
}

std::vector<torch::Tensor> interpolate_noise(const CaricatureModel& model,
                                             const torch::Tensor& face,
                                             const LandmarkSet& target, const NoiseVector& z_a,
                                             const NoiseVector& z_b, int steps) {
  if (steps < 2) {
    throw ContractViolation(fmt::format("interpolation needs at least 2 steps, got {}", steps));
  }
  std::vector<torch::Tensor> images;
  images.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    NoiseVector z = z_a;
    if (i == steps - 1) {
      z = z_b;
    } else if (i > 0) {
      const float t = static_cast<float>(i) / static_cast<float>(steps - 1);
      for (std::size_t c = 0; c < z.size(); ++c) z[c] = (1.0f - t) * z_a[c] + t * z_b[c];
    }
    images.push_back(model.generate(face, target, z));
  }
  return images;
}

cv::Mat make_strip(std::span<const torch::Tensor> images) {
  if (images.empty()) {
    throw ContractViolation("cannot build a strip from zero images");
  }
  return tensor_to_bytes(torch::cat(std::vector<torch::Tensor>(images.begin(), images.end()), 2));
}

DiversityScore pairwise_diversity(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(0) < 2) {
    throw ContractViolation("pairwise_diversity needs N >= 2 images as N x C x H x W");
  }
  const auto n = images.size(0);
  const auto flat = images.detach().to(torch::kFloat64).flatten(1);
  double sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      sum += (flat[i] - flat[j]).abs().mean().item<double>();
    }
  }
  return {sum / static_cast<double>(n * (n - 1) / 2), static_cast<int>(n)};
}

DiversityScore diversity_score(const CaricatureModel& model, const torch::Tensor& face,
                               const LandmarkSet& target, std::span<const NoiseVector> noises) {
  if (noises.size() < 2) {
    throw ContractViolation(
        fmt::format("diversity score needs at least 2 samples, got {}", noises.size()));
  }
  std::vector<torch::Tensor> images;
  for (const auto& z : noises) images.push_back(model.generate(face, target, z));
  return pairwise_diversity(torch::stack(images));
}

DiversityScore diversity_score(const CaricatureModel& model, const torch::Tensor& face,
                               const LandmarkSet& target, int n, std::uint64_t seed) {
  if (n < 2) {
    throw ContractViolation(fmt::format("diversity score needs n >= 2, got {}", n));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<NoiseVector> noises(static_cast<std::size_t>(n));
  for (auto& z : noises) {
    for (auto& v : z) v = normal(rng);
  }
  return diversity_score(model, face, target, noises);
}

double mask_contrast(const torch::Tensor& image, const torch::Tensor& mask) {
  torch::NoGradGuard no_grad;
  const auto intensity = image.to(torch::kFloat64).mean(-3, /*keepdim=*/true);
  const auto inside = mask.to(torch::kFloat64).expand_as(intensity) > 0.5;
  const auto n_in = inside.sum().item<double>();
  const auto n_out = static_cast<double>(inside.numel()) - n_in;
  if (n_in == 0.0 || n_out == 0.0) {
    throw ContractViolation("mask_contrast needs pixels both inside and outside the mask");
  }
  const double sum_in = intensity.masked_select(inside).sum().item<double>();
  const double sum_all = intensity.sum().item<double>();
  return sum_in / n_in - (sum_all - sum_in) / n_out;
}

}  // namespace carigan
