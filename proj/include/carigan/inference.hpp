// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "carigan/landmarks.hpp"
#include "carigan/networks.hpp"
#include "carigan/training.hpp"

namespace carigan {

using NoiseVector = std::array<float, 4>;

/// Deterministic N(0, 1) noise vector for a seed.
NoiseVector noise_from_seed(std::uint64_t seed);

/// A frozen generator loaded from a checkpoint. Immutable after
/// construction; generate() may be called from several threads.
class CaricatureModel {
 public:
  explicit CaricatureModel(const std::filesystem::path& checkpoint);
  CaricatureModel(UNetGenerator generator, TrainConfig config);

  int image_size() const { return config_.image_size; }
  const TrainConfig& config() const { return config_; }

  /// face: 3 x S x S in [-1, 1]; target: landmarks in the aligned frame.
  /// Returns 3 x S x S in (-1, 1). Throws ContractViolation on size mismatch.
  torch::Tensor generate(const torch::Tensor& face, const LandmarkSet& target,
                         const NoiseVector& noise) const;

  /// Batched: one output per noise vector, N x 3 x S x S.
  torch::Tensor generate(const torch::Tensor& face, const LandmarkSet& target,
                         std::span<const NoiseVector> noises) const;

 private:
  mutable UNetGenerator generator_{nullptr};
  TrainConfig config_;
};

struct GenerationRequest {
  std::filesystem::path face_path;
  std::filesystem::path landmark_path;
  std::variant<NoiseVector, std::uint64_t> noise = std::uint64_t{0};
  std::filesystem::path checkpoint_path;
};

/// Reads the aligned face and target landmarks and returns 8-bit RGB.
/// Throws ContractViolation naming both sizes when the face does not match
/// the checkpoint, IoError when an input file is missing.
cv::Mat generate(const GenerationRequest& request);
cv::Mat generate(const CaricatureModel& model, const torch::Tensor& face,
                 const LandmarkSet& target, const NoiseVector& noise);

/// Images at z(t) = (1 - t) z_a + t z_b, t = i / (steps - 1). Endpoints use
/// z_a and z_b verbatim. Throws ContractViolation when steps < 2.
std::vector<torch::Tensor> interpolate_noise(const CaricatureModel& model,
                                             const torch::Tensor& face,
                                             const LandmarkSet& target, const NoiseVector& z_a,
                                             const NoiseVector& z_b, int steps);

/// Horizontal concatenation of 3 x S x S images as 8-bit RGB.
cv::Mat make_strip(std::span<const torch::Tensor> images);

struct DiversityScore {
  double mean_pairwise_distance = 0.0;
  int n_samples = 0;
};

/// Mean per-pixel L1 distance over all unordered pairs of images
/// (N x 3 x S x S, [-1, 1] scale).
DiversityScore pairwise_diversity(const torch::Tensor& images);

/// Generates one image per noise and scores their pairwise diversity.
DiversityScore diversity_score(const CaricatureModel& model, const torch::Tensor& face,
                               const LandmarkSet& target, std::span<const NoiseVector> noises);

/// Draws n noise vectors from one seeded stream. Throws ContractViolation
/// when n < 2.
DiversityScore diversity_score(const CaricatureModel& model, const torch::Tensor& face,
                               const LandmarkSet& target, int n, std::uint64_t seed);

/// Mean channel intensity inside the mask's support minus outside it.
double mask_contrast(const torch::Tensor& image, const torch::Tensor& mask);

}  // namespace carigan
