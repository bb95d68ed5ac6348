// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include <torch/types.h>

namespace carigan {

/// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before logs.
inline constexpr double kProbEpsilon = 1e-7;
/// Added to a diversity-loss denominator that falls below it.
inline constexpr double kNormEpsilon = 1e-12;

struct LossWeights {
  double adversarial = 1.0;
  double content = 1.0;
  double diversity = 1.0;
};

/// Scalar losses of one training step.
struct LossReport {
  std::int64_t step = 0;
  double d_loss = 0.0;
  double g_adv = 0.0;
  double g_content = 0.0;
  double g_diversity = 0.0;
  double g_total = 0.0;

  static std::string csv_header();
  std::string csv_row() const;

  friend bool operator==(const LossReport&, const LossReport&) = default;
};

/// m * fake + (1 - m) * real with the one-channel heatmap broadcast over
/// colour channels. Accepts C x H x W or N x C x H x W. Throws
/// ContractViolation when the heatmap leaves [0, 1] or shapes disagree.
torch::Tensor fuse_images(const torch::Tensor& fake, const torch::Tensor& real,
                          const torch::Tensor& heatmap);

struct AdversarialLosses {
  torch::Tensor d_loss;
  torch::Tensor g_adv;
};

/// Discriminator loss, averaged over the batch:
///   with fusion    -[log D(y) + 1/2 log(1 - D(fake)) + 1/2 log(1 - D(fused))]
///   without fusion -[log D(y) + log(1 - D(fake))]
torch::Tensor discriminator_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake,
                                 const std::optional<torch::Tensor>& d_fused);

/// Non-saturating generator loss, averaged over the batch:
///   with fusion    -[1/2 log D(fake) + 1/2 log D(fused)]
///   without fusion -log D(fake)
torch::Tensor generator_adversarial_loss(const torch::Tensor& d_fake,
                                         const std::optional<torch::Tensor>& d_fused);

AdversarialLosses adversarial_losses(const torch::Tensor& d_real, const torch::Tensor& d_fake,
                                     const std::optional<torch::Tensor>& d_fused);

/// Mean over all elements of |(real - fake) * m|, or of |real - fake| when
/// no heatmap is given.
torch::Tensor content_loss(const torch::Tensor& fake, const torch::Tensor& real,
                           const std::optional<torch::Tensor>& heatmap);

/// (|f1-f2|^2 / (|f1|^2+|f2|^2) - |z1-z2|^2 / (|z1|^2+|z2|^2))^2.
/// Vectors are rows (N x F and N x 4, or 1-D); the result is the batch mean.
torch::Tensor diversity_loss(const torch::Tensor& f1, const torch::Tensor& f2,
                             const torch::Tensor& z1, const torch::Tensor& z2);

/// Normalized squared distance |a-b|^2 / (|a|^2+|b|^2) per row, in [0, 2].
torch::Tensor normalized_distance(const torch::Tensor& a, const torch::Tensor& b);

template <typename T>
T total_generator_loss(const T& g_adv, const T& g_content, const T& g_diversity,
                       const LossWeights& weights) {
  return g_adv * weights.adversarial + g_content * weights.content +
         g_diversity * weights.diversity;
}

}  // namespace carigan
