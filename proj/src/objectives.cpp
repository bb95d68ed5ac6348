// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include "carigan/objectives.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <torch/torch.h>

#include "carigan/error.hpp"

namespace carigan {
namespace {

torch::Tensor safe_log(const torch::Tensor& p) {
  return torch::log(p.clamp(kProbEpsilon, 1.0 - kProbEpsilon));
}

torch::Tensor safe_log1m(const torch::Tensor& p) {
  return torch::log(1.0 - p.clamp(kProbEpsilon, 1.0 - kProbEpsilon));
}

void check_heatmap(const torch::Tensor& fake, const torch::Tensor& heatmap) {
  const bool ok = heatmap.dim() == fake.dim() && heatmap.size(-3) == 1 &&
                  heatmap.size(-2) == fake.size(-2) && heatmap.size(-1) == fake.size(-1) &&
                  (fake.dim() == 3 || heatmap.size(0) == fake.size(0));
  if (!ok) {
    throw ContractViolation(fmt::format("heatmap shape {} does not match image shape {}",
                                        fmt::join(heatmap.sizes(), "x"),
                                        fmt::join(fake.sizes(), "x")));
  }
}

torch::Tensor as_rows(const torch::Tensor& t) { return t.dim() == 1 ? t.unsqueeze(0) : t.flatten(1); }

torch::Tensor safe_denominator(const torch::Tensor& d) {
  return torch::where(d < kNormEpsilon, d + kNormEpsilon, d);
}

}  // namespace

std::string LossReport::csv_header() { return "step,d_loss,g_adv,g_content,g_diversity,g_total"; }

std::string LossReport::csv_row() const {
  return fmt::format("{},{},{},{},{},{}", step, d_loss, g_adv, g_content, g_diversity, g_total);
}

torch::Tensor fuse_images(const torch::Tensor& fake, const torch::Tensor& real,
                          const torch::Tensor& heatmap) {
  if (!fake.sizes().equals(real.sizes())) {
    throw ContractViolation("fuse_images: fake and real shapes differ");
  }
  if (fake.dim() != 3 && fake.dim() != 4) {
    throw ContractViolation("fuse_images expects C x H x W or N x C x H x W images");
  }
  check_heatmap(fake, heatmap);
  {
    torch::NoGradGuard no_grad;
    if (heatmap.numel() > 0 &&
        (heatmap.min().item<double>() < 0.0 || heatmap.max().item<double>() > 1.0)) {
      throw ContractViolation("fuse_images: heatmap values must lie in [0, 1]");
    }
  }
  return heatmap * fake + (1.0 - heatmap) * real;
}

torch::Tensor discriminator_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake,
                                 const std::optional<torch::Tensor>& d_fused) {
  if (d_fused) {
    return -(safe_log(d_real) + 0.5 * safe_log1m(d_fake) + 0.5 * safe_log1m(*d_fused)).mean();
  }
  return -(safe_log(d_real) + safe_log1m(d_fake)).mean();
}

torch::Tensor generator_adversarial_loss(const torch::Tensor& d_fake,
                                         const std::optional<torch::Tensor>& d_fused) {
  if (d_fused) {
    return -(0.5 * safe_log(d_fake) + 0.5 * safe_log(*d_fused)).mean();
  }
  return -safe_log(d_fake).mean();
}

AdversarialLosses adversarial_losses(const torch::Tensor& d_real, const torch::Tensor& d_fake,
                                     const std::optional<torch::Tensor>& d_fused) {
  return {discriminator_loss(d_real, d_fake, d_fused), generator_adversarial_loss(d_fake, d_fused)};
}

torch::Tensor content_loss(const torch::Tensor& fake, const torch::Tensor& real,
                           const std::optional<torch::Tensor>& heatmap) {
  if (!fake.sizes().equals(real.sizes())) {
    throw ContractViolation("content_loss: fake and real shapes differ");
  }
  auto diff = real - fake;
  if (heatmap) {
    check_heatmap(fake, *heatmap);
    diff = diff * *heatmap;
  }
  return diff.abs().mean();
}

torch::Tensor normalized_distance(const torch::Tensor& a, const torch::Tensor& b) {
  const auto ra = as_rows(a);
  const auto rb = as_rows(b);
  if (!ra.sizes().equals(rb.sizes())) {
    throw ContractViolation("normalized_distance: vector shapes differ");
  }
  const auto num = (ra - rb).pow(2).sum(1);
  const auto den = ra.pow(2).sum(1) + rb.pow(2).sum(1);
  return num / safe_denominator(den);
}

torch::Tensor diversity_loss(const torch::Tensor& f1, const torch::Tensor& f2,
                             const torch::Tensor& z1, const torch::Tensor& z2) {
  const auto feature_term = normalized_distance(f1, f2);
  const auto noise_term = normalized_distance(z1, z2);
  if (feature_term.size(0) != noise_term.size(0)) {
    throw ContractViolation("diversity_loss: feature and noise batch sizes differ");
  }
  return (feature_term - noise_term).pow(2).mean();
}

}  // namespace carigan
