// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "carigan/dataset.hpp"
#include "carigan/networks.hpp"
#include "carigan/objectives.hpp"

namespace carigan {

/// Ablation ladder, from plain cGAN to the full model.
enum class Variant { base_gan, mask_g, mask_g_d, mask_if, mask_if_diverse };

std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view text);

/// Which inputs and loss terms a variant switches on.
struct VariantTraits {
  bool mask_in_generator = false;
  bool mask_in_discriminator = false;
  bool image_fusion = false;
  bool heatmap_content = false;
  bool diversity = false;
};

VariantTraits traits(Variant variant);

struct TrainConfig {
  Variant variant = Variant::mask_if_diverse;
  int batch_size = 16;
  std::int64_t iterations = 1000;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  /// Running-statistics decay of the normalization layers.
  double norm_momentum = 0.9;
  int image_size = 64;
  std::uint64_t seed = 0;
  LossWeights weights;
  /// Heatmap sigma in pixels; 0 selects default_heatmap_sigma(image_size).
  double sigma = 0.0;
  /// Mask block side; 0 selects mask_block_size(image_size).
  int block = 0;
  int base_width = 64;
  std::vector<int> disc_widths = {64, 128, 256, 512, 512};
  double flip_probability = 0.5;
  /// Steps between checkpoints; 0 selects max(1, iterations / 10).
  std::int64_t checkpoint_every = 0;

  double resolved_sigma() const;
  int resolved_block() const;
  std::int64_t resolved_checkpoint_every() const;
  GeneratorSpec generator_spec() const;
  DiscriminatorSpec discriminator_spec() const;

  /// Throws ConfigError on non-positive sizes or rates, or negative weights.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Flat "key = value" text, one field per line, '#' comments. Keys mirror
/// the TrainConfig field names; weights are w_adv, w_con, w_div and
/// disc_widths is a comma-separated list.
TrainConfig parse_train_config(std::string_view text);
TrainConfig read_train_config(const std::filesystem::path& path);
std::string format_train_config(const TrainConfig& config);

/// Everything needed to continue training bit-for-bit.
struct TrainState {
  TrainConfig config;
  UNetGenerator generator{nullptr};
  Discriminator discriminator{nullptr};
  std::unique_ptr<torch::optim::Adam> generator_optimizer;
  std::unique_ptr<torch::optim::Adam> discriminator_optimizer;
  std::int64_t step = 0;
  /// Drives pair sampling, flips and noise.
  std::mt19937_64 rng;
  /// Scalar Gaussian noise values drawn so far.
  std::uint64_t noise_draws = 0;
};

/// Fresh models seeded from config.seed.
TrainState make_train_state(const TrainConfig& config);

/// A batch laid out as tensors. Mask and heatmap always come from the
/// caricature's landmarks; mask_source records that per sample.
struct Batch {
  torch::Tensor face;     ///< N x 3 x S x S
  torch::Tensor real;     ///< N x 3 x S x S
  torch::Tensor mask;     ///< N x 1 x S x S
  torch::Tensor heatmap;  ///< N x 1 x S x S
  std::vector<SampleKind> mask_source;

  std::int64_t size() const { return face.size(0); }
};

Batch assemble_batch(std::span<const WeakPair> pairs, const TrainConfig& config);

/// N x 4 standard Gaussian noise drawn from state.rng.
torch::Tensor draw_noise(TrainState& state, std::int64_t rows);

/// Generator input for the state's variant (7 or 8 channels).
torch::Tensor generator_input(const TrainConfig& config, const Batch& batch,
                              const torch::Tensor& noise);
/// Discriminator input for the state's variant (3 or 4 channels).
torch::Tensor discriminator_input(const TrainConfig& config, const torch::Tensor& image,
                                  const torch::Tensor& mask);

struct Fakes {
  torch::Tensor z1;
  torch::Tensor fake1;
  /// Defined only for the diversity variant.
  torch::Tensor z2;
  torch::Tensor fake2;
};

/// Samples noise and runs the generator (graph retained for the G update).
Fakes generate_fakes(TrainState& state, const Batch& batch);

/// One discriminator step on detached fakes. Returns d_loss.
double discriminator_update(TrainState& state, const Batch& batch, const Fakes& fakes);

/// Generator loss terms with the discriminator frozen. Inactive terms are
/// zero tensors without graph.
struct GeneratorTerms {
  torch::Tensor adv_fake;
  torch::Tensor adv_fused;
  torch::Tensor adversarial;
  torch::Tensor content;
  torch::Tensor diversity;
  torch::Tensor total;
};

GeneratorTerms generator_terms(TrainState& state, const Batch& batch, const Fakes& fakes);

/// Backpropagates terms.total and steps the generator optimizer.
void generator_update(TrainState& state, const GeneratorTerms& terms);

/// One iteration: a discriminator update followed by a generator update.
/// Throws TrainingError naming the term when any loss is non-finite; the
/// corresponding optimizer is not stepped.
LossReport train_step(TrainState& state, std::span<const WeakPair> pairs);

/// Aligned samples of a manifest's train split plus the weak-pair index.
class TrainingData {
 public:
  TrainingData(const DatasetManifest& manifest, int image_size, const LandmarkLayout& layout = {});

  std::size_t pair_count() const { return index_.size(); }
  /// Uniform pair draws with replacement, each flipped with the configured
  /// probability.
  std::vector<WeakPair> sample_batch(TrainState& state) const;

 private:
  std::vector<AlignedSample> samples_;
  WeakPairIndex index_;
  LandmarkLayout layout_;
};

struct TrainOptions {
  std::filesystem::path out_dir;
  /// Continue from this checkpoint instead of starting fresh.
  std::optional<std::filesystem::path> resume_from;
  /// Progress lines, when set.
  std::ostream* log = nullptr;
};

/// Runs config.iterations alternating steps,
/// appending to out_dir/losses.csv and writing out_dir/ckpt_<step>.pt at the
/// checkpoint cadence and at the end. Returns the final checkpoint path.
/// Throws ConfigError when the manifest yields no weak pair.
std::filesystem::path train(const TrainConfig& config, const DatasetManifest& manifest,
                            const TrainOptions& options);
std::filesystem::path train(const TrainConfig& config, const TrainingData& data,
                            const TrainOptions& options);

/// Trains on one repeated pair (batch of config.batch_size copies, no
/// flips) and returns the heatmap-weighted content loss of the last step.
/// Throws ContractViolation when steps < 1.
double overfit_single_pair(const TrainConfig& config, const WeakPair& pair, int steps,
                           std::vector<LossReport>* history = nullptr);

/// Full training state as one torch archive: JSON metadata (format version,
/// model specs, config, step, RNG) plus module and optimizer tensors.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

inline constexpr int kCheckpointVersion = 1;

}  // namespace carigan
