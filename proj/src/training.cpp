// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include "carigan/training.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "carigan/conditioning.hpp"
#include "carigan/error.hpp"

namespace carigan {
namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

/// Disables gradient recording for a module's parameters for its lifetime.
class FrozenParameters {
 public:
  explicit FrozenParameters(torch::nn::Module& module) : params_(module.parameters()) {
    for (auto& p : params_) {
      flags_.push_back(p.requires_grad());
      p.set_requires_grad(false);
    }
  }
  ~FrozenParameters() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      params_[i].set_requires_grad(flags_[i]);
    }
  }
  FrozenParameters(const FrozenParameters&) = delete;
  FrozenParameters& operator=(const FrozenParameters&) = delete;

 private:
  std::vector<torch::Tensor> params_;
  std::vector<bool> flags_;
};

void require_finite(double value, std::string_view term, std::int64_t step) {
  if (!std::isfinite(value)) {
    throw TrainingError(fmt::format("non-finite {} ({}) at step {}", term, value, step + 1));
  }
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, text));
  }
  return value;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(std::string_view key, std::string_view text) {
  std::vector<int> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number<int>(key, trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

using Setter = std::function<void(TrainConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& config_setters() {
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"variant", [](TrainConfig& c, auto, auto v) { c.variant = parse_variant(v); }},
      {"batch_size", [](TrainConfig& c, auto k, auto v) { c.batch_size = parse_number<int>(k, v); }},
      {"iterations",
       [](TrainConfig& c, auto k, auto v) { c.iterations = parse_number<std::int64_t>(k, v); }},
      {"lr_g", [](TrainConfig& c, auto k, auto v) { c.lr_g = parse_number<double>(k, v); }},
      {"lr_d", [](TrainConfig& c, auto k, auto v) { c.lr_d = parse_number<double>(k, v); }},
      {"adam_beta1",
       [](TrainConfig& c, auto k, auto v) { c.adam_beta1 = parse_number<double>(k, v); }},
      {"adam_beta2",
       [](TrainConfig& c, auto k, auto v) { c.adam_beta2 = parse_number<double>(k, v); }},
      {"norm_momentum",
       [](TrainConfig& c, auto k, auto v) { c.norm_momentum = parse_number<double>(k, v); }},
      {"image_size", [](TrainConfig& c, auto k, auto v) { c.image_size = parse_number<int>(k, v); }},
      {"seed",
       [](TrainConfig& c, auto k, auto v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"w_adv",
       [](TrainConfig& c, auto k, auto v) { c.weights.adversarial = parse_number<double>(k, v); }},
      {"w_con",
       [](TrainConfig& c, auto k, auto v) { c.weights.content = parse_number<double>(k, v); }},
      {"w_div",
       [](TrainConfig& c, auto k, auto v) { c.weights.diversity = parse_number<double>(k, v); }},
      {"sigma", [](TrainConfig& c, auto k, auto v) { c.sigma = parse_number<double>(k, v); }},
      {"block", [](TrainConfig& c, auto k, auto v) { c.block = parse_number<int>(k, v); }},
      {"base_width", [](TrainConfig& c, auto k, auto v) { c.base_width = parse_number<int>(k, v); }},
      {"disc_widths", [](TrainConfig& c, auto k, auto v) { c.disc_widths = parse_int_list(k, v); }},
      {"flip_probability",
       [](TrainConfig& c, auto k, auto v) { c.flip_probability = parse_number<double>(k, v); }},
      {"checkpoint_every",
       [](TrainConfig& c, auto k, auto v) {
         c.checkpoint_every = parse_number<std::int64_t>(k, v);
       }},
  };
  return setters;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::int64_t step) {
  return dir / fmt::format("ckpt_{:06d}.pt", step);
}

// Keeps the header and rows up to `step`; creates the file when missing.
void prepare_loss_log(const std::filesystem::path& path, std::int64_t step) {
  std::vector<std::string> kept;
  if (std::ifstream in(path); in && step > 0) {
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      std::int64_t row_step = 0;
      std::from_chars(line.data(), line.data() + comma, row_step);
      if (row_step <= step) kept.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError(fmt::format("cannot write loss log {}", path.string()));
  }
  out << LossReport::csv_header() << '\n';
  for (const auto& line : kept) out << line << '\n';
}

}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::base_gan: return "base_gan";
    case Variant::mask_g: return "mask_g";
    case Variant::mask_g_d: return "mask_g_d";
    case Variant::mask_if: return "mask_if";
    case Variant::mask_if_diverse: return "mask_if_diverse";
  }
  return "unknown";
}

Variant parse_variant(std::string_view text) {
  for (Variant v : {Variant::base_gan, Variant::mask_g, Variant::mask_g_d, Variant::mask_if,
                    Variant::mask_if_diverse}) {
    if (text == to_string(v)) return v;
  }
  throw ConfigError(fmt::format("unknown variant '{}'", text));
}

VariantTraits traits(Variant variant) {
  switch (variant) {
    case Variant::base_gan: return {false, false, false, false, false};
    case Variant::mask_g: return {true, false, false, false, false};
    case Variant::mask_g_d: return {true, true, false, false, false};
    case Variant::mask_if: return {true, true, true, true, false};
    case Variant::mask_if_diverse: return {true, true, true, true, true};
  }
  return {};
}

double TrainConfig::resolved_sigma() const {
  return sigma > 0.0 ? sigma : default_heatmap_sigma(image_size);
}

int TrainConfig::resolved_block() const { return block > 0 ? block : mask_block_size(image_size); }

std::int64_t TrainConfig::resolved_checkpoint_every() const {
  return checkpoint_every > 0 ? checkpoint_every : std::max<std::int64_t>(1, iterations / 10);
}

GeneratorSpec TrainConfig::generator_spec() const {
  GeneratorSpec spec;
  spec.in_channels = traits(variant).mask_in_generator ? 8 : 7;
  spec.base_width = base_width;
  spec.image_size = image_size;
  spec.norm_momentum = norm_momentum;
  return spec;
}

DiscriminatorSpec TrainConfig::discriminator_spec() const {
  DiscriminatorSpec spec;
  spec.in_channels = traits(variant).mask_in_discriminator ? 4 : 3;
  spec.conv_widths = disc_widths;
  spec.image_size = image_size;
  spec.norm_momentum = norm_momentum;
  return spec;
}

void TrainConfig::validate() const {
  auto fail = [](std::string msg) { throw ConfigError(std::move(msg)); };
  if (batch_size <= 0) fail(fmt::format("batch_size must be positive, got {}", batch_size));
  if (iterations < 0) fail(fmt::format("iterations must be non-negative, got {}", iterations));
  if (!(lr_g > 0.0) || !(lr_d > 0.0)) fail("learning rates must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail("Adam betas must lie in [0, 1)");
  }
  if (!(norm_momentum >= 0.0 && norm_momentum <= 1.0)) fail("norm_momentum must lie in [0, 1]");
  if (!is_power_of_two(image_size)) {
    fail(fmt::format("image_size must be a power of two, got {}", image_size));
  }
  if (!(weights.adversarial >= 0.0 && weights.content >= 0.0 && weights.diversity >= 0.0)) {
    fail("loss weights must be non-negative");
  }
  if (sigma < 0.0 || block < 0) fail("sigma and block must be non-negative");
  if (base_width <= 0) fail("base_width must be positive");
  if (disc_widths.empty()) fail("disc_widths must not be empty");
  for (int w : disc_widths) {
    if (w <= 0) fail("disc_widths entries must be positive");
  }
  if ((image_size >> static_cast<int>(disc_widths.size())) < 1) {
    fail(fmt::format("{} discriminator convs do not fit image_size {}", disc_widths.size(),
                     image_size));
  }
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
    fail("flip_probability must lie in [0, 1]");
  }
  if (checkpoint_every < 0) fail("checkpoint_every must be non-negative");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"variant", std::string(to_string(c.variant))},
          {"batch_size", c.batch_size},
          {"iterations", c.iterations},
          {"lr_g", c.lr_g},
          {"lr_d", c.lr_d},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"norm_momentum", c.norm_momentum},
          {"image_size", c.image_size},
          {"seed", c.seed},
          {"w_adv", c.weights.adversarial},
          {"w_con", c.weights.content},
          {"w_div", c.weights.diversity},
          {"sigma", c.sigma},
          {"block", c.block},
          {"base_width", c.base_width},
          {"disc_widths", c.disc_widths},
          {"flip_probability", c.flip_probability},
          {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.batch_size = j.at("batch_size").get<int>();
    c.iterations = j.at("iterations").get<std::int64_t>();
    c.lr_g = j.at("lr_g").get<double>();
    c.lr_d = j.at("lr_d").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.norm_momentum = j.at("norm_momentum").get<double>();
    c.image_size = j.at("image_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.weights.adversarial = j.at("w_adv").get<double>();
    c.weights.content = j.at("w_con").get<double>();
    c.weights.diversity = j.at("w_div").get<double>();
    c.sigma = j.at("sigma").get<double>();
    c.block = j.at("block").get<int>();
    c.base_width = j.at("base_width").get<int>();
    c.disc_widths = j.at("disc_widths").get<std::vector<int>>();
    c.flip_probability = j.at("flip_probability").get<double>();
    c.checkpoint_every = j.at("checkpoint_every").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad train config metadata: {}", e.what()));
  }
  return c;
}

TrainConfig parse_train_config(std::string_view text) {
  TrainConfig config;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto& setters = config_setters();
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

TrainConfig read_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot open config {}", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_train_config(buffer.str());
}

std::string format_train_config(const TrainConfig& config) {
  std::string out;
  const nlohmann::json fields = to_json(config);
  for (const auto& [key, value] : fields.items()) {
    if (value.is_array()) {
      out += fmt::format("{} = {}\n", key, fmt::join(value.get<std::vector<int>>(), ","));
    } else if (value.is_string()) {
      out += fmt::format("{} = {}\n", key, value.get<std::string>());
    } else {
      out += fmt::format("{} = {}\n", key, value.dump());
    }
  }
  return out;
}

TrainState make_train_state(const TrainConfig& config) {
  config.validate();
  TrainState state;
  state.config = config;
  torch::manual_seed(config.seed);
  state.generator = UNetGenerator(config.generator_spec());
  state.discriminator = Discriminator(config.discriminator_spec());
  state.generator_optimizer = std::make_unique<torch::optim::Adam>(
      state.generator->parameters(),
      torch::optim::AdamOptions(config.lr_g).betas({config.adam_beta1, config.adam_beta2}));
  state.discriminator_optimizer = std::make_unique<torch::optim::Adam>(
      state.discriminator->parameters(),
      torch::optim::AdamOptions(config.lr_d).betas({config.adam_beta1, config.adam_beta2}));
  state.rng.seed(config.seed);
  return state;
}

Batch assemble_batch(std::span<const WeakPair> pairs, const TrainConfig& config) {
  if (pairs.empty()) {
    throw ContractViolation("training batch is empty");
  }
  const int size = config.image_size;
  const int block = config.resolved_block();
  const double sigma = config.resolved_sigma();
  std::vector<torch::Tensor> faces, reals, masks, heats;
  Batch batch;
  for (const auto& pair : pairs) {
    if (pair.face.identity != pair.caricature.identity) {
      throw ContractViolation(fmt::format("weak pair identities differ: '{}' vs '{}'",
                                          pair.face.identity, pair.caricature.identity));
    }
    if (pair.face.size() != size || pair.caricature.size() != size) {
      throw ContractViolation(fmt::format("samples must be aligned to {} px, got {} and {}", size,
                                          pair.face.size(), pair.caricature.size()));
    }
    faces.push_back(pair.face.image);
    reals.push_back(pair.caricature.image);
    const LandmarkSet& target = pair.caricature.landmarks;
    masks.push_back(rasterize_mask(target, size, size, block));
    heats.push_back(rasterize_heatmap(target, size, size, sigma));
    batch.mask_source.push_back(pair.caricature.kind);
  }
  batch.face = torch::stack(faces);
  batch.real = torch::stack(reals);
  batch.mask = torch::stack(masks);
  batch.heatmap = torch::stack(heats);
  return batch;
}

torch::Tensor draw_noise(TrainState& state, std::int64_t rows) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> values(static_cast<std::size_t>(rows * kNoiseDim));
  for (auto& v : values) v = normal(state.rng);
  state.noise_draws += values.size();
  return torch::tensor(values, torch::kFloat32).view({rows, kNoiseDim});
}

torch::Tensor generator_input(const TrainConfig& config, const Batch& batch,
                              const torch::Tensor& noise) {
  const auto noise_map = broadcast_noise(noise, config.image_size, config.image_size);
  if (traits(config.variant).mask_in_generator) {
    return pack_generator_input(batch.face, batch.mask, noise_map);
  }
  return pack_generator_input(batch.face, noise_map);
}

torch::Tensor discriminator_input(const TrainConfig& config, const torch::Tensor& image,
                                  const torch::Tensor& mask) {
  if (traits(config.variant).mask_in_discriminator) {
    return pack_discriminator_input(image, mask);
  }
  return image;
}

Fakes generate_fakes(TrainState& state, const Batch& batch) {
  state.generator->set_mode(Mode::train);
  Fakes fakes;
  fakes.z1 = draw_noise(state, batch.size());
  fakes.fake1 = state.generator->forward(generator_input(state.config, batch, fakes.z1));
  if (traits(state.config.variant).diversity) {
    fakes.z2 = draw_noise(state, batch.size());
    fakes.fake2 = state.generator->forward(generator_input(state.config, batch, fakes.z2));
  }
  return fakes;
}

double discriminator_update(TrainState& state, const Batch& batch, const Fakes& fakes) {
  const auto& config = state.config;
  const VariantTraits t = traits(config.variant);
  auto& disc = state.discriminator;
  disc->set_mode(Mode::train);

  const auto fake = fakes.fake1.detach();
  const auto d_real = disc->forward(discriminator_input(config, batch.real, batch.mask));
  const auto d_fake = disc->forward(discriminator_input(config, fake, batch.mask));
  std::optional<torch::Tensor> d_fused;
  if (t.image_fusion) {
    const auto fused = fuse_images(fake, batch.real, batch.heatmap);
    d_fused = disc->forward(discriminator_input(config, fused, batch.mask)).probability;
  }
  const auto loss = discriminator_loss(d_real.probability, d_fake.probability, d_fused);
  const double value = loss.item<double>();
  require_finite(value, "d_loss", state.step);

  state.discriminator_optimizer->zero_grad();
  loss.backward();
  state.discriminator_optimizer->step();
  return value;
}

GeneratorTerms generator_terms(TrainState& state, const Batch& batch, const Fakes& fakes) {
  const auto& config = state.config;
  const VariantTraits t = traits(config.variant);
  auto& disc = state.discriminator;
  disc->set_mode(Mode::train);
  FrozenParameters frozen(*disc);

  GeneratorTerms terms;
  const auto zero = torch::zeros({}, torch::kFloat32);
  const auto out_fake = disc->forward(discriminator_input(config, fakes.fake1, batch.mask));
  terms.adv_fake = generator_adversarial_loss(out_fake.probability, std::nullopt);
  std::optional<torch::Tensor> p_fused;
  if (t.image_fusion) {
    const auto fused = fuse_images(fakes.fake1, batch.real, batch.heatmap);
    p_fused = disc->forward(discriminator_input(config, fused, batch.mask)).probability;
    terms.adv_fused = generator_adversarial_loss(*p_fused, std::nullopt);
  } else {
    terms.adv_fused = zero;
  }
  terms.adversarial = generator_adversarial_loss(out_fake.probability, p_fused);
  terms.content = content_loss(fakes.fake1, batch.real,
                               t.heatmap_content ? std::optional(batch.heatmap) : std::nullopt);
  if (t.diversity) {
    const auto out_second = disc->forward(discriminator_input(config, fakes.fake2, batch.mask));
    terms.diversity = diversity_loss(out_fake.features, out_second.features, fakes.z1, fakes.z2);
  } else {
    terms.diversity = zero;
  }
  terms.total =
      total_generator_loss(terms.adversarial, terms.content, terms.diversity, config.weights);
  return terms;
}

void generator_update(TrainState& state, const GeneratorTerms& terms) {
  state.generator_optimizer->zero_grad();
  terms.total.backward();
  state.generator_optimizer->step();
}

LossReport train_step(TrainState& state, std::span<const WeakPair> pairs) {
  const Batch batch = assemble_batch(pairs, state.config);
  for (SampleKind source : batch.mask_source) {
    if (source != SampleKind::caricature) {
      throw TrainingError("mask must be rasterized from the caricature's landmarks");
    }
  }
  const Fakes fakes = generate_fakes(state, batch);

  LossReport report;
  report.step = state.step + 1;
  report.d_loss = discriminator_update(state, batch, fakes);

  const GeneratorTerms terms = generator_terms(state, batch, fakes);
  report.g_adv = terms.adversarial.item<double>();
  report.g_content = terms.content.item<double>();
  report.g_diversity = terms.diversity.item<double>();
  report.g_total = terms.total.item<double>();
  require_finite(report.g_adv, "g_adv", state.step);
  require_finite(report.g_content, "g_content", state.step);
  require_finite(report.g_diversity, "g_diversity", state.step);
  require_finite(report.g_total, "g_total", state.step);
  generator_update(state, terms);

  ++state.step;
  return report;
}

TrainingData::TrainingData(const DatasetManifest& manifest, int image_size,
                           const LandmarkLayout& layout)
    : index_(DatasetManifest{}), layout_(layout) {
  const DatasetManifest train_split = manifest.filter(Split::train);
  samples_.reserve(train_split.records.size());
  for (const auto& record : train_split.records) {
    samples_.push_back(load_sample(record, image_size, layout_));
  }
  index_ = WeakPairIndex(train_split);
}

std::vector<WeakPair> TrainingData::sample_batch(TrainState& state) const {
  std::bernoulli_distribution coin(state.config.flip_probability);
  std::vector<WeakPair> batch;
  batch.reserve(static_cast<std::size_t>(state.config.batch_size));
  for (int i = 0; i < state.config.batch_size; ++i) {
    const PairIndex idx = index_.sample(state.rng);
    WeakPair pair{samples_[idx.face], samples_[idx.caricature]};
    batch.push_back(augment_flip(pair, coin(state.rng), layout_));
  }
  return batch;
}

std::filesystem::path train(const TrainConfig& config, const DatasetManifest& manifest,
                            const TrainOptions& options) {
  config.validate();
  if (WeakPairIndex(manifest).empty()) {
    throw ConfigError("dataset has no weak pairs in its train split");
  }
  return train(config, TrainingData(manifest, config.image_size), options);
}

std::filesystem::path train(const TrainConfig& config, const TrainingData& data,
                            const TrainOptions& options) {
  config.validate();
  if (data.pair_count() == 0) {
    throw ConfigError("dataset has no weak pairs in its train split");
  }
  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create {}: {}", options.out_dir.string(), ec.message()));
  }

  TrainState state;
  if (options.resume_from) {
    state = load_checkpoint(*options.resume_from);
    if (state.config.variant != config.variant || state.config.image_size != config.image_size) {
      throw ConfigError("resume checkpoint was trained with a different variant or image size");
    }
    state.config.iterations = config.iterations;
    state.config.checkpoint_every = config.checkpoint_every;
  } else {
    state = make_train_state(config);
  }
  {
    std::ofstream cfg(options.out_dir / "config.txt");
    cfg << format_train_config(state.config);
  }

  const auto log_path = options.out_dir / "losses.csv";
  prepare_loss_log(log_path, state.step);
  std::ofstream log(log_path, std::ios::app);

  const std::int64_t every = state.config.resolved_checkpoint_every();
  const std::int64_t total = state.config.iterations;
  while (state.step < total) {
    const auto batch = data.sample_batch(state);
    const LossReport report = train_step(state, batch);
    log << report.csv_row() << '\n';
    if (options.log && (report.step % 50 == 0 || report.step == total)) {
      *options.log << fmt::format("step {:>6}  d {:.4f}  g_adv {:.4f}  con {:.4f}  div {:.4f}\n",
                                  report.step, report.d_loss, report.g_adv, report.g_content,
                                  report.g_diversity);
    }
    if (state.step % every == 0 && state.step != total) {
      log.flush();
      save_checkpoint(checkpoint_path(options.out_dir, state.step), state);
    }
  }
  log.flush();
  const auto final_path = checkpoint_path(options.out_dir, state.step);
  save_checkpoint(final_path, state);
  return final_path;
}

double overfit_single_pair(const TrainConfig& config, const WeakPair& pair, int steps,
                           std::vector<LossReport>* history) {
  if (steps < 1) {
    throw ContractViolation(fmt::format("overfit_single_pair needs at least one step, got {}",
                                        steps));
  }
  TrainState state = make_train_state(config);
  const std::vector<WeakPair> batch(static_cast<std::size_t>(config.batch_size), pair);
  for (int i = 0; i < steps; ++i) {
    const LossReport report = train_step(state, batch);
    if (history) history->push_back(report);
  }
  // Heatmap-weighted content loss of one more forward pass, same mode as
  // training, regardless of which content term the variant optimizes.
  torch::NoGradGuard no_grad;
  const Batch tensors = assemble_batch(batch, config);
  const Fakes fakes = generate_fakes(state, tensors);
  const double value = content_loss(fakes.fake1, tensors.real, tensors.heatmap).item<double>();
  require_finite(value, "masked content loss", state.step);
  return value;
}

}  // namespace carigan
