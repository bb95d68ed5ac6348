// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include "testing.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "carigan/conditioning.hpp"
#include "carigan/error.hpp"
#include "carigan/training.hpp"
#include "toy_fixture.hpp"

using namespace carigan;
using carigan::testing::tiny_config;
using carigan::testing::ToyData;

namespace {

const Variant kAll[] = {Variant::base_gan, Variant::mask_g, Variant::mask_g_d, Variant::mask_if,
                        Variant::mask_if_diverse};

std::vector<WeakPair> fixed_batch(int n = 4) {
  const auto& toy = ToyData::get();
  std::vector<WeakPair> batch;
  for (int i = 0; i < n; ++i) batch.push_back(toy.pair(static_cast<std::size_t>(i % 3)));
  return batch;
}

std::vector<std::string> csv_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("variant names round-trip and unknown names are rejected") {
  for (Variant v : kAll) CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_variant("mask_d"), ConfigError);
}

TEST_CASE("variants select network input channels") {
  const std::map<Variant, std::pair<int, int>> expected = {
      {Variant::base_gan, {7, 3}}, {Variant::mask_g, {8, 3}}, {Variant::mask_g_d, {8, 4}},
      {Variant::mask_if, {8, 4}},  {Variant::mask_if_diverse, {8, 4}}};
  for (const auto& [variant, channels] : expected) {
    const auto config = tiny_config(variant);
    CHECK(config.generator_spec().in_channels == channels.first);
    CHECK(config.discriminator_spec().in_channels == channels.second);
  }
  CHECK(traits(Variant::mask_if).image_fusion);
  CHECK(traits(Variant::mask_if).heatmap_content);
  CHECK_FALSE(traits(Variant::mask_g_d).image_fusion);
  CHECK(traits(Variant::mask_if_diverse).diversity);
  CHECK_FALSE(traits(Variant::mask_if).diversity);
}

TEST_CASE("config text parsing") {
  const auto c = parse_train_config(
      "# toy run\n"
      "variant = mask_g_d\n"
      "batch_size = 8   # per step\n"
      "iterations=123\n"
      "lr_g = 1e-4\n"
      "w_div = 0.5\n"
      "disc_widths = 8, 16,32\n"
      "image_size = 32\n"
      "\n");
  CHECK(c.variant == Variant::mask_g_d);
  CHECK(c.batch_size == 8);
  CHECK(c.iterations == 123);
  CHECK(c.lr_g == 1e-4);
  CHECK(c.lr_d == 2e-4);
  CHECK(c.weights.diversity == 0.5);
  CHECK(c.disc_widths == std::vector<int>{8, 16, 32});
  CHECK(c.adam_beta1 == 0.5);
  CHECK(c.adam_beta2 == 0.999);

  const auto again = parse_train_config(format_train_config(c));
  CHECK(to_json(again) == to_json(c));

  CHECK_THROWS_AS(parse_train_config("colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("batch_size = four\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("batch_size 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("batch_size = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("lr_d = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("w_con = -0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("image_size = 48\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("image_size = 16\ndisc_widths = 1,1,1,1,1\n"), ConfigError);
  CHECK_THROWS_AS(read_train_config("/nonexistent/train.cfg"), IoError);
}

TEST_CASE("batch conditioning comes from the caricature landmarks") {
  const auto batch_pairs = fixed_batch();
  const auto config = tiny_config(Variant::mask_if);
  const Batch batch = assemble_batch(batch_pairs, config);
  CHECK((batch.face.sizes() == torch::IntArrayRef{4, 3, 32, 32}));
  CHECK((batch.mask.sizes() == torch::IntArrayRef{4, 1, 32, 32}));
  REQUIRE(batch.mask_source.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(batch.mask_source[i] == SampleKind::caricature);
    const auto& pair = batch_pairs[i];
    const auto expected = rasterize_mask(pair.caricature.landmarks, 32, 32);
    CHECK(torch::equal(batch.mask[static_cast<std::int64_t>(i)], expected));
    CHECK_FALSE(torch::equal(expected, rasterize_mask(pair.face.landmarks, 32, 32)));
    CHECK(torch::equal(batch.heatmap[static_cast<std::int64_t>(i)],
                       rasterize_heatmap(pair.caricature.landmarks, 32, 32)));
  }

  auto mixed = batch_pairs;
  mixed[1].caricature = batch_pairs[0].caricature;
  mixed[1].face = batch_pairs[2].face;
  CHECK_THROWS_AS(assemble_batch(mixed, config), ContractViolation);
  CHECK_THROWS_AS(assemble_batch(std::span<const WeakPair>{}, config), ContractViolation);
  CHECK_THROWS_AS(assemble_batch(batch_pairs, tiny_config(Variant::mask_if, 64)),
                  ContractViolation);
}

TEST_CASE("a step updates only the network being trained") {
  for (Variant variant : kAll) {
    INFO(to_string(variant));
    auto state = make_train_state(tiny_config(variant));
    const Batch batch = assemble_batch(fixed_batch(), state.config);
    const Fakes fakes = generate_fakes(state, batch);

    const auto g0 = parameter_hash(*state.generator);
    const auto d0 = parameter_hash(*state.discriminator);
    discriminator_update(state, batch, fakes);
    const auto d1 = parameter_hash(*state.discriminator);
    CHECK(parameter_hash(*state.generator) == g0);
    CHECK(d1 != d0);

    const GeneratorTerms terms = generator_terms(state, batch, fakes);
    generator_update(state, terms);
    CHECK(parameter_hash(*state.discriminator) == d1);
    CHECK(parameter_hash(*state.generator) != g0);
    for (const auto& p : state.discriminator->parameters()) CHECK(p.requires_grad());
  }
}

TEST_CASE("variants without diversity never draw a second noise") {
  for (Variant variant : kAll) {
    INFO(to_string(variant));
    auto state = make_train_state(tiny_config(variant));
    const auto batch = fixed_batch();
    const bool diverse = traits(variant).diversity;
    for (int step = 0; step < 3; ++step) {
      const auto before = state.noise_draws;
      const LossReport r = train_step(state, batch);
      CHECK(state.noise_draws - before == (diverse ? 2u : 1u) * 4u * kNoiseDim);
      if (!diverse) CHECK(r.g_diversity == 0.0);
      CHECK(r.step == step + 1);
      const double expected_total = state.config.weights.adversarial * r.g_adv +
                                    state.config.weights.content * r.g_content +
                                    state.config.weights.diversity * r.g_diversity;
      CHECK(r.g_total == doctest::Approx(expected_total).epsilon(1e-6));
    }
  }
}

TEST_CASE("fused fake alone carries gradient into the generator") {
  for (Variant variant : {Variant::mask_if, Variant::mask_if_diverse}) {
    auto state = make_train_state(tiny_config(variant));
    const Batch batch = assemble_batch(fixed_batch(), state.config);
    const Fakes fakes = generate_fakes(state, batch);
    const GeneratorTerms terms = generator_terms(state, batch, fakes);
    state.generator->zero_grad();
    terms.adv_fused.backward();
    double total = 0;
    for (const auto& p : state.generator->parameters()) {
      if (p.grad().defined()) total += p.grad().abs().sum().item<double>();
    }
    CHECK(total > 0.0);
    for (const auto& p : state.discriminator->parameters()) CHECK_FALSE(p.grad().defined());
  }
  auto state = make_train_state(tiny_config(Variant::mask_g_d));
  const Batch batch = assemble_batch(fixed_batch(), state.config);
  const GeneratorTerms terms = generator_terms(state, batch, generate_fakes(state, batch));
  CHECK(terms.adv_fused.item<double>() == 0.0);
  CHECK_FALSE(terms.adv_fused.requires_grad());
}

TEST_CASE("identical seeds give identical loss streams") {
  for (Variant variant : {Variant::base_gan, Variant::mask_if_diverse}) {
    auto a = make_train_state(tiny_config(variant, 32, 5));
    auto b = make_train_state(tiny_config(variant, 32, 5));
    const auto& toy = ToyData::get();
    for (int step = 0; step < 3; ++step) {
      const auto batch_a = toy.data->sample_batch(a);
      const auto batch_b = toy.data->sample_batch(b);
      CHECK(train_step(a, batch_a) == train_step(b, batch_b));
    }
    CHECK(parameter_hash(*a.generator, true) == parameter_hash(*b.generator, true));
  }
}

TEST_CASE("a non-finite loss aborts the step before the optimizer moves") {
  auto state = make_train_state(tiny_config(Variant::mask_if));
  auto batch = fixed_batch();
  batch[0].caricature.image = batch[0].caricature.image.clone();
  batch[0].caricature.image[0][3][3] = std::numeric_limits<float>::quiet_NaN();
  const auto g0 = parameter_hash(*state.generator);
  const auto d0 = parameter_hash(*state.discriminator);
  try {
    train_step(state, batch);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("d_loss") != std::string::npos);
  }
  CHECK(parameter_hash(*state.generator) == g0);
  CHECK(parameter_hash(*state.discriminator) == d0);
  CHECK(state.step == 0);
}

TEST_CASE("flip sampling mirrors whole pairs") {
  const auto& toy = ToyData::get();
  auto never = tiny_config(Variant::mask_g);
  never.flip_probability = 0.0;
  auto always = never;
  always.flip_probability = 1.0;
  auto a = make_train_state(never);
  auto b = make_train_state(always);
  const auto plain = toy.data->sample_batch(a);
  const auto flipped = toy.data->sample_batch(b);
  REQUIRE(plain.size() == flipped.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(torch::equal(flipped[i].face.image, torch::flip(plain[i].face.image, {2})));
    CHECK(torch::equal(flipped[i].caricature.image, torch::flip(plain[i].caricature.image, {2})));
    CHECK(flipped[i].face.identity == plain[i].face.identity);
  }
  CHECK(toy.data->pair_count() == 4 * 2 * 2);
}

TEST_CASE("zero iterations writes only the initial checkpoint") {
  const auto& toy = ToyData::get();
  carigan::testing::TempDir out;
  auto config = tiny_config(Variant::mask_if);
  config.iterations = 0;
  const auto path = train(config, *toy.data, {out.path()});
  CHECK(path.filename() == "ckpt_000000.pt");
  CHECK(csv_lines(out / "losses.csv") == std::vector<std::string>{LossReport::csv_header()});
  std::size_t checkpoints = 0;
  for (const auto& e : std::filesystem::directory_iterator(out.path())) {
    if (e.path().extension() == ".pt") ++checkpoints;
  }
  CHECK(checkpoints == 1);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.step == 0);
  CHECK(parameter_hash(*loaded.generator) ==
        parameter_hash(*make_train_state(config).generator));
}

TEST_CASE("a dataset without weak pairs is rejected before training") {
  const auto& toy = ToyData::get();
  carigan::testing::TempDir out;
  DatasetManifest faces_only;
  for (const auto& r : toy.manifest.records) {
    if (r.kind == SampleKind::face) faces_only.records.push_back(r);
  }
  CHECK_THROWS_AS(train(tiny_config(Variant::mask_g), faces_only, {out.path()}), ConfigError);
  CHECK_FALSE(std::filesystem::exists(out / "losses.csv"));
}

TEST_CASE("checkpoints round-trip the full training state") {
  carigan::testing::TempDir out;
  auto state = make_train_state(tiny_config(Variant::mask_if_diverse, 32, 3));
  const auto batch = fixed_batch();
  for (int i = 0; i < 2; ++i) train_step(state, batch);
  save_checkpoint(out / "a.pt", state);
  auto loaded = load_checkpoint(out / "a.pt");
  CHECK(loaded.step == 2);
  CHECK(loaded.noise_draws == state.noise_draws);
  CHECK(parameter_hash(*loaded.generator, true) == parameter_hash(*state.generator, true));
  CHECK(parameter_hash(*loaded.discriminator, true) ==
        parameter_hash(*state.discriminator, true));
  CHECK(loaded.rng() == state.rng());

  state.generator->set_mode(Mode::inference);
  loaded.generator->set_mode(Mode::inference);
  const auto x = torch::randn({2, 8, 32, 32});
  torch::NoGradGuard no_grad;
  CHECK(torch::equal(state.generator->forward(x), loaded.generator->forward(x)));
}

TEST_CASE("checkpoint loading reports bad files") {
  carigan::testing::TempDir out;
  CHECK_THROWS_AS(load_checkpoint(out / "missing.pt"), IoError);
  std::ofstream(out / "junk.pt") << "not an archive";
  CHECK_THROWS_AS(load_checkpoint(out / "junk.pt"), IoError);
  torch::serialize::OutputArchive other;
  other.write("meta", c10::IValue(std::string("{\"format\": \"something-else\"}")));
  other.save_to((out / "other.pt").string());
  CHECK_THROWS_AS(load_checkpoint(out / "other.pt"), ConfigError);
  torch::serialize::OutputArchive future;
  future.write("meta",
               c10::IValue(std::string("{\"format\": \"carigan-checkpoint\", \"version\": 99}")));
  future.save_to((out / "future.pt").string());
  CHECK_THROWS_AS(load_checkpoint(out / "future.pt"), ConfigError);
}

TEST_CASE("resuming reproduces the uninterrupted loss stream") {
  const auto& toy = ToyData::get();
  carigan::testing::TempDir full, resumed;
  auto config = tiny_config(Variant::mask_if_diverse, 32, 9);
  config.iterations = 20;
  config.checkpoint_every = 10;
  train(config, *toy.data, {full.path()});
  CHECK(std::filesystem::exists(full / "ckpt_000010.pt"));
  CHECK(std::filesystem::exists(full / "ckpt_000020.pt"));

  std::filesystem::copy_file(full / "losses.csv", resumed / "losses.csv");
  TrainOptions options{resumed.path()};
  options.resume_from = full / "ckpt_000010.pt";
  train(config, *toy.data, options);

  const auto a = csv_lines(full / "losses.csv");
  const auto b = csv_lines(resumed / "losses.csv");
  REQUIRE(a.size() == 21);
  CHECK(a == b);
  const auto end_a = load_checkpoint(full / "ckpt_000020.pt");
  const auto end_b = load_checkpoint(resumed / "ckpt_000020.pt");
  CHECK(parameter_hash(*end_a.generator, true) == parameter_hash(*end_b.generator, true));

  auto other = config;
  other.variant = Variant::mask_g;
  TrainOptions mismatched{resumed.path()};
  mismatched.resume_from = full / "ckpt_000010.pt";
  CHECK_THROWS_AS(train(other, *toy.data, mismatched), ConfigError);
}

TEST_CASE("content loss falls over 200 toy steps") {
  const auto& toy = ToyData::get();
  std::vector<int> improved;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto config = tiny_config(Variant::mask_if, 32, seed);
    auto state = make_train_state(config);
    LossReport first, last;
    for (int step = 0; step < 200; ++step) {
      const auto report = train_step(state, toy.data->sample_batch(state));
      if (step == 0) first = report;
      last = report;
    }
    improved.push_back(last.g_content < first.g_content ? 1 : 0);
  }
  std::sort(improved.begin(), improved.end());
  CHECK(improved[1] == 1);
}

TEST_CASE("overfitting one pair") {
  const auto& toy = ToyData::get();
  const auto pair = toy.pair();
  auto config = tiny_config(Variant::mask_if_diverse);
  CHECK_THROWS_AS(overfit_single_pair(config, pair, 0), ContractViolation);
  std::vector<LossReport> history;
  const double final_loss = overfit_single_pair(config, pair, 30, &history);
  CHECK(history.size() == 30);
  for (const auto& r : history) {
    CHECK(std::isfinite(r.d_loss));
    CHECK(std::isfinite(r.g_total));
  }
  CHECK(std::isfinite(final_loss));
  CHECK(final_loss < history.front().g_content);
}
