// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <fmt/format.h>
#include <torch/serialize.h>

#include "carigan/error.hpp"
#include "carigan/training.hpp"

namespace carigan {
namespace {

constexpr const char* kFormatName = "carigan-checkpoint";

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  std::ostringstream rng;
  rng << state.rng;
  const nlohmann::json meta = {
      {"format", kFormatName},
      {"version", kCheckpointVersion},
      {"config", to_json(state.config)},
      {"generator", to_json(state.generator->spec())},
      {"discriminator", to_json(state.discriminator->spec())},
      {"step", state.step},
      {"noise_draws", state.noise_draws},
      {"rng", rng.str()},
  };

  torch::serialize::OutputArchive archive;
  archive.write("meta", c10::IValue(meta.dump()));
  torch::serialize::OutputArchive generator, discriminator, opt_g, opt_d;
  state.generator->save(generator);
  state.discriminator->save(discriminator);
  state.generator_optimizer->save(opt_g);
  state.discriminator_optimizer->save(opt_d);
  archive.write("generator", generator);
  archive.write("discriminator", discriminator);
  archive.write("optimizer_generator", opt_g);
  archive.write("optimizer_discriminator", opt_d);

  auto tmp = path;
  tmp += ".tmp";
  try {
    archive.save_to(tmp.string());
  } catch (const c10::Error& e) {
    throw IoError(fmt::format("cannot write checkpoint {}: {}", path.string(), e.what()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError(fmt::format("cannot move checkpoint into {}: {}", path.string(), ec.message()));
  }
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError(fmt::format("checkpoint {} does not exist", path.string()));
  }
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw IoError(fmt::format("cannot read checkpoint {}: {}", path.string(), e.what()));
  }
  c10::IValue meta_value;
  if (!archive.try_read("meta", meta_value) || !meta_value.isString()) {
    throw ConfigError(fmt::format("{} has no checkpoint metadata", path.string()));
  }
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_value.toStringRef());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: malformed metadata: {}", path.string(), e.what()));
  }
  if (meta.value("format", "") != kFormatName) {
    throw ConfigError(fmt::format("{} is not a carigan checkpoint", path.string()));
  }
  const int version = meta.value("version", -1);
  if (version != kCheckpointVersion) {
    throw ConfigError(fmt::format("{}: unsupported checkpoint version {} (expected {})",
                                  path.string(), version, kCheckpointVersion));
  }

  TrainState state = make_train_state(train_config_from_json(meta.at("config")));
  if (to_json(state.generator->spec()) != meta.at("generator") ||
      to_json(state.discriminator->spec()) != meta.at("discriminator")) {
    throw ConfigError(fmt::format("{}: model specs disagree with the stored config",
                                  path.string()));
  }
  torch::serialize::InputArchive generator, discriminator, opt_g, opt_d;
  archive.read("generator", generator);
  archive.read("discriminator", discriminator);
  archive.read("optimizer_generator", opt_g);
  archive.read("optimizer_discriminator", opt_d);
  state.generator->load(generator);
  state.discriminator->load(discriminator);
  state.generator_optimizer->load(opt_g);
  state.discriminator_optimizer->load(opt_d);

  state.step = meta.at("step").get<std::int64_t>();
  state.noise_draws = meta.at("noise_draws").get<std::uint64_t>();
  std::istringstream rng(meta.at("rng").get<std::string>());
  rng >> state.rng;
  if (!rng) {
    throw ConfigError(fmt::format("{}: malformed RNG state", path.string()));
  }
  return state;
}

}  // namespace carigan
