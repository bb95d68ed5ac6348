// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: dataset preparation, training and generation.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <opencv2/core.hpp>

#include "carigan/conditioning.hpp"
#include "carigan/dataset.hpp"
#include "carigan/error.hpp"
#include "carigan/image_io.hpp"
#include "carigan/inference.hpp"
#include "carigan/training.hpp"

namespace fs = std::filesystem;
using namespace carigan;

namespace {

NoiseVector parse_noise(const std::string& text) {
  std::vector<float> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto token = text.substr(start, comma - start);
    try {
      std::size_t used = 0;
      values.push_back(std::stof(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ContractViolation(fmt::format("bad noise component '{}'", token));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.size() != kNoiseDim) {
    throw ContractViolation(
        fmt::format("--noise needs {} comma-separated values, got {}", kNoiseDim, values.size()));
  }
  return {values[0], values[1], values[2], values[3]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly paired face-to-caricature translation"};
  app.require_subcommand(1);

  // data prepare / align / toy
  auto* data = app.add_subcommand("data", "Dataset preparation");
  data->require_subcommand(1);

  PrepareOptions prepare;
  auto* prep = data->add_subcommand("prepare", "Align an annotated face/caricature tree");
  prep->add_option("--images", prepare.images_dir, "Image root (<identity>/<stem>.<ext>)")
      ->required();
  prep->add_option("--landmarks", prepare.landmarks_dir, "Landmark root (<identity>/<stem>.txt)")
      ->required();
  prep->add_option("--out", prepare.out_dir, "Output directory")->required();
  prep->add_option("--size", prepare.out_size, "Output side in pixels")->capture_default_str();
  prep->add_option("--test-ids", prepare.test_identities, "Identities held out for testing")
      ->capture_default_str();

  ToyDatasetOptions toy;
  fs::path toy_out;
  fs::path align_image, align_landmarks, align_out_image, align_out_landmarks;
  int align_size = 64;
  auto* align_cmd = data->add_subcommand("align", "Align one annotated image");
  align_cmd->add_option("--image", align_image, "Raw image")->required();
  align_cmd->add_option("--landmarks", align_landmarks, "Its landmark file")->required();
  align_cmd->add_option("--size", align_size, "Output side in pixels")->capture_default_str();
  align_cmd->add_option("--out-image", align_out_image, "Aligned PNG")->required();
  align_cmd->add_option("--out-landmarks", align_out_landmarks, "Aligned landmark file")
      ->required();

  auto* toy_cmd = data->add_subcommand("toy", "Write a procedural toy dataset");
  toy_cmd->add_option("--ids", toy.n_identities, "Training identities")->required();
  toy_cmd->add_option("--faces", toy.faces_per_id, "Faces per identity")->required();
  toy_cmd->add_option("--carics", toy.carics_per_id, "Caricatures per identity")->required();
  toy_cmd->add_option("--seed", toy.seed, "Generator seed")->required();
  toy_cmd->add_option("--out", toy_out, "Output directory")->required();
  toy_cmd->add_option("--size", toy.out_size, "Aligned side in pixels")->capture_default_str();
  toy_cmd->add_option("--test-ids", toy.test_identities, "Extra held-out identities")
      ->capture_default_str();

  // viz-mask
  fs::path viz_landmarks, viz_out;
  int viz_size = 256;
  double viz_sigma = 0.0;
  auto* viz = app.add_subcommand("viz-mask", "Render the facial mask and heatmap of landmarks");
  viz->add_option("--landmarks", viz_landmarks, "Landmark file")->required();
  viz->add_option("--size", viz_size, "Image side")->capture_default_str();
  viz->add_option("--sigma", viz_sigma, "Heatmap sigma (default 5*size/256)");
  viz->add_option("--out", viz_out, "Output PNG")->required();

  // train
  fs::path train_config, train_data, train_out, train_resume;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", train_config, "key = value config file")->required();
  train_cmd->add_option("--data", train_data, "Dataset directory (containing manifest.tsv) or a manifest file")->required();
  train_cmd->add_option("--out", train_out, "Output directory")->required();
  train_cmd->add_option("--resume", train_resume, "Checkpoint to continue from");

  // generate / interp / diversity share inputs
  fs::path ckpt, face_path, landmark_path, out_path;
  std::string noise_text;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
    cmd->add_option("--face", face_path, "Aligned face PNG")->required();
    cmd->add_option("--landmarks", landmark_path, "Target landmarks (aligned frame)")->required();
  };
  auto* gen = app.add_subcommand("generate", "Generate one caricature");
  add_common(gen);
  auto* noise_opt = gen->add_option("--noise", noise_text, "Noise vector a,b,c,d");
  gen->add_option("--seed", seed, "Noise seed")->excludes(noise_opt);
  gen->add_option("--out", out_path, "Output PNG")->required();

  int steps = 7;
  auto* interp = app.add_subcommand("interp", "Noise interpolation strip");
  add_common(interp);
  interp->add_option("--steps", steps, "Panels")->capture_default_str();
  interp->add_option("--seed", seed, "Endpoints use seeds N and N+1")->capture_default_str();
  interp->add_option("--out", out_path, "Output PNG")->required();

  int n_samples = 8;
  auto* div = app.add_subcommand("diversity", "Mean pairwise L1 distance across noises");
  add_common(div);
  div->add_option("-n", n_samples, "Samples")->capture_default_str();
  div->add_option("--seed", seed, "Noise seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prep->parsed()) {
      const auto manifest = prepare_dataset(prepare);
      std::cout << fmt::format("aligned {} faces and {} caricatures into {}\n",
                               manifest.count(SampleKind::face),
                               manifest.count(SampleKind::caricature), prepare.out_dir.string());
    } else if (align_cmd->parsed()) {
      const AlignedSample sample = align_sample(read_rgb(align_image),
                                                read_landmarks(align_landmarks), align_size);
      write_rgb(align_out_image, tensor_to_bytes(sample.image));
      write_landmarks(align_out_landmarks, sample.landmarks);
      for (const auto& warning : sample.warnings) std::cerr << "warning: " << warning << '\n';
    } else if (toy_cmd->parsed()) {
      const auto manifest = make_toy_dataset(toy, toy_out);
      std::cout << fmt::format("wrote {} faces, {} caricatures, {} weak pairs to {}\n",
                               manifest.count(SampleKind::face),
                               manifest.count(SampleKind::caricature),
                               enumerate_weak_pairs(manifest).size(), toy_out.string());
    } else if (viz->parsed()) {
      const auto landmarks = read_landmarks(viz_landmarks);
      const double sigma = viz_sigma > 0.0 ? viz_sigma : default_heatmap_sigma(viz_size);
      const auto mask = rasterize_mask(landmarks, viz_size, viz_size);
      const auto heat = rasterize_heatmap(landmarks, viz_size, viz_size, sigma);
      write_rgb(viz_out, gray_tensor_to_bytes(torch::cat({mask, heat}, 2)));
    } else if (train_cmd->parsed()) {
      const TrainConfig config = read_train_config(train_config);
      const auto manifest = read_manifest(
          std::filesystem::is_directory(train_data) ? train_data / "manifest.tsv" : train_data);
      validate_manifest(manifest);
      TrainOptions options;
      options.out_dir = train_out;
      options.log = &std::cout;
      if (!train_resume.empty()) options.resume_from = train_resume;
      const auto final_ckpt = train(config, manifest, options);
      std::cout << "final checkpoint: " << final_ckpt.string() << '\n';
    } else if (gen->parsed()) {
      GenerationRequest request;
      request.checkpoint_path = ckpt;
      request.face_path = face_path;
      request.landmark_path = landmark_path;
      if (!noise_text.empty()) {
        request.noise = parse_noise(noise_text);
      } else {
        request.noise = seed;
      }
      write_rgb(out_path, generate(request));
    } else if (interp->parsed() || div->parsed()) {
      const CaricatureModel model(ckpt);
      const auto face = bytes_to_tensor(read_rgb(face_path));
      const auto target = read_landmarks(landmark_path);
      if (interp->parsed()) {
        const auto images = interpolate_noise(model, face, target, noise_from_seed(seed),
                                              noise_from_seed(seed + 1), steps);
        write_rgb(out_path, make_strip(images));
      } else {
        const auto score = diversity_score(model, face, target, n_samples, seed);
        std::cout << fmt::format("{:.6f}\n", score.mean_pairwise_distance);
      }
    }
  } catch (const carigan::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
