// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include "carigan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "carigan/error.hpp"
#include "carigan/image_io.hpp"

namespace carigan {
namespace {

// Aligned landmark grid; any x on it satisfies (W - 1) - ((W - 1) - x) == x.
constexpr double kLandmarkGrid = 1024.0;

double snap(double v) { return std::round(v * kLandmarkGrid) / kLandmarkGrid; }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) {
      break;
    }
    start = pos + 1;
  }
  return fields;
}

}  // namespace

std::string_view to_string(SampleKind kind) {
  return kind == SampleKind::face ? "face" : "caricature";
}

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

SampleKind parse_sample_kind(std::string_view text) {
  if (text == "face") return SampleKind::face;
  if (text == "caricature") return SampleKind::caricature;
  throw ConfigError(fmt::format("unknown sample kind '{}'", text));
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw ConfigError(fmt::format("unknown split '{}'", text));
}

int scaled_pixels(double pixels_at_256, int size) {
  return static_cast<int>(std::lround(pixels_at_256 * size / 256.0));
}

int eye_distance(int size) { return scaled_pixels(75.0, size); }

Point SimilarityTransform::apply(Point p) const {
  return {a * p.x - b * p.y + tx, b * p.x + a * p.y + ty};
}

SimilarityTransform SimilarityTransform::inverse() const {
  const double det = a * a + b * b;
  SimilarityTransform inv;
  inv.a = a / det;
  inv.b = -b / det;
  inv.tx = -(inv.a * tx - inv.b * ty);
  inv.ty = -(inv.b * tx + inv.a * ty);
  return inv;
}

double SimilarityTransform::scale() const { return std::hypot(a, b); }

double SimilarityTransform::angle() const { return std::atan2(b, a); }

SimilarityTransform alignment_transform(const LandmarkSet& landmarks, int out_size,
                                        const LandmarkLayout& layout) {
  if (out_size <= 0) {
    throw ContractViolation(fmt::format("out_size must be positive, got {}", out_size));
  }
  if (layout.left_eye >= kNumLandmarks || layout.right_eye >= kNumLandmarks ||
      layout.left_eye == layout.right_eye) {
    throw ContractViolation("invalid eye indices in landmark layout");
  }
  const Point le = landmarks[layout.left_eye];
  const Point re = landmarks[layout.right_eye];
  const double vx = re.x - le.x;
  const double vy = re.y - le.y;
  const double len = std::hypot(vx, vy);
  if (!(len > 1e-9)) {
    throw AlignmentError("eye landmarks coincide; cannot align");
  }
  const double s = eye_distance(out_size) / len;
  SimilarityTransform t;
  // Rotate by minus the eye-line angle so the left->right eye vector points
  // along +x.
  t.a = s * vx / len;
  t.b = -s * vy / len;
  const Point c = landmarks.centroid();
  const double half = out_size / 2.0;
  t.tx = half - (t.a * c.x - t.b * c.y);
  t.ty = half - (t.b * c.x + t.a * c.y);
  return t;
}

AlignedSample align_sample(const cv::Mat& raw_rgb, const LandmarkSet& landmarks, int out_size,
                           const LandmarkLayout& layout) {
  if (raw_rgb.empty() || raw_rgb.type() != CV_8UC3) {
    throw ContractViolation("align_sample expects a non-empty 8-bit RGB image");
  }
  const double max_x = raw_rgb.cols - 0.5;
  const double max_y = raw_rgb.rows - 0.5;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const Point p = landmarks[i];
    if (p.x < -0.5 || p.y < -0.5 || p.x > max_x || p.y > max_y) {
      throw AlignmentError(fmt::format("landmark {} ({}, {}) lies outside the {}x{} image", i,
                                       p.x, p.y, raw_rgb.cols, raw_rgb.rows));
    }
  }
  const SimilarityTransform t = alignment_transform(landmarks, out_size, layout);

  cv::Mat m = (cv::Mat_<double>(2, 3) << t.a, -t.b, t.tx, t.b, t.a, t.ty);
  cv::Mat warped;
  cv::warpAffine(raw_rgb, warped, m, cv::Size(out_size, out_size), cv::INTER_LINEAR,
                 cv::BORDER_REPLICATE);

  AlignedSample sample;
  sample.image = bytes_to_tensor(warped);

  std::array<Point, kNumLandmarks> moved{};
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const Point p = t.apply(landmarks[i]);
    moved[i] = {snap(p.x), snap(p.y)};
  }
  sample.landmarks = LandmarkSet(moved);

  const SimilarityTransform inv = t.inverse();
  const double last = out_size - 1.0;
  for (Point corner : {Point{0, 0}, Point{last, 0}, Point{0, last}, Point{last, last}}) {
    const Point src = inv.apply(corner);
    if (src.x < 0.0 || src.y < 0.0 || src.x > raw_rgb.cols - 1.0 || src.y > raw_rgb.rows - 1.0) {
      sample.warnings.emplace_back("crop window exceeds source image; padded by edge replication");
      break;
    }
  }
  return sample;
}

AlignedSample mirror_sample(const AlignedSample& sample, const LandmarkLayout& layout) {
  AlignedSample out = sample;
  out.image = sample.image.flip({2});
  const double last = sample.image.size(2) - 1.0;
  const auto perm = layout.mirror_permutation();
  std::array<Point, kNumLandmarks> moved{};
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const Point p = sample.landmarks[i];
    moved[perm[i]] = {last - p.x, p.y};
  }
  out.landmarks = LandmarkSet(moved);
  return out;
}

WeakPair augment_flip(const WeakPair& pair, bool coin, const LandmarkLayout& layout) {
  if (!coin) {
    return pair;
  }
  return {mirror_sample(pair.face, layout), mirror_sample(pair.caricature, layout)};
}

DatasetManifest DatasetManifest::filter(Split split) const {
  DatasetManifest out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out.records),
               [split](const ManifestRecord& r) { return r.split == split; });
  return out;
}

std::size_t DatasetManifest::count(SampleKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [kind](const ManifestRecord& r) { return r.kind == kind; }));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot open manifest {}", path.string()));
  }
  const auto base = path.parent_path();
  DatasetManifest manifest;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 5) {
      throw ConfigError(fmt::format("{}:{}: expected 5 tab-separated fields, got {}",
                                    path.string(), line_no, fields.size()));
    }
    ManifestRecord r;
    r.image_path = fields[0];
    r.landmark_path = fields[1];
    if (r.image_path.is_relative()) r.image_path = base / r.image_path;
    if (r.landmark_path.is_relative()) r.landmark_path = base / r.landmark_path;
    r.identity = fields[2];
    try {
      r.kind = parse_sample_kind(fields[3]);
      r.split = parse_split(fields[4]);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) {
    throw IoError(fmt::format("cannot write manifest {}", path.string()));
  }
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    if (base.empty()) return p.generic_string();
    auto r = p.lexically_relative(base);
    return (r.empty() || *r.begin() == "..") ? p.generic_string() : r.generic_string();
  };
  for (const auto& r : manifest.records) {
    out << rel(r.image_path) << '\t' << rel(r.landmark_path) << '\t' << r.identity << '\t'
        << to_string(r.kind) << '\t' << to_string(r.split) << '\n';
  }
  if (!out) {
    throw IoError(fmt::format("failed writing manifest {}", path.string()));
  }
}

void validate_manifest(const DatasetManifest& manifest) {
  std::set<std::string> train_ids;
  std::set<std::string> test_ids;
  for (const auto& r : manifest.records) {
    if (!std::filesystem::exists(r.image_path)) {
      throw IoError(fmt::format("missing image {}", r.image_path.string()));
    }
    read_landmarks(r.landmark_path);
    (r.split == Split::train ? train_ids : test_ids).insert(r.identity);
  }
  for (const auto& id : train_ids) {
    if (test_ids.count(id) != 0) {
      throw ConfigError(fmt::format("identity '{}' appears in both train and test splits", id));
    }
  }
}

AlignedSample load_sample(const ManifestRecord& record, int out_size, const LandmarkLayout& layout) {
  AlignedSample sample =
      align_sample(read_rgb(record.image_path), read_landmarks(record.landmark_path), out_size,
                   layout);
  sample.identity = record.identity;
  sample.kind = record.kind;
  return sample;
}

WeakPairIndex::WeakPairIndex(const DatasetManifest& manifest) {
  std::unordered_map<std::string, std::size_t> group_of;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.split != Split::train) {
      continue;
    }
    auto [it, inserted] = group_of.try_emplace(r.identity, groups_.size());
    if (inserted) {
      groups_.emplace_back();
    }
    auto& g = groups_[it->second];
    (r.kind == SampleKind::face ? g.faces : g.caricatures).push_back(i);
  }
  for (auto& g : groups_) {
    g.offset = total_;
    total_ += g.faces.size() * g.caricatures.size();
  }
}

PairIndex WeakPairIndex::at(std::size_t k) const {
  if (k >= total_) {
    throw ContractViolation(fmt::format("weak pair {} out of range ({})", k, total_));
  }
  auto it = std::upper_bound(groups_.begin(), groups_.end(), k,
                             [](std::size_t v, const Group& g) { return v < g.offset; });
  // Groups with zero pairs share an offset with their successor; upper_bound
  // lands past all of them, so step back to the last group starting <= k.
  const Group& g = *std::prev(it);
  const std::size_t local = k - g.offset;
  const std::size_t n_car = g.caricatures.size();
  return {g.faces[local / n_car], g.caricatures[local % n_car]};
}

PairIndex WeakPairIndex::sample(std::mt19937_64& rng) const {
  if (total_ == 0) {
    throw ContractViolation("cannot sample from an empty weak-pair set");
  }
  std::uniform_int_distribution<std::size_t> pick(0, total_ - 1);
  return at(pick(rng));
}

std::vector<PairIndex> enumerate_weak_pairs(const DatasetManifest& manifest) {
  WeakPairIndex index(manifest);
  std::vector<PairIndex> pairs;
  pairs.reserve(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) {
    pairs.push_back(index.at(k));
  }
  return pairs;
}

DatasetManifest prepare_dataset(const PrepareOptions& options) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(options.images_dir)) {
    throw IoError(fmt::format("image directory {} not found", options.images_dir.string()));
  }
  std::vector<fs::path> identity_dirs;
  for (const auto& entry : fs::directory_iterator(options.images_dir)) {
    if (entry.is_directory()) identity_dirs.push_back(entry.path());
  }
  std::sort(identity_dirs.begin(), identity_dirs.end());
  if (options.test_identities < 0 ||
      options.test_identities > static_cast<int>(identity_dirs.size())) {
    throw ConfigError(fmt::format("cannot hold out {} of {} identities", options.test_identities,
                                  identity_dirs.size()));
  }
  const std::size_t first_test = identity_dirs.size() - options.test_identities;

  std::error_code ec;
  fs::create_directories(options.out_dir, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create {}: {}", options.out_dir.string(), ec.message()));
  }

  DatasetManifest manifest;
  for (std::size_t d = 0; d < identity_dirs.size(); ++d) {
    const std::string identity = identity_dirs[d].filename().string();
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(identity_dirs[d])) {
      if (entry.is_regular_file()) images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());
    const fs::path image_out = options.out_dir / "images" / identity;
    const fs::path landmark_out = options.out_dir / "landmarks" / identity;
    fs::create_directories(image_out);
    fs::create_directories(landmark_out);
    for (const auto& image : images) {
      const std::string stem = image.stem().string();
      const fs::path annotation = options.landmarks_dir / identity / (stem + ".txt");
      ManifestRecord src{image, annotation, identity,
                         (!stem.empty() && stem.front() == 'C') ? SampleKind::caricature
                                                                : SampleKind::face,
                         d >= first_test ? Split::test : Split::train};
      const AlignedSample sample = load_sample(src, options.out_size, options.layout);
      ManifestRecord out = src;
      out.image_path = image_out / (stem + ".png");
      out.landmark_path = landmark_out / (stem + ".txt");
      write_rgb(out.image_path, tensor_to_bytes(sample.image));
      write_landmarks(out.landmark_path, sample.landmarks);
      manifest.records.push_back(std::move(out));
    }
  }
  write_manifest(options.out_dir / "manifest.tsv", manifest);
  return manifest;
}

}  // namespace carigan
