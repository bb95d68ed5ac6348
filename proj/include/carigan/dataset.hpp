// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/types.h>

#include "carigan/landmarks.hpp"

namespace carigan {

enum class SampleKind { face, caricature };
enum class Split { train, test };

std::string_view to_string(SampleKind kind);
std::string_view to_string(Split split);
SampleKind parse_sample_kind(std::string_view text);
Split parse_split(std::string_view text);

/// Pixel constants are defined at 256 px and scale as round(c * size / 256).
int scaled_pixels(double pixels_at_256, int size);

/// Target inter-eye distance after alignment (75 px at 256).
int eye_distance(int size);

/// Rotation + uniform scale + translation: p -> (a*x - b*y + tx, b*x + a*y + ty).
struct SimilarityTransform {
  double a = 1.0;
  double b = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  Point apply(Point p) const;
  SimilarityTransform inverse() const;
  double scale() const;
  /// Rotation angle in radians.
  double angle() const;
};

/// A face or caricature normalized to the training frame.
struct AlignedSample {
  torch::Tensor image;  ///< float32, 3 x S x S, values in [-1, 1]
  LandmarkSet landmarks;
  std::string identity;
  SampleKind kind = SampleKind::face;
  /// Non-fatal issues found while aligning, e.g. edge-replicated padding.
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(image.size(2)); }
};

/// Shares an identity; pose and pixels are not in correspondence.
struct WeakPair {
  AlignedSample face;
  AlignedSample caricature;
};

/// Eyes-horizontal, eyes-75/256-of-size-apart, centred on the landmark
/// centroid, output out_size x out_size.
SimilarityTransform alignment_transform(const LandmarkSet& landmarks, int out_size,
                                        const LandmarkLayout& layout = {});

/// Rotates, scales and crops raw RGB bytes so the eyes lie on a horizontal
/// line at the canonical distance. Pixels outside the source are edge
/// replicated and reported in AlignedSample::warnings. Aligned landmark
/// coordinates are snapped to a 1/1024 px grid, which makes mirroring exact.
///
/// Throws AlignmentError when the eyes coincide or a landmark lies outside
/// the raw image.
AlignedSample align_sample(const cv::Mat& raw_rgb, const LandmarkSet& landmarks, int out_size,
                           const LandmarkLayout& layout = {});

/// Mirrors both images of the pair when coin is true: x -> W - 1 - x and
/// left/right landmark roles swapped. Involution, bit-exact on aligned data.
WeakPair augment_flip(const WeakPair& pair, bool coin, const LandmarkLayout& layout = {});
AlignedSample mirror_sample(const AlignedSample& sample, const LandmarkLayout& layout = {});

struct ManifestRecord {
  std::filesystem::path image_path;
  std::filesystem::path landmark_path;
  std::string identity;
  SampleKind kind = SampleKind::face;
  Split split = Split::train;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;

  /// Records of one split, in order.
  DatasetManifest filter(Split split) const;
  std::size_t count(SampleKind kind) const;
};

/// Manifest file: one record per line, tab-separated
/// image_path, landmark_path, identity, kind, split. Relative paths are
/// resolved against the manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Checks that every referenced file exists and parses and that no identity
/// appears in both splits. Throws ConfigError or IoError.
void validate_manifest(const DatasetManifest& manifest);

/// Reads, aligns and labels one manifest record.
AlignedSample load_sample(const ManifestRecord& record, int out_size,
                          const LandmarkLayout& layout = {});

/// Indices into DatasetManifest::records.
struct PairIndex {
  std::size_t face = 0;
  std::size_t caricature = 0;

  friend bool operator==(const PairIndex&, const PairIndex&) = default;
};

/// The implicit product set of weak pairs of a manifest's train split. Pairs
/// are numbered identity by identity (first appearance order), face-major.
class WeakPairIndex {
 public:
  explicit WeakPairIndex(const DatasetManifest& manifest);

  std::size_t size() const { return total_; }
  bool empty() const { return total_ == 0; }
  PairIndex at(std::size_t k) const;
  /// Uniform draw from the product set.
  PairIndex sample(std::mt19937_64& rng) const;

 private:
  struct Group {
    std::vector<std::size_t> faces;
    std::vector<std::size_t> caricatures;
    std::size_t offset = 0;
  };
  std::vector<Group> groups_;
  std::size_t total_ = 0;
};

/// All (face, caricature) index pairs sharing an identity among the train
/// records; test records are ignored.
std::vector<PairIndex> enumerate_weak_pairs(const DatasetManifest& manifest);

struct ToyDatasetOptions {
  int n_identities = 4;
  int faces_per_id = 2;
  int carics_per_id = 3;
  /// Additional identities written to the test split.
  int test_identities = 0;
  std::uint64_t seed = 0;
  int out_size = 64;
};

/// Writes a procedural face/caricature dataset under out_dir (images/,
/// landmarks/, manifest.tsv) and returns its manifest. Faces are soft skin
/// blobs with dark eye/nose/mouth primitives at the landmarks; caricatures
/// reuse the identity's geometry with exaggerated offsets, a saturated
/// palette and bright primitives. Output is a pure function of the options.
DatasetManifest make_toy_dataset(const ToyDatasetOptions& options,
                                 const std::filesystem::path& out_dir);

struct PrepareOptions {
  std::filesystem::path images_dir;
  std::filesystem::path landmarks_dir;
  std::filesystem::path out_dir;
  int out_size = 256;
  /// Identities (sorted by name, taken from the end) held out for testing.
  int test_identities = 0;
  LandmarkLayout layout;
};

/// Aligns a WebCaricature-style tree (<images>/<identity>/<C|P>*.jpg with
/// matching <landmarks>/<identity>/<stem>.txt) into out_dir and writes
/// out_dir/manifest.tsv. Files whose stem starts with 'C' are caricatures,
/// everything else is a face photo.
DatasetManifest prepare_dataset(const PrepareOptions& options);

}  // namespace carigan
