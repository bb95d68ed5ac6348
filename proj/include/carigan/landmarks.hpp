// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace carigan {

inline constexpr std::size_t kNumLandmarks = 17;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// The 17 annotated facial points of one image, in pixel coordinates with
/// pixel centres at integer positions.
class LandmarkSet {
 public:
  LandmarkSet() = default;

  /// Throws ContractViolation unless exactly 17 finite points are given.
  explicit LandmarkSet(std::span<const Point> points);

  const Point& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Point> points() const { return points_; }
  static constexpr std::size_t size() { return kNumLandmarks; }

  Point centroid() const;

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

 private:
  std::array<Point, kNumLandmarks> points_{};
};

/// Semantic roles of annotation indices. The annotation format carries no
/// labels, so eye indices and the mirror permutation are configurable.
///
/// The default layout (0-based) is:
///   0/1 temples, 2/3 jaw, 4 chin, 5/6 brows, 7 forehead, 8/9 eyes,
///   10 nose tip, 11/12 nostrils, 13/14 mouth corners, 15/16 lips.
/// The first index of each pair is the image-left point.
struct LandmarkLayout {
  std::size_t left_eye = 8;
  std::size_t right_eye = 9;
  std::vector<std::pair<std::size_t, std::size_t>> mirror_pairs = {
      {0, 1}, {2, 3}, {5, 6}, {8, 9}, {11, 12}, {13, 14}};

  /// Index each landmark maps to under a horizontal mirror.
  std::array<std::size_t, kNumLandmarks> mirror_permutation() const;
};

/// Reads a 17-line "x y" annotation file.
LandmarkSet read_landmarks(const std::filesystem::path& path);

/// Writes 17 lines of "x y" using shortest round-trip decimal formatting.
void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks);

}  // namespace carigan
