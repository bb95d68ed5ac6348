// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "carigan/landmarks.hpp"

namespace carigan::testing {

/// Unique directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "carigan-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed");
    }
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// 17 uniformly random points in [lo, hi)^2.
inline LandmarkSet random_landmarks(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::array<Point, kNumLandmarks> pts{};
  for (auto& p : pts) p = {u(rng), u(rng)};
  return LandmarkSet(pts);
}

/// Landmarks with eyes at the given points and the rest spread around them.
inline LandmarkSet landmarks_with_eyes(Point left, Point right) {
  std::array<Point, kNumLandmarks> pts{};
  const Point mid{(left.x + right.x) / 2, (left.y + right.y) / 2};
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    pts[i] = {mid.x + static_cast<double>(i % 5) - 2.0, mid.y + static_cast<double>(i % 3)};
  }
  pts[8] = left;
  pts[9] = right;
  return LandmarkSet(pts);
}

}  // namespace carigan::testing
