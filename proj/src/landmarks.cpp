// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include "carigan/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "carigan/error.hpp"

namespace carigan {

LandmarkSet::LandmarkSet(std::span<const Point> points) {
  if (points.size() != kNumLandmarks) {
    throw ContractViolation(
        fmt::format("expected {} landmarks, got {}", kNumLandmarks, points.size()));
  }
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
      throw ContractViolation(fmt::format("landmark {} is not finite", i));
    }
    points_[i] = points[i];
  }
}

Point LandmarkSet::centroid() const {
  Point c;
  for (const Point& p : points_) {
    c.x += p.x;
    c.y += p.y;
  }
  c.x /= static_cast<double>(kNumLandmarks);
  c.y /= static_cast<double>(kNumLandmarks);
  return c;
}

std::array<std::size_t, kNumLandmarks> LandmarkLayout::mirror_permutation() const {
  std::array<std::size_t, kNumLandmarks> perm{};
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (auto [l, r] : mirror_pairs) {
    if (l >= kNumLandmarks || r >= kNumLandmarks) {
      throw ContractViolation(fmt::format("mirror pair ({}, {}) out of range", l, r));
    }
    perm[l] = r;
    perm[r] = l;
  }
  return perm;
}

LandmarkSet read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot open landmark file {}", path.string()));
  }
  std::vector<Point> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::istringstream fields(line);
    Point p;
    if (!(fields >> p.x >> p.y)) {
      throw IoError(fmt::format("{}: malformed landmark line '{}'", path.string(), line));
    }
    points.push_back(p);
  }
  if (points.size() != kNumLandmarks) {
    throw IoError(fmt::format("{}: expected {} landmarks, found {}", path.string(),
                              kNumLandmarks, points.size()));
  }
  try {
    return LandmarkSet(points);
  } catch (const ContractViolation& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks) {
  std::ofstream out(path);
  if (!out) {
    throw IoError(fmt::format("cannot write landmark file {}", path.string()));
  }
  for (const Point& p : landmarks.points()) {
    out << fmt::format("{} {}\n", p.x, p.y);
  }
  if (!out) {
    throw IoError(fmt::format("failed writing {}", path.string()));
  }
}

}  // namespace carigan
