// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "carigan/dataset.hpp"
#include "carigan/error.hpp"
#include "carigan/image_io.hpp"

namespace carigan {
namespace {

// Mean face in a 256-px frame, relative to the face centre. Index roles
// follow the default LandmarkLayout.
constexpr std::array<Point, kNumLandmarks> kTemplate = {{
    {-70, -40}, {70, -40},   // temples
    {-60, 45},  {60, 45},    // jaw
    {0, 85},                 // chin
    {-38, -35}, {38, -35},   // brows
    {0, -70},                // forehead
    {-37.5, -12}, {37.5, -12},  // eyes
    {0, 20},                 // nose tip
    {-12, 26},  {12, 26},    // nostrils
    {-25, 50},  {25, 50},    // mouth corners
    {0, 44},    {0, 58},     // lips
}};

constexpr int kShift = 4;
constexpr double kSubpixel = 1 << kShift;

cv::Point fixed(Point p) {
  return {static_cast<int>(std::lround(p.x * kSubpixel)),
          static_cast<int>(std::lround(p.y * kSubpixel))};
}

cv::Size fixed_size(double w, double h) {
  return {static_cast<int>(std::lround(std::max(w, 0.5) * kSubpixel)),
          static_cast<int>(std::lround(std::max(h, 0.5) * kSubpixel))};
}

double snap(double v) { return std::round(v * 1024.0) / 1024.0; }

struct IdentityGeometry {
  std::array<Point, kNumLandmarks> shape;  // template + identity offsets, 256 frame
  cv::Scalar skin;
  double eye_size = 1.0;
  double mouth_size = 1.0;
};

struct Pose {
  double angle = 0.0;  // radians
  double scale = 1.0;
  Point centre;
};

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(c)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(std::mt19937_64& rng, double sd) {
  return std::normal_distribution<double>(0.0, sd)(rng);
}

IdentityGeometry make_identity(std::mt19937_64& rng) {
  IdentityGeometry g;
  const double width = uniform(rng, 0.9, 1.1);
  const double height = uniform(rng, 0.9, 1.1);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    g.shape[i] = {kTemplate[i].x * width + gaussian(rng, 3.0),
                  kTemplate[i].y * height + gaussian(rng, 3.0)};
  }
  // Keep the eye line level in the identity frame; pose adds rotation.
  const double eye_y = 0.5 * (g.shape[8].y + g.shape[9].y);
  g.shape[8].y = g.shape[9].y = eye_y;
  const double tone = uniform(rng, 0.0, 1.0);
  g.skin = cv::Scalar(200 + 40 * tone, 160 + 40 * tone, 130 + 40 * tone);
  g.eye_size = uniform(rng, 0.8, 1.2);
  g.mouth_size = uniform(rng, 0.8, 1.2);
  return g;
}

std::array<Point, kNumLandmarks> place(const std::array<Point, kNumLandmarks>& shape,
                                       const Pose& pose, double unit) {
  const double c = std::cos(pose.angle);
  const double s = std::sin(pose.angle);
  std::array<Point, kNumLandmarks> out{};
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const double x = shape[i].x * unit * pose.scale;
    const double y = shape[i].y * unit * pose.scale;
    out[i] = {snap(pose.centre.x + c * x - s * y), snap(pose.centre.y + s * x + c * y)};
  }
  return out;
}

Point midpoint(Point a, Point b) { return {(a.x + b.x) / 2, (a.y + b.y) / 2}; }

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Palette {
  cv::Scalar background;
  cv::Scalar face;
  cv::Scalar feature;
  cv::Scalar accent;
};

void draw_face(cv::Mat& img, const std::array<Point, kNumLandmarks>& pts, const Pose& pose,
               double unit, const Palette& pal, double eye_size, double mouth_size,
               bool mark_landmarks) {
  const double u = unit * pose.scale;
  const double deg = pose.angle * 180.0 / std::numbers::pi;
  img.setTo(pal.background);

  const Point centre = midpoint(midpoint(pts[0], pts[1]), pts[4]);
  const double half_w = 0.55 * distance(pts[0], pts[1]);
  const double half_h = 0.55 * distance(pts[7], pts[4]);
  cv::ellipse(img, fixed(centre), fixed_size(half_w, half_h), deg, 0, 360, pal.face, cv::FILLED,
              cv::LINE_AA, kShift);

  for (int side = 0; side < 2; ++side) {
    const Point eye = pts[8 + side];
    cv::ellipse(img, fixed(eye), fixed_size(11 * u * eye_size, 7 * u * eye_size), deg, 0, 360,
                pal.feature, cv::FILLED, cv::LINE_AA, kShift);
    const Point brow = pts[5 + side];
    const Point dir{std::cos(pose.angle) * 12 * u, std::sin(pose.angle) * 12 * u};
    cv::line(img, fixed({brow.x - dir.x, brow.y - dir.y}), fixed({brow.x + dir.x, brow.y + dir.y}),
             pal.feature, std::max(1, static_cast<int>(std::lround(4 * u))), cv::LINE_AA, kShift);
  }
  cv::line(img, fixed(midpoint(pts[8], pts[9])), fixed(pts[10]), pal.accent,
           std::max(1, static_cast<int>(std::lround(4 * u))), cv::LINE_AA, kShift);
  for (int side = 0; side < 2; ++side) {
    cv::circle(img, fixed(pts[11 + side]), static_cast<int>(std::lround(4 * u * kSubpixel)),
               pal.accent, cv::FILLED, cv::LINE_AA, kShift);
  }
  const Point mouth = midpoint(pts[15], pts[16]);
  cv::ellipse(img, fixed(mouth),
              fixed_size(0.5 * distance(pts[13], pts[14]) * mouth_size,
                         std::max(0.5 * distance(pts[15], pts[16]), 3 * u) * mouth_size),
              deg, 0, 360, pal.accent, cv::FILLED, cv::LINE_AA, kShift);
  if (mark_landmarks) {
    for (const Point& p : pts) {
      cv::circle(img, fixed(p), static_cast<int>(std::lround(std::max(6 * u, 1.0) * kSubpixel)),
                 pal.feature, cv::FILLED, cv::LINE_AA, kShift);
    }
  }
}

// Saturated caricature face colours; which one a caricature gets is a
// per-image style choice.
constexpr std::array<std::array<double, 3>, 4> kCaricatureFaces = {{
    {150, 110, 40}, {40, 120, 150}, {150, 60, 110}, {70, 140, 60}}};

}  // namespace

DatasetManifest make_toy_dataset(const ToyDatasetOptions& options,
                                 const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (options.n_identities <= 0 || options.faces_per_id <= 0 || options.carics_per_id <= 0 ||
      options.test_identities < 0 || options.out_size <= 0) {
    throw ContractViolation("toy dataset counts and size must be positive");
  }
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (!ec) fs::create_directories(out_dir / "landmarks", ec);
  if (ec) {
    throw IoError(fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));
  }

  const int raw = options.out_size * 3 / 2;
  const double unit = options.out_size / 256.0;
  const int total_ids = options.n_identities + options.test_identities;

  DatasetManifest manifest;
  for (int id = 0; id < total_ids; ++id) {
    const std::string identity = fmt::format("id{:03d}", id);
    const Split split = id < options.n_identities ? Split::train : Split::test;
    auto id_rng = make_rng(options.seed, static_cast<std::uint64_t>(id), 0, 0);
    const IdentityGeometry geometry = make_identity(id_rng);

    auto emit = [&](SampleKind kind, int k) {
      const bool caric = kind == SampleKind::caricature;
      auto rng = make_rng(options.seed, static_cast<std::uint64_t>(id), caric ? 2 : 1,
                          static_cast<std::uint64_t>(k));
      Pose pose;
      pose.angle = uniform(rng, -1.0, 1.0) * (caric ? 12.0 : 8.0) * std::numbers::pi / 180.0;
      pose.scale = uniform(rng, 0.92, 1.08);
      pose.centre = {raw / 2.0 + uniform(rng, -0.04, 0.04) * raw,
                     raw / 2.0 + uniform(rng, -0.04, 0.04) * raw};

      std::array<Point, kNumLandmarks> shape = geometry.shape;
      Palette pal;
      double eye_size = geometry.eye_size;
      double mouth_size = geometry.mouth_size;
      if (caric) {
        // Exaggerate the identity's departure from the mean face, then push
        // individual parts further apart.
        const double amount = uniform(rng, 2.0, 3.5);
        for (std::size_t i = 0; i < kNumLandmarks; ++i) {
          shape[i].x = kTemplate[i].x + amount * (shape[i].x - kTemplate[i].x);
          shape[i].y = kTemplate[i].y + amount * (shape[i].y - kTemplate[i].y);
        }
        const double chin = uniform(rng, 0.0, 18.0);
        for (std::size_t i : {2u, 3u, 4u}) shape[i].y += chin;
        const double mouth = uniform(rng, 1.0, 1.4);
        for (std::size_t i : {13u, 14u}) shape[i].x *= mouth;
        for (std::size_t i : {13u, 14u, 15u, 16u}) shape[i].y += uniform(rng, -4.0, 10.0) * 0.5;
        const double brow_lift = uniform(rng, 0.0, 10.0);
        for (std::size_t i : {5u, 6u, 7u}) shape[i].y -= brow_lift;
        eye_size *= uniform(rng, 1.2, 1.7);
        mouth_size *= uniform(rng, 1.1, 1.5);
        const auto& f = kCaricatureFaces[std::uniform_int_distribution<std::size_t>(
            0, kCaricatureFaces.size() - 1)(rng)];
        const double bg = uniform(rng, 15, 45);
        pal.background = cv::Scalar(bg, bg, bg + 10);
        pal.face = cv::Scalar(f[0], f[1], f[2]);
        pal.feature = cv::Scalar(250, 250, 235);
        pal.accent = cv::Scalar(245, 225, 200);
      } else {
        for (std::size_t i = 0; i < kNumLandmarks; ++i) {
          shape[i].x += gaussian(rng, 1.0);
          shape[i].y += gaussian(rng, 1.0);
        }
        const double bg = uniform(rng, 170, 215);
        pal.background = cv::Scalar(bg, bg, bg);
        pal.face = geometry.skin;
        pal.feature = cv::Scalar(45, 35, 35);
        pal.accent = cv::Scalar(140, 70, 70);
      }
      const auto points = place(shape, pose, unit);

      cv::Mat img(raw, raw, CV_8UC3);
      draw_face(img, points, pose, unit, pal, eye_size, mouth_size, caric);

      const std::string stem = fmt::format("{}_{}_{}", identity, caric ? "caric" : "face", k);
      ManifestRecord rec;
      rec.image_path = out_dir / "images" / (stem + ".png");
      rec.landmark_path = out_dir / "landmarks" / (stem + ".txt");
      rec.identity = identity;
      rec.kind = kind;
      rec.split = split;
      write_rgb(rec.image_path, img);
      write_landmarks(rec.landmark_path, LandmarkSet(points));
      manifest.records.push_back(std::move(rec));
    };

    for (int k = 0; k < options.faces_per_id; ++k) emit(SampleKind::face, k);
    for (int k = 0; k < options.carics_per_id; ++k) emit(SampleKind::caricature, k);
  }
  write_manifest(out_dir / "manifest.tsv", manifest);
  return manifest;
}

}  // namespace carigan
