// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#include "testing.hpp"

#include <cmath>
#include <numbers>

#include "carigan/error.hpp"
#include "carigan/objectives.hpp"
#include "gradcheck.hpp"

using namespace carigan;

namespace {

double value(const torch::Tensor& t) { return t.item<double>(); }

torch::Tensor full(double v, std::int64_t n = 1) {
  return torch::full({n}, v, torch::kFloat64);
}

}  // namespace

TEST_CASE("fusion endpoints are exact") {
  torch::manual_seed(1);
  const auto fake = torch::rand({3, 32, 32}) * 2 - 1;
  const auto real = torch::rand({3, 32, 32}) * 2 - 1;
  CHECK(torch::equal(fuse_images(fake, real, torch::zeros({1, 32, 32})), real));
  CHECK(torch::equal(fuse_images(fake, real, torch::ones({1, 32, 32})), fake));
  const auto half = fuse_images(torch::ones({3, 8, 8}), torch::zeros({3, 8, 8}),
                                torch::full({1, 8, 8}, 0.5));
  CHECK(torch::equal(half, torch::full({3, 8, 8}, 0.5)));
}

TEST_CASE("fusion is linear and stays in the convex hull") {
  torch::manual_seed(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = torch::rand({2, 3, 16, 16}) * 2 - 1;
    const auto b = torch::rand({2, 3, 16, 16}) * 2 - 1;
    const auto m = torch::rand({2, 1, 16, 16});
    const auto ab = fuse_images(a, b, m);
    const auto ba = fuse_images(b, a, m);
    CHECK((ab + ba - (a + b)).abs().max().item<double>() <= 1e-6);
    CHECK((ab >= torch::minimum(a, b) - 1e-6).all().item<bool>());
    CHECK((ab <= torch::maximum(a, b) + 1e-6).all().item<bool>());
  }
}

TEST_CASE("fusion rejects heatmaps outside [0, 1] and shape mismatches") {
  const auto img = torch::zeros({3, 8, 8});
  CHECK_THROWS_AS(fuse_images(img, img, torch::full({1, 8, 8}, 1.5)), ContractViolation);
  CHECK_THROWS_AS(fuse_images(img, img, torch::full({1, 8, 8}, -0.1)), ContractViolation);
  CHECK_THROWS_AS(fuse_images(img, torch::zeros({3, 4, 4}), torch::zeros({1, 8, 8})),
                  ContractViolation);
  CHECK_THROWS_AS(fuse_images(img, img, torch::zeros({1, 4, 4})), ContractViolation);
}

TEST_CASE("adversarial losses at uniform probabilities") {
  const auto half = full(0.5, 4);
  const auto fused = adversarial_losses(half, half, half);
  CHECK(value(fused.d_loss) == doctest::Approx(2.0 * std::numbers::ln2).epsilon(1e-9));
  CHECK(std::abs(value(fused.d_loss) - 1.3863) < 1e-4);
  CHECK(value(fused.g_adv) == doctest::Approx(std::numbers::ln2).epsilon(1e-9));
  const auto plain = adversarial_losses(half, half, std::nullopt);
  CHECK(value(plain.d_loss) == doctest::Approx(2.0 * std::numbers::ln2).epsilon(1e-9));
}

TEST_CASE("adversarial losses follow the closed forms") {
  const auto d_real = torch::tensor({0.9, 0.3}, torch::kFloat64);
  const auto d_fake = torch::tensor({0.2, 0.6}, torch::kFloat64);
  const auto d_fused = torch::tensor({0.4, 0.7}, torch::kFloat64);
  double d_ref = 0, g_ref = 0, d_plain = 0, g_plain = 0;
  for (int i = 0; i < 2; ++i) {
    const double r = d_real[i].item<double>(), f = d_fake[i].item<double>(),
                 u = d_fused[i].item<double>();
    d_ref += -(std::log(r) + 0.5 * std::log(1 - f) + 0.5 * std::log(1 - u)) / 2;
    g_ref += -(0.5 * std::log(f) + 0.5 * std::log(u)) / 2;
    d_plain += -(std::log(r) + std::log(1 - f)) / 2;
    g_plain += -std::log(f) / 2;
  }
  const auto fused = adversarial_losses(d_real, d_fake, d_fused);
  CHECK(std::abs(value(fused.d_loss) - d_ref) < 1e-12);
  CHECK(std::abs(value(fused.g_adv) - g_ref) < 1e-12);
  const auto plain = adversarial_losses(d_real, d_fake, std::nullopt);
  CHECK(std::abs(value(plain.d_loss) - d_plain) < 1e-12);
  CHECK(std::abs(value(plain.g_adv) - g_plain) < 1e-12);
  // Dropping the fused term equals the fused form with d_fused = d_fake.
  const auto same = adversarial_losses(d_real, d_fake, d_fake);
  CHECK(std::abs(value(same.d_loss) - d_plain) < 1e-12);
}

TEST_CASE("saturated probabilities are clamped") {
  const auto one = full(1.0), zero = full(0.0);
  const auto fooled = adversarial_losses(one, one, one);
  CHECK(std::isfinite(value(fooled.d_loss)));
  CHECK(value(fooled.g_adv) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::abs(value(fooled.g_adv)) < 1e-6);
  const auto caught = adversarial_losses(one, zero, zero);
  CHECK(value(caught.g_adv) == doctest::Approx(-std::log(kProbEpsilon)).epsilon(1e-6));
  CHECK(std::abs(value(caught.d_loss)) < 1e-6);
}

TEST_CASE("content loss examples") {
  const auto img = torch::rand({3, 16, 16});
  CHECK(value(content_loss(img, img, std::nullopt)) == 0.0);
  CHECK(value(content_loss(img, img, torch::rand({1, 16, 16}))) == 0.0);
  CHECK(value(content_loss(torch::zeros({3, 16, 16}), torch::ones({3, 16, 16}),
                           torch::ones({1, 16, 16}))) == doctest::Approx(1.0).epsilon(1e-6));

  // 121 pixels of weight 1 in a 256 x 256 map; brute-force sum over the support.
  auto m = torch::zeros({1, 256, 256});
  m.slice(1, 123, 134).slice(2, 123, 134).fill_(1.0);
  double support = 0;
  auto acc = m.accessor<float, 3>();
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x) support += acc[0][y][x];
  CHECK(support == 121.0);
  const double got = value(content_loss(torch::zeros({3, 256, 256}), torch::ones({3, 256, 256}), m));
  CHECK(std::abs(got - support / 65536.0) < 1e-6);
  CHECK(std::abs(got - 121.0 / 65536.0) < 1e-6);
}

TEST_CASE("content loss equals an explicit mean") {
  torch::manual_seed(3);
  const auto fake = torch::randn({2, 3, 8, 8}, torch::kFloat64);
  const auto real = torch::randn({2, 3, 8, 8}, torch::kFloat64);
  const auto m = torch::rand({2, 1, 8, 8}, torch::kFloat64);
  double sum = 0, plain = 0;
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const double d = real[n][c][y][x].item<double>() - fake[n][c][y][x].item<double>();
          sum += std::abs(d * m[n][0][y][x].item<double>());
          plain += std::abs(d);
        }
  CHECK(std::abs(value(content_loss(fake, real, m)) - sum / 384) < 1e-12);
  CHECK(std::abs(value(content_loss(fake, real, std::nullopt)) - plain / 384) < 1e-12);
}

TEST_CASE("diversity loss examples") {
  const auto f = torch::tensor({1.0, -2.0, 0.5}, torch::kFloat64);
  const auto z = torch::tensor({0.3, 0.1, -0.7, 1.2}, torch::kFloat64);
  CHECK(value(diversity_loss(f, f, z, z)) == 0.0);
  CHECK(value(diversity_loss(f, f, z, -z)) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(value(diversity_loss(f, -f, z, z)) == doctest::Approx(4.0).epsilon(1e-12));
  // Hand-computed: f ratio 0.5 * (orthogonal unit vectors -> 2/2 = 1), z ratio 0.
  const auto e1 = torch::tensor({1.0, 0.0}, torch::kFloat64);
  const auto e2 = torch::tensor({0.0, 1.0}, torch::kFloat64);
  CHECK(value(diversity_loss(e1, e2, z, z)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("diversity loss degenerate denominators stay finite") {
  const auto zf = torch::zeros({5}, torch::kFloat64);
  const auto zz = torch::zeros({4}, torch::kFloat64);
  const auto z = torch::tensor({1.0, 0.0, 0.0, 0.0}, torch::kFloat64);
  CHECK(value(diversity_loss(zf, zf, zz, zz)) == 0.0);
  CHECK(value(diversity_loss(zf, zf, z, -z)) == doctest::Approx(4.0).epsilon(1e-12));
  auto f = zf.clone().requires_grad_(true);
  diversity_loss(f, zf, z, -z).backward();
  CHECK(torch::isfinite(f.grad()).all().item<bool>());
}

TEST_CASE("diversity loss properties on random vectors") {
  torch::manual_seed(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f1 = torch::randn({3, 10}, torch::kFloat64);
    const auto f2 = torch::randn({3, 10}, torch::kFloat64) * (trial % 3 + 0.5);
    const auto z1 = torch::randn({3, 4}, torch::kFloat64);
    const auto z2 = torch::randn({3, 4}, torch::kFloat64);
    const double base = value(diversity_loss(f1, f2, z1, z2));
    CHECK(base >= 0.0);
    CHECK(value(diversity_loss(f2, f1, z2, z1)) == doctest::Approx(base).epsilon(1e-12));
    const double alpha = (trial % 2 ? -1.0 : 1.0) * (0.01 + trial * 0.37);
    CHECK(value(diversity_loss(f1 * alpha, f2 * alpha, z1, z2)) ==
          doctest::Approx(base).epsilon(1e-9));
    CHECK(value(diversity_loss(f1, f2, z1 * alpha, z2 * alpha)) ==
          doctest::Approx(base).epsilon(1e-9));
    const auto ratio = normalized_distance(f1, f2);
    CHECK(ratio.min().item<double>() >= 0.0);
    CHECK(ratio.max().item<double>() <= 2.0);
    // Zero exactly when the two ratios agree.
    const auto zr = normalized_distance(z1, z2);
    const auto mean_sq = (ratio - zr).pow(2).mean();
    CHECK(base == doctest::Approx(value(mean_sq)).epsilon(1e-12));
  }
  // Equal ratios built explicitly: f pair identical to the z pair.
  const auto z1 = torch::randn({4}, torch::kFloat64);
  const auto z2 = torch::randn({4}, torch::kFloat64);
  CHECK(value(diversity_loss(z1 * 3.0, z2 * 3.0, z1, z2)) < 1e-24);
}

TEST_CASE("analytic gradients match central differences") {
  torch::manual_seed(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f2 = torch::randn({24}, torch::kFloat64);
    const auto z1 = torch::randn({4}, torch::kFloat64);
    const auto z2 = torch::randn({4}, torch::kFloat64);
    const double e_div = carigan::testing::gradient_relative_error(
        [&](const torch::Tensor& f1) { return diversity_loss(f1, f2, z1, z2); },
        torch::randn({24}, torch::kFloat64));
    CHECK(e_div <= 1e-3);

    const auto real = torch::rand({3, 4, 4}, torch::kFloat64) * 2 - 1;
    const auto m = torch::rand({1, 4, 4}, torch::kFloat64);
    // Keep |real - fake| away from the kink at zero.
    auto offset = torch::rand({3, 4, 4}, torch::kFloat64) * 0.8 + 0.1;
    offset = offset * (torch::randint(0, 2, {3, 4, 4}).to(torch::kFloat64) * 2 - 1);
    const double e_con = carigan::testing::gradient_relative_error(
        [&](const torch::Tensor& fake) { return content_loss(fake, real, m); }, real + offset);
    CHECK(e_con <= 1e-3);
  }
}

TEST_CASE("total generator loss is the weighted sum") {
  CHECK(total_generator_loss(1.0, 2.0, 3.0, LossWeights{}) == 6.0);
  CHECK(total_generator_loss(1.0, 2.0, 3.0, LossWeights{0, 0, 0}) == 0.0);
  CHECK(total_generator_loss(1.3863, 0.5, 0.25, LossWeights{}) ==
        doctest::Approx(2.1363).epsilon(1e-12));
  CHECK(total_generator_loss(1.0, 2.0, 3.0, LossWeights{2, 0.5, 0.1}) ==
        doctest::Approx(3.3).epsilon(1e-12));
}

TEST_CASE("loss report CSV row") {
  LossReport r{7, 1.5, 0.25, 0.125, 0.0, 0.375};
  CHECK(LossReport::csv_header() == "step,d_loss,g_adv,g_content,g_diversity,g_total");
  CHECK(r.csv_row() == "7,1.5,0.25,0.125,0,0.375");
}
