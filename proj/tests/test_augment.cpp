// Copyright 2026 The uwpose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "uwpose/augment.hpp"

using namespace uwpose;

namespace {

Image ramp(int w, int h, std::uint64_t seed = 1) {
  SeededRng rng(seed);
  Image img(w, h, 3);
  for (auto& v : img.data) v = static_cast<float>(0.05 + 0.9 * rng.uniform());
  return img;
}

int count_changed_pixels(const Image& a, const Image& b) {
  int n = 0;
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      bool diff = false;
      for (int c = 0; c < a.channels; ++c) diff = diff || a.at(x, y, c) != b.at(x, y, c);
      n += diff;
    }
  }
  return n;
}

// True if some side x side window holds a single value in every channel.
bool has_uniform_square(const Image& img, int side) {
  for (int y0 = 0; y0 + side <= img.height; ++y0) {
    for (int x0 = 0; x0 + side <= img.width; ++x0) {
      const float v = img.at(x0, y0, 0);
      bool ok = true;
      for (int y = y0; y < y0 + side && ok; ++y) {
        for (int x = x0; x < x0 + side && ok; ++x) {
          for (int c = 0; c < img.channels; ++c) ok = ok && img.at(x, y, c) == v;
        }
      }
      if (ok) return true;
    }
  }
  return false;
}

AugmentationConfig only(std::string_view name) {
  AugmentationConfig c;
  c.toggle(name) = {true, 1.0};
  return c;
}

}  // namespace

TEST(CompositeBackground, FullAndEmptyMasks) {
  const Image crop = ramp(16, 16, 1), bg = ramp(16, 16, 2);
  Mask full(16, 16);
  std::fill(full.data.begin(), full.data.end(), 1);
  EXPECT_EQ(composite_background(crop, full, bg), crop);
  EXPECT_EQ(composite_background(crop, Mask(16, 16), bg), bg);
}

TEST(CompositeBackground, HalfPlanePixelwise) {
  const Image crop = ramp(20, 10, 3), bg = ramp(20, 10, 4);
  Mask m(20, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) m.at(x, y) = 1;
  }
  const Image out = composite_background(crop, m, bg);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(out.at(x, y, c), x < 10 ? crop.at(x, y, c) : bg.at(x, y, c));
      }
    }
  }
}

TEST(CompositeBackground, SizeMismatchThrows) {
  EXPECT_THROW(composite_background(ramp(8, 8), Mask(8, 8), ramp(8, 9)), std::invalid_argument);
  EXPECT_THROW(composite_background(ramp(8, 8), Mask(7, 8), ramp(8, 8)), std::invalid_argument);
}

TEST(SquareOcclusion, ZeroFractionIsIdentity) {
  SeededRng rng(1);
  const Image img = ramp(64, 64);
  EXPECT_EQ(square_occlusion(img, 0.0, rng), img);
}

TEST(SquareOcclusion, FullFractionCoversMinDimension) {
  SeededRng rng(2);
  const Image sq = square_occlusion(ramp(64, 64), 1.0, rng);
  EXPECT_TRUE(has_uniform_square(sq, 64));
  const Image wide = ramp(64, 48);
  const Image out = square_occlusion(wide, 1.0, rng);
  EXPECT_EQ(count_changed_pixels(wide, out), 48 * 48);
  EXPECT_TRUE(has_uniform_square(out, 48));
}

TEST(SquareOcclusion, DiffCountIsFloorSideSquared) {
  const Image img = ramp(64, 64);
  for (std::uint64_t s = 0; s < 20; ++s) {
    SeededRng rng(s);
    const Image out = square_occlusion(img, 0.4, rng);
    const int side = static_cast<int>(std::floor(0.4 * 64));
    EXPECT_EQ(count_changed_pixels(img, out), side * side);
    EXPECT_TRUE(has_uniform_square(out, side));
  }
}

TEST(SquareOcclusion, RejectsBadFraction) {
  SeededRng rng(1);
  EXPECT_THROW(square_occlusion(ramp(8, 8), 1.5, rng), std::invalid_argument);
  EXPECT_THROW(square_occlusion(ramp(8, 8), -0.1, rng), std::invalid_argument);
}

TEST(ApplyOperator, InvertConstant) {
  SeededRng rng(1);
  const Image out = apply_operator("invert", Image(8, 8, 3, 0.25f), rng, {});
  for (float v : out.data) EXPECT_FLOAT_EQ(v, 0.75f);
}

TEST(ApplyOperator, MultiplyIdentityRange) {
  SeededRng rng(1);
  AugmentationConfig c;
  c.multiply_factor = {1.0, 1.0};
  const Image img = ramp(16, 16);
  EXPECT_EQ(apply_operator("multiply", img, rng, c), img);
}

TEST(ApplyOperator, MultiplyAndContrastFormulas) {
  SeededRng rng(1);
  AugmentationConfig c;
  c.multiply_factor = {1.3, 1.3};
  c.contrast_factor = {0.5, 0.5};
  const Image img = ramp(16, 16);
  const Image m = apply_operator("multiply", img, rng, c);
  const Image k = apply_operator("contrast_normalization", img, rng, c);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    EXPECT_NEAR(m.data[i], std::min(1.0, img.data[i] * 1.3), 1e-6);
    EXPECT_NEAR(k.data[i], (img.data[i] - 0.5) * 0.5 + 0.5, 1e-6);
  }
}

TEST(GaussianBlur, ImpulseGivesDiscreteKernel) {
  const double sigma = 1.5;
  const int n = 31, mid = 15;
  Image img(n, n, 1, 0.0f);
  img.at(mid, mid) = 1.0f;
  const Image out = gaussian_blur(img, sigma);

  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> g(2 * radius + 1);
  double s = 0;
  for (int i = 0; i < (int)g.size(); ++i) {
    const double d = i - radius;
    g[i] = std::exp(-d * d / (2 * sigma * sigma));
    s += g[i];
  }
  double total = 0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const int dx = x - mid, dy = y - mid;
      double expect = 0;
      if (std::abs(dx) <= radius && std::abs(dy) <= radius) expect = g[dx + radius] * g[dy + radius] / (s * s);
      EXPECT_NEAR(out.at(x, y), expect, 1e-7);
      total += out.at(x, y);
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(ApplyOperator, UnknownNameThrows) {
  SeededRng rng(1);
  EXPECT_THROW(apply_operator("sharpen", ramp(8, 8), rng, {}), std::invalid_argument);
}

TEST(ApplyOperator, CoarseDropoutZeroesWholeCells) {
  AugmentationConfig c;
  c.dropout_rate = {0.5, 0.5};
  const Image img = ramp(64, 64);
  SeededRng rng(9);
  const Image out = apply_operator("coarse_dropout", img, rng, c);
  int dropped = 0;
  for (int gy = 0; gy < 8; ++gy) {
    for (int gx = 0; gx < 8; ++gx) {
      const bool zero = out.at(gx * 8, gy * 8, 0) == 0.0f;
      dropped += zero;
      for (int y = gy * 8; y < gy * 8 + 8; ++y) {
        for (int x = gx * 8; x < gx * 8 + 8; ++x) {
          for (int ch = 0; ch < 3; ++ch) {
            ASSERT_EQ(out.at(x, y, ch), zero ? 0.0f : img.at(x, y, ch));
          }
        }
      }
    }
  }
  EXPECT_GT(dropped, 0);
  EXPECT_LT(dropped, 64);
}

// Property: every operator keeps the shape and the [0, 1] range.
TEST(ApplyOperator, PreservesShapeAndRange) {
  AugmentationConfig c;
  c.multiply_factor = {0.2, 3.0};
  c.contrast_factor = {0.1, 4.0};
  for (auto name : kAugmentOperators) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      SeededRng rng(s);
      const Image img = ramp(40, 30, s + 1);
      const Image out = apply_operator(name, img, rng, c);
      ASSERT_TRUE(out.same_shape(img)) << name;
      for (float v : out.data) {
        ASSERT_GE(v, 0.0f) << name;
        ASSERT_LE(v, 1.0f) << name;
      }
    }
  }
}

TEST(FAug, DisabledIsPixelExactIdentity) {
  SeededRng rng(4);
  const Image img = ramp(64, 64);
  EXPECT_EQ(f_aug(img, AugmentationConfig::identity(), rng), img);
}

TEST(FAug, DeterministicPerSeed) {
  const auto cfg = AugmentationConfig::for_object("hotstab");
  const Image img = ramp(64, 64);
  SeededRng a(77), b(77);
  EXPECT_EQ(f_aug(img, cfg, a), f_aug(img, cfg, b));
}

TEST(FAug, DifferentSeedsDiffer) {
  const Image img = ramp(64, 64);
  const auto cfg = only("multiply");
  int same = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    SeededRng a(2 * s), b(2 * s + 1);
    same += f_aug(img, cfg, a) == f_aug(img, cfg, b);
  }
  EXPECT_EQ(same, 0);
}

TEST(FAug, BoxPresetOccludesUniformSquare) {
  const auto cfg = AugmentationConfig::for_object("box");
  EXPECT_DOUBLE_EQ(cfg.square_occlusion_fraction, 0.6);
  const Image img = ramp(64, 64);
  for (std::uint64_t s = 0; s < 5; ++s) {
    SeededRng rng(s);
    const Image out = f_aug(img, cfg, rng);
    EXPECT_NE(out, img);
    EXPECT_TRUE(has_uniform_square(out, static_cast<int>(std::floor(0.6 * 64))));
  }
}

TEST(AugmentationConfig, PresetsFollowObjectTable) {
  const auto jug = AugmentationConfig::for_object("jug");
  EXPECT_FALSE(jug.crop_and_pad.enabled);
  EXPECT_FALSE(jug.coarse_dropout.enabled);
  EXPECT_TRUE(jug.gaussian_blur.enabled);
  EXPECT_DOUBLE_EQ(jug.square_occlusion_fraction, 0.4);
  for (auto p : {"box", "cup", "jug", "hotstab"}) {
    EXPECT_FALSE(AugmentationConfig::for_object(p).perspective_transform.enabled) << p;
  }
  EXPECT_THROW(AugmentationConfig::for_object("kettle"), std::invalid_argument);
}

TEST(AugmentationConfig, ValidateRejectsOutOfRange) {
  AugmentationConfig c;
  c.square_occlusion_fraction = 1.2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.invert.probability = -0.1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(AugmentationConfig, JsonRoundTripAndToggles) {
  auto c = AugmentationConfig::for_object("cup");
  c.blur_sigma = {0.7, 1.1};
  c.multiply.probability = 0.8;
  const nlohmann::json j = c;
  const auto back = j.get<AugmentationConfig>();
  EXPECT_EQ(nlohmann::json(back), j);

  const auto t = nlohmann::json::parse(
      R"({"preset": "box", "operators": {"invert": false, "gaussian_blur": {"enabled": true, "probability": 0.3}},
          "square_occlusion_fraction": 0.1})")
                     .get<AugmentationConfig>();
  EXPECT_FALSE(t.invert.enabled);
  EXPECT_TRUE(t.gaussian_blur.enabled);
  EXPECT_DOUBLE_EQ(t.gaussian_blur.probability, 0.3);
  EXPECT_TRUE(t.affine.enabled);
  EXPECT_DOUBLE_EQ(t.square_occlusion_fraction, 0.1);
}
