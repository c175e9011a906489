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
#include <filesystem>
#include <fstream>

#include "uwpose/encoder.hpp"
#include "uwpose/error.hpp"
#include "uwpose/mesh.hpp"

using namespace uwpose;

namespace {

// Straight-loop reference forward pass over CHW tensors. Weight layout:
// conv w[o + out_c * ((ci * k + ky) * k + kx)], dense w[o + out * i], both
// followed by per-output biases; dense flattens CHW in order.
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;
  double& at(int ci, int y, int x) { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
  double at(int ci, int y, int x) const { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
};

Tensor naive_layers(Tensor x, const std::vector<ResolvedLayer>& layers, const Eigen::VectorXd& p) {
  for (const auto& L : layers) {
    Tensor y{L.out.c, L.out.h, L.out.w, std::vector<double>(static_cast<std::size_t>(L.out.size()), 0.0)};
    switch (L.spec.kind) {
      case LayerKind::kConv: {
        const int k = L.spec.kernel, pad = k / 2, s = L.spec.stride;
        for (int o = 0; o < y.c; ++o) {
          for (int oy = 0; oy < y.h; ++oy) {
            for (int ox = 0; ox < y.w; ++ox) {
              double acc = p[static_cast<Eigen::Index>(L.b_offset) + o];
              for (int ci = 0; ci < x.c; ++ci) {
                for (int ky = 0; ky < k; ++ky) {
                  for (int kx = 0; kx < k; ++kx) {
                    const int iy = oy * s - pad + ky, ix = ox * s - pad + kx;
                    if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                    const auto widx = L.w_offset + o + static_cast<std::size_t>(y.c) * ((ci * k + ky) * k + kx);
                    acc += p[static_cast<Eigen::Index>(widx)] * x.at(ci, iy, ix);
                  }
                }
              }
              y.at(o, oy, ox) = acc;
            }
          }
        }
        break;
      }
      case LayerKind::kDense: {
        const std::size_t n_out = y.v.size();
        for (std::size_t o = 0; o < n_out; ++o) {
          double acc = p[static_cast<Eigen::Index>(L.b_offset + o)];
          for (std::size_t i = 0; i < x.v.size(); ++i) {
            acc += p[static_cast<Eigen::Index>(L.w_offset + o + n_out * i)] * x.v[i];
          }
          y.v[o] = acc;
        }
        break;
      }
      case LayerKind::kUpsample2x:
        for (int ci = 0; ci < y.c; ++ci) {
          for (int yy = 0; yy < y.h; ++yy) {
            for (int xx = 0; xx < y.w; ++xx) y.at(ci, yy, xx) = x.at(ci, yy / 2, xx / 2);
          }
        }
        break;
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] = x.v[i] > 0 ? x.v[i] : 0.0;
        break;
      case LayerKind::kSigmoid:
        for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] = 1.0 / (1.0 + std::exp(-x.v[i]));
        break;
    }
    x = std::move(y);
  }
  return x;
}

Tensor from_image(const Image& img) {
  Tensor t{img.channels, img.height, img.width, std::vector<double>(img.data.size())};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) t.at(c, y, x) = img.at(x, y, c);
    }
  }
  return t;
}

Image random_image(int size, std::uint64_t seed) {
  SeededRng rng(seed);
  Image img(size, size, 3);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

// Non-zero biases so the oracle exercises them too.
EncoderParams random_params(const Architecture& a, std::uint64_t seed) {
  EncoderParams p = EncoderParams::init(a, seed);
  SeededRng rng(seed + 1000);
  const auto r = resolve(a);
  for (const auto* group : {&r.encoder, &r.decoder}) {
    for (const auto& L : *group) {
      for (std::size_t i = 0; i < L.b_count; ++i) p.values[static_cast<Eigen::Index>(L.b_offset + i)] = rng.uniform(-0.1, 0.1);
    }
  }
  return p;
}

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "uwpose_encoder_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<TrainSample> toy_dataset(int count, int size) {
  CameraIntrinsics cam;
  std::vector<Rotation3> rots;
  for (int i = 0; i < count; ++i) rots.push_back(random_rotation(static_cast<std::uint64_t>(i)));
  return render_training_views(make_l_block(), rots, cam, 1000, {1.2, size});
}

}  // namespace

TEST(Architecture, DefaultChainsAndRoundTrips) {
  const Architecture a = Architecture::default_conv(128, 64);
  const auto r = resolve(a);
  EXPECT_EQ(r.encoder.back().out, (Shape{128, 1, 1}));
  EXPECT_EQ(r.decoder.back().out, (Shape{3, 64, 64}));
  const Architecture b = architecture_from_json(architecture_to_json(a));
  EXPECT_EQ(architecture_to_json(b), architecture_to_json(a));
  EXPECT_EQ(resolve(b).param_count, r.param_count);
  EXPECT_THROW(Architecture::default_conv(128, 60), std::invalid_argument);

  Architecture broken = a;
  broken.decoder.pop_back();
  broken.decoder.pop_back();  // decoder ends at 16 channels
  EXPECT_THROW(resolve(broken), std::invalid_argument);
}

TEST(Encode, ZeroWeightsGiveZeroLatentAndHalfImage) {
  const Architecture a = Architecture::default_conv(32, 32);
  const EncoderParams z = EncoderParams::zeros(a);
  const Eigen::VectorXd latent = encode(z, Image(32, 32, 3, 0.0f));
  EXPECT_EQ(latent.size(), 32);
  EXPECT_EQ(latent.cwiseAbs().maxCoeff(), 0.0);
  const Image out = decode(z, Eigen::VectorXd::Zero(32));
  for (float v : out.data) EXPECT_EQ(v, 0.5f);
}

TEST(Encode, Deterministic) {
  const EncoderParams p = random_params(Architecture::default_conv(16, 32), 3);
  const Image img = random_image(32, 4);
  EXPECT_EQ(encode(p, img), encode(p, img));
  const Eigen::VectorXd z = encode(p, img);
  EXPECT_EQ(decode(p, z), decode(p, z));
}

TEST(Encode, ShapeMismatchThrows) {
  const EncoderParams p = EncoderParams::zeros(Architecture::default_conv(16, 32));
  EXPECT_THROW(encode(p, Image(64, 64, 3)), std::invalid_argument);
  EXPECT_THROW(decode(p, Eigen::VectorXd::Zero(8)), std::invalid_argument);
}

TEST(Encode, MatchesStraightLoopOracle) {
  const Architecture a = Architecture::default_conv(128, 64);
  const EncoderParams p = random_params(a, 11);
  const Image img = random_image(64, 12);
  const auto r = resolve(a);
  const Tensor ref = naive_layers(from_image(img), r.encoder, p.values);
  const Eigen::VectorXd z = encode(p, img);
  ASSERT_EQ(static_cast<std::size_t>(z.size()), ref.v.size());
  for (std::size_t i = 0; i < ref.v.size(); ++i) EXPECT_NEAR(z[static_cast<Eigen::Index>(i)], ref.v[i], 1e-6);
}

TEST(Decode, MatchesStraightLoopOracle) {
  const Architecture a = Architecture::default_conv(128, 64);
  const EncoderParams p = random_params(a, 21);
  SeededRng rng(22);
  Eigen::VectorXd z(128);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.uniform(-1, 1);
  Tensor zt{128, 1, 1, std::vector<double>(z.data(), z.data() + z.size())};
  const Tensor ref = naive_layers(zt, resolve(a).decoder, p.values);
  const Image out = decode(p, z);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      for (int c = 0; c < 3; ++c) ASSERT_NEAR(out.at(x, y, c), ref.at(c, y, x), 1e-6);
    }
  }
}

TEST(Loss, PerfectReconstructionIsZero) {
  const EncoderParams z = EncoderParams::zeros(Architecture::default_conv(16, 32));
  const Image half(32, 32, 3, 0.5f);
  EXPECT_LE(loss(z, {{random_image(32, 1), half}}), 1e-6);  // guard only
}

TEST(Loss, ThreeFourFive) {
  const EncoderParams z = EncoderParams::zeros(Architecture::linear_toy(4, 3));
  Image target(4, 4, 3, 0.0f);
  target.at(0, 0, 0) = 3;
  target.at(2, 1, 2) = 4;
  EXPECT_NEAR(loss(z, {{Image(4, 4, 3, 0.7f), target}}), 5.0, 1e-12);
}

TEST(Loss, MatchesBruteForceSum) {
  const Architecture a = Architecture::default_conv(8, 16);
  const EncoderParams p = random_params(a, 5);
  const auto r = resolve(a);
  std::vector<LossPair> batch;
  double expect = 0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Image in = random_image(16, 100 + s), target = random_image(16, 200 + s);
    batch.emplace_back(in, target);
    const Tensor out = naive_layers(naive_layers(from_image(in), r.encoder, p.values), r.decoder, p.values);
    const Tensor t = from_image(target);
    double sq = 0;
    for (std::size_t i = 0; i < out.v.size(); ++i) sq += (out.v[i] - t.v[i]) * (out.v[i] - t.v[i]);
    expect += std::sqrt(sq + 1e-12);
  }
  const double got = loss(p, batch);
  EXPECT_NEAR(got, expect, 1e-9);
  EXPECT_GE(got, 0.0);
}

TEST(GradientCheck, LinearToy) {
  const Architecture a = Architecture::linear_toy(4, 3);
  const EncoderParams p = random_params(a, 7);
  const std::vector<LossPair> batch = {{random_image(4, 1), random_image(4, 2)},
                                       {random_image(4, 3), random_image(4, 4)}};
  const GradCheckResult r = gradient_check(p, batch, {200, 1e-4, 1});
  EXPECT_EQ(r.checked, 200);
  EXPECT_LT(r.max_relative_error, 1e-7);
}

TEST(GradientCheck, SmallConvNet) {
  const Architecture a = Architecture::default_conv(16, 16);
  const EncoderParams p = random_params(a, 8);
  const std::vector<LossPair> batch = {{random_image(16, 5), random_image(16, 6)}};
  const GradCheckResult r = gradient_check(p, batch, {300, 1e-4, 2});
  EXPECT_LT(r.max_relative_error, 1e-4) << "worst parameter " << r.worst_index;
}

TEST(GradientCheck, DeadUnitsStayFinite) {
  const EncoderParams z = EncoderParams::zeros(Architecture::default_conv(8, 16));
  const GradCheckResult r = gradient_check(z, {{random_image(16, 1), random_image(16, 2)}}, {200, 1e-4, 3});
  EXPECT_TRUE(std::isfinite(r.max_relative_error));
  EXPECT_EQ(r.checked, 200);
}

TEST(TrainConfig, ValidateAndJson) {
  TrainConfig c;
  EXPECT_DOUBLE_EQ(c.learning_rate, 2e-4);
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.latent_dim = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = {};
  c.latent_dim = 256;
  c.batch_size = 64;
  c.seed = 99;
  const nlohmann::json j = c;
  const auto back = j.get<TrainConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(RenderTrainingViews, CropsAndMasksAgree) {
  const auto ds = toy_dataset(5, 32);
  ASSERT_EQ(ds.size(), 5u);
  for (const auto& s : ds) {
    EXPECT_EQ(s.crop.width, 32);
    EXPECT_EQ(s.mask.width, 32);
    EXPECT_GT(s.mask.count(), 50u);
  }
}

TEST(Train, MakeTrainingPairTargetIsCleanCrop) {
  const auto ds = toy_dataset(1, 32);
  SeededRng rng(1);
  const std::vector<Image> bgs = {random_image(100, 9)};
  const LossPair pair = make_training_pair(ds[0], AugmentationConfig::for_object("cup"), bgs, rng);
  EXPECT_EQ(pair.second, ds[0].crop);
  EXPECT_NE(pair.first, ds[0].crop);
}

TEST(Train, ZeroIterationsReturnInitialization) {
  TrainConfig c;
  c.iterations = 0;
  c.latent_dim = 8;
  c.seed = 5;
  const auto ds = toy_dataset(2, 16);
  const TrainResult r = train(c, ds, AugmentationConfig::identity(), {});
  EXPECT_TRUE(r.losses.empty());
  const EncoderParams init = EncoderParams::init(Architecture::default_conv(8, 16), 5);
  EXPECT_EQ(r.params.values, init.values);
}

TEST(Train, DeterministicLossCurve) {
  TrainConfig c;
  c.iterations = 5;
  c.batch_size = 4;
  c.latent_dim = 8;
  c.seed = 3;
  const auto ds = toy_dataset(6, 16);
  const auto aug = AugmentationConfig::for_object("hotstab");
  const std::vector<Image> bgs = {random_image(64, 1), random_image(64, 2)};
  const TrainResult a = train(c, ds, aug, bgs);
  const TrainResult b = train(c, ds, aug, bgs);
  ASSERT_EQ(a.losses.size(), 5u);
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(a.params.values, b.params.values);
}

TEST(Train, EmptyDatasetRejected) {
  EXPECT_THROW(train({}, {}, {}, {}), std::invalid_argument);
}

TEST(Checkpoint, BitExactRoundTrip) {
  TrainConfig tc;
  tc.seed = 4;
  const EncoderParams p = random_params(Architecture::default_conv(16, 32), 4);
  const auto path = temp_path("rt.weights");
  save_checkpoint(p, path, {{"train", tc}});
  const EncoderParams q = load_checkpoint(path);
  EXPECT_EQ(q.values, p.values);
  EXPECT_EQ(architecture_to_json(q.arch), architecture_to_json(p.arch));
  std::ifstream side(path.string() + ".json");
  const auto j = nlohmann::json::parse(side);
  EXPECT_EQ(j.at("train").at("seed"), 4);
  EXPECT_EQ(j.at("param_count"), p.values.size());
}

TEST(Checkpoint, CorruptFilesAreDataErrors) {
  const EncoderParams p = random_params(Architecture::linear_toy(4, 3), 1);
  const auto path = temp_path("bad.weights");
  save_checkpoint(p, path);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  EXPECT_THROW(load_checkpoint(path), DataError);
  {
    std::string wrong = bytes;
    wrong[0] = 'X';
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << wrong;
  }
  EXPECT_THROW(load_checkpoint(path), DataError);
  EXPECT_THROW(load_checkpoint(temp_path("missing.weights")), DataError);
}
