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

#include "uwpose/network.hpp"

#include <cmath>

#include "uwpose/rng.hpp"

namespace uwpose {

namespace {

LayerSpec conv(int out_channels, int kernel, int stride) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.out_channels = out_channels;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec dense(Shape out) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.out_shape = out;
  return s;
}

LayerSpec simple(LayerKind k) {
  LayerSpec s;
  s.kind = k;
  return s;
}

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kDense: return "dense";
    case LayerKind::kUpsample2x: return "upsample2x";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSigmoid: return "sigmoid";
  }
  return "?";
}

LayerKind kind_from_name(const std::string& n) {
  if (n == "conv") return LayerKind::kConv;
  if (n == "dense") return LayerKind::kDense;
  if (n == "upsample2x") return LayerKind::kUpsample2x;
  if (n == "relu") return LayerKind::kRelu;
  if (n == "sigmoid") return LayerKind::kSigmoid;
  throw std::invalid_argument("unknown layer kind '" + n + "'");
}

nlohmann::json layers_to_json(const std::vector<LayerSpec>& layers) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& l : layers) {
    nlohmann::json j = {{"kind", kind_name(l.kind)}};
    if (l.kind == LayerKind::kConv) {
      j["out_channels"] = l.out_channels;
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
    } else if (l.kind == LayerKind::kDense) {
      j["out_shape"] = {l.out_shape.c, l.out_shape.h, l.out_shape.w};
    }
    out.push_back(j);
  }
  return out;
}

std::vector<LayerSpec> layers_from_json(const nlohmann::json& arr) {
  std::vector<LayerSpec> out;
  for (const auto& j : arr) {
    LayerSpec s = simple(kind_from_name(j.at("kind").get<std::string>()));
    if (s.kind == LayerKind::kConv) {
      s.out_channels = j.at("out_channels").get<int>();
      s.kernel = j.at("kernel").get<int>();
      s.stride = j.at("stride").get<int>();
    } else if (s.kind == LayerKind::kDense) {
      const auto& o = j.at("out_shape");
      s.out_shape = {o.at(0).get<int>(), o.at(1).get<int>(), o.at(2).get<int>()};
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

Architecture Architecture::default_conv(int latent_dim, int input_size) {
  if (input_size % 16 != 0) throw std::invalid_argument("input size must be a multiple of 16");
  Architecture a;
  a.input = {3, input_size, input_size};
  a.latent_dim = latent_dim;
  const int channels[4] = {16, 32, 64, 128};
  for (int c : channels) {
    a.encoder.push_back(conv(c, 5, 2));
    a.encoder.push_back(simple(LayerKind::kRelu));
  }
  a.encoder.push_back(dense({latent_dim, 1, 1}));

  const int bottom = input_size / 16;
  a.decoder.push_back(dense({128, bottom, bottom}));
  a.decoder.push_back(simple(LayerKind::kRelu));
  const int up_channels[4] = {64, 32, 16, 3};
  for (int i = 0; i < 4; ++i) {
    a.decoder.push_back(simple(LayerKind::kUpsample2x));
    a.decoder.push_back(conv(up_channels[i], 5, 1));
    a.decoder.push_back(simple(i < 3 ? LayerKind::kRelu : LayerKind::kSigmoid));
  }
  return a;
}

Architecture Architecture::linear_toy(int input_size, int latent_dim) {
  Architecture a;
  a.input = {3, input_size, input_size};
  a.latent_dim = latent_dim;
  a.encoder.push_back(dense({latent_dim, 1, 1}));
  a.decoder.push_back(dense(a.input));
  return a;
}

nlohmann::json architecture_to_json(const Architecture& arch) {
  return {{"input", {arch.input.c, arch.input.h, arch.input.w}},
          {"latent_dim", arch.latent_dim},
          {"encoder", layers_to_json(arch.encoder)},
          {"decoder", layers_to_json(arch.decoder)}};
}

Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  const auto& in = j.at("input");
  a.input = {in.at(0).get<int>(), in.at(1).get<int>(), in.at(2).get<int>()};
  a.latent_dim = j.at("latent_dim").get<int>();
  a.encoder = layers_from_json(j.at("encoder"));
  a.decoder = layers_from_json(j.at("decoder"));
  resolve(a);
  return a;
}

ResolvedArchitecture resolve(const Architecture& arch) {
  if (arch.latent_dim < 2) throw std::invalid_argument("latent_dim must be >= 2");
  if (arch.input.size() <= 0) throw std::invalid_argument("empty input shape");
  ResolvedArchitecture r;
  std::size_t offset = 0;

  auto chain = [&](const std::vector<LayerSpec>& specs, Shape shape) {
    std::vector<ResolvedLayer> out;
    for (const auto& spec : specs) {
      ResolvedLayer L;
      L.spec = spec;
      L.in = shape;
      switch (spec.kind) {
        case LayerKind::kConv: {
          if (spec.kernel < 1 || spec.kernel % 2 == 0 || spec.stride < 1 || spec.out_channels < 1) {
            throw std::invalid_argument("invalid conv layer");
          }
          const int pad = spec.kernel / 2;
          L.out = {spec.out_channels, (shape.h + 2 * pad - spec.kernel) / spec.stride + 1,
                   (shape.w + 2 * pad - spec.kernel) / spec.stride + 1};
          L.fan_in = shape.c * spec.kernel * spec.kernel;
          L.w_count = static_cast<std::size_t>(L.out.c) * L.fan_in;
          L.b_count = L.out.c;
          break;
        }
        case LayerKind::kDense:
          if (spec.out_shape.size() <= 0) throw std::invalid_argument("invalid dense layer");
          L.out = spec.out_shape;
          L.fan_in = shape.size();
          L.w_count = static_cast<std::size_t>(L.out.size()) * L.fan_in;
          L.b_count = L.out.size();
          break;
        case LayerKind::kUpsample2x:
          L.out = {shape.c, shape.h * 2, shape.w * 2};
          break;
        case LayerKind::kRelu:
        case LayerKind::kSigmoid:
          L.out = shape;
          break;
      }
      L.w_offset = offset;
      offset += L.w_count;
      L.b_offset = offset;
      offset += L.b_count;
      shape = L.out;
      out.push_back(L);
    }
    return std::make_pair(out, shape);
  };

  auto [enc, latent_shape] = chain(arch.encoder, arch.input);
  if (!(latent_shape == Shape{arch.latent_dim, 1, 1})) {
    throw std::invalid_argument("encoder does not end at the latent shape");
  }
  auto [dec, out_shape] = chain(arch.decoder, latent_shape);
  if (!(out_shape == arch.input)) {
    throw std::invalid_argument("decoder does not reproduce the input shape");
  }
  r.encoder = std::move(enc);
  r.decoder = std::move(dec);
  r.param_count = offset;
  return r;
}

EncoderParams EncoderParams::zeros(const Architecture& arch) {
  return {arch, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(resolve(arch).param_count))};
}

EncoderParams EncoderParams::init(const Architecture& arch, std::uint64_t seed) {
  EncoderParams p = zeros(arch);
  const ResolvedArchitecture r = resolve(arch);
  SeededRng rng(seed);
  auto fill = [&](const std::vector<ResolvedLayer>& layers) {
    for (const auto& L : layers) {
      if (L.w_count == 0) continue;
      const double limit = std::sqrt(6.0 / L.fan_in);
      for (std::size_t i = 0; i < L.w_count; ++i) {
        p.values[static_cast<Eigen::Index>(L.w_offset + i)] = rng.uniform(-limit, limit);
      }
    }
  };
  fill(r.encoder);
  fill(r.decoder);
  return p;
}

}  // namespace uwpose
