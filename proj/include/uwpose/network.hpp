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

#pragma once

// Sequential convolutional autoencoder with hand-derived backpropagation.
//
// Activations are planar C x (H*W) row-major matrices: pixel p = y * W + x
// of channel c lives at c * H * W + p, which is also the flattening dense
// layers read and write. Convolutions use im2col (row-major patch matrix)
// followed by one GEMM per layer and sample.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "uwpose/image.hpp"

namespace uwpose {

struct Shape {
  int c = 0, h = 0, w = 0;
  int pixels() const { return h * w; }
  int size() const { return c * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class LayerKind { kConv, kDense, kUpsample2x, kRelu, kSigmoid };

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int out_channels = 0;  // conv
  int kernel = 0;        // conv, odd, "same" padding
  int stride = 1;        // conv
  Shape out_shape;       // dense
};

// Architecture descriptor. Encoder maps the input to (latent_dim, 1, 1);
// decoder maps the latent back to the input shape.
struct Architecture {
  Shape input{3, 64, 64};
  int latent_dim = 128;
  std::vector<LayerSpec> encoder;
  std::vector<LayerSpec> decoder;

  // 4 stride-2 convs (16/32/64/128, k5, ReLU) + dense to latent; decoder
  // mirrors with nearest 2x upsampling + conv and a sigmoid output.
  static Architecture default_conv(int latent_dim = 128, int input_size = 64);
  // Dense -> latent, dense -> output, no activations.
  static Architecture linear_toy(int input_size = 4, int latent_dim = 3);
};

nlohmann::json architecture_to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j);

struct ResolvedLayer {
  LayerSpec spec;
  Shape in, out;
  std::size_t w_offset = 0, w_count = 0;
  std::size_t b_offset = 0, b_count = 0;
  int fan_in = 0;
};

struct ResolvedArchitecture {
  std::vector<ResolvedLayer> encoder;
  std::vector<ResolvedLayer> decoder;
  std::size_t param_count = 0;
};

// Computes shapes and parameter offsets; throws std::invalid_argument if
// the layers do not chain from input to latent and back.
ResolvedArchitecture resolve(const Architecture& arch);

// Trainable weights stored at 64-bit. Layout follows resolve(): per layer,
// weights (column-major out x fan_in) then biases.
struct EncoderParams {
  Architecture arch;
  Eigen::VectorXd values;

  // He-uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
  static EncoderParams init(const Architecture& arch, std::uint64_t seed);
  static EncoderParams zeros(const Architecture& arch);
};

template <typename S>
class Network {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  using Weights = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  explicit Network(const EncoderParams& params)
      : arch_(params.arch), layers_(resolve(params.arch)),
        params_(params.values.template cast<S>()) {
    if (static_cast<std::size_t>(params_.size()) != layers_.param_count) {
      throw std::invalid_argument("parameter count does not match architecture");
    }
  }

  const Architecture& architecture() const { return arch_; }
  const ResolvedArchitecture& layers() const { return layers_; }
  std::size_t param_count() const { return layers_.param_count; }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  EncoderParams export_params() const { return {arch_, params_.template cast<double>()}; }

  Mat to_tensor(const Image& img) const {
    const Shape& s = arch_.input;
    if (img.width != s.w || img.height != s.h || img.channels != s.c) {
      throw std::invalid_argument("image shape " + std::to_string(img.width) + "x" +
                                  std::to_string(img.height) + "x" + std::to_string(img.channels) +
                                  " does not match the network input");
    }
    Mat m(s.c, s.pixels());
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        for (int c = 0; c < s.c; ++c) m(c, y * s.w + x) = static_cast<S>(img.at(x, y, c));
      }
    }
    return m;
  }

  Image to_image(const Mat& m) const {
    const Shape& s = arch_.input;
    Image img(s.w, s.h, s.c);
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        for (int c = 0; c < s.c; ++c) img.at(x, y, c) = static_cast<float>(m(c, y * s.w + x));
      }
    }
    return img;
  }

  Vec encode(const Image& img) {
    Mat x = to_tensor(img);
    run(layers_.encoder, x, enc_cache_);
    return Eigen::Map<const Vec>(x.data(), x.size());
  }

  Image decode(const Vec& latent) { return to_image(decode_tensor(latent)); }

  Mat decode_tensor(const Vec& latent) {
    if (latent.size() != arch_.latent_dim) throw std::invalid_argument("latent size mismatch");
    Mat z = Eigen::Map<const Mat>(latent.data(), arch_.latent_dim, 1);
    run(layers_.decoder, z, dec_cache_);
    return z;
  }

  Mat reconstruct(const Mat& input) {
    Mat x = input;
    run(layers_.encoder, x, enc_cache_);
    run(layers_.decoder, x, dec_cache_);
    return x;
  }

  // ||target - decode(encode(input))||_2 with a 1e-12 guard under the root.
  // When grad is non-null the gradient is added to it.
  S sample_loss(const Mat& input, const Mat& target, Vec* grad) {
    const Mat recon = reconstruct(input);
    const Mat diff = recon - target;
    const S norm = std::sqrt(diff.squaredNorm() + static_cast<S>(1e-12));
    if (grad) {
      Mat d = diff / norm;
      backprop(layers_.decoder, dec_cache_, d, *grad);
      backprop(layers_.encoder, enc_cache_, d, *grad);
    }
    return norm;
  }

 private:
  struct Cache {
    std::vector<Mat> inputs;  // input of each layer
    std::vector<Mat> cols;    // im2col per layer (conv only)
  };

  static void im2col(const Mat& in, const Shape& s, int k, int stride, Mat& cols, const Shape& o) {
    const int pad = k / 2;
    cols.resize(static_cast<Eigen::Index>(s.c) * k * k, o.pixels());
    Eigen::Index r = 0;
    for (int ci = 0; ci < s.c; ++ci) {
      const S* plane = in.row(ci).data();
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx, ++r) {
          S* dst = cols.row(r).data();
          for (int oy = 0; oy < o.h; ++oy) {
            const int iy = oy * stride - pad + ky;
            S* d = dst + oy * o.w;
            if (iy < 0 || iy >= s.h) {
              std::fill(d, d + o.w, S(0));
              continue;
            }
            const S* src = plane + iy * s.w;
            for (int ox = 0; ox < o.w; ++ox) {
              const int ix = ox * stride - pad + kx;
              d[ox] = (ix >= 0 && ix < s.w) ? src[ix] : S(0);
            }
          }
        }
      }
    }
  }

  static void col2im(const Mat& cols, const Shape& s, int k, int stride, Mat& out, const Shape& o) {
    const int pad = k / 2;
    out.setZero(s.c, s.pixels());
    Eigen::Index r = 0;
    for (int ci = 0; ci < s.c; ++ci) {
      S* plane = out.row(ci).data();
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx, ++r) {
          const S* src = cols.row(r).data();
          for (int oy = 0; oy < o.h; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= s.h) continue;
            const S* sr = src + oy * o.w;
            S* d = plane + iy * s.w;
            for (int ox = 0; ox < o.w; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < s.w) d[ix] += sr[ox];
            }
          }
        }
      }
    }
  }

  void run(const std::vector<ResolvedLayer>& layers, Mat& x, Cache& cache) {
    cache.inputs.resize(layers.size());
    cache.cols.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const ResolvedLayer& L = layers[i];
      cache.inputs[i] = x;
      switch (L.spec.kind) {
        case LayerKind::kConv: {
          im2col(x, L.in, L.spec.kernel, L.spec.stride, cache.cols[i], L.out);
          Eigen::Map<const Weights> w(params_.data() + L.w_offset, L.out.c, L.fan_in);
          Eigen::Map<const Vec> b(params_.data() + L.b_offset, L.out.c);
          x.resize(L.out.c, L.out.pixels());
          x.noalias() = w * cache.cols[i];
          x.colwise() += b;
          break;
        }
        case LayerKind::kDense: {
          Eigen::Map<const Weights> w(params_.data() + L.w_offset, L.out.size(), L.fan_in);
          Eigen::Map<const Vec> b(params_.data() + L.b_offset, L.out.size());
          Eigen::Map<const Vec> xin(cache.inputs[i].data(), L.fan_in);
          Vec y = w * xin + b;
          x = Eigen::Map<const Mat>(y.data(), L.out.c, L.out.pixels());
          break;
        }
        case LayerKind::kUpsample2x: {
          Mat up(L.out.c, L.out.pixels());
          const Mat& in = cache.inputs[i];
          for (int c = 0; c < L.out.c; ++c) {
            const S* src = in.row(c).data();
            S* dst = up.row(c).data();
            for (int y = 0; y < L.out.h; ++y) {
              const S* sr = src + (y / 2) * L.in.w;
              for (int xx = 0; xx < L.out.w; ++xx) *dst++ = sr[xx / 2];
            }
          }
          x = std::move(up);
          break;
        }
        case LayerKind::kRelu:
          x = x.cwiseMax(S(0));
          break;
        case LayerKind::kSigmoid:
          x = x.unaryExpr([](S v) { return S(1) / (S(1) + std::exp(-v)); });
          break;
      }
    }
  }

  // d holds dLoss/dOutput of the last layer on entry and dLoss/dInput of the
  // first layer on exit.
  void backprop(const std::vector<ResolvedLayer>& layers, Cache& cache, Mat& d, Vec& grad) {
    for (std::size_t ii = layers.size(); ii-- > 0;) {
      const ResolvedLayer& L = layers[ii];
      const Mat& in = cache.inputs[ii];
      switch (L.spec.kind) {
        case LayerKind::kConv: {
          Eigen::Map<const Weights> w(params_.data() + L.w_offset, L.out.c, L.fan_in);
          Eigen::Map<Weights> gw(grad.data() + L.w_offset, L.out.c, L.fan_in);
          Eigen::Map<Vec> gb(grad.data() + L.b_offset, L.out.c);
          gw.noalias() += d * cache.cols[ii].transpose();
          gb += d.rowwise().sum();
          Mat dcols;
          dcols.noalias() = w.transpose() * d;
          col2im(dcols, L.in, L.spec.kernel, L.spec.stride, d, L.out);
          break;
        }
        case LayerKind::kDense: {
          Eigen::Map<const Weights> w(params_.data() + L.w_offset, L.out.size(), L.fan_in);
          Eigen::Map<Weights> gw(grad.data() + L.w_offset, L.out.size(), L.fan_in);
          Eigen::Map<Vec> gb(grad.data() + L.b_offset, L.out.size());
          Eigen::Map<const Vec> dy(d.data(), L.out.size());
          Eigen::Map<const Vec> xin(in.data(), L.fan_in);
          gw.noalias() += dy * xin.transpose();
          gb += dy;
          Vec dx = w.transpose() * dy;
          d = Eigen::Map<const Mat>(dx.data(), L.in.c, L.in.pixels());
          break;
        }
        case LayerKind::kUpsample2x: {
          Mat dn = Mat::Zero(L.in.c, L.in.pixels());
          for (int c = 0; c < L.out.c; ++c) {
            const S* src = d.row(c).data();
            S* dst = dn.row(c).data();
            for (int y = 0; y < L.out.h; ++y) {
              S* dr = dst + (y / 2) * L.in.w;
              for (int xx = 0; xx < L.out.w; ++xx) dr[xx / 2] += *src++;
            }
          }
          d = std::move(dn);
          break;
        }
        case LayerKind::kRelu:
          d = (in.array() > S(0)).select(d, S(0));
          break;
        case LayerKind::kSigmoid: {
          const Mat s = in.unaryExpr([](S v) { return S(1) / (S(1) + std::exp(-v)); });
          d = d.cwiseProduct(s.cwiseProduct((S(1) - s.array()).matrix()));
          break;
        }
      }
    }
  }

  Architecture arch_;
  ResolvedArchitecture layers_;
  Vec params_;
  Cache enc_cache_, dec_cache_;
};

}  // namespace uwpose
