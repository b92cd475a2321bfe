// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#define EIGEN_DONT_PARALLELIZE
#include "nccnet/convnet.hpp"

#include <Eigen/Core>
#include <cmath>
#include <random>

#include "nccnet/preprocess.hpp"

namespace nccnet {

void validate(const NetConfig& cfg) {
  if (cfg.levels < 1) throw ArgumentError("NetConfig.levels must be >= 1");
  if (cfg.levels > 8) throw ArgumentError("NetConfig.levels must be <= 8");
  if (cfg.base_channels < 1) throw ArgumentError("NetConfig.base_channels must be >= 1");
  if (cfg.kernel != 3) throw ArgumentError("NetConfig.kernel is fixed at 3");
  if (cfg.block_convs != 3) throw ArgumentError("NetConfig.block_convs is fixed at 3");
}

namespace {

struct ConvDesc {
  std::string name;
  int in = 0;
  int out = 0;
};

std::vector<ConvDesc> conv_list(const NetConfig& cfg) {
  std::vector<ConvDesc> convs;
  for (int k = 0; k < cfg.levels; ++k) {
    const int prev = k == 0 ? 1 : channels_at(cfg, k - 1);
    const int c = channels_at(cfg, k);
    for (int j = 0; j < 3; ++j)
      convs.push_back({"enc" + std::to_string(k) + ".conv" + std::to_string(j), j == 0 ? prev : c, c});
  }
  for (int k = cfg.levels - 2; k >= 0; --k) {
    const int c = channels_at(cfg, k);
    convs.push_back({"up" + std::to_string(k) + ".conv", channels_at(cfg, k + 1), c});
    for (int j = 0; j < 3; ++j) convs.push_back({"dec" + std::to_string(k) + ".conv" + std::to_string(j), c, c});
  }
  convs.push_back({"out.conv", channels_at(cfg, 0), 1});
  return convs;
}

std::size_t enc_conv(int level, int j) { return static_cast<std::size_t>(3 * level + j); }
std::size_t up_conv(const NetConfig& cfg, int level) {
  return static_cast<std::size_t>(3 * cfg.levels + 4 * (cfg.levels - 2 - level));
}
std::size_t dec_conv(const NetConfig& cfg, int level, int j) { return up_conv(cfg, level) + 1 + j; }
std::size_t out_conv(const NetConfig& cfg) { return static_cast<std::size_t>(3 * cfg.levels + 4 * (cfg.levels - 1)); }

// Uniform in [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<TensorInfo> param_layout(const NetConfig& cfg) {
  validate(cfg);
  std::vector<TensorInfo> layout;
  std::size_t offset = 0;
  for (const ConvDesc& c : conv_list(cfg)) {
    const std::size_t wn = static_cast<std::size_t>(c.out) * c.in * 9;
    layout.push_back({c.name + ".w", {c.out, c.in, 3, 3}, offset, wn});
    offset += wn;
    layout.push_back({c.name + ".b", {c.out}, offset, static_cast<std::size_t>(c.out)});
    offset += c.out;
  }
  return layout;
}

std::size_t param_count(const NetConfig& cfg) {
  const auto layout = param_layout(cfg);
  return layout.back().offset + layout.back().count;
}

NetParams<float> zero_params(const NetConfig& cfg) {
  NetParams<float> p{cfg, param_layout(cfg), {}};
  p.values.assign(param_count(cfg), 0.0f);
  return p;
}

NetParams<float> init_params(const NetConfig& cfg) {
  NetParams<float> p = zero_params(cfg);
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t t = 0; t < p.layout.size(); t += 2) {
    const TensorInfo& info = p.layout[t];
    const double scale = 1.0 / std::sqrt(static_cast<double>(info.shape[1]) * 9.0);
    for (float& v : p.tensor(t)) v = static_cast<float>((2.0 * unit_uniform(rng) - 1.0) * scale);
  }
  return p;
}

namespace layers {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
std::vector<T> im2col(const Tensor<T>& in) {
  const int h = in.height, w = in.width;
  const std::size_t hw = in.plane();
  std::vector<T> cols(static_cast<std::size_t>(in.channels) * 9 * hw, T(0));
  for (int c = 0; c < in.channels; ++c) {
    const T* src = in.channel(c);
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = cols.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        const int dy = ky - 1, dx = kx - 1;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
          const T* s = src + static_cast<std::size_t>(y + dy) * w + dx;
          T* d = dst + static_cast<std::size_t>(y) * w;
          for (int x = x0; x < x1; ++x) d[x] = s[x];
        }
      }
  }
  return cols;
}

template <typename T>
void col2im_add(const std::vector<T>& cols, Tensor<T>& out) {
  const int h = out.height, w = out.width;
  const std::size_t hw = out.plane();
  for (int c = 0; c < out.channels; ++c) {
    T* dst = out.channel(c);
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = cols.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        const int dy = ky - 1, dx = kx - 1;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
          const T* s = src + static_cast<std::size_t>(y) * w;
          T* d = dst + static_cast<std::size_t>(y + dy) * w + dx;
          for (int x = x0; x < x1; ++x) d[x] += s[x];
        }
      }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv3x3(const Tensor<T>& in, std::span<const T> weights, std::span<const T> bias, int out_channels) {
  const std::size_t k = static_cast<std::size_t>(in.channels) * 9;
  if (weights.size() != out_channels * k || bias.size() != static_cast<std::size_t>(out_channels))
    throw ShapeError("conv3x3: weight/bias size does not match channels");
  const std::vector<T> cols = im2col(in);
  Tensor<T> out(out_channels, in.height, in.width);
  const auto hw = static_cast<Eigen::Index>(in.plane());
  Eigen::Map<const MatR<T>> wm(weights.data(), out_channels, static_cast<Eigen::Index>(k));
  Eigen::Map<const MatR<T>> cm(cols.data(), static_cast<Eigen::Index>(k), hw);
  Eigen::Map<MatR<T>> om(out.data.data(), out_channels, hw);
  om.noalias() = wm * cm;
  for (int o = 0; o < out_channels; ++o) om.row(o).array() += bias[o];
  return out;
}

template <typename T>
Tensor<T> conv3x3_reference(const Tensor<T>& in, std::span<const T> weights, std::span<const T> bias,
                            int out_channels) {
  if (weights.size() != static_cast<std::size_t>(out_channels) * in.channels * 9 ||
      bias.size() != static_cast<std::size_t>(out_channels))
    throw ShapeError("conv3x3_reference: weight/bias size does not match channels");
  Tensor<T> out(out_channels, in.height, in.width);
  for (int o = 0; o < out_channels; ++o)
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        T acc = bias[o];
        for (int c = 0; c < in.channels; ++c)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int sy = y + ky - 1, sx = x + kx - 1;
              if (sy < 0 || sy >= in.height || sx < 0 || sx >= in.width) continue;
              acc += weights[((static_cast<std::size_t>(o) * in.channels + c) * 3 + ky) * 3 + kx] *
                     in.channel(c)[static_cast<std::size_t>(sy) * in.width + sx];
            }
        out.channel(o)[static_cast<std::size_t>(y) * in.width + x] = acc;
      }
  return out;
}

template <typename T>
Tensor<T> conv3x3_backward(const Tensor<T>& in, std::span<const T> weights, const Tensor<T>& grad_out,
                           std::span<T> grad_weights, std::span<T> grad_bias) {
  const int oc = grad_out.channels;
  const std::size_t k = static_cast<std::size_t>(in.channels) * 9;
  if (grad_out.height != in.height || grad_out.width != in.width || weights.size() != oc * k ||
      grad_weights.size() != oc * k || grad_bias.size() != static_cast<std::size_t>(oc))
    throw ShapeError("conv3x3_backward: shape mismatch");
  const std::vector<T> cols = im2col(in);
  const auto hw = static_cast<Eigen::Index>(in.plane());
  const auto ki = static_cast<Eigen::Index>(k);
  Eigen::Map<const MatR<T>> wm(weights.data(), oc, ki);
  Eigen::Map<const MatR<T>> cm(cols.data(), ki, hw);
  Eigen::Map<const MatR<T>> gm(grad_out.data.data(), oc, hw);
  Eigen::Map<MatR<T>> gw(grad_weights.data(), oc, ki);
  gw.noalias() += gm * cm.transpose();
  // Plain loop: Eigen's vectorized sum peels to the first aligned address,
  // which makes the rounding depend on where the allocator put the buffer.
  for (int o = 0; o < oc; ++o) {
    const T* row = grad_out.channel(o);
    T s = 0;
    for (Eigen::Index i = 0; i < hw; ++i) s += row[i];
    grad_bias[o] += s;
  }
  std::vector<T> gcols(k * in.plane());
  Eigen::Map<MatR<T>> gc(gcols.data(), ki, hw);
  gc.noalias() = wm.transpose() * gm;
  Tensor<T> grad_in(in.channels, in.height, in.width);
  col2im_add(gcols, grad_in);
  return grad_in;
}

template <typename T>
Tensor<T> maxpool2(const Tensor<T>& in, std::vector<int>& argmax) {
  if (in.height % 2 || in.width % 2) throw ShapeError("maxpool2 needs even extents");
  Tensor<T> out(in.channels, in.height / 2, in.width / 2);
  argmax.assign(out.data.size(), 0);
  std::size_t idx = 0;
  for (int c = 0; c < in.channels; ++c) {
    const T* src = in.channel(c);
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x, ++idx) {
        int best = (2 * y) * in.width + 2 * x;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int i = (2 * y + dy) * in.width + 2 * x + dx;
            if (src[i] > src[best]) best = i;
          }
        out.data[idx] = src[best];
        argmax[idx] = best;
      }
  }
  return out;
}

template <typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& grad_out, const std::vector<int>& argmax, int in_h, int in_w) {
  Tensor<T> grad_in(grad_out.channels, in_h, in_w);
  std::size_t idx = 0;
  for (int c = 0; c < grad_out.channels; ++c) {
    T* dst = grad_in.channel(c);
    for (std::size_t i = 0; i < grad_out.plane(); ++i, ++idx) dst[argmax[idx]] += grad_out.data[idx];
  }
  return grad_in;
}

template <typename T>
Tensor<T> upsample2(const Tensor<T>& in) {
  Tensor<T> out(in.channels, in.height * 2, in.width * 2);
  for (int c = 0; c < in.channels; ++c) {
    const T* src = in.channel(c);
    T* dst = out.channel(c);
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        dst[static_cast<std::size_t>(y) * out.width + x] = src[static_cast<std::size_t>(y / 2) * in.width + x / 2];
  }
  return out;
}

template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_out) {
  Tensor<T> grad_in(grad_out.channels, grad_out.height / 2, grad_out.width / 2);
  for (int c = 0; c < grad_out.channels; ++c) {
    const T* src = grad_out.channel(c);
    T* dst = grad_in.channel(c);
    for (int y = 0; y < grad_out.height; ++y)
      for (int x = 0; x < grad_out.width; ++x)
        dst[static_cast<std::size_t>(y / 2) * grad_in.width + x / 2] += src[static_cast<std::size_t>(y) * grad_out.width + x];
  }
  return grad_in;
}

}  // namespace layers

namespace {

template <typename T>
struct Net {
  const NetParams<T>& p;

  std::span<const T> w(std::size_t conv) const { return p.tensor(2 * conv); }
  std::span<const T> b(std::size_t conv) const { return p.tensor(2 * conv + 1); }
  int out_ch(std::size_t conv) const { return p.layout[2 * conv].shape[0]; }

  Tensor<T> conv(std::size_t idx, const Tensor<T>& in) const { return layers::conv3x3(in, w(idx), b(idx), out_ch(idx)); }

  static void tanh_inplace(Tensor<T>& t) {
    for (T& v : t.data) v = std::tanh(v);
  }

  // a = tanh(c0 x); b = tanh(c1 a); out = tanh(c2 b + a)
  typename Activations<T>::Block block(std::size_t first, Tensor<T> x) const {
    typename Activations<T>::Block blk;
    blk.a = conv(first, x);
    tanh_inplace(blk.a);
    blk.b = conv(first + 1, blk.a);
    tanh_inplace(blk.b);
    blk.out = conv(first + 2, blk.b);
    for (std::size_t i = 0; i < blk.out.data.size(); ++i) blk.out.data[i] = std::tanh(blk.out.data[i] + blk.a.data[i]);
    blk.input = std::move(x);
    return blk;
  }
};

template <typename T>
void tanh_backward_inplace(Tensor<T>& grad, const Tensor<T>& y) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] *= T(1) - y.data[i] * y.data[i];
}

template <typename T>
Tensor<T> conv_backward(const NetParams<T>& p, std::size_t conv, const Tensor<T>& in, const Tensor<T>& grad_out,
                        std::span<T> grads) {
  const TensorInfo& wi = p.layout[2 * conv];
  const TensorInfo& bi = p.layout[2 * conv + 1];
  return layers::conv3x3_backward(in, p.tensor(2 * conv), grad_out, grads.subspan(wi.offset, wi.count),
                                  grads.subspan(bi.offset, bi.count));
}

template <typename T>
Tensor<T> block_backward(const NetParams<T>& p, std::size_t first, const typename Activations<T>::Block& blk,
                         Tensor<T> grad_out, std::span<T> grads) {
  tanh_backward_inplace(grad_out, blk.out);  // dz
  Tensor<T> grad_a = grad_out;               // skip branch
  Tensor<T> grad_b = conv_backward(p, first + 2, blk.b, grad_out, grads);
  tanh_backward_inplace(grad_b, blk.b);
  Tensor<T> ga2 = conv_backward(p, first + 1, blk.a, grad_b, grads);
  for (std::size_t i = 0; i < grad_a.data.size(); ++i) grad_a.data[i] += ga2.data[i];
  tanh_backward_inplace(grad_a, blk.a);
  return conv_backward(p, first, blk.input, grad_a, grads);
}

template <typename T>
void check_input(const NetParams<T>& params, const BasicRaster<T>& img) {
  if (img.empty()) throw ShapeError("forward: empty input");
  if (params.values.size() != param_count(params.config)) throw ShapeError("forward: parameter count mismatch");
  const int m = size_multiple(params.config);
  if (img.width() % m || img.height() % m)
    throw ShapeError("forward: input " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                     " must have extents divisible by " + std::to_string(m));
}

}  // namespace

template <typename T>
ForwardResult<T> forward(const NetParams<T>& params, const BasicRaster<T>& img) {
  check_input(params, img);
  const NetConfig& cfg = params.config;
  const Net<T> net{params};
  ForwardResult<T> res;
  Activations<T>& acts = res.acts;
  acts.in_width = img.width();
  acts.in_height = img.height();
  acts.input = Tensor<T>(1, img.height(), img.width());
  for (std::size_t i = 0; i < img.size(); ++i) acts.input.data[i] = T(2) * img.pixels()[i] - T(1);

  const int L = cfg.levels;
  acts.enc.reserve(L);
  acts.pool_argmax.resize(L > 1 ? L - 1 : 0);
  Tensor<T> x = acts.input;
  for (int k = 0; k < L; ++k) {
    acts.enc.push_back(net.block(enc_conv(k, 0), std::move(x)));
    if (k + 1 < L) x = layers::maxpool2(acts.enc.back().out, acts.pool_argmax[k]);
  }
  acts.up_input.resize(L > 1 ? L - 1 : 0);
  acts.up_out.resize(L > 1 ? L - 1 : 0);
  acts.dec.resize(L > 1 ? L - 1 : 0);
  const Tensor<T>* below = &acts.enc[L - 1].out;
  for (int k = L - 2; k >= 0; --k) {
    acts.up_input[k] = layers::upsample2(*below);
    Tensor<T> u = net.conv(up_conv(cfg, k), acts.up_input[k]);
    Net<T>::tanh_inplace(u);
    Tensor<T> s = u;
    const Tensor<T>& e = acts.enc[k].out;
    for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] += e.data[i];
    acts.up_out[k] = std::move(u);
    acts.dec[k] = net.block(dec_conv(cfg, k, 0), std::move(s));
    below = &acts.dec[k].out;
  }
  acts.final_input = *below;
  Tensor<T> out = net.conv(out_conv(cfg), acts.final_input);
  res.out = BasicRaster<T>(img.width(), img.height(), std::move(out.data));
  return res;
}

template <typename T>
BasicRaster<T> infer(const NetParams<T>& params, const BasicRaster<T>& img) {
  return forward(params, img).out;
}

template <typename T>
BasicRaster<T> backward(const NetParams<T>& params, const Activations<T>& acts, const BasicRaster<T>& grad_out,
                        std::span<T> grads) {
  if (grad_out.width() != acts.in_width || grad_out.height() != acts.in_height)
    throw ShapeError("backward: grad_out dims differ from the forward output");
  if (grads.size() != params.values.size()) throw ShapeError("backward: gradient buffer has the wrong size");
  const NetConfig& cfg = params.config;
  const int L = cfg.levels;

  Tensor<T> g(1, grad_out.height(), grad_out.width());
  std::copy(grad_out.pixels().begin(), grad_out.pixels().end(), g.data.begin());
  Tensor<T> grad_below = conv_backward(params, out_conv(cfg), acts.final_input, g, grads);

  std::vector<Tensor<T>> grad_enc(L);
  for (int k = 0; k <= L - 2; ++k) {
    Tensor<T> gs = block_backward(params, dec_conv(cfg, k, 0), acts.dec[k], std::move(grad_below), grads);
    grad_enc[k] = gs;  // the sum passes its gradient to both operands
    tanh_backward_inplace(gs, acts.up_out[k]);
    Tensor<T> gup = conv_backward(params, up_conv(cfg, k), acts.up_input[k], gs, grads);
    grad_below = layers::upsample2_backward(gup);
  }
  if (grad_enc[L - 1].data.empty()) {
    grad_enc[L - 1] = std::move(grad_below);
  } else {
    for (std::size_t i = 0; i < grad_below.data.size(); ++i) grad_enc[L - 1].data[i] += grad_below.data[i];
  }

  Tensor<T> grad_x;
  for (int k = L - 1; k >= 0; --k) {
    grad_x = block_backward(params, enc_conv(k, 0), acts.enc[k], std::move(grad_enc[k]), grads);
    if (k > 0) {
      Tensor<T> gp = layers::maxpool2_backward(grad_x, acts.pool_argmax[k - 1], acts.enc[k - 1].out.height,
                                               acts.enc[k - 1].out.width);
      for (std::size_t i = 0; i < gp.data.size(); ++i) grad_enc[k - 1].data[i] += gp.data[i];
    }
  }
  BasicRaster<T> grad_in(acts.in_width, acts.in_height);
  for (std::size_t i = 0; i < grad_in.size(); ++i) grad_in.pixels()[i] = T(2) * grad_x.data[i];
  return grad_in;
}

namespace {

// Tile origins along one axis; each is a multiple of `align`.
std::vector<int> tile_origins(int extent, int tile, int step) {
  std::vector<int> origins;
  if (extent <= tile) return {0};
  for (int p = 0;; p += step) {
    if (p + tile >= extent) {
      origins.push_back(extent - tile);
      break;
    }
    origins.push_back(p);
  }
  return origins;
}

std::vector<double> axis_weights(int tile, int overlap, bool ramp_lo, bool ramp_hi) {
  std::vector<double> w(tile, 1.0);
  if (overlap <= 0) return w;
  for (int i = 0; i < tile; ++i) {
    if (ramp_lo) w[i] = std::min(w[i], (i + 0.5) / overlap);
    if (ramp_hi) w[i] = std::min(w[i], (tile - i - 0.5) / overlap);
  }
  return w;
}

}  // namespace

template <typename T>
BasicRaster<T> apply_full_image(const NetParams<T>& params, const BasicRaster<T>& img, int tile, int overlap) {
  if (img.empty()) throw ShapeError("apply_full_image: empty input");
  const int m = size_multiple(params.config);
  if (tile < m || tile % m) throw ShapeError("apply_full_image: tile must be a positive multiple of " + std::to_string(m));
  if (overlap < 0 || 2 * overlap >= tile) throw ArgumentError("apply_full_image: overlap must be in [0, tile/2)");
  if (overlap % m) overlap += m - overlap % m;

  // Reflect-pad to a multiple of the pooling stride; cropped back at the end.
  const int pw = (img.width() + m - 1) / m * m;
  const int ph = (img.height() + m - 1) / m * m;
  BasicRaster<T> padded(pw, ph);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      padded.at(x, y) = img.at(reflect_index(x, img.width()), reflect_index(y, img.height()));

  BasicRaster<T> full_out(pw, ph);
  if (pw <= tile && ph <= tile) {
    full_out = infer(params, padded);
  } else {
    const int tw = std::min(tile, pw), th = std::min(tile, ph);
    const std::vector<int> xs = tile_origins(pw, tw, tw - overlap);
    const std::vector<int> ys = tile_origins(ph, th, th - overlap);
    std::vector<BasicRaster<T>> outs(xs.size() * ys.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(outs.size()); ++t) {
      const int x0 = xs[t % xs.size()], y0 = ys[t / xs.size()];
      outs[t] = infer(params, crop_rect(padded, x0, y0, tw, th));
    }
    std::vector<double> acc(padded.size(), 0.0), wsum(padded.size(), 0.0);
    for (std::size_t t = 0; t < outs.size(); ++t) {
      const std::size_t ix = t % xs.size(), iy = t / xs.size();
      const auto wx = axis_weights(tw, overlap, ix > 0, ix + 1 < xs.size());
      const auto wy = axis_weights(th, overlap, iy > 0, iy + 1 < ys.size());
      for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x) {
          const std::size_t k = static_cast<std::size_t>(ys[iy] + y) * pw + xs[ix] + x;
          const double wgt = wx[x] * wy[y];
          acc[k] += wgt * outs[t].at(x, y);
          wsum[k] += wgt;
        }
    }
    for (std::size_t k = 0; k < acc.size(); ++k) full_out.pixels()[k] = static_cast<T>(acc[k] / wsum[k]);
  }
  if (pw == img.width() && ph == img.height()) return full_out;
  return crop_rect(full_out, 0, 0, img.width(), img.height());
}

template ForwardResult<float> forward(const NetParams<float>&, const BasicRaster<float>&);
template ForwardResult<double> forward(const NetParams<double>&, const BasicRaster<double>&);
template BasicRaster<float> infer(const NetParams<float>&, const BasicRaster<float>&);
template BasicRaster<double> infer(const NetParams<double>&, const BasicRaster<double>&);
template BasicRaster<float> backward(const NetParams<float>&, const Activations<float>&, const BasicRaster<float>&,
                                     std::span<float>);
template BasicRaster<double> backward(const NetParams<double>&, const Activations<double>&,
                                      const BasicRaster<double>&, std::span<double>);
template BasicRaster<float> apply_full_image(const NetParams<float>&, const BasicRaster<float>&, int, int);
template BasicRaster<double> apply_full_image(const NetParams<double>&, const BasicRaster<double>&, int, int);

namespace layers {
template Tensor<float> conv3x3(const Tensor<float>&, std::span<const float>, std::span<const float>, int);
template Tensor<double> conv3x3(const Tensor<double>&, std::span<const double>, std::span<const double>, int);
template Tensor<float> conv3x3_reference(const Tensor<float>&, std::span<const float>, std::span<const float>, int);
template Tensor<double> conv3x3_reference(const Tensor<double>&, std::span<const double>, std::span<const double>,
                                          int);
template Tensor<float> conv3x3_backward(const Tensor<float>&, std::span<const float>, const Tensor<float>&,
                                        std::span<float>, std::span<float>);
template Tensor<double> conv3x3_backward(const Tensor<double>&, std::span<const double>, const Tensor<double>&,
                                         std::span<double>, std::span<double>);
template Tensor<float> maxpool2(const Tensor<float>&, std::vector<int>&);
template Tensor<double> maxpool2(const Tensor<double>&, std::vector<int>&);
template Tensor<float> maxpool2_backward(const Tensor<float>&, const std::vector<int>&, int, int);
template Tensor<double> maxpool2_backward(const Tensor<double>&, const std::vector<int>&, int, int);
template Tensor<float> upsample2(const Tensor<float>&);
template Tensor<double> upsample2(const Tensor<double>&);
template Tensor<float> upsample2_backward(const Tensor<float>&);
template Tensor<double> upsample2_backward(const Tensor<double>&);
}  // namespace layers

}  // namespace nccnet
