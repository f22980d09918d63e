// src/model.cc

// Copyright 2026  The vocart Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "vocart/model.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vocart/errors.h"
#include "vocart/rng.h"
#include "vocart/stft.h"

namespace vocart {

// ---------------------------------------------------------------------------
// Configuration

ModelConfig ModelConfig::Tiny(int num_vocoder_classes) {
  ModelConfig c;
  c.input_length = 16000;
  c.sinc_filters = 4;
  c.sinc_kernel = 129;
  c.block_channels = {4, 8};
  c.blocks_per_group = {2, 2};
  c.gru_hidden = 16;
  c.embedding_dim = 16;
  c.num_vocoder_classes = num_vocoder_classes;
  return c;
}

ModelConfig ModelConfig::Paper(int num_vocoder_classes) {
  ModelConfig c;
  c.num_vocoder_classes = num_vocoder_classes;
  return c;
}

int ModelConfig::SequenceLength() const {
  long t = (input_length - sinc_kernel + 1) / 3;
  for (int n : blocks_per_group)
    for (int i = 0; i < n; ++i) t /= 3;
  return static_cast<int>(t);
}

void ModelConfig::Validate() const {
  if (num_vocoder_classes < 3)
    throw ArgumentError(
        "num_vocoder_classes must be >= 3 (real plus at least two vocoders)");
  if (sinc_filters < 1 || sinc_kernel < 1 || sinc_kernel % 2 == 0)
    throw ArgumentError("sinc front end needs >= 1 filter and an odd kernel");
  if (input_length < sinc_kernel)
    throw ArgumentError("input_length must be >= sinc_kernel");
  if (block_channels.empty() || block_channels.size() != blocks_per_group.size())
    throw ArgumentError("block_channels and blocks_per_group must match");
  for (size_t g = 0; g < block_channels.size(); ++g)
    if (block_channels[g] < 1 || blocks_per_group[g] < 1)
      throw ArgumentError("block groups need positive channels and depth");
  if (gru_hidden < 1 || embedding_dim < 1)
    throw ArgumentError("gru_hidden and embedding_dim must be positive");
  if (sample_rate <= 0) throw ArgumentError("sample_rate must be positive");
  if (SequenceLength() < 1)
    throw ArgumentError("input_length too short for the pooling depth");
}

ParamGroup Parameter::group() const {
  if (name.rfind("binary_head.", 0) == 0) return ParamGroup::kBinaryHead;
  if (name.rfind("vocoder_head.", 0) == 0) return ParamGroup::kVocoderHead;
  return ParamGroup::kExtractor;
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Rows Softmax(const Rows &logits) {
  Rows out(logits.rows, logits.cols);
  for (size_t r = 0; r < logits.rows; ++r) {
    auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (size_t c = 0; c < logits.cols; ++c) {
      out.at(r, c) = std::exp(row[c] - mx);
      sum += out.at(r, c);
    }
    for (size_t c = 0; c < logits.cols; ++c) out.at(r, c) /= sum;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Layers. Each holds indices into the model's parameter and buffer arrays, so
// copying the model copies the layer table unchanged.

namespace {

constexpr double kLeakySlope = 0.3;
constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

struct Act {
  size_t B = 0, C = 0, T = 0;
  std::vector<double> v;

  Act() = default;
  Act(size_t b, size_t c, size_t t) : B(b), C(c), T(t), v(b * c * t, 0.0) {}
  double *row(size_t b, size_t c) { return v.data() + (b * C + c) * T; }
  const double *row(size_t b, size_t c) const {
    return v.data() + (b * C + c) * T;
  }
};

using Params = std::vector<Parameter>;

size_t AddParam(Params &ps, std::string name, std::vector<size_t> shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  Parameter p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  p.value.assign(n, 0.0);
  p.grad.assign(n, 0.0);
  ps.push_back(std::move(p));
  return ps.size() - 1;
}

void FillUniform(Parameter &p, double bound, Rng &rng) {
  for (double &v : p.value) v = rng.Uniform(-bound, bound);
}

struct SincCache {
  Batch x;
  std::vector<double> filters;
  std::vector<uint32_t> idx;  // argmax position in the conv output
  std::vector<int8_t> sign;   // sign of the conv output at that position
};

struct BnCache {
  Act xhat;
  std::vector<double> inv_std;
  bool train = false;
};

struct ActCache {
  std::vector<uint8_t> positive;
};

struct ConvCache {
  Act x;
};

struct PoolCache {
  std::vector<uint32_t> idx;
  size_t t_in = 0;
};

struct FmsCache {
  Act m;
  Rows s, g;
};

struct GruCache {
  Act x;
  size_t steps = 0;
  std::vector<double> h_prev, r, z, n, ghn;  // each B x steps x H
};

struct LinearCache {
  Rows x;
};

// Band-pass sinc filters with learnable low cutoff and bandwidth, in cycles
// per sample: f1 = |low|, f2 = |low| + |band|, Hamming windowed. Followed by
// |.| and non-overlapping max pooling by 3.
struct SincPool {
  size_t low = 0, band = 0;
  size_t filters = 0, kernel = 0;

  std::vector<double> Window() const {
    std::vector<double> w(kernel);
    for (size_t i = 0; i < kernel; ++i)
      w[i] = kernel == 1 ? 1.0
                         : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i /
                                                  (kernel - 1.0));
    return w;
  }

  std::vector<double> Filters(const Params &ps) const {
    std::vector<double> h(filters * kernel);
    const std::vector<double> w = Window();
    const long half = static_cast<long>(kernel / 2);
    for (size_t f = 0; f < filters; ++f) {
      const double f1 = std::abs(ps[low].value[f]);
      const double f2 = f1 + std::abs(ps[band].value[f]);
      for (size_t i = 0; i < kernel; ++i) {
        const long n = static_cast<long>(i) - half;
        double g;
        if (n == 0) {
          g = 2.0 * (f2 - f1);
        } else {
          const double pn = std::numbers::pi * n;
          g = (std::sin(2.0 * pn * f2) - std::sin(2.0 * pn * f1)) / pn;
        }
        h[f * kernel + i] = w[i] * g;
      }
    }
    return h;
  }

  Act Forward(const Batch &x, const Params &ps, SincCache *cache) const {
    const std::vector<double> h = Filters(ps);
    const size_t t1 = x.length - kernel + 1;
    const size_t t0 = t1 / 3;
    Act out(x.size, filters, t0);
    if (cache) {
      cache->x = x;
      cache->filters = h;
      cache->idx.assign(x.size * filters * t0, 0);
      cache->sign.assign(x.size * filters * t0, 0);
    }
    std::vector<double> y(t1);
    for (size_t b = 0; b < x.size; ++b) {
      const double *xr = x.data.data() + b * x.length;
      for (size_t f = 0; f < filters; ++f) {
        std::fill(y.begin(), y.end(), 0.0);
        const double *hf = h.data() + f * kernel;
        for (size_t k = 0; k < kernel; ++k) {
          const double hk = hf[k];
          const double *xs = xr + k;
          for (size_t t = 0; t < t1; ++t) y[t] += hk * xs[t];
        }
        double *o = out.row(b, f);
        const size_t base = (b * filters + f) * t0;
        for (size_t p = 0; p < t0; ++p) {
          size_t best = 3 * p;
          for (size_t j = 3 * p + 1; j < 3 * p + 3; ++j)
            if (std::abs(y[j]) > std::abs(y[best])) best = j;
          o[p] = std::abs(y[best]);
          if (cache) {
            cache->idx[base + p] = static_cast<uint32_t>(best);
            cache->sign[base + p] = y[best] > 0 ? 1 : (y[best] < 0 ? -1 : 0);
          }
        }
      }
    }
    return out;
  }

  void Backward(const Act &dy, const SincCache &c, Params &ps) const {
    std::vector<double> dh(filters * kernel, 0.0);
    const size_t t0 = dy.T;
    for (size_t b = 0; b < dy.B; ++b) {
      const double *xr = c.x.data.data() + b * c.x.length;
      for (size_t f = 0; f < filters; ++f) {
        const double *g = dy.row(b, f);
        double *dhf = dh.data() + f * kernel;
        const size_t base = (b * filters + f) * t0;
        for (size_t p = 0; p < t0; ++p) {
          const double gv = g[p] * c.sign[base + p];
          if (gv == 0.0) continue;
          const double *xs = xr + c.idx[base + p];
          for (size_t k = 0; k < kernel; ++k) dhf[k] += gv * xs[k];
        }
      }
    }
    const std::vector<double> w = Window();
    const long half = static_cast<long>(kernel / 2);
    for (size_t f = 0; f < filters; ++f) {
      const double lo = ps[low].value[f], bw = ps[band].value[f];
      const double f1 = std::abs(lo);
      const double f2 = f1 + std::abs(bw);
      double d_f1 = 0.0, d_f2 = 0.0;
      for (size_t i = 0; i < kernel; ++i) {
        const double n = static_cast<double>(static_cast<long>(i) - half);
        const double gi = dh[f * kernel + i] * w[i];
        d_f2 += gi * 2.0 * std::cos(2.0 * std::numbers::pi * f2 * n);
        d_f1 -= gi * 2.0 * std::cos(2.0 * std::numbers::pi * f1 * n);
      }
      const double s_lo = lo > 0 ? 1.0 : (lo < 0 ? -1.0 : 0.0);
      const double s_bw = bw > 0 ? 1.0 : (bw < 0 ? -1.0 : 0.0);
      ps[low].grad[f] += s_lo * (d_f1 + d_f2);
      ps[band].grad[f] += s_bw * d_f2;
    }
  }
};

struct BatchNorm {
  size_t gamma = 0, beta = 0;   // params
  size_t mean = 0, var = 0;     // buffers
  size_t channels = 0;

  Act Forward(const Act &x, const Params &ps, Params &bufs, bool train,
              bool update_stats, BnCache *cache) const {
    Act y(x.B, x.C, x.T);
    std::vector<double> inv_std(x.C);
    Act xhat(x.B, x.C, x.T);
    const double n = static_cast<double>(x.B * x.T);
    for (size_t c = 0; c < x.C; ++c) {
      double mu, var;
      if (train) {
        double s = 0.0;
        for (size_t b = 0; b < x.B; ++b) {
          const double *r = x.row(b, c);
          for (size_t t = 0; t < x.T; ++t) s += r[t];
        }
        mu = s / n;
        double ss = 0.0;
        for (size_t b = 0; b < x.B; ++b) {
          const double *r = x.row(b, c);
          for (size_t t = 0; t < x.T; ++t) ss += (r[t] - mu) * (r[t] - mu);
        }
        var = ss / n;
        if (update_stats) {
          bufs[mean].value[c] =
              (1 - kBnMomentum) * bufs[mean].value[c] + kBnMomentum * mu;
          const double unbiased = n > 1 ? ss / (n - 1) : var;
          bufs[this->var].value[c] =
              (1 - kBnMomentum) * bufs[this->var].value[c] + kBnMomentum * unbiased;
        }
      } else {
        mu = bufs[mean].value[c];
        var = bufs[this->var].value[c];
      }
      inv_std[c] = 1.0 / std::sqrt(var + kBnEps);
      const double gm = ps[gamma].value[c], bt = ps[beta].value[c];
      for (size_t b = 0; b < x.B; ++b) {
        const double *r = x.row(b, c);
        double *xh = xhat.row(b, c), *o = y.row(b, c);
        for (size_t t = 0; t < x.T; ++t) {
          xh[t] = (r[t] - mu) * inv_std[c];
          o[t] = gm * xh[t] + bt;
        }
      }
    }
    if (cache) {
      cache->xhat = std::move(xhat);
      cache->inv_std = std::move(inv_std);
      cache->train = train;
    }
    return y;
  }

  Act Backward(const Act &dy, const BnCache &c, Params &ps) const {
    Act dx(dy.B, dy.C, dy.T);
    const double n = static_cast<double>(dy.B * dy.T);
    for (size_t ch = 0; ch < dy.C; ++ch) {
      double sdy = 0.0, sdyx = 0.0;
      for (size_t b = 0; b < dy.B; ++b) {
        const double *g = dy.row(b, ch), *xh = c.xhat.row(b, ch);
        for (size_t t = 0; t < dy.T; ++t) {
          sdy += g[t];
          sdyx += g[t] * xh[t];
        }
      }
      ps[gamma].grad[ch] += sdyx;
      ps[beta].grad[ch] += sdy;
      const double gm = ps[gamma].value[ch];
      const double k = gm * c.inv_std[ch];
      for (size_t b = 0; b < dy.B; ++b) {
        const double *g = dy.row(b, ch), *xh = c.xhat.row(b, ch);
        double *o = dx.row(b, ch);
        if (c.train) {
          for (size_t t = 0; t < dy.T; ++t)
            o[t] = k / n * (n * g[t] - sdy - xh[t] * sdyx);
        } else {
          for (size_t t = 0; t < dy.T; ++t) o[t] = k * g[t];
        }
      }
    }
    return dx;
  }
};

Act LeakyRelu(const Act &x, ActCache *cache) {
  Act y = x;
  if (cache) cache->positive.resize(x.v.size());
  for (size_t i = 0; i < y.v.size(); ++i) {
    const bool pos = x.v[i] > 0.0;
    if (!pos) y.v[i] *= kLeakySlope;
    if (cache) cache->positive[i] = pos;
  }
  return y;
}

Act LeakyReluBackward(const Act &dy, const ActCache &c) {
  Act dx = dy;
  for (size_t i = 0; i < dx.v.size(); ++i)
    if (!c.positive[i]) dx.v[i] *= kLeakySlope;
  return dx;
}

// 1-D convolution, stride 1, "same" zero padding for odd kernels.
struct Conv1d {
  size_t weight = 0, bias = 0;
  size_t in = 0, out = 0, kernel = 3;

  Act Forward(const Act &x, const Params &ps, ConvCache *cache) const {
    Act y(x.B, out, x.T);
    const long pad = static_cast<long>(kernel / 2);
    const long T = static_cast<long>(x.T);
    const std::vector<double> &w = ps[weight].value;
    for (size_t b = 0; b < x.B; ++b) {
      for (size_t o = 0; o < out; ++o) {
        double *yr = y.row(b, o);
        std::fill(yr, yr + x.T, ps[bias].value[o]);
        for (size_t i = 0; i < in; ++i) {
          const double *xr = x.row(b, i);
          for (size_t k = 0; k < kernel; ++k) {
            const double wv = w[(o * in + i) * kernel + k];
            const long s = static_cast<long>(k) - pad;
            const long lo = std::max(0L, -s), hi = std::min(T, T - s);
            for (long t = lo; t < hi; ++t) yr[t] += wv * xr[t + s];
          }
        }
      }
    }
    if (cache) cache->x = x;
    return y;
  }

  Act Backward(const Act &dy, const ConvCache &c, Params &ps) const {
    const Act &x = c.x;
    Act dx(x.B, in, x.T);
    const long pad = static_cast<long>(kernel / 2);
    const long T = static_cast<long>(x.T);
    const std::vector<double> &w = ps[weight].value;
    std::vector<double> &dw = ps[weight].grad;
    for (size_t b = 0; b < x.B; ++b) {
      for (size_t o = 0; o < out; ++o) {
        const double *g = dy.row(b, o);
        double sg = 0.0;
        for (long t = 0; t < T; ++t) sg += g[t];
        ps[bias].grad[o] += sg;
        for (size_t i = 0; i < in; ++i) {
          const double *xr = x.row(b, i);
          double *dxr = dx.row(b, i);
          for (size_t k = 0; k < kernel; ++k) {
            const size_t wi = (o * in + i) * kernel + k;
            const long s = static_cast<long>(k) - pad;
            const long lo = std::max(0L, -s), hi = std::min(T, T - s);
            double acc = 0.0;
            const double wv = w[wi];
            for (long t = lo; t < hi; ++t) {
              acc += g[t] * xr[t + s];
              dxr[t + s] += wv * g[t];
            }
            dw[wi] += acc;
          }
        }
      }
    }
    return dx;
  }
};

Act MaxPool3(const Act &x, PoolCache *cache) {
  const size_t t_out = x.T / 3;
  Act y(x.B, x.C, t_out);
  if (cache) {
    cache->idx.resize(x.B * x.C * t_out);
    cache->t_in = x.T;
  }
  for (size_t b = 0; b < x.B; ++b)
    for (size_t c = 0; c < x.C; ++c) {
      const double *r = x.row(b, c);
      double *o = y.row(b, c);
      for (size_t p = 0; p < t_out; ++p) {
        size_t best = 3 * p;
        if (r[3 * p + 1] > r[best]) best = 3 * p + 1;
        if (r[3 * p + 2] > r[best]) best = 3 * p + 2;
        o[p] = r[best];
        if (cache) cache->idx[(b * x.C + c) * t_out + p] = static_cast<uint32_t>(best);
      }
    }
  return y;
}

Act MaxPool3Backward(const Act &dy, const PoolCache &c) {
  Act dx(dy.B, dy.C, c.t_in);
  for (size_t b = 0; b < dy.B; ++b)
    for (size_t ch = 0; ch < dy.C; ++ch) {
      const double *g = dy.row(b, ch);
      double *o = dx.row(b, ch);
      const uint32_t *idx = c.idx.data() + (b * dy.C + ch) * dy.T;
      for (size_t p = 0; p < dy.T; ++p) o[idx[p]] += g[p];
    }
  return dx;
}

// Filter-wise feature-map scaling: g = sigmoid(W mean_t(x) + b),
// out = x * g + g per channel.
struct Fms {
  size_t weight = 0, bias = 0;
  size_t channels = 0;

  Act Forward(const Act &x, const Params &ps, FmsCache *cache) const {
    Act y(x.B, x.C, x.T);
    Rows s(x.B, x.C), g(x.B, x.C);
    const std::vector<double> &w = ps[weight].value;
    for (size_t b = 0; b < x.B; ++b) {
      for (size_t c = 0; c < x.C; ++c) {
        const double *r = x.row(b, c);
        double acc = 0.0;
        for (size_t t = 0; t < x.T; ++t) acc += r[t];
        s.at(b, c) = acc / static_cast<double>(x.T);
      }
      for (size_t c = 0; c < x.C; ++c) {
        double z = ps[bias].value[c];
        for (size_t j = 0; j < x.C; ++j) z += w[c * x.C + j] * s.at(b, j);
        g.at(b, c) = Sigmoid(z);
      }
      for (size_t c = 0; c < x.C; ++c) {
        const double *r = x.row(b, c);
        double *o = y.row(b, c);
        const double gv = g.at(b, c);
        for (size_t t = 0; t < x.T; ++t) o[t] = r[t] * gv + gv;
      }
    }
    if (cache) {
      cache->m = x;
      cache->s = std::move(s);
      cache->g = std::move(g);
    }
    return y;
  }

  Act Backward(const Act &dy, const FmsCache &c, Params &ps) const {
    const Act &x = c.m;
    Act dx(x.B, x.C, x.T);
    const std::vector<double> &w = ps[weight].value;
    std::vector<double> dz(x.C);
    for (size_t b = 0; b < x.B; ++b) {
      for (size_t ch = 0; ch < x.C; ++ch) {
        const double *g = dy.row(b, ch), *r = x.row(b, ch);
        double dg = 0.0;
        for (size_t t = 0; t < x.T; ++t) dg += g[t] * (r[t] + 1.0);
        const double gv = c.g.at(b, ch);
        dz[ch] = dg * gv * (1.0 - gv);
        ps[bias].grad[ch] += dz[ch];
        for (size_t j = 0; j < x.C; ++j)
          ps[weight].grad[ch * x.C + j] += dz[ch] * c.s.at(b, j);
      }
      for (size_t j = 0; j < x.C; ++j) {
        double ds = 0.0;
        for (size_t ch = 0; ch < x.C; ++ch) ds += w[ch * x.C + j] * dz[ch];
        const double spread = ds / static_cast<double>(x.T);
        const double gv = c.g.at(b, j);
        const double *g = dy.row(b, j);
        double *o = dx.row(b, j);
        for (size_t t = 0; t < x.T; ++t) o[t] = g[t] * gv + spread;
      }
    }
    return dx;
  }
};

struct BlockCache {
  BnCache pre;
  ActCache pre_act;
  ConvCache c1, c2, skip;
  BnCache bn1;
  ActCache a1;
  PoolCache pool;
  FmsCache fms;
};

struct ResBlock {
  bool first = false;
  bool has_skip = false;
  BatchNorm pre, bn1;
  Conv1d conv1, conv2, skip;
  Fms fms;

  Act Forward(const Act &h, const Params &ps, Params &bufs, bool train,
              bool update, BlockCache *c) const {
    Act a = first ? h
                  : LeakyRelu(pre.Forward(h, ps, bufs, train, update,
                                          c ? &c->pre : nullptr),
                              c ? &c->pre_act : nullptr);
    Act y = conv1.Forward(a, ps, c ? &c->c1 : nullptr);
    y = LeakyRelu(bn1.Forward(y, ps, bufs, train, update, c ? &c->bn1 : nullptr),
                  c ? &c->a1 : nullptr);
    y = conv2.Forward(y, ps, c ? &c->c2 : nullptr);
    if (has_skip) {
      Act s = skip.Forward(h, ps, c ? &c->skip : nullptr);
      for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += s.v[i];
    } else {
      for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += h.v[i];
    }
    y = MaxPool3(y, c ? &c->pool : nullptr);
    return fms.Forward(y, ps, c ? &c->fms : nullptr);
  }

  Act Backward(const Act &dout, const BlockCache &c, Params &ps) const {
    Act dr = MaxPool3Backward(fms.Backward(dout, c.fms, ps), c.pool);
    Act d = conv2.Backward(dr, c.c2, ps);
    d = bn1.Backward(LeakyReluBackward(d, c.a1), c.bn1, ps);
    d = conv1.Backward(d, c.c1, ps);
    Act dh = first ? std::move(d)
                   : pre.Backward(LeakyReluBackward(d, c.pre_act), c.pre, ps);
    if (has_skip) {
      Act ds = skip.Backward(dr, c.skip, ps);
      for (size_t i = 0; i < dh.v.size(); ++i) dh.v[i] += ds.v[i];
    } else {
      for (size_t i = 0; i < dh.v.size(); ++i) dh.v[i] += dr.v[i];
    }
    return dh;
  }
};

// Single-layer GRU (PyTorch gate layout r, z, n); returns the final state.
struct Gru {
  size_t w_ih = 0, w_hh = 0, b_ih = 0, b_hh = 0;
  size_t in = 0, hidden = 0;

  Rows Forward(const Act &x, const Params &ps, GruCache *c) const {
    const size_t H = hidden, I = in, T = x.T;
    Rows out(x.B, H);
    const double *wi = ps[w_ih].value.data(), *wh = ps[w_hh].value.data();
    const double *bi = ps[b_ih].value.data(), *bh = ps[b_hh].value.data();
    if (c) {
      c->x = x;
      c->steps = T;
      for (auto *v : {&c->h_prev, &c->r, &c->z, &c->n, &c->ghn})
        v->assign(x.B * T * H, 0.0);
    }
    std::vector<double> h(H), gi(3 * H), gh(3 * H), xt(I);
    for (size_t b = 0; b < x.B; ++b) {
      std::fill(h.begin(), h.end(), 0.0);
      for (size_t t = 0; t < T; ++t) {
        for (size_t i = 0; i < I; ++i) xt[i] = x.row(b, i)[t];
        for (size_t j = 0; j < 3 * H; ++j) {
          double a = bi[j], e = bh[j];
          for (size_t i = 0; i < I; ++i) a += wi[j * I + i] * xt[i];
          for (size_t k = 0; k < H; ++k) e += wh[j * H + k] * h[k];
          gi[j] = a;
          gh[j] = e;
        }
        const size_t base = (b * T + t) * H;
        for (size_t k = 0; k < H; ++k) {
          const double r = Sigmoid(gi[k] + gh[k]);
          const double z = Sigmoid(gi[H + k] + gh[H + k]);
          const double n = std::tanh(gi[2 * H + k] + r * gh[2 * H + k]);
          if (c) {
            c->h_prev[base + k] = h[k];
            c->r[base + k] = r;
            c->z[base + k] = z;
            c->n[base + k] = n;
            c->ghn[base + k] = gh[2 * H + k];
          }
          h[k] = (1.0 - z) * n + z * h[k];
        }
      }
      for (size_t k = 0; k < H; ++k) out.at(b, k) = h[k];
    }
    return out;
  }

  Act Backward(const Rows &dout, const GruCache &c, Params &ps) const {
    const size_t H = hidden, I = in, T = c.steps, B = dout.rows;
    Act dx(B, I, T);
    const double *wi = ps[w_ih].value.data(), *wh = ps[w_hh].value.data();
    double *dwi = ps[w_ih].grad.data(), *dwh = ps[w_hh].grad.data();
    double *dbi = ps[b_ih].grad.data(), *dbh = ps[b_hh].grad.data();
    std::vector<double> dh(H), dh_prev(H), dgi(3 * H), dgh(3 * H), xt(I);
    for (size_t b = 0; b < B; ++b) {
      for (size_t k = 0; k < H; ++k) dh[k] = dout.at(b, k);
      for (size_t t = T; t-- > 0;) {
        const size_t base = (b * T + t) * H;
        for (size_t k = 0; k < H; ++k) {
          const double r = c.r[base + k], z = c.z[base + k], n = c.n[base + k];
          const double hp = c.h_prev[base + k];
          const double dn = dh[k] * (1.0 - z);
          const double dz = dh[k] * (hp - n);
          dh_prev[k] = dh[k] * z;
          const double dan = dn * (1.0 - n * n);
          const double dr = dan * c.ghn[base + k];
          const double dar = dr * r * (1.0 - r);
          const double daz = dz * z * (1.0 - z);
          dgi[k] = dar;
          dgi[H + k] = daz;
          dgi[2 * H + k] = dan;
          dgh[k] = dar;
          dgh[H + k] = daz;
          dgh[2 * H + k] = dan * r;
        }
        for (size_t i = 0; i < I; ++i) xt[i] = c.x.row(b, i)[t];
        for (size_t j = 0; j < 3 * H; ++j) {
          dbi[j] += dgi[j];
          dbh[j] += dgh[j];
          for (size_t i = 0; i < I; ++i) dwi[j * I + i] += dgi[j] * xt[i];
          for (size_t k = 0; k < H; ++k)
            dwh[j * H + k] += dgh[j] * c.h_prev[base + k];
        }
        for (size_t i = 0; i < I; ++i) {
          double acc = 0.0;
          for (size_t j = 0; j < 3 * H; ++j) acc += wi[j * I + i] * dgi[j];
          dx.row(b, i)[t] = acc;
        }
        for (size_t k = 0; k < H; ++k) {
          double acc = dh_prev[k];
          for (size_t j = 0; j < 3 * H; ++j) acc += wh[j * H + k] * dgh[j];
          dh[k] = acc;
        }
      }
    }
    return dx;
  }
};

struct Linear {
  size_t weight = 0, bias = 0;
  size_t in = 0, out = 0;

  Rows Forward(const Rows &x, const Params &ps, LinearCache *c) const {
    if (x.cols != in)
      throw ShapeError("linear layer expects " + std::to_string(in) +
                       " inputs, got " + std::to_string(x.cols));
    Rows y(x.rows, out);
    const std::vector<double> &w = ps[weight].value;
    for (size_t r = 0; r < x.rows; ++r)
      for (size_t o = 0; o < out; ++o) {
        double acc = ps[bias].value[o];
        for (size_t i = 0; i < in; ++i) acc += w[o * in + i] * x.at(r, i);
        y.at(r, o) = acc;
      }
    if (c) c->x = x;
    return y;
  }

  // Accumulates into dx (same shape as the cached input).
  void Backward(const Rows &dy, const LinearCache &c, Params &ps,
                Rows &dx) const {
    const std::vector<double> &w = ps[weight].value;
    for (size_t r = 0; r < dy.rows; ++r)
      for (size_t o = 0; o < out; ++o) {
        const double g = dy.at(r, o);
        ps[bias].grad[o] += g;
        for (size_t i = 0; i < in; ++i) {
          ps[weight].grad[o * in + i] += g * c.x.at(r, i);
          dx.at(r, i) += w[o * in + i] * g;
        }
      }
  }
};

}  // namespace

// ---------------------------------------------------------------------------

struct DetectorModel::Layers {
  SincPool sinc;
  BatchNorm bn0;
  std::vector<ResBlock> blocks;
  BatchNorm bn_gru;
  Gru gru;
  Linear embed, binary_head, vocoder_head;
};

struct ForwardTape::Impl {
  SincCache sinc;
  BnCache bn0;
  ActCache act0;
  std::vector<BlockCache> blocks;
  BnCache bn_gru;
  ActCache act_gru;
  GruCache gru;
  LinearCache embed, binary_head, vocoder_head;
  size_t batch = 0;
};

ForwardTape::ForwardTape() : impl(std::make_unique<Impl>()) {}
ForwardTape::~ForwardTape() = default;
ForwardTape::ForwardTape(ForwardTape &&) noexcept = default;
ForwardTape &ForwardTape::operator=(ForwardTape &&) noexcept = default;

DetectorModel::DetectorModel(const ModelConfig &cfg)
    : cfg_(cfg), layers_(std::make_unique<Layers>()) {
  cfg.Validate();
  Rng rng(cfg.seed);
  Layers &L = *layers_;
  auto &ps = params_;
  auto &bufs = buffers_;

  auto make_bn = [&](const std::string &name, size_t ch) {
    BatchNorm bn;
    bn.channels = ch;
    bn.gamma = AddParam(ps, name + ".gamma", {ch});
    bn.beta = AddParam(ps, name + ".beta", {ch});
    std::fill(ps[bn.gamma].value.begin(), ps[bn.gamma].value.end(), 1.0);
    bn.mean = AddParam(bufs, name + ".running_mean", {ch});
    bn.var = AddParam(bufs, name + ".running_var", {ch});
    std::fill(bufs[bn.var].value.begin(), bufs[bn.var].value.end(), 1.0);
    return bn;
  };
  auto make_conv = [&](const std::string &name, size_t in, size_t out,
                       size_t kernel) {
    Conv1d c;
    c.in = in;
    c.out = out;
    c.kernel = kernel;
    c.weight = AddParam(ps, name + ".weight", {out, in, kernel});
    c.bias = AddParam(ps, name + ".bias", {out});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel));
    FillUniform(ps[c.weight], bound, rng);
    FillUniform(ps[c.bias], bound, rng);
    return c;
  };
  auto make_linear = [&](const std::string &name, size_t in, size_t out) {
    Linear l;
    l.in = in;
    l.out = out;
    l.weight = AddParam(ps, name + ".weight", {out, in});
    l.bias = AddParam(ps, name + ".bias", {out});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    FillUniform(ps[l.weight], bound, rng);
    FillUniform(ps[l.bias], bound, rng);
    return l;
  };

  // Sinc cutoffs on mel-spaced band edges between 0 and Nyquist.
  const size_t F = static_cast<size_t>(cfg.sinc_filters);
  L.sinc.filters = F;
  L.sinc.kernel = static_cast<size_t>(cfg.sinc_kernel);
  L.sinc.low = AddParam(ps, "sinc.low", {F});
  L.sinc.band = AddParam(ps, "sinc.band", {F});
  const double mel_hi = HzToMel(cfg.sample_rate / 2.0);
  for (size_t f = 0; f < F; ++f) {
    const double lo_hz = MelToHz(mel_hi * static_cast<double>(f) / F);
    const double hi_hz = MelToHz(mel_hi * static_cast<double>(f + 1) / F);
    ps[L.sinc.low].value[f] = lo_hz / cfg.sample_rate;
    ps[L.sinc.band].value[f] = (hi_hz - lo_hz) / cfg.sample_rate;
  }
  L.bn0 = make_bn("bn0", F);

  size_t ch = F;
  bool first = true;
  for (size_t g = 0; g < cfg.block_channels.size(); ++g) {
    const size_t out = static_cast<size_t>(cfg.block_channels[g]);
    for (int j = 0; j < cfg.blocks_per_group[g]; ++j) {
      const std::string name =
          "block" + std::to_string(g) + "." + std::to_string(j);
      ResBlock blk;
      blk.first = first;
      first = false;
      if (!blk.first) blk.pre = make_bn(name + ".bn_pre", ch);
      blk.conv1 = make_conv(name + ".conv1", ch, out, 3);
      blk.bn1 = make_bn(name + ".bn1", out);
      blk.conv2 = make_conv(name + ".conv2", out, out, 3);
      blk.has_skip = ch != out;
      if (blk.has_skip) blk.skip = make_conv(name + ".skip", ch, out, 1);
      blk.fms.channels = out;
      Linear fc = make_linear(name + ".fms", out, out);
      blk.fms.weight = fc.weight;
      blk.fms.bias = fc.bias;
      L.blocks.push_back(blk);
      ch = out;
    }
  }
  L.bn_gru = make_bn("bn_gru", ch);

  const size_t H = static_cast<size_t>(cfg.gru_hidden);
  L.gru.in = ch;
  L.gru.hidden = H;
  L.gru.w_ih = AddParam(ps, "gru.w_ih", {3 * H, ch});
  L.gru.w_hh = AddParam(ps, "gru.w_hh", {3 * H, H});
  L.gru.b_ih = AddParam(ps, "gru.b_ih", {3 * H});
  L.gru.b_hh = AddParam(ps, "gru.b_hh", {3 * H});
  const double gb = 1.0 / std::sqrt(static_cast<double>(H));
  for (size_t idx : {L.gru.w_ih, L.gru.w_hh, L.gru.b_ih, L.gru.b_hh})
    FillUniform(ps[idx], gb, rng);

  const size_t E = static_cast<size_t>(cfg.embedding_dim);
  L.embed = make_linear("embed", H, E);
  L.binary_head = make_linear("binary_head", E, 1);
  L.vocoder_head =
      make_linear("vocoder_head", E, static_cast<size_t>(cfg.num_vocoder_classes));
}

DetectorModel::DetectorModel(const DetectorModel &o)
    : cfg_(o.cfg_), params_(o.params_), buffers_(o.buffers_),
      layers_(std::make_unique<Layers>(*o.layers_)) {}

DetectorModel &DetectorModel::operator=(const DetectorModel &o) {
  if (this != &o) {
    cfg_ = o.cfg_;
    params_ = o.params_;
    buffers_ = o.buffers_;
    layers_ = std::make_unique<Layers>(*o.layers_);
  }
  return *this;
}

DetectorModel::DetectorModel(DetectorModel &&) noexcept = default;
DetectorModel &DetectorModel::operator=(DetectorModel &&) noexcept = default;
DetectorModel::~DetectorModel() = default;

Parameter &DetectorModel::param(const std::string &name) {
  for (auto &p : params_)
    if (p.name == name) return p;
  throw ArgumentError("no parameter named " + name);
}

const Parameter &DetectorModel::param(const std::string &name) const {
  return const_cast<DetectorModel *>(this)->param(name);
}

size_t DetectorModel::NumParameters() const {
  size_t n = 0;
  for (const auto &p : params_) n += p.size();
  return n;
}

void DetectorModel::ZeroGrad() {
  for (auto &p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

std::vector<double> DetectorModel::SincFilter(int f) const {
  if (f < 0 || f >= cfg_.sinc_filters) throw ArgumentError("no such sinc filter");
  const std::vector<double> all = layers_->sinc.Filters(params_);
  const size_t K = layers_->sinc.kernel;
  return {all.begin() + static_cast<long>(f * K),
          all.begin() + static_cast<long>((f + 1) * K)};
}

void DetectorModel::CheckBatch(const Batch &batch) const {
  if (batch.size == 0) throw ShapeError("empty batch");
  if (batch.length != static_cast<size_t>(cfg_.input_length))
    throw ShapeError("batch length " + std::to_string(batch.length) +
                     " != model input length " +
                     std::to_string(cfg_.input_length));
  if (batch.data.size() != batch.size * batch.length)
    throw ShapeError("batch buffer size mismatch");
  for (double v : batch.data)
    if (!std::isfinite(v)) throw ArgumentError("non-finite input sample");
}

Rows DetectorModel::ExtractFeatures(const Batch &batch) const {
  CheckBatch(batch);
  const Layers &L = *layers_;
  // Evaluation never touches the buffers; the cast only satisfies the shared
  // BatchNorm signature.
  Params &bufs = const_cast<Params &>(buffers_);
  Act h = L.sinc.Forward(batch, params_, nullptr);
  h = LeakyRelu(L.bn0.Forward(h, params_, bufs, false, false, nullptr), nullptr);
  for (const auto &blk : L.blocks)
    h = blk.Forward(h, params_, bufs, false, false, nullptr);
  h = LeakyRelu(L.bn_gru.Forward(h, params_, bufs, false, false, nullptr),
                nullptr);
  Rows state = L.gru.Forward(h, params_, nullptr);
  return L.embed.Forward(state, params_, nullptr);
}

Rows DetectorModel::BinaryLogits(const Rows &embeddings) const {
  return layers_->binary_head.Forward(embeddings, params_, nullptr);
}

Rows DetectorModel::VocoderLogits(const Rows &embeddings) const {
  return layers_->vocoder_head.Forward(embeddings, params_, nullptr);
}

ModelOutput DetectorModel::Forward(const Batch &batch) const {
  Rows e = ExtractFeatures(batch);
  return {BinaryLogits(e), VocoderLogits(e)};
}

ModelOutput DetectorModel::ForwardTrain(const Batch &batch, ForwardTape &tape,
                                        bool update_running_stats) {
  CheckBatch(batch);
  const Layers &L = *layers_;
  ForwardTape::Impl &c = *tape.impl;
  c.batch = batch.size;
  c.blocks.assign(L.blocks.size(), BlockCache{});
  const bool up = update_running_stats;
  Act h = L.sinc.Forward(batch, params_, &c.sinc);
  h = LeakyRelu(L.bn0.Forward(h, params_, buffers_, true, up, &c.bn0), &c.act0);
  for (size_t i = 0; i < L.blocks.size(); ++i)
    h = L.blocks[i].Forward(h, params_, buffers_, true, up, &c.blocks[i]);
  h = LeakyRelu(L.bn_gru.Forward(h, params_, buffers_, true, up, &c.bn_gru),
                &c.act_gru);
  Rows state = L.gru.Forward(h, params_, &c.gru);
  Rows e = L.embed.Forward(state, params_, &c.embed);
  ModelOutput out;
  out.binary = L.binary_head.Forward(e, params_, &c.binary_head);
  out.vocoder = L.vocoder_head.Forward(e, params_, &c.vocoder_head);
  return out;
}

void DetectorModel::Backward(const ForwardTape &tape, const Rows &d_binary,
                             const Rows &d_vocoder) {
  const Layers &L = *layers_;
  const ForwardTape::Impl &c = *tape.impl;
  if (d_binary.rows != c.batch || d_binary.cols != 1)
    throw ShapeError("binary logit gradient must be B x 1");
  const bool with_vocoder = d_vocoder.rows != 0;
  if (with_vocoder &&
      (d_vocoder.rows != c.batch ||
       d_vocoder.cols != static_cast<size_t>(cfg_.num_vocoder_classes)))
    throw ShapeError("vocoder logit gradient must be B x (C + 1)");

  Rows de(c.batch, static_cast<size_t>(cfg_.embedding_dim));
  L.binary_head.Backward(d_binary, c.binary_head, params_, de);
  if (with_vocoder) L.vocoder_head.Backward(d_vocoder, c.vocoder_head, params_, de);
  Rows dstate(c.batch, static_cast<size_t>(cfg_.gru_hidden));
  L.embed.Backward(de, c.embed, params_, dstate);
  Act d = L.gru.Backward(dstate, c.gru, params_);
  d = L.bn_gru.Backward(LeakyReluBackward(d, c.act_gru), c.bn_gru, params_);
  for (size_t i = L.blocks.size(); i-- > 0;)
    d = L.blocks[i].Backward(d, c.blocks[i], params_);
  d = L.bn0.Backward(LeakyReluBackward(d, c.act0), c.bn0, params_);
  L.sinc.Backward(d, c.sinc, params_);
}

}  // namespace vocart
