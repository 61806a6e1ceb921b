#pragma once

// Minimal layer library with explicit forward caches and backward passes.
// Everything is templated on the scalar so that training runs in float and
// gradient checks run in double through the same code.
//
// Feature maps are stored channel-major as a (channels x height*width)
// matrix; column index = y * width + x. Token sequences for the transformer
// are (channels x tokens) matrices.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "roomlayout/errors.hpp"

namespace roomlayout::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

enum class PadMode { kZero, kCircular };

template <class T>
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  Mat<T> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w) : channels(c), height(h), width(w), data(Mat<T>::Zero(c, h * w)) {}

  T& at(int c, int y, int x) { return data(c, y * width + x); }
  T at(int c, int y, int x) const { return data(c, y * width + x); }
};

// ---------------------------------------------------------------------------
// Horizontal extension (one column per side).

/// [a b c d] -> [d a b c d a]
template <class T>
FeatureMap<T> circular_extend(const FeatureMap<T>& in) {
  if (in.width < 2) throw DataError("circular_extend: width must be at least 2");
  FeatureMap<T> out(in.channels, in.height, in.width + 2);
  for (int y = 0; y < in.height; ++y) {
    out.data.col(y * out.width) = in.data.col(y * in.width + in.width - 1);
    out.data.middleCols(y * out.width + 1, in.width) = in.data.middleCols(y * in.width, in.width);
    out.data.col(y * out.width + out.width - 1) = in.data.col(y * in.width);
  }
  return out;
}

/// [a b c d] -> [0 a b c d 0]
template <class T>
FeatureMap<T> zero_extend(const FeatureMap<T>& in) {
  FeatureMap<T> out(in.channels, in.height, in.width + 2);
  for (int y = 0; y < in.height; ++y)
    out.data.middleCols(y * out.width + 1, in.width) = in.data.middleCols(y * in.width, in.width);
  return out;
}

/// Gradient of circular_extend / zero_extend.
template <class T>
FeatureMap<T> extend_backward(const FeatureMap<T>& dout, PadMode mode) {
  const int w = dout.width - 2;
  FeatureMap<T> din(dout.channels, dout.height, w);
  for (int y = 0; y < dout.height; ++y) {
    din.data.middleCols(y * w, w) = dout.data.middleCols(y * dout.width + 1, w);
    if (mode == PadMode::kCircular) {
      din.data.col(y * w + w - 1) += dout.data.col(y * dout.width);
      din.data.col(y * w) += dout.data.col(y * dout.width + dout.width - 1);
    }
  }
  return din;
}

// ---------------------------------------------------------------------------
// 2D convolution via im2col.

struct ConvGeometry {
  int in_c = 0, out_c = 0;
  int kh = 3, kw = 3;
  int sh = 1, sw = 1;
  int ph = 0, pw = 0;
  PadMode pad_w = PadMode::kZero;

  int out_h(int in_h) const { return (in_h + 2 * ph - kh) / sh + 1; }
  int out_w(int in_w) const { return (in_w + 2 * pw - kw) / sw + 1; }
  int patch() const { return in_c * kh * kw; }
};

template <class T>
struct ConvCache {
  Mat<T> cols;
  Mat<T> out;  // post-activation output
  int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  bool relu = false;
};

template <class T>
void im2col(const ConvGeometry& g, const FeatureMap<T>& in, int oh, int ow, Mat<T>& cols) {
  cols.setZero(g.patch(), oh * ow);
  for (int c = 0; c < g.in_c; ++c)
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx) {
        const int row = (c * g.kh + ky) * g.kw + kx;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.sh - g.ph + ky;
          if (iy < 0 || iy >= in.height) continue;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * g.sw - g.pw + kx;
            if (ix < 0 || ix >= in.width) {
              if (g.pad_w == PadMode::kZero) continue;
              ix = ((ix % in.width) + in.width) % in.width;
            }
            cols(row, oy * ow + ox) = in.data(c, iy * in.width + ix);
          }
        }
      }
}

template <class T>
void col2im(const ConvGeometry& g, const Mat<T>& dcols, int oh, int ow, FeatureMap<T>& din) {
  din.data.setZero();
  for (int c = 0; c < g.in_c; ++c)
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx) {
        const int row = (c * g.kh + ky) * g.kw + kx;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.sh - g.ph + ky;
          if (iy < 0 || iy >= din.height) continue;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * g.sw - g.pw + kx;
            if (ix < 0 || ix >= din.width) {
              if (g.pad_w == PadMode::kZero) continue;
              ix = ((ix % din.width) + din.width) % din.width;
            }
            din.data(c, iy * din.width + ix) += dcols(row, oy * ow + ox);
          }
        }
      }
}

/// weight: out_c x patch, bias: out_c x 1.
template <class T>
FeatureMap<T> conv_forward(const ConvGeometry& g, const Mat<T>& weight, const Mat<T>& bias,
                           const FeatureMap<T>& in, bool relu, ConvCache<T>* cache) {
  if (in.channels != g.in_c) throw DataError("conv_forward: channel mismatch");
  const int oh = g.out_h(in.height);
  const int ow = g.out_w(in.width);
  if (oh <= 0 || ow <= 0) throw DataError("conv_forward: input too small");
  Mat<T> cols;
  im2col(g, in, oh, ow, cols);
  FeatureMap<T> out(g.out_c, oh, ow);
  out.data.noalias() = weight * cols;
  out.data.colwise() += bias.col(0);
  if (relu) out.data = out.data.cwiseMax(T(0));
  if (cache) {
    cache->cols = std::move(cols);
    cache->out = out.data;
    cache->in_h = in.height;
    cache->in_w = in.width;
    cache->out_h = oh;
    cache->out_w = ow;
    cache->relu = relu;
  }
  return out;
}

/// Accumulates into dweight / dbias; writes din when non-null.
template <class T>
void conv_backward(const ConvGeometry& g, const Mat<T>& weight, const ConvCache<T>& cache,
                   Mat<T> dout, Mat<T>& dweight, Mat<T>& dbias, FeatureMap<T>* din) {
  if (cache.relu) dout = (cache.out.array() > T(0)).select(dout, T(0));
  dweight.noalias() += dout * cache.cols.transpose();
  dbias.col(0) += dout.rowwise().sum();
  if (din) {
    const Mat<T> dcols = weight.transpose() * dout;
    *din = FeatureMap<T>(g.in_c, cache.in_h, cache.in_w);
    col2im(g, dcols, cache.out_h, cache.out_w, *din);
  }
}

// ---------------------------------------------------------------------------
// Width resampling as a fixed linear map.

/// (in_w x out_w) matrix U such that out = in * U performs linear
/// interpolation at pixel centres; circular wraps, otherwise edges clamp.
template <class T>
Mat<T> width_interpolation(int in_w, int out_w, bool circular) {
  Mat<T> u = Mat<T>::Zero(in_w, out_w);
  for (int j = 0; j < out_w; ++j) {
    double s = (j + 0.5) * in_w / out_w - 0.5;
    if (!circular) s = std::clamp(s, 0.0, in_w - 1.0);
    const int i0 = static_cast<int>(std::floor(s));
    const double t = s - i0;
    int a = i0, b = i0 + 1;
    if (circular) {
      a = ((a % in_w) + in_w) % in_w;
      b = ((b % in_w) + in_w) % in_w;
    } else {
      b = std::min(b, in_w - 1);
    }
    u(a, j) += T(1 - t);
    u(b, j) += T(t);
  }
  return u;
}

// ---------------------------------------------------------------------------
// Layer normalisation over channels (rows), per token (column).

template <class T>
struct LayerNormCache {
  Mat<T> xhat;
  RowVec<T> inv_std;
};

template <class T>
Mat<T> layer_norm_forward(const Mat<T>& x, const Mat<T>& gamma, const Mat<T>& beta,
                          LayerNormCache<T>* cache, T eps = T(1e-5)) {
  const int c = static_cast<int>(x.rows());
  const RowVec<T> mean = x.colwise().mean();
  Mat<T> xc = x.rowwise() - mean;
  const RowVec<T> var = xc.array().square().colwise().sum() / T(c);
  const RowVec<T> inv = (var.array() + eps).rsqrt();
  Mat<T> xhat = xc.array().rowwise() * inv.array();
  Mat<T> y = (xhat.array().colwise() * gamma.col(0).array()).colwise() + beta.col(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv;
  }
  return y;
}

template <class T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const Mat<T>& gamma, const LayerNormCache<T>& cache,
                           Mat<T>& dgamma, Mat<T>& dbeta) {
  const T c = T(dy.rows());
  dgamma.col(0) += (dy.array() * cache.xhat.array()).rowwise().sum().matrix();
  dbeta.col(0) += dy.rowwise().sum();
  const Mat<T> dxhat = dy.array().colwise() * gamma.col(0).array();
  const RowVec<T> m1 = dxhat.colwise().sum() / c;
  const RowVec<T> m2 = (dxhat.array() * cache.xhat.array()).colwise().sum() / c;
  Mat<T> dx = dxhat.rowwise() - m1;
  dx.array() -= cache.xhat.array().rowwise() * m2.array();
  dx.array().rowwise() *= cache.inv_std.array();
  return dx;
}

// ---------------------------------------------------------------------------
// GELU (erf form).

template <class T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <class T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
  const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * T(3.14159265358979323846));
  return cdf + x * pdf;
}

// ---------------------------------------------------------------------------
// Multi-head self-attention restricted to token groups.

/// A partition of token indices; attention only mixes tokens of one group.
using TokenGroups = std::vector<std::vector<int>>;

/// Contiguous windows of `window` tokens after rolling by `shift`:
/// group k holds tokens (k * window + t + shift) mod n.
TokenGroups window_groups(int tokens, int window, int shift);
TokenGroups global_group(int tokens);

struct AttentionWeights {
  int q_w, q_b, k_w, k_b, v_w, v_b, o_w, o_b;  // parameter indices
};

template <class T>
struct AttentionCache {
  Mat<T> x;  // normalised input
  Mat<T> q, k, v, o;
  std::vector<Mat<T>> probs;  // group-major, then head
};

template <class T>
Mat<T> attention_forward(const std::vector<Mat<T>>& p, const AttentionWeights& w, const Mat<T>& x,
                         const TokenGroups& groups, int heads, int head_dim,
                         AttentionCache<T>* cache) {
  Mat<T> q = (p[w.q_w] * x).colwise() + p[w.q_b].col(0);
  Mat<T> k = (p[w.k_w] * x).colwise() + p[w.k_b].col(0);
  Mat<T> v = (p[w.v_w] * x).colwise() + p[w.v_b].col(0);
  Mat<T> o = Mat<T>::Zero(q.rows(), q.cols());
  const T scale = T(1) / std::sqrt(T(head_dim));
  std::vector<Mat<T>> probs;
  if (cache) probs.reserve(groups.size() * heads);
  for (const auto& idx : groups) {
    const int n = static_cast<int>(idx.size());
    for (int h = 0; h < heads; ++h) {
      const auto rows = Eigen::seqN(h * head_dim, head_dim);
      const Mat<T> qg = q(rows, idx);
      const Mat<T> kg = k(rows, idx);
      const Mat<T> vg = v(rows, idx);
      Mat<T> s = (qg.transpose() * kg) * scale;  // n x n, row = query
      for (int i = 0; i < n; ++i) {
        const T mx = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - mx).exp();
        s.row(i) /= s.row(i).sum();
      }
      o(rows, idx) = vg * s.transpose();
      if (cache) probs.push_back(std::move(s));
    }
  }
  Mat<T> y = (p[w.o_w] * o).colwise() + p[w.o_b].col(0);
  if (cache) {
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->o = std::move(o);
    cache->probs = std::move(probs);
  }
  return y;
}

template <class T>
Mat<T> attention_backward(const std::vector<Mat<T>>& p, std::vector<Mat<T>>& g,
                          const AttentionWeights& w, const AttentionCache<T>& cache,
                          const TokenGroups& groups, int heads, int head_dim, const Mat<T>& dy) {
  g[w.o_w].noalias() += dy * cache.o.transpose();
  g[w.o_b].col(0) += dy.rowwise().sum();
  const Mat<T> d_o = p[w.o_w].transpose() * dy;
  Mat<T> dq = Mat<T>::Zero(cache.q.rows(), cache.q.cols());
  Mat<T> dk = Mat<T>::Zero(cache.k.rows(), cache.k.cols());
  Mat<T> dv = Mat<T>::Zero(cache.v.rows(), cache.v.cols());
  const T scale = T(1) / std::sqrt(T(head_dim));
  std::size_t pi = 0;
  for (const auto& idx : groups) {
    for (int h = 0; h < heads; ++h, ++pi) {
      const auto rows = Eigen::seqN(h * head_dim, head_dim);
      const Mat<T>& a = cache.probs[pi];
      const Mat<T> dog = d_o(rows, idx);
      const Mat<T> qg = cache.q(rows, idx);
      const Mat<T> kg = cache.k(rows, idx);
      const Mat<T> vg = cache.v(rows, idx);
      dv(rows, idx) = dog * a;
      const Mat<T> da = dog.transpose() * vg;
      const Vec<T> rowdot = (da.array() * a.array()).rowwise().sum();
      const Mat<T> ds = a.array() * (da.colwise() - rowdot).array();
      dq(rows, idx) = (kg * ds.transpose()) * scale;
      dk(rows, idx) = (qg * ds) * scale;
    }
  }
  g[w.q_w].noalias() += dq * cache.x.transpose();
  g[w.k_w].noalias() += dk * cache.x.transpose();
  g[w.v_w].noalias() += dv * cache.x.transpose();
  g[w.q_b].col(0) += dq.rowwise().sum();
  g[w.k_b].col(0) += dk.rowwise().sum();
  g[w.v_b].col(0) += dv.rowwise().sum();
  Mat<T> dx = p[w.q_w].transpose() * dq;
  dx.noalias() += p[w.k_w].transpose() * dk;
  dx.noalias() += p[w.v_w].transpose() * dv;
  return dx;
}

}  // namespace roomlayout::nn
