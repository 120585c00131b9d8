#include "sensprune/layers.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace sensprune::layers {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using ArrMap = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstArrMap = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

// Upper bound on im2col buffer elements per chunk of samples.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;
// Largest im2col matrix (elements) kept for reuse by the backward pass.
constexpr std::size_t kColumnCacheLimit = std::size_t{1} << 24;

int out_extent(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

// Reductions with a fixed summation order. Eigen's vectorized reductions peel
// a head that depends on the buffer address, which makes float sums vary
// from run to run; these keep training bit-reproducible.
constexpr std::size_t kLanes = 16;

template <typename T, typename F>
double lane_reduce(std::size_t n, F term) {
  T acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += term(i + l);
  }
  double total = 0.0;
  for (; i < n; ++i) total += term(i);
  for (std::size_t l = 0; l < kLanes; ++l) total += acc[l];
  return total;
}

template <typename T>
double fixed_sum(const T* p, std::size_t n) {
  return lane_reduce<T>(n, [p](std::size_t i) { return p[i]; });
}

template <typename T>
double fixed_dot(const T* a, const T* b, std::size_t n) {
  return lane_reduce<T>(n, [a, b](std::size_t i) { return a[i] * b[i]; });
}

template <typename T>
double fixed_sq_dev(const T* p, std::size_t n, T mu) {
  return lane_reduce<T>(n, [p, mu](std::size_t i) {
    const T d = p[i] - mu;
    return d * d;
  });
}

// Unrolls one sample into rows (ci, ky, kx) x columns (oy, ox) of `col`,
// starting at column `offset` of a buffer with `ld` columns.
template <typename T>
void im2col(const T* x, int channels, int height, int width, const ConvGeometry& g, int ho,
            int wo, T* col, std::size_t ld, std::size_t offset) {
  const int k = g.kernel;
  for (int ci = 0; ci < channels; ++ci) {
    const T* plane = x + static_cast<std::size_t>(ci) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const std::size_t row = (static_cast<std::size_t>(ci) * k + ky) * k + kx;
        T* dst = col + row * ld + offset;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          T* drow = dst + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= height) {
            std::fill(drow, drow + wo, T(0));
            continue;
          }
          const T* srow = plane + static_cast<std::size_t>(iy) * width;
          if (g.stride == 1) {
            const int shift = kx - g.pad;
            const int lo = std::min(wo, std::max(0, -shift));
            const int hi = std::min(wo, width - shift);
            for (int ox = 0; ox < lo; ++ox) drow[ox] = T(0);
            for (int ox = lo; ox < hi; ++ox) drow[ox] = srow[ox + shift];
            for (int ox = std::max(hi, lo); ox < wo; ++ox) drow[ox] = T(0);
          } else {
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              drow[ox] = (ix >= 0 && ix < width) ? srow[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int channels, int height, int width, const ConvGeometry& g, int ho,
            int wo, T* dx, std::size_t ld, std::size_t offset) {
  const int k = g.kernel;
  for (int ci = 0; ci < channels; ++ci) {
    T* plane = dx + static_cast<std::size_t>(ci) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const std::size_t row = (static_cast<std::size_t>(ci) * k + ky) * k + kx;
        const T* src = col + row * ld + offset;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= height) continue;
          const T* srow = src + static_cast<std::size_t>(oy) * wo;
          T* drow = plane + static_cast<std::size_t>(iy) * width;
          if (g.stride == 1) {
            const int shift = kx - g.pad;
            const int lo = std::max(0, -shift);
            const int hi = std::min(wo, width - shift);
            for (int ox = lo; ox < hi; ++ox) drow[ox + shift] += srow[ox];
            continue;
          }
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < width) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

// Per-thread scratch reused across calls so large column buffers are not
// reallocated for every batch.
template <typename T>
struct Scratch {
  std::vector<T> col;
  RowMat<T> a;
  RowMat<T> b;
};

template <typename T>
Scratch<T>& scratch() {
  thread_local Scratch<T> s;
  return s;
}

int chunk_size(int n, std::size_t rows, std::size_t cols_per_sample) {
  const std::size_t per = std::max<std::size_t>(1, rows * cols_per_sample);
  return static_cast<int>(std::clamp<std::size_t>(kColumnBudget / per, 1, n));
}

}  // namespace

template <typename T>
void conv2d_forward(const BasicTensor4<T>& x, std::span<const T> weight, std::span<const T> bias,
                    const ConvGeometry& g, BasicTensor4<T>& y, std::vector<T>* columns) {
  const Shape4 in = x.shape();
  const int ho = out_extent(in.h, g.kernel, g.stride, g.pad);
  const int wo = out_extent(in.w, g.kernel, g.stride, g.pad);
  y.resize({in.n, g.out_ch, ho, wo});
  const std::size_t ckk = static_cast<std::size_t>(g.in_ch) * g.kernel * g.kernel;
  const std::size_t hwo = static_cast<std::size_t>(ho) * wo;
  if (columns && ckk * hwo * in.n > kColumnCacheLimit) {
    columns->clear();
    columns = nullptr;
  }
  const int chunk = columns ? std::max(in.n, 1) : chunk_size(in.n, ckk, hwo);
  ConstRowMap<T> w(weight.data(), g.out_ch, static_cast<Eigen::Index>(ckk));

  std::vector<T>& col = columns ? *columns : scratch<T>().col;
  RowMat<T>& out = scratch<T>().a;
  for (int n0 = 0; n0 < in.n; n0 += chunk) {
    const int nb = std::min(chunk, in.n - n0);
    const std::size_t ld = nb * hwo;
    col.resize(ckk * ld);
    for (int j = 0; j < nb; ++j) {
      im2col(x.sample(n0 + j).data(), in.c, in.h, in.w, g, ho, wo, col.data(), ld, j * hwo);
    }
    ConstRowMap<T> colm(col.data(), static_cast<Eigen::Index>(ckk),
                        static_cast<Eigen::Index>(ld));
    out.noalias() = w * colm;
    for (int j = 0; j < nb; ++j) {
      T* ys = y.sample(n0 + j).data();
      for (int o = 0; o < g.out_ch; ++o) {
        const T b = bias.empty() ? T(0) : bias[o];
        const T* src = out.data() + static_cast<std::size_t>(o) * ld + j * hwo;
        T* dst = ys + static_cast<std::size_t>(o) * hwo;
        for (std::size_t p = 0; p < hwo; ++p) dst[p] = src[p] + b;
      }
    }
  }
}

template <typename T>
void conv2d_backward(const BasicTensor4<T>& x, std::span<const T> weight, const ConvGeometry& g,
                     const BasicTensor4<T>& dy, BasicTensor4<T>* dx, std::span<T> dweight,
                     std::span<T> dbias, const std::vector<T>* columns) {
  const Shape4 in = x.shape();
  const int ho = dy.shape().h;
  const int wo = dy.shape().w;
  const std::size_t ckk = static_cast<std::size_t>(g.in_ch) * g.kernel * g.kernel;
  const std::size_t hwo = static_cast<std::size_t>(ho) * wo;
  const bool cached = columns && columns->size() == ckk * in.n * hwo;
  const int chunk = cached ? std::max(in.n, 1) : chunk_size(in.n, ckk, hwo);
  ConstRowMap<T> w(weight.data(), g.out_ch, static_cast<Eigen::Index>(ckk));
  RowMap<T> dw(dweight.data(), g.out_ch, static_cast<Eigen::Index>(ckk));
  if (dx) dx->reset(in);

  std::vector<T>& col = scratch<T>().col;
  RowMat<T>& dym = scratch<T>().a;
  RowMat<T>& dcol = scratch<T>().b;
  for (int n0 = 0; n0 < in.n; n0 += chunk) {
    const int nb = std::min(chunk, in.n - n0);
    const std::size_t ld = nb * hwo;
    if (!cached) col.resize(ckk * ld);
    dym.resize(g.out_ch, static_cast<Eigen::Index>(ld));
    for (int j = 0; j < nb; ++j) {
      if (!cached) {
        im2col(x.sample(n0 + j).data(), in.c, in.h, in.w, g, ho, wo, col.data(), ld, j * hwo);
      }
      const T* ys = dy.sample(n0 + j).data();
      for (int o = 0; o < g.out_ch; ++o) {
        std::copy_n(ys + static_cast<std::size_t>(o) * hwo, hwo,
                    dym.data() + static_cast<std::size_t>(o) * ld + j * hwo);
      }
    }
    ConstRowMap<T> colm(cached ? columns->data() : col.data(), static_cast<Eigen::Index>(ckk),
                        static_cast<Eigen::Index>(ld));
    dw.noalias() += dym * colm.transpose();
    if (!dbias.empty()) {
      for (int o = 0; o < g.out_ch; ++o) dbias[o] += static_cast<T>(fixed_sum(dym.data() + static_cast<std::size_t>(o) * ld, ld));
    }
    if (dx) {
      dcol.noalias() = w.transpose() * dym;
      for (int j = 0; j < nb; ++j) {
        col2im(dcol.data(), in.c, in.h, in.w, g, ho, wo, dx->sample(n0 + j).data(), ld,
               j * hwo);
      }
    }
  }
}

template <typename T>
void batchnorm_forward_train(const BasicTensor4<T>& x, std::span<const T> gamma,
                             std::span<const T> beta, BasicTensor4<T>& y,
                             BatchNormCache<T>& cache, std::vector<double>& mean,
                             std::vector<double>& var) {
  const Shape4 s = x.shape();
  const auto hw = static_cast<Eigen::Index>(s.h) * s.w;
  const double m = static_cast<double>(s.n) * hw;
  y.resize(s);
  cache.xhat.resize(x.size());
  cache.inv_std.assign(s.c, T(0));
  mean.assign(s.c, 0.0);
  var.assign(s.c, 0.0);
  auto plane = [&](const T* base, int n, int c) {
    return ConstArrMap<T>(base + (static_cast<std::size_t>(n) * s.c + c) * hw, hw);
  };
  auto plane_ptr = [&](int n, int c) {
    return x.raw() + (static_cast<std::size_t>(n) * s.c + c) * hw;
  };
  for (int c = 0; c < s.c; ++c) {
    // Per-plane partial sums, accumulated across planes in double.
    double sum = 0.0;
    for (int n = 0; n < s.n; ++n) sum += fixed_sum(plane_ptr(n, c), hw);
    const double mu = sum / m;
    const T muT = static_cast<T>(mu);
    double sq = 0.0;
    for (int n = 0; n < s.n; ++n) sq += fixed_sq_dev(plane_ptr(n, c), hw, muT);
    const double v = sq / m;
    mean[c] = mu;
    var[c] = v;
    const T inv = static_cast<T>(1.0 / std::sqrt(v + kBatchNormEps));
    cache.inv_std[c] = inv;
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * hw;
      ArrMap<T> xh(cache.xhat.data() + off, hw);
      xh = (plane(x.raw(), n, c) - muT) * inv;
      ArrMap<T>(y.raw() + off, hw) = xh * gamma[c] + beta[c];
    }
  }
}

template <typename T>
void batchnorm_forward_eval(const BasicTensor4<T>& x, std::span<const T> gamma,
                            std::span<const T> beta, std::span<const T> running_mean,
                            std::span<const T> running_var, BasicTensor4<T>& y) {
  const Shape4 s = x.shape();
  const auto hw = static_cast<Eigen::Index>(s.h) * s.w;
  y.resize(s);
  for (int c = 0; c < s.c; ++c) {
    const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[c]) +
                                                 kBatchNormEps));
    const T scale = gamma[c] * inv;
    const T shift = beta[c] - running_mean[c] * scale;
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * hw;
      ArrMap<T>(y.raw() + off, hw) = ConstArrMap<T>(x.raw() + off, hw) * scale + shift;
    }
  }
}

template <typename T>
void batchnorm_backward(const BasicTensor4<T>& dy, std::span<const T> gamma,
                        const BatchNormCache<T>& cache, BasicTensor4<T>& dx,
                        std::span<T> dgamma, std::span<T> dbeta) {
  const Shape4 s = dy.shape();
  const auto hw = static_cast<Eigen::Index>(s.h) * s.w;
  const double m = static_cast<double>(s.n) * hw;
  dx.resize(s);
  for (int c = 0; c < s.c; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * hw;
      sum_dy += fixed_sum(dy.raw() + off, hw);
      sum_dy_xhat += fixed_dot(dy.raw() + off, cache.xhat.data() + off, hw);
    }
    dbeta[c] += static_cast<T>(sum_dy);
    dgamma[c] += static_cast<T>(sum_dy_xhat);
    // dx = gamma * inv_std / m * (m * dy - sum(dy) - xhat * sum(dy * xhat))
    const double k = static_cast<double>(gamma[c]) * cache.inv_std[c] / m;
    const T a = static_cast<T>(k * m);
    const T b = static_cast<T>(k * sum_dy);
    const T e = static_cast<T>(k * sum_dy_xhat);
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * hw;
      ArrMap<T>(dx.raw() + off, hw) = ConstArrMap<T>(dy.raw() + off, hw) * a - b -
                                      ConstArrMap<T>(cache.xhat.data() + off, hw) * e;
    }
  }
}

template <typename T>
void relu_forward(const BasicTensor4<T>& x, BasicTensor4<T>& y) {
  y.resize(x.shape());
  const T* src = x.raw();
  T* dst = y.raw();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = src[i] > T(0) ? src[i] : T(0);
}

template <typename T>
void relu_backward(const BasicTensor4<T>& x, const BasicTensor4<T>& dy, BasicTensor4<T>& dx) {
  dx.resize(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    dx.raw()[i] = x.raw()[i] > T(0) ? dy.raw()[i] : T(0);
  }
}

template <typename T>
void maxpool_forward(const BasicTensor4<T>& x, const PoolGeometry& g, BasicTensor4<T>& y,
                     std::vector<std::int32_t>& argmax) {
  const Shape4 s = x.shape();
  if (x.size() > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw ConfigError("maxpool input too large for 32-bit argmax indices");
  }
  const int ho = out_extent(s.h, g.size, g.stride, g.pad);
  const int wo = out_extent(s.w, g.size, g.stride, g.pad);
  y.resize({s.n, s.c, ho, wo});
  argmax.resize(y.size());
  if (g.size == 2 && g.stride == 2 && g.pad == 0) {
    // Common 2x2 window; same scan order and tie rule as the general loop.
    std::size_t o = 0;
    for (std::size_t plane = 0; plane < static_cast<std::size_t>(s.n) * s.c; ++plane) {
      const std::size_t base = plane * s.h * s.w;
      for (int oy = 0; oy < ho; ++oy) {
        const std::size_t r0 = base + static_cast<std::size_t>(2 * oy) * s.w;
        const std::size_t r1 = r0 + s.w;
        for (int ox = 0; ox < wo; ++ox, ++o) {
          std::size_t idx = r0 + 2 * ox;
          T best = x.raw()[idx];
          const std::size_t cand[3] = {r0 + 2 * ox + 1, r1 + 2 * ox, r1 + 2 * ox + 1};
          for (std::size_t c : cand) {
            if (x.raw()[c] > best) {
              best = x.raw()[c];
              idx = c;
            }
          }
          y.raw()[o] = best;
          argmax[o] = static_cast<std::int32_t>(idx);
        }
      }
    }
    return;
  }
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t plane = (static_cast<std::size_t>(n) * s.c + c) * s.h * s.w;
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_idx = plane;
          bool found = false;
          for (int ky = 0; ky < g.size; ++ky) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= s.h) continue;
            for (int kx = 0; kx < g.size; ++kx) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix < 0 || ix >= s.w) continue;
              const std::size_t idx = plane + static_cast<std::size_t>(iy) * s.w + ix;
              if (!found || x.raw()[idx] > best) {
                best = x.raw()[idx];
                best_idx = idx;
                found = true;
              }
            }
          }
          y.raw()[o] = best;
          argmax[o] = static_cast<std::int32_t>(best_idx);
        }
      }
    }
  }
}

template <typename T>
void maxpool_backward(const BasicTensor4<T>& dy, const std::vector<std::int32_t>& argmax,
                      Shape4 input_shape, BasicTensor4<T>& dx) {
  dx.reset(input_shape);
  for (std::size_t o = 0; o < dy.size(); ++o) dx.raw()[argmax[o]] += dy.raw()[o];
}

template <typename T>
void dense_forward(const BasicTensor4<T>& x, std::span<const T> weight, std::span<const T> bias,
                   int out_dim, BasicTensor4<T>& y) {
  const int n = x.shape().n;
  const auto in_dim = static_cast<Eigen::Index>(x.shape().per_sample());
  y.resize({n, out_dim, 1, 1});
  ConstRowMap<T> xm(x.raw(), n, in_dim);
  ConstRowMap<T> w(weight.data(), out_dim, in_dim);
  RowMap<T> ym(y.raw(), n, out_dim);
  ym.noalias() = xm * w.transpose();
  if (!bias.empty()) {
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.data(), out_dim);
    ym.rowwise() += b;
  }
}

template <typename T>
void dense_backward(const BasicTensor4<T>& x, std::span<const T> weight,
                    const BasicTensor4<T>& dy, BasicTensor4<T>* dx, std::span<T> dweight,
                    std::span<T> dbias) {
  const int n = x.shape().n;
  const auto in_dim = static_cast<Eigen::Index>(x.shape().per_sample());
  const int out_dim = dy.shape().c;
  ConstRowMap<T> xm(x.raw(), n, in_dim);
  ConstRowMap<T> w(weight.data(), out_dim, in_dim);
  ConstRowMap<T> dym(dy.raw(), n, out_dim);
  RowMap<T> dw(dweight.data(), out_dim, in_dim);
  dw.noalias() += dym.transpose() * xm;
  if (!dbias.empty()) {
    for (int o = 0; o < out_dim; ++o) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += dym(i, o);
      dbias[o] += static_cast<T>(acc);
    }
  }
  if (dx) {
    dx->resize(x.shape());
    RowMap<T> dxm(dx->raw(), n, in_dim);
    dxm.noalias() = dym * w;
  }
}

template <typename T>
double softmax_xent(const BasicTensor4<T>& logits, std::span<const int> labels,
                    BasicTensor4<T>* grad) {
  const int n = logits.shape().n;
  const int k = logits.shape().c;
  if (static_cast<int>(labels.size()) != n) {
    throw ConfigError("label count does not match batch size");
  }
  if (grad) grad->resize(logits.shape());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const T* row = logits.raw() + static_cast<std::size_t>(i) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    total += lse - row[labels[i]];
    if (grad) {
      T* g = grad->raw() + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) {
        const double p = std::exp(row[j] - lse);
        g[j] = static_cast<T>((p - (j == labels[i] ? 1.0 : 0.0)) / n);
      }
    }
  }
  return total / n;
}

#define SENSPRUNE_INSTANTIATE_LAYERS(T)                                                      \
  template void conv2d_forward<T>(const BasicTensor4<T>&, std::span<const T>,               \
                                  std::span<const T>, const ConvGeometry&, BasicTensor4<T>&,  \
                                  std::vector<T>*);                                           \
  template void conv2d_backward<T>(const BasicTensor4<T>&, std::span<const T>,              \
                                   const ConvGeometry&, const BasicTensor4<T>&,               \
                                   BasicTensor4<T>*, std::span<T>, std::span<T>,              \
                                   const std::vector<T>*);                                    \
  template void batchnorm_forward_train<T>(const BasicTensor4<T>&, std::span<const T>,      \
                                           std::span<const T>, BasicTensor4<T>&,              \
                                           BatchNormCache<T>&, std::vector<double>&,          \
                                           std::vector<double>&);                             \
  template void batchnorm_forward_eval<T>(const BasicTensor4<T>&, std::span<const T>,       \
                                          std::span<const T>, std::span<const T>,             \
                                          std::span<const T>, BasicTensor4<T>&);              \
  template void batchnorm_backward<T>(const BasicTensor4<T>&, std::span<const T>,           \
                                      const BatchNormCache<T>&, BasicTensor4<T>&,             \
                                      std::span<T>, std::span<T>);                            \
  template void relu_forward<T>(const BasicTensor4<T>&, BasicTensor4<T>&);                  \
  template void relu_backward<T>(const BasicTensor4<T>&, const BasicTensor4<T>&,            \
                                 BasicTensor4<T>&);                                           \
  template void maxpool_forward<T>(const BasicTensor4<T>&, const PoolGeometry&,             \
                                   BasicTensor4<T>&, std::vector<std::int32_t>&);             \
  template void maxpool_backward<T>(const BasicTensor4<T>&, const std::vector<std::int32_t>&, \
                                    Shape4, BasicTensor4<T>&);                                \
  template void dense_forward<T>(const BasicTensor4<T>&, std::span<const T>,                \
                                 std::span<const T>, int, BasicTensor4<T>&);                  \
  template void dense_backward<T>(const BasicTensor4<T>&, std::span<const T>,               \
                                  const BasicTensor4<T>&, BasicTensor4<T>*, std::span<T>,     \
                                  std::span<T>);                                              \
  template double softmax_xent<T>(const BasicTensor4<T>&, std::span<const int>,             \
                                  BasicTensor4<T>*);

SENSPRUNE_INSTANTIATE_LAYERS(float)
SENSPRUNE_INSTANTIATE_LAYERS(double)

#undef SENSPRUNE_INSTANTIATE_LAYERS

}  // namespace sensprune::layers
