#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sensprune/model_spec.h"
#include "sensprune/tensor.h"

// Stateless forward/backward kernels for the layer kinds a ModelSpec can hold.
// Backward kernels accumulate parameter gradients (+=) and overwrite input
// gradients. All kernels are instantiated for float and double.
namespace sensprune::layers {

// Weights are laid out (out_ch, in_ch, k, k). `bias` may be empty.
// When `columns` is given, the whole batch's im2col matrix is kept there so
// the backward pass can reuse it.
template <typename T>
void conv2d_forward(const BasicTensor4<T>& x, std::span<const T> weight,
                    std::span<const T> bias, const ConvGeometry& g, BasicTensor4<T>& y,
                    std::vector<T>* columns = nullptr);

// `dx` may be null when the input gradient is not needed. `dbias` may be
// empty when the conv has no bias. `columns` is the matrix kept by the
// forward pass on the same input, if any.
template <typename T>
void conv2d_backward(const BasicTensor4<T>& x, std::span<const T> weight,
                     const ConvGeometry& g, const BasicTensor4<T>& dy, BasicTensor4<T>* dx,
                     std::span<T> dweight, std::span<T> dbias,
                     const std::vector<T>* columns = nullptr);

template <typename T>
struct BatchNormCache {
  std::vector<T> xhat;
  std::vector<T> inv_std;
};

inline constexpr double kBatchNormEps = 1e-5;

// Normalizes with batch statistics. The per-channel batch mean and biased
// variance are written to `mean` / `var` for running-statistics updates.
template <typename T>
void batchnorm_forward_train(const BasicTensor4<T>& x, std::span<const T> gamma,
                             std::span<const T> beta, BasicTensor4<T>& y,
                             BatchNormCache<T>& cache, std::vector<double>& mean,
                             std::vector<double>& var);

template <typename T>
void batchnorm_forward_eval(const BasicTensor4<T>& x, std::span<const T> gamma,
                            std::span<const T> beta, std::span<const T> running_mean,
                            std::span<const T> running_var, BasicTensor4<T>& y);

template <typename T>
void batchnorm_backward(const BasicTensor4<T>& dy, std::span<const T> gamma,
                        const BatchNormCache<T>& cache, BasicTensor4<T>& dx,
                        std::span<T> dgamma, std::span<T> dbeta);

template <typename T>
void relu_forward(const BasicTensor4<T>& x, BasicTensor4<T>& y);

template <typename T>
void relu_backward(const BasicTensor4<T>& x, const BasicTensor4<T>& dy, BasicTensor4<T>& dx);

// `argmax` receives, per output element, the flat input index it came from.
template <typename T>
void maxpool_forward(const BasicTensor4<T>& x, const PoolGeometry& g, BasicTensor4<T>& y,
                     std::vector<std::int32_t>& argmax);

template <typename T>
void maxpool_backward(const BasicTensor4<T>& dy, const std::vector<std::int32_t>& argmax,
                      Shape4 input_shape, BasicTensor4<T>& dx);

// Treats each sample as a flat (c*h*w) feature vector. Weights are (out, in).
template <typename T>
void dense_forward(const BasicTensor4<T>& x, std::span<const T> weight, std::span<const T> bias,
                   int out_dim, BasicTensor4<T>& y);

template <typename T>
void dense_backward(const BasicTensor4<T>& x, std::span<const T> weight,
                    const BasicTensor4<T>& dy, BasicTensor4<T>* dx, std::span<T> dweight,
                    std::span<T> dbias);

// Mean softmax cross-entropy over the batch, computed with log-sum-exp.
// Writes d(loss)/d(logits) into `grad` when non-null.
template <typename T>
double softmax_xent(const BasicTensor4<T>& logits, std::span<const int> labels,
                    BasicTensor4<T>* grad);

}  // namespace sensprune::layers
