#pragma once

#include <cstdint>

#include "sensprune/model_spec.h"

namespace sensprune {

// Trainable parameters: conv/dense weights and biases, BN gamma and beta,
// projection-shortcut conv and BN. Running statistics are not counted.
std::int64_t count_params(const ModelSpec& spec);

// Multiply-accumulates of one forward pass: out_ch*in_ch*k*k*H_out*W_out
// per conv (shortcut projections included) plus in*out per dense layer.
std::int64_t count_macs(const ModelSpec& spec, int height, int width);
std::int64_t count_macs(const ModelSpec& spec);

}  // namespace sensprune
