#include "sensprune/zoo.h"

#include "sensprune/errors.h"

namespace sensprune {

namespace {

constexpr int kDefaultDivisor = 8;

int scaled(int n, int divisor) { return std::max(1, n / divisor); }

// conv(3x3) + BN + ReLU, conv named and marked prunable.
void conv_bn_relu(ModelSpec& s, int in, int out, const std::string& name) {
  s.prunable.push_back(static_cast<int>(s.layers.size()));
  s.layers.push_back(LayerSpec::Conv(in, out).named(name));
  s.layers.push_back(LayerSpec::BatchNorm(out));
  s.layers.push_back(LayerSpec::Relu());
}

void head(ModelSpec& s, int in_dim, int hidden, int classes) {
  s.layers.push_back(LayerSpec::Dense(in_dim, hidden).named("FC1"));
  s.layers.push_back(LayerSpec::Relu());
  s.layers.push_back(LayerSpec::Dense(hidden, classes).named("FC2"));
  s.layers.push_back(LayerSpec::SoftmaxXent());
}

ModelSpec vgg16(int divisor) {
  ModelSpec s;
  s.name = divisor == 1 ? "vgg16-cifar" : "vgg16-mini";
  s.input_channels = 3;
  s.input_height = s.input_width = 32;
  s.num_classes = 10;
  // 0 marks a max-pool.
  const int plan[] = {64, 64, 0, 128, 128, 0, 256, 256, 256, 0, 512, 512, 512, 0, 512, 512, 512, 0};
  int in = 3;
  int conv = 0;
  for (int w : plan) {
    if (w == 0) {
      s.layers.push_back(LayerSpec::MaxPool());
      continue;
    }
    const int out = scaled(w, divisor);
    conv_bn_relu(s, in, out, "Conv" + std::to_string(++conv));
    in = out;
  }
  head(s, in, scaled(512, divisor), 10);
  return s;
}

ModelSpec conv4(int divisor) {
  ModelSpec s;
  s.name = divisor == 1 ? "conv4-mnist" : "conv4-mini";
  s.input_channels = 1;
  s.input_height = s.input_width = 28;
  s.num_classes = 10;
  const int w1 = scaled(64, divisor), w2 = scaled(128, divisor), w3 = scaled(256, divisor),
            w4 = scaled(512, divisor);
  conv_bn_relu(s, 1, w1, "Conv1");
  s.layers.push_back(LayerSpec::MaxPool());
  conv_bn_relu(s, w1, w2, "Conv2");
  conv_bn_relu(s, w2, w3, "Conv3");
  conv_bn_relu(s, w3, w4, "Conv4");
  s.layers.push_back(LayerSpec::MaxPool());
  head(s, w4 * 7 * 7, scaled(512, divisor), 10);
  return s;
}

// CIFAR-style ResNet-18: 3x3 stem, four stages of two basic blocks, global
// pooling and a linear classifier. Block b spans conv-BN-ReLU-conv-BN; its
// skip edge adds the block input to that output, followed by ReLU.
ModelSpec resnet18(int divisor, int classes) {
  ModelSpec s;
  s.name = divisor == 1 ? "resnet18-cifar" : "resnet-mini";
  s.input_channels = 3;
  s.input_height = s.input_width = 32;
  s.num_classes = classes;
  const int stem = scaled(64, divisor);
  s.layers.push_back(LayerSpec::Conv(3, stem, 3, 1, 1, false).named("Stem"));
  s.layers.push_back(LayerSpec::BatchNorm(stem));
  s.layers.push_back(LayerSpec::Relu());
  int in = stem;
  int block = 0;
  const int widths[] = {64, 128, 256, 512};
  for (int stage = 0; stage < 4; ++stage) {
    const int out = scaled(widths[stage], divisor);
    for (int rep = 0; rep < 2; ++rep) {
      const int stride = (stage > 0 && rep == 0) ? 2 : 1;
      const std::string tag = std::to_string(block + 1);
      s.prunable.push_back(static_cast<int>(s.layers.size()));
      s.layers.push_back(
          LayerSpec::Conv(in, out, 3, stride, 1, false).named("Conv" + tag).in_block(block));
      s.layers.push_back(LayerSpec::BatchNorm(out).in_block(block));
      s.layers.push_back(LayerSpec::Relu().in_block(block));
      s.layers.push_back(
          LayerSpec::Conv(out, out, 3, 1, 1, false).named("Block" + tag + ".conv2").in_block(block));
      s.layers.push_back(LayerSpec::BatchNorm(out).in_block(block));
      s.skip_edges.push_back({block, block, stride != 1 || in != out});
      s.layers.push_back(LayerSpec::Relu());
      in = out;
      ++block;
    }
  }
  // 4x4 feature map pooled to 1x1.
  s.layers.push_back(LayerSpec::MaxPool(4, 4));
  s.layers.push_back(LayerSpec::Dense(in, classes).named("FC"));
  s.layers.push_back(LayerSpec::SoftmaxXent());
  return s;
}

}  // namespace

std::vector<std::string> zoo_names() {
  return {"vgg16-cifar", "vgg16-mini", "conv4-mnist", "conv4-mini", "resnet18-cifar",
          "resnet-mini"};
}

ModelSpec build_model(const std::string& name, int divisor) {
  const bool mini = name == "vgg16-mini" || name == "conv4-mini" || name == "resnet-mini";
  if (divisor < 0) throw ConfigError("model divisor must be positive");
  if (!mini && divisor > 1) {
    throw ConfigError("model '" + name + "' is full size; divisors apply to mini variants only");
  }
  const int d = mini ? (divisor == 0 ? kDefaultDivisor : divisor) : 1;
  if (mini && d < 2) throw ConfigError("mini variants need a divisor of at least 2");
  ModelSpec s;
  if (name == "vgg16-cifar" || name == "vgg16-mini") {
    s = vgg16(d);
  } else if (name == "conv4-mnist" || name == "conv4-mini") {
    s = conv4(d);
  } else if (name == "resnet18-cifar") {
    s = resnet18(1, 100);
  } else if (name == "resnet-mini") {
    s = resnet18(d, 10);
  } else {
    std::string list;
    for (const auto& n : zoo_names()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown model '" + name + "'; the zoo has: " + list);
  }
  assemble(s);
  return s;
}

}  // namespace sensprune
