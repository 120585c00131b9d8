#include "sensprune/datasets.h"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "sensprune/errors.h"

namespace sensprune {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open data file: " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at, const std::string& file) {
  if (b.size() < at + 4) throw FormatError(file + ": truncated header", b.size());
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

std::string hex(std::uint32_t v) {
  std::ostringstream s;
  s << "0x" << std::hex;
  s.width(8);
  s.fill('0');
  s << v;
  return s.str();
}

void check_magic(std::uint32_t found, std::uint32_t expected, const std::string& file) {
  if (found != expected) {
    throw FormatError(file + ": bad IDX magic, expected " + hex(expected) + " found " + hex(found),
                      0);
  }
}

void check_payload(const std::vector<std::uint8_t>& b, std::size_t header, std::size_t payload,
                   const std::string& file) {
  if (b.size() < header + payload) {
    throw FormatError(file + ": truncated payload, expected " + std::to_string(payload) +
                          " bytes after the header",
                      b.size());
  }
  if (b.size() > header + payload) {
    throw FormatError(file + ": trailing bytes after payload", header + payload);
  }
}

RawImages select_images(const RawImages& src, const std::vector<int>& idx) {
  RawImages out = src;
  const std::size_t per = static_cast<std::size_t>(src.channels) * src.rows * src.cols;
  out.count = static_cast<int>(idx.size());
  out.pixels.clear();
  out.pixels.reserve(idx.size() * per);
  for (int i : idx) {
    auto first = src.pixels.begin() + static_cast<std::ptrdiff_t>(i * per);
    out.pixels.insert(out.pixels.end(), first, first + static_cast<std::ptrdiff_t>(per));
  }
  return out;
}

std::vector<std::uint8_t> select_labels(const std::vector<std::uint8_t>& src,
                                        const std::vector<int>& idx) {
  std::vector<std::uint8_t> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(src[i]);
  return out;
}

Dataset assemble_dataset(const RawImages& train_images, const std::vector<std::uint8_t>& train_labels,
                         const RawImages& test_images, const std::vector<std::uint8_t>& test_labels,
                         int num_classes, int train_subset, int test_subset) {
  const auto tr = stratified_subset(train_labels, train_subset, num_classes);
  const auto te = stratified_subset(test_labels, test_subset, num_classes);
  const RawImages tr_img = select_images(train_images, tr);
  Dataset d;
  d.normalization = compute_normalization(tr_img);
  d.train = to_split(tr_img, select_labels(train_labels, tr), num_classes, d.normalization);
  d.test = to_split(select_images(test_images, te), select_labels(test_labels, te), num_classes,
                    d.normalization);
  return d;
}

}  // namespace

RawImages read_idx_images(const std::filesystem::path& path) {
  const auto b = slurp(path);
  const std::string file = path.filename().string();
  check_magic(be32(b, 0, file), kIdxImageMagic, file);
  RawImages img;
  img.count = static_cast<int>(be32(b, 4, file));
  img.rows = static_cast<int>(be32(b, 8, file));
  img.cols = static_cast<int>(be32(b, 12, file));
  const std::size_t payload = static_cast<std::size_t>(img.count) * img.rows * img.cols;
  check_payload(b, 16, payload, file);
  img.pixels.assign(b.begin() + 16, b.end());
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const auto b = slurp(path);
  const std::string file = path.filename().string();
  check_magic(be32(b, 0, file), kIdxLabelMagic, file);
  const std::size_t count = be32(b, 4, file);
  check_payload(b, 8, count, file);
  return {b.begin() + 8, b.end()};
}

void write_idx_images(const std::filesystem::path& path, const RawImages& images) {
  if (images.channels != 1) throw ConfigError("IDX images must have one channel");
  std::vector<std::uint8_t> b;
  put_be32(b, kIdxImageMagic);
  put_be32(b, static_cast<std::uint32_t>(images.count));
  put_be32(b, static_cast<std::uint32_t>(images.rows));
  put_be32(b, static_cast<std::uint32_t>(images.cols));
  b.insert(b.end(), images.pixels.begin(), images.pixels.end());
  spit(path, b);
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> b;
  put_be32(b, kIdxLabelMagic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  spit(path, b);
}

RawCifar read_cifar_batch(const std::filesystem::path& path, int variant) {
  if (variant != 10 && variant != 100) throw ConfigError("CIFAR variant must be 10 or 100");
  const auto b = slurp(path);
  const std::size_t label_bytes = variant == 10 ? 1 : 2;
  const std::size_t record = label_bytes + kCifarPixels;
  if (b.size() % record != 0) {
    throw FormatError(path.filename().string() + ": length " + std::to_string(b.size()) +
                          " is not a multiple of the " + std::to_string(record) +
                          "-byte record size",
                      b.size() - b.size() % record);
  }
  RawCifar out;
  const std::size_t n = b.size() / record;
  out.images = {static_cast<int>(n), 3, 32, 32, {}};
  out.images.pixels.reserve(n * kCifarPixels);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t at = i * record;
    if (variant == 100) out.coarse.push_back(b[at]);
    out.labels.push_back(b[at + label_bytes - 1]);
    if (out.labels.back() >= variant) {
      throw FormatError(path.filename().string() + ": label " +
                            std::to_string(out.labels.back()) + " out of range",
                        at + label_bytes - 1);
    }
    out.images.pixels.insert(out.images.pixels.end(), b.begin() + at + label_bytes,
                             b.begin() + at + record);
  }
  return out;
}

void write_cifar_batch(const std::filesystem::path& path, const RawCifar& batch, int variant) {
  if (variant != 10 && variant != 100) throw ConfigError("CIFAR variant must be 10 or 100");
  std::vector<std::uint8_t> b;
  for (int i = 0; i < batch.images.count; ++i) {
    if (variant == 100) b.push_back(batch.coarse.empty() ? 0 : batch.coarse[i]);
    b.push_back(batch.labels[i]);
    auto first = batch.images.pixels.begin() + static_cast<std::ptrdiff_t>(i * kCifarPixels);
    b.insert(b.end(), first, first + kCifarPixels);
  }
  spit(path, b);
}

nlohmann::json to_json(const Normalization& n) {
  return {{"mean", n.mean}, {"std", n.stddev}};
}

std::vector<int> stratified_subset(const std::vector<std::uint8_t>& labels, int count,
                                   int num_classes) {
  std::vector<int> all(labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  if (count <= 0 || count >= static_cast<int>(labels.size())) return all;

  std::vector<int> quota(num_classes, count / num_classes);
  for (int c = 0; c < count % num_classes; ++c) ++quota[c];
  std::vector<int> out;
  out.reserve(count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < num_classes && quota[y] > 0) {
      --quota[y];
      out.push_back(static_cast<int>(i));
    }
  }
  for (int c = 0; c < num_classes; ++c) {
    if (quota[c] > 0) {
      throw ConfigError("class " + std::to_string(c) + " has too few samples for a " +
                        std::to_string(count) + "-sample stratified subset");
    }
  }
  return out;
}

Normalization compute_normalization(const RawImages& images) {
  Normalization n;
  const std::size_t plane = static_cast<std::size_t>(images.rows) * images.cols;
  n.mean.assign(images.channels, 0.0);
  n.stddev.assign(images.channels, 1.0);
  if (images.count == 0) return n;
  const double m = static_cast<double>(images.count) * plane;
  for (int c = 0; c < images.channels; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < images.count; ++i) {
      const std::uint8_t* p =
          images.pixels.data() + (static_cast<std::size_t>(i) * images.channels + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        const double v = p[k] / 255.0;
        sum += v;
        sq += v * v;
      }
    }
    const double mean = sum / m;
    const double var = std::max(0.0, sq / m - mean * mean);
    n.mean[c] = mean;
    n.stddev[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return n;
}

DatasetSplit to_split(const RawImages& images, const std::vector<std::uint8_t>& labels,
                      int num_classes, const Normalization& norm) {
  DatasetSplit s;
  s.num_classes = num_classes;
  s.images = Tensor4({images.count, images.channels, images.rows, images.cols});
  const std::size_t plane = static_cast<std::size_t>(images.rows) * images.cols;
  float* dst = s.images.raw();
  for (std::size_t k = 0; k < images.pixels.size(); ++k) {
    const int c = static_cast<int>((k / plane) % images.channels);
    dst[k] = static_cast<float>((images.pixels[k] / 255.0 - norm.mean[c]) / norm.stddev[c]);
  }
  s.labels.assign(labels.begin(), labels.end());
  s.validate();
  return s;
}

Dataset load_mnist(const std::filesystem::path& dir, int train_subset, int test_subset) {
  const RawImages tri = read_idx_images(dir / "train-images-idx3-ubyte");
  const auto trl = read_idx_labels(dir / "train-labels-idx1-ubyte");
  const RawImages tei = read_idx_images(dir / "t10k-images-idx3-ubyte");
  const auto tel = read_idx_labels(dir / "t10k-labels-idx1-ubyte");
  if (tri.count != static_cast<int>(trl.size()) || tei.count != static_cast<int>(tel.size())) {
    throw FormatError("MNIST image and label counts differ", 4);
  }
  return assemble_dataset(tri, trl, tei, tel, 10, train_subset, test_subset);
}

Dataset load_cifar(const std::filesystem::path& dir, int variant, int train_subset,
                   int test_subset) {
  RawCifar train;
  RawCifar test;
  if (variant == 10) {
    train.images = {0, 3, 32, 32, {}};
    for (int b = 1; b <= 5; ++b) {
      RawCifar part = read_cifar_batch(dir / ("data_batch_" + std::to_string(b) + ".bin"), 10);
      train.images.count += part.images.count;
      train.images.pixels.insert(train.images.pixels.end(), part.images.pixels.begin(),
                                 part.images.pixels.end());
      train.labels.insert(train.labels.end(), part.labels.begin(), part.labels.end());
    }
    test = read_cifar_batch(dir / "test_batch.bin", 10);
  } else if (variant == 100) {
    train = read_cifar_batch(dir / "train.bin", 100);
    test = read_cifar_batch(dir / "test.bin", 100);
  } else {
    throw ConfigError("CIFAR variant must be 10 or 100");
  }
  return assemble_dataset(train.images, train.labels, test.images, test.labels, variant,
                          train_subset, test_subset);
}

}  // namespace sensprune
