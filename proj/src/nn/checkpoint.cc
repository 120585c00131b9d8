#include "sensprune/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sensprune/errors.h"

namespace sensprune {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void bytes(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void floats(const std::vector<float>& v) {
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(float)));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}
  std::uint64_t offset() const { return pos_; }
  void need(std::size_t n, const char* what) {
    if (buf_.size() - pos_ < n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what, pos_);
    }
  }
  template <typename T>
  T pod(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  std::string bytes(const char* what) {
    const auto n = pod<std::uint64_t>(what);
    need(n, what);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void floats(std::vector<float>& v, const char* what) {
    need(v.size() * sizeof(float), what);
    std::memcpy(v.data(), buf_.data() + pos_, v.size() * sizeof(float));
    pos_ += v.size() * sizeof(float);
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

nlohmann::json filter_json(const Network& net) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [layer, ids] : net.filter_ids()) {
    j[std::to_string(layer)] = {{"original", net.original_filter_count(layer)}, {"ids", ids}};
  }
  return j;
}

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open checkpoint for writing: " + path.string());
  Writer w(out);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  w.pod<std::uint32_t>(kCheckpointVersion);
  w.pod<std::uint64_t>(spec_digest(net.spec()));
  w.bytes(to_json(net.spec()).dump());
  w.bytes(filter_json(net).dump());
  for (const auto& p : net.params()) {
    w.floats(p.weight);
    w.floats(p.bias);
    w.floats(p.running_mean);
    w.floats(p.running_var);
  }
  for (const auto& s : net.shortcut_params()) {
    w.floats(s.weight);
    w.floats(s.gamma);
    w.floats(s.beta);
    w.floats(s.running_mean);
    w.floats(s.running_var);
  }
  if (!out) throw ConfigError("failed writing checkpoint: " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path,
                        const std::optional<ModelSpec>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));

  r.need(sizeof kCheckpointMagic, "magic");
  char magic[sizeof kCheckpointMagic];
  for (char& c : magic) c = r.pod<char>("magic");
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw FormatError("not a checkpoint file (bad magic)", 0);
  }
  const std::uint64_t version_at = r.offset();
  const auto version = r.pod<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version),
                      version_at);
  }
  const std::uint64_t digest_at = r.offset();
  const auto digest = r.pod<std::uint64_t>("spec digest");
  const std::uint64_t spec_at = r.offset();
  ModelSpec spec;
  try {
    spec = model_spec_from_json(nlohmann::json::parse(r.bytes("spec")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("embedded spec is not valid JSON: ") + e.what(), spec_at);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("embedded spec is invalid: ") + e.what(), spec_at);
  }
  if (spec_digest(spec) != digest) {
    throw FormatError("spec digest does not match the embedded spec", digest_at);
  }
  if (expected && spec_digest(*expected) != digest) {
    throw FormatError("checkpoint was written for a different model spec", digest_at);
  }

  const std::uint64_t ids_at = r.offset();
  std::map<int, std::vector<int>> ids;
  std::map<int, int> originals;
  try {
    const nlohmann::json table = nlohmann::json::parse(r.bytes("filter ids"));
    for (const auto& [key, v] : table.items()) {
      ids[std::stoi(key)] = v.at("ids").get<std::vector<int>>();
      originals[std::stoi(key)] = v.at("original").get<int>();
    }
  } catch (const std::exception& e) {
    throw FormatError(std::string("malformed filter-id table: ") + e.what(), ids_at);
  }

  Network net(spec);
  for (auto& p : net.params()) {
    r.floats(p.weight, "layer weights");
    r.floats(p.bias, "layer biases");
    r.floats(p.running_mean, "running mean");
    r.floats(p.running_var, "running variance");
  }
  for (auto& s : net.shortcut_params()) {
    r.floats(s.weight, "shortcut weights");
    r.floats(s.gamma, "shortcut gamma");
    r.floats(s.beta, "shortcut beta");
    r.floats(s.running_mean, "shortcut running mean");
    r.floats(s.running_var, "shortcut running variance");
  }
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint payload", r.offset());
  try {
    net.set_filter_ids(std::move(ids), std::move(originals));
  } catch (const ConfigError& e) {
    throw FormatError(e.what(), ids_at);
  }
  return net;
}

std::uint64_t state_digest(const Network& net) {
  std::uint64_t h = kFnvOffset;
  const std::uint64_t sd = spec_digest(net.spec());
  fnv(h, &sd, sizeof sd);
  auto add = [&h](const std::vector<float>& v) {
    const std::uint64_t n = v.size();
    fnv(h, &n, sizeof n);
    fnv(h, v.data(), v.size() * sizeof(float));
  };
  for (const auto& p : net.params()) {
    add(p.weight);
    add(p.bias);
    add(p.running_mean);
    add(p.running_var);
  }
  for (const auto& s : net.shortcut_params()) {
    add(s.weight);
    add(s.gamma);
    add(s.beta);
    add(s.running_mean);
    add(s.running_var);
  }
  for (const auto& [layer, ids] : net.filter_ids()) {
    fnv(h, &layer, sizeof layer);
    fnv(h, ids.data(), ids.size() * sizeof(int));
  }
  return h;
}

}  // namespace sensprune
