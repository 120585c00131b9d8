#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "sensprune/network.h"

namespace sensprune {

inline constexpr char kCheckpointMagic[8] = {'S', 'P', 'R', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers little-endian):
//   magic[8] | u32 version | u64 spec digest | u64 n | spec JSON (n bytes)
//   | u64 m | filter-id JSON (m bytes)
//   | per layer: weight, bias, running_mean, running_var as float32
//   | per skip edge: weight, gamma, beta, running_mean, running_var as float32
void save_checkpoint(const Network& net, const std::filesystem::path& path);

// Throws FormatError on bad magic, unknown version, truncation, or a digest
// that does not match the embedded spec. When `expected` is given, a
// checkpoint written for a different spec is rejected too.
Network load_checkpoint(const std::filesystem::path& path,
                        const std::optional<ModelSpec>& expected = std::nullopt);

// FNV-1a over the spec digest, every parameter bit pattern and the
// surviving filter ids. Equal digests mean interchangeable networks.
std::uint64_t state_digest(const Network& net);

}  // namespace sensprune
