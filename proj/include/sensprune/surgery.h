#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sensprune/network.h"

namespace sensprune {

// Removed output filters per prunable layer, in original filter numbering.
struct PruneMask {
  std::map<int, std::set<int>> removed;

  bool empty() const;
  std::int64_t total_removed() const;
  // Throws ConstraintError if an index is out of range for `spec` or a layer
  // would lose every filter.
  void validate(const ModelSpec& spec) const;
  friend bool operator==(const PruneMask&, const PruneMask&) = default;
};

// {"<layer index>": [removed indices], ...}
nlohmann::json to_json(const PruneMask& mask);
PruneMask prune_mask_from_json(const nlohmann::json& j);

enum class SelectionKind { kRandom, kL1Norm, kL2Norm };

const char* to_string(SelectionKind kind);
SelectionKind selection_kind_from_string(const std::string& name);

struct SelectionStrategy {
  SelectionKind kind = SelectionKind::kRandom;
  std::uint64_t seed = 0;  // random only
};

// Filters to remove from `layer`, as ascending positions in its current
// weight tensor. Norm strategies pick the `count` smallest norms of each
// filter's full weight slab, ties to the lowest position.
// Throws InvalidRequest unless 0 <= count < surviving filters.
std::vector<int> select_filters(const Network& net, int layer, int count,
                                const SelectionStrategy& strategy);

// Number of filters a ratio r removes from n: round(r*n), at least 1 when
// r > 0, at most n - 1.
int filters_for_ratio(double ratio, int n);

// Deletes output filters at the given current positions of a prunable conv,
// with its batch norm and the next consumer's input slices (conv input
// channels, or dense columns through the channel-major flatten map).
// Throws ConstraintError for non-prunable layers, removals touching a
// shortcut, or removing every filter; InvalidRequest for bad positions.
Network remove_filters(const Network& net, int layer, const std::vector<int>& positions);

// Copy of `net` with `layer` added to the frozen set.
Network freeze_layer(const Network& net, int layer);

Network clone(const Network& net);

// The mask that takes the original network to `net`.
PruneMask prune_mask(const Network& net);

// Removes every filter listed in `mask` that `net` still has.
Network apply_mask(const Network& net, const PruneMask& mask);

}  // namespace sensprune
