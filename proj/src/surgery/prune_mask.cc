#include "sensprune/errors.h"
#include "sensprune/surgery.h"

namespace sensprune {

bool PruneMask::empty() const {
  for (const auto& [layer, ids] : removed) {
    if (!ids.empty()) return false;
  }
  return true;
}

std::int64_t PruneMask::total_removed() const {
  std::int64_t n = 0;
  for (const auto& [layer, ids] : removed) n += static_cast<std::int64_t>(ids.size());
  return n;
}

void PruneMask::validate(const ModelSpec& spec) const {
  for (const auto& [layer, ids] : removed) {
    bool prunable = false;
    for (int p : spec.prunable) prunable |= p == layer;
    if (!prunable) {
      throw ConstraintError("mask names layer " + std::to_string(layer) +
                            ", which is not prunable");
    }
    const int n = spec.layers[layer].conv.out_ch;
    if (!ids.empty() && (*ids.begin() < 0 || *ids.rbegin() >= n)) {
      throw ConstraintError("mask index out of range for layer " + std::to_string(layer) +
                            " with " + std::to_string(n) + " filters");
    }
    if (static_cast<int>(ids.size()) >= n) {
      throw ConstraintError("mask removes every filter of layer " + std::to_string(layer));
    }
  }
}

nlohmann::json to_json(const PruneMask& mask) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [layer, ids] : mask.removed) {
    j[std::to_string(layer)] = std::vector<int>(ids.begin(), ids.end());
  }
  return j;
}

PruneMask prune_mask_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("prune mask must be a JSON object");
  PruneMask mask;
  for (const auto& [key, v] : j.items()) {
    int layer = 0;
    try {
      std::size_t used = 0;
      layer = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ConfigError("prune mask key '" + key + "' is not a layer index");
    }
    if (!v.is_array()) throw ConfigError("prune mask entry for " + key + " must be an array");
    auto& ids = mask.removed[layer];
    for (const auto& x : v) {
      if (!x.is_number_integer()) throw ConfigError("prune mask indices must be integers");
      if (!ids.insert(x.get<int>()).second) {
        throw ConfigError("duplicate index in prune mask entry for " + key);
      }
    }
  }
  return mask;
}

const char* to_string(SelectionKind kind) {
  switch (kind) {
    case SelectionKind::kRandom: return "random";
    case SelectionKind::kL1Norm: return "l1_norm";
    case SelectionKind::kL2Norm: return "l2_norm";
  }
  return "?";
}

SelectionKind selection_kind_from_string(const std::string& name) {
  if (name == "random") return SelectionKind::kRandom;
  if (name == "l1_norm" || name == "l1") return SelectionKind::kL1Norm;
  if (name == "l2_norm" || name == "l2") return SelectionKind::kL2Norm;
  throw ConfigError("unknown selection strategy '" + name +
                    "' (expected random, l1_norm or l2_norm)");
}

}  // namespace sensprune
