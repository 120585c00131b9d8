#include "sensprune/accounting.h"

namespace sensprune {

std::int64_t count_params(const ModelSpec& spec) {
  const Topology topo = assemble(spec);
  std::int64_t total = 0;
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::kConv2d:
        total += std::int64_t{l.conv.out_ch} * l.conv.in_ch * l.conv.kernel * l.conv.kernel;
        if (l.conv.bias) total += l.conv.out_ch;
        break;
      case LayerKind::kDense:
        total += std::int64_t{l.dense.in_dim} * l.dense.out_dim + l.dense.out_dim;
        break;
      case LayerKind::kBatchNorm:
        total += 2 * std::int64_t{l.channels};
        break;
      default:
        break;
    }
  }
  for (std::size_t e = 0; e < spec.skip_edges.size(); ++e) {
    if (!spec.skip_edges[e].projection) continue;
    const ShortcutGeometry& sg = topo.shortcuts[e];
    total += std::int64_t{sg.in_ch} * sg.out_ch + 2 * std::int64_t{sg.out_ch};
  }
  return total;
}

std::int64_t count_macs(const ModelSpec& spec, int height, int width) {
  const Topology topo = assemble(spec, height, width);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const ActShape& out = topo.outputs[i];
    if (l.kind == LayerKind::kConv2d) {
      total += std::int64_t{l.conv.out_ch} * l.conv.in_ch * l.conv.kernel * l.conv.kernel *
               out.h * out.w;
    } else if (l.kind == LayerKind::kDense) {
      total += std::int64_t{l.dense.in_dim} * l.dense.out_dim;
    }
  }
  for (std::size_t e = 0; e < spec.skip_edges.size(); ++e) {
    if (!spec.skip_edges[e].projection) continue;
    const ShortcutGeometry& sg = topo.shortcuts[e];
    total += std::int64_t{sg.in_ch} * sg.out_ch * sg.output.h * sg.output.w;
  }
  return total;
}

std::int64_t count_macs(const ModelSpec& spec) {
  return count_macs(spec, spec.input_height, spec.input_width);
}

}  // namespace sensprune
