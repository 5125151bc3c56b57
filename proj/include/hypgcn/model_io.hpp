#pragma once

#include <string>

#include "hypgcn/model.hpp"
#include "hypgcn/prune.hpp"

namespace hypgcn {

/// Little-endian binary weight file. Layout (see docs/formats.md):
///   magic "RFCH", version u32, block count u32, frames u32, vertices u32,
///   classes u32; per block: dims (u32 x4: in, out, stride, shortcut kind),
///   G_k as f32[3*625], spatial weights as i16 raw Q8.8 [3*ic*oc],
///   temporal weights as i16 [oc*ic*9], affine params as f32 (spatial
///   scale/bias, temporal scale/bias, each [oc]), projection weights as
///   i16 [ic*oc] when the shortcut is a projection; then the classifier
///   (in u32, classes u32, has_bias u8, weights f32, bias f32).
/// A pruned model appends a "MASK" section: per block the spatial and
/// temporal keep bitfields (LSB-first), the applied cavity grid, and the
/// original prune spec entry.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

void save_pruned(const PrunedModel& pruned, const std::string& path);

/// Loads either a pruned file or a plain model file; the latter comes
/// back with all-keep masks and an all-zero-rate spec.
PrunedModel load_pruned(const std::string& path);

/// True if the file carries a MASK section.
bool has_mask_section(const std::string& path);

}  // namespace hypgcn
