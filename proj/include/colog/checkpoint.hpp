#pragma once

#include <string>

#include "colog/model.hpp"

namespace colog {

// Checkpoint file layout (little endian):
//   magic "COLOG1"
//   u32 config-block length, then that many bytes of `key = value` text
//   u64 tensor count, then per tensor: u32 name length, name bytes,
//     u64 rows, u64 cols, u64 data offset (bytes into the data section)
//   raw float32 tensor data, row-major, in manifest order
// Round-trips bit-exactly: load(save(m)) writes the identical file.
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);  // throws DataError

// Parses just the embedded config (for mismatch diagnostics).
ModelConfig peek_checkpoint_config(const std::string& path);

std::string model_config_to_text(const ModelConfig& config);
ModelConfig model_config_from_text(const std::string& text);

// Human-readable mismatch summary; empty when the configs agree.
std::string config_diff(const ModelConfig& have, const ModelConfig& want);

}  // namespace colog
