#pragma once

#include <string>

#include "sentigraph/parser.hpp"

// Self-describing checkpoint container: magic "SGPH", format version, a JSON
// header (hyperparameters, vocabulary, tensor shapes), then the named tensors
// as little-endian 32-bit floats in row-major order. load(save(m)) reproduces
// forward outputs bitwise once parameters are float32-valued.

namespace sentigraph {

std::string save_checkpoint(const Model& model);
Model load_checkpoint(std::string_view bytes);

void save_checkpoint_file(const Model& model, const std::string& path);
Model load_checkpoint_file(const std::string& path);

// Shared file helpers (atomic write: temp file + rename).
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace sentigraph
