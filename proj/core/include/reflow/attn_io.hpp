#pragma once

#include <filesystem>
#include <string>

#include "reflow/attnmask.hpp"

namespace reflow {

// Reads one attention map from CSV: `height` rows of `width` comma-separated
// decimals, no header, '.' decimal separator, LF line endings. Malformed rows raise
// ShapeError naming the file and 1-based line.
AttentionMap read_map_csv(const std::filesystem::path& path, int height, int width);

// 17 significant digits per entry so a write/read cycle is bit-exact.
std::string map_csv_string(const AttentionMap& map);
std::string mask_csv_string(const Mask& mask);
void write_map_csv(const std::filesystem::path& path, const AttentionMap& map);
void write_mask_csv(const std::filesystem::path& path, const Mask& mask);

// Loads a stack from a JSON manifest {"height", "width", "count", "files": [...]};
// file entries resolve relative to the manifest's directory.
AttentionStack load_stack_manifest(const std::filesystem::path& manifest_path);

// Writes the maps as <stem>_00.csv... plus <stem>_manifest.json in `dir`; returns
// the manifest path.
std::filesystem::path write_stack_manifest(const std::filesystem::path& dir,
                                           const std::string& stem,
                                           const AttentionStack& stack);

}  // namespace reflow
