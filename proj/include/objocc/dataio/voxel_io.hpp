// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "objocc/core/volume.hpp"

namespace objocc::dataio {

// One little-endian uint16 raw label per voxel, vertical axis fastest.
// Throws FormatError on a size mismatch and TaxonomyError on unmapped ids.
SemanticVolume read_voxel_labels(const std::filesystem::path& path, const VoxelGrid& grid,
                                 const LabelSet& label_set = LabelSet::semantic_kitti());
SemanticVolume decode_voxel_labels(std::span<const std::uint8_t> bytes, const VoxelGrid& grid,
                                   const LabelSet& label_set = LabelSet::semantic_kitti());
void write_voxel_labels(const std::filesystem::path& path, const SemanticVolume& volume,
                        const LabelSet& label_set = LabelSet::semantic_kitti());
std::vector<std::uint8_t> encode_voxel_labels(const SemanticVolume& volume,
                                              const LabelSet& label_set = LabelSet::semantic_kitti());

// Bit-packed mask, most significant bit first, ceil(n / 8) bytes.
std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> bytes, std::size_t count);
std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> mask);
std::vector<std::uint8_t> read_invalid_mask(const std::filesystem::path& path, const GridDims& dims);
void write_invalid_mask(const std::filesystem::path& path, std::span<const std::uint8_t> mask);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace objocc::dataio
