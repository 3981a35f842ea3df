// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/dataio/voxel_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "objocc/core/errors.hpp"

namespace objocc::dataio {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

SemanticVolume decode_voxel_labels(std::span<const std::uint8_t> bytes, const VoxelGrid& grid,
                                   const LabelSet& label_set) {
    grid.validate();
    const std::size_t n = grid.dims.count();
    if (bytes.size() != 2 * n) {
        throw FormatError("label file has " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(2 * n));
    }
    std::vector<Label> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t raw = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
        const auto id = label_set.from_raw(raw);
        if (!id) throw TaxonomyError("raw label " + std::to_string(raw) + " has no mapping");
        labels[i] = *id;
    }
    return SemanticVolume(grid, std::move(labels), {}, label_set);
}

SemanticVolume read_voxel_labels(const fs::path& path, const VoxelGrid& grid, const LabelSet& label_set) {
    return decode_voxel_labels(read_file_bytes(path), grid, label_set);
}

std::vector<std::uint8_t> encode_voxel_labels(const SemanticVolume& volume, const LabelSet& label_set) {
    std::vector<std::uint8_t> out;
    out.reserve(volume.labels().size() * 2);
    for (Label l : volume.labels()) {
        const std::uint16_t raw = label_set.to_raw(l);
        out.push_back(static_cast<std::uint8_t>(raw & 0xFF));
        out.push_back(static_cast<std::uint8_t>(raw >> 8));
    }
    return out;
}

void write_voxel_labels(const fs::path& path, const SemanticVolume& volume, const LabelSet& label_set) {
    write_file_bytes(path, encode_voxel_labels(volume, label_set));
}

std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> bytes, std::size_t count) {
    if (bytes.size() != (count + 7) / 8) {
        throw FormatError("mask has " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string((count + 7) / 8));
    }
    std::vector<std::uint8_t> mask(count);
    for (std::size_t i = 0; i < count; ++i) mask[i] = (bytes[i / 8] >> (7 - i % 8)) & 1;
    return mask;
}

std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> mask) {
    std::vector<std::uint8_t> bytes((mask.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
    }
    return bytes;
}

std::vector<std::uint8_t> read_invalid_mask(const fs::path& path, const GridDims& dims) {
    return unpack_bits(read_file_bytes(path), dims.count());
}

void write_invalid_mask(const fs::path& path, std::span<const std::uint8_t> mask) {
    write_file_bytes(path, pack_bits(mask));
}

}  // namespace objocc::dataio
