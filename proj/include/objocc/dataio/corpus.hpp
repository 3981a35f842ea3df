// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "objocc/core/box.hpp"
#include "objocc/core/camera.hpp"
#include "objocc/core/volume.hpp"
#include "objocc/dataio/image.hpp"
#include "objocc/dataio/synthetic.hpp"

namespace objocc::dataio {

struct VoxelSample {
    Image rgb;
    SemanticVolume volume_gt;
    std::vector<std::uint8_t> invalid_mask;
    CameraModel calib;
};

// Everything one training step consumes.
struct Sample {
    std::string id;
    VoxelSample voxel;
    std::vector<ObjectBox> boxes_gt;
    std::optional<DepthMap> depth;
};

// Directory laid out like SemanticKITTI:
//   sequences/NN/{calib.txt, meta.txt, voxels/*.label, voxels/*.invalid,
//                 image_2/*.png, label_2/*.txt, depth_2/*.png}
// meta.txt is optional and overrides the grid and image geometry.
struct CorpusOptions {
    std::filesystem::path root;
    std::vector<std::string> sequences;
    VoxelGrid grid = VoxelGrid::semantic_kitti();
    int image_width = 1220;
    int image_height = 370;
    double near = 2.0;
    double far = 50.0;
    int depth_bins = 64;
};

// Grid and image geometry of one sequence.
struct SequenceMeta {
    VoxelGrid grid = VoxelGrid::semantic_kitti();
    int width = 1220;
    int height = 370;
};

// Reads `<seq_dir>/meta.txt` over the defaults; returns them unchanged when
// the file is absent. Throws FormatError on unknown keys.
SequenceMeta read_sequence_meta(const std::filesystem::path& seq_dir, SequenceMeta defaults = {});

class Corpus {
public:
    explicit Corpus(CorpusOptions options);

    std::size_t size() const { return frames_.size(); }
    const std::string& frame_id(std::size_t i) const { return frames_.at(i).id; }
    Sample load(std::size_t i) const;
    std::vector<Sample> load_all() const;
    const CorpusOptions& options() const { return options_; }

private:
    struct Frame {
        std::string id;
        std::filesystem::path seq_dir;
        std::string stem;
        VoxelGrid grid;
        CameraModel calib;
    };
    CorpusOptions options_;
    std::vector<Frame> frames_;
};

// In-memory sample of a generated scene, equal to what the corpus reader
// returns after write_scene (up to depth quantization).
Sample sample_from_scene(const SyntheticScene& scene, std::string id);

struct SyntheticCorpusSpec {
    std::uint64_t seed = 0;
    int train_scenes = 64;
    int val_scenes = 16;
    GridDims dims{64, 64, 8};
    int min_objects = 2;
    int max_objects = 6;
    SyntheticOptions scene;
};

// Writes sequences/00 (train) and sequences/08 (val). Scene seeds and object
// counts are derived from spec.seed.
void write_synthetic_corpus(const std::filesystem::path& root, const SyntheticCorpusSpec& spec);
void write_scene(const std::filesystem::path& seq_dir, const std::string& stem, const SyntheticScene& scene);

// Train and val sequence names used by the synthetic corpus.
inline const std::vector<std::string>& synthetic_train_sequences() {
    static const std::vector<std::string> s{"00"};
    return s;
}
inline const std::vector<std::string>& synthetic_val_sequences() {
    static const std::vector<std::string> s{"08"};
    return s;
}

}  // namespace objocc::dataio
