// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/dataio/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <sstream>

#include "objocc/core/errors.hpp"
#include "objocc/dataio/kitti.hpp"
#include "objocc/dataio/voxel_io.hpp"

namespace objocc::dataio {

namespace fs = std::filesystem;

namespace {

std::string stem_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06d", i);
    return buf;
}

}  // namespace

SequenceMeta read_sequence_meta(const fs::path& seq_dir, SequenceMeta defaults) {
    SequenceMeta m = std::move(defaults);
    const fs::path p = seq_dir / "meta.txt";
    if (!fs::exists(p)) return m;
    std::istringstream in(read_text_file(p));
    std::string key;
    while (in >> key) {
        if (key == "dims") {
            in >> m.grid.dims.h >> m.grid.dims.w >> m.grid.dims.d;
        } else if (key == "voxel_size") {
            in >> m.grid.voxel_size;
        } else if (key == "origin") {
            in >> m.grid.origin.x() >> m.grid.origin.y() >> m.grid.origin.z();
        } else if (key == "image") {
            in >> m.width >> m.height;
        } else {
            throw FormatError("unknown meta key '" + key + "' in " + p.string());
        }
        if (!in) throw FormatError("malformed " + p.string());
    }
    m.grid.validate();
    return m;
}

Corpus::Corpus(CorpusOptions options) : options_(std::move(options)) {
    for (const auto& seq : options_.sequences) {
        const fs::path dir = options_.root / "sequences" / seq;
        if (!fs::is_directory(dir / "voxels")) throw IoError("missing " + (dir / "voxels").string());
        const SequenceMeta meta = read_sequence_meta(dir, {options_.grid, options_.image_width, options_.image_height});
        const CameraModel cam =
            read_calib(dir / "calib.txt").camera(meta.width, meta.height, options_.near, options_.far, options_.depth_bins);
        std::vector<std::string> stems;
        for (const auto& e : fs::directory_iterator(dir / "voxels")) {
            if (e.path().extension() == ".label") stems.push_back(e.path().stem().string());
        }
        std::sort(stems.begin(), stems.end());
        for (const auto& s : stems) frames_.push_back(Frame{seq + "/" + s, dir, s, meta.grid, cam});
    }
}

Sample Corpus::load(std::size_t i) const {
    const Frame& f = frames_.at(i);
    Sample s;
    s.id = f.id;
    s.voxel.calib = f.calib;
    const auto fov = volume_to_camera(f.grid, f.calib).fov_mask;
    s.voxel.volume_gt = read_voxel_labels(f.seq_dir / "voxels" / (f.stem + ".label"), f.grid).with_fov_mask(fov);
    const fs::path inv = f.seq_dir / "voxels" / (f.stem + ".invalid");
    s.voxel.invalid_mask = fs::exists(inv) ? read_invalid_mask(inv, f.grid.dims)
                                           : std::vector<std::uint8_t>(f.grid.dims.count(), 0);
    Image rgb = read_png(f.seq_dir / "image_2" / (f.stem + ".png"));
    if (rgb.width != f.calib.width() || rgb.height != f.calib.height()) {
        rgb = crop(rgb, f.calib.width(), f.calib.height());
    }
    s.voxel.rgb = std::move(rgb);
    const fs::path lbl = f.seq_dir / "label_2" / (f.stem + ".txt");
    if (fs::exists(lbl)) s.boxes_gt = read_kitti_boxes(lbl, f.calib).boxes_gt;
    const fs::path dep = f.seq_dir / "depth_2" / (f.stem + ".png");
    if (fs::exists(dep)) s.depth = read_depth_png(dep);
    return s;
}

std::vector<Sample> Corpus::load_all() const {
    std::vector<Sample> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(load(i));
    return out;
}

Sample sample_from_scene(const SyntheticScene& scene, std::string id) {
    Sample s;
    s.id = std::move(id);
    s.voxel.rgb = scene.rgb;
    s.voxel.volume_gt = scene.volume_gt;
    s.voxel.invalid_mask = scene.invalid_mask;
    s.voxel.calib = scene.calib;
    s.boxes_gt = scene.boxes_gt;
    s.depth = scene.depth;
    return s;
}

void write_scene(const fs::path& seq_dir, const std::string& stem, const SyntheticScene& scene) {
    write_voxel_labels(seq_dir / "voxels" / (stem + ".label"), scene.volume_gt);
    write_invalid_mask(seq_dir / "voxels" / (stem + ".invalid"), scene.invalid_mask);
    write_png(seq_dir / "image_2" / (stem + ".png"), scene.rgb);
    write_depth_png(seq_dir / "depth_2" / (stem + ".png"), scene.depth);
    write_kitti_boxes(seq_dir / "label_2" / (stem + ".txt"), scene.boxes_gt, scene.calib);
}

void write_synthetic_corpus(const fs::path& root, const SyntheticCorpusSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> count(spec.min_objects, spec.max_objects);
    const VoxelGrid grid = synthetic_grid(spec.dims);
    auto emit = [&](const std::string& seq, int n) {
        const fs::path dir = root / "sequences" / seq;
        fs::create_directories(dir);
        for (int i = 0; i < n; ++i) {
            const std::uint64_t scene_seed = rng();
            const SyntheticScene scene = generate_synthetic(scene_seed, count(rng), spec.dims, spec.scene);
            if (i == 0) write_calib(dir / "calib.txt", KittiCalib::from_camera(scene.calib));
            write_scene(dir, stem_name(i), scene);
        }
        std::ostringstream meta;
        meta.precision(12);
        meta << "dims " << grid.dims.h << ' ' << grid.dims.w << ' ' << grid.dims.d << '\n'
             << "voxel_size " << grid.voxel_size << '\n'
             << "origin " << grid.origin.x() << ' ' << grid.origin.y() << ' ' << grid.origin.z() << '\n'
             << "image " << spec.scene.image_width << ' ' << spec.scene.image_height << '\n';
        write_text_file(dir / "meta.txt", meta.str());
    };
    emit(synthetic_train_sequences().front(), spec.train_scenes);
    emit(synthetic_val_sequences().front(), spec.val_scenes);
}

}  // namespace objocc::dataio
