// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/training/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <fmt/format.h>

#include "objocc/core/errors.hpp"
#include "objocc/dataio/voxel_io.hpp"

namespace objocc::training {
namespace {

constexpr char kMagic[8] = {'O', 'B', 'J', 'O', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v)); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        out.insert(out.end(), s.begin(), s.end());
    }
    std::vector<std::uint8_t> out;

private:
    template <typename T>
    void put(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    std::int64_t i64() { return static_cast<std::int64_t>(get<std::uint64_t>()); }
    double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string str() {
        const std::uint64_t n = u64();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    void need(std::uint64_t n) const {
        if (n > bytes_.size() - pos_) throw FormatError("checkpoint is truncated");
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    template <typename T>
    T get() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return v;
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

Checkpoint Checkpoint::capture(const CheckpointMeta& meta, const nn::ParamList& params) {
    Checkpoint c;
    c.meta = meta;
    for (const auto& p : params) {
        const auto d = p.tensor.data();
        c.tensors.push_back({p.name, p.tensor.shape(), std::vector<double>(d.begin(), d.end())});
    }
    return c;
}

const StoredTensor* Checkpoint::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

void Checkpoint::restore(const nn::ParamList& params, std::span<const std::string> prefixes) const {
    for (const auto& p : params) {
        bool wanted = prefixes.empty();
        for (const auto& pre : prefixes) wanted = wanted || p.name.rfind(pre, 0) == 0;
        if (!wanted) continue;
        const StoredTensor* t = find(p.name);
        if (!t) throw FormatError("checkpoint has no tensor '" + p.name + "'");
        if (t->shape != p.tensor.shape()) throw FormatError("shape mismatch for '" + p.name + "'");
        nn::Tensor target = p.tensor;
        std::copy(t->values.begin(), t->values.end(), target.mutable_data().begin());
    }
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    Writer w;
    w.out.insert(w.out.end(), std::begin(kMagic), std::end(kMagic));
    w.u32(kVersion);
    const auto& m = ckpt.meta;
    w.u32(static_cast<std::uint32_t>(m.stage));
    w.u32(static_cast<std::uint32_t>(m.epoch));
    w.i64(m.steps);
    w.u64(m.seed);
    w.u64(m.config_hash);
    w.u64(m.stage_hash);
    for (int e : m.stage_epochs) w.u32(static_cast<std::uint32_t>(e));
    w.str(m.config_text);
    w.u64(ckpt.tensors.size());
    for (const auto& t : ckpt.tensors) {
        w.str(t.name);
        w.u32(static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
        w.u64(t.values.size());
        for (double v : t.values) w.f64(v);
    }
    return std::move(w.out);
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto magic = r.take(sizeof kMagic);
    if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) throw FormatError("not a checkpoint file");
    if (r.u32() != kVersion) throw FormatError("unsupported checkpoint version");
    Checkpoint c;
    auto& m = c.meta;
    m.stage = static_cast<int>(r.u32());
    m.epoch = static_cast<int>(r.u32());
    m.steps = r.i64();
    m.seed = r.u64();
    m.config_hash = r.u64();
    m.stage_hash = r.u64();
    for (int& e : m.stage_epochs) e = static_cast<int>(r.u32());
    m.config_text = r.str();
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        StoredTensor t;
        t.name = r.str();
        const std::uint32_t rank = r.u32();
        if (rank > 8) throw FormatError("implausible tensor rank");
        std::size_t count = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
            t.shape.push_back(static_cast<int>(r.u32()));
            count *= static_cast<std::size_t>(t.shape.back());
        }
        const std::uint64_t len = r.u64();
        if (len != count) throw FormatError("tensor size does not match its shape");
        r.need(len * 8);
        t.values.resize(len);
        for (auto& v : t.values) v = r.f64();
        c.tensors.push_back(std::move(t));
    }
    if (!r.done()) throw FormatError("trailing bytes after checkpoint");
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    dataio::write_file_bytes(tmp, serialize_checkpoint(ckpt));
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return parse_checkpoint(dataio::read_file_bytes(path));
}

std::filesystem::path checkpoint_path(const std::filesystem::path& root, int stage, int epoch) {
    return root / fmt::format("stage{}", stage) / fmt::format("epoch_{:03d}.ckpt", epoch);
}

}  // namespace objocc::training
