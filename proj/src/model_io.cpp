#include "hypgcn/model_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "hypgcn/errors.hpp"

namespace hypgcn {
namespace {

constexpr char kMagic[4] = {'R', 'F', 'C', 'H'};
constexpr char kMaskMagic[4] = {'M', 'A', 'S', 'K'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
    std::ofstream out;
    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    }
    void bytes(const char* p, std::size_t n) { out.write(p, static_cast<std::streamsize>(n)); }
    void u8(std::uint8_t v) { bytes(reinterpret_cast<const char*>(&v), 1); }
    void u32(std::uint32_t v) {
        char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                     char((v >> 24) & 0xff)};
        bytes(b, 4);
    }
    void i16(std::int16_t v) {
        const auto u = static_cast<std::uint16_t>(v);
        char b[2] = {char(u & 0xff), char((u >> 8) & 0xff)};
        bytes(b, 2);
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) {
        const auto u = std::bit_cast<std::uint64_t>(v);
        u32(static_cast<std::uint32_t>(u & 0xffffffffu));
        u32(static_cast<std::uint32_t>(u >> 32));
    }
};

struct Reader {
    std::ifstream in;
    std::string path;
    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw ConfigError("cannot open model file '" + p + "'");
    }
    void bytes(char* p, std::size_t n) {
        in.read(p, static_cast<std::streamsize>(n));
        if (!in) throw ConfigError("truncated model file '" + path + "'");
    }
    std::uint8_t u8() {
        char b;
        bytes(&b, 1);
        return static_cast<std::uint8_t>(b);
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(reinterpret_cast<char*>(b), 4);
        return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
               std::uint32_t{b[3]} << 24;
    }
    std::int16_t i16() {
        unsigned char b[2];
        bytes(reinterpret_cast<char*>(b), 2);
        return static_cast<std::int16_t>(std::uint16_t{b[0]} | std::uint16_t{b[1]} << 8);
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() {
        const std::uint64_t lo = u32();
        const std::uint64_t hi = u32();
        return std::bit_cast<double>(lo | hi << 32);
    }
    bool at_eof() { return in.peek() == std::ifstream::traits_type::eof(); }
};

void write_bitfield(Writer& w, const std::vector<std::uint8_t>& bits) {
    std::uint8_t byte = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) byte |= std::uint8_t(1u << (i % 8));
        if (i % 8 == 7) {
            w.u8(byte);
            byte = 0;
        }
    }
    if (bits.size() % 8 != 0) w.u8(byte);
}

std::vector<std::uint8_t> read_bitfield(Reader& r, std::size_t n) {
    std::vector<std::uint8_t> bits(n, 0);
    std::uint8_t byte = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 8 == 0) byte = r.u8();
        bits[i] = (byte >> (i % 8)) & 1;
    }
    return bits;
}

void write_dense(Writer& w, const Model& model) {
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(model.blocks.size()));
    w.u32(static_cast<std::uint32_t>(model.cfg.frames));
    w.u32(static_cast<std::uint32_t>(model.cfg.vertices));
    w.u32(static_cast<std::uint32_t>(model.cfg.num_classes));

    for (const Block& blk : model.blocks) {
        w.u32(static_cast<std::uint32_t>(blk.cfg.in_channels));
        w.u32(static_cast<std::uint32_t>(blk.cfg.out_channels));
        w.u32(static_cast<std::uint32_t>(blk.cfg.temporal_stride));
        w.u32(static_cast<std::uint32_t>(blk.cfg.shortcut));
        for (int k = 0; k < kNeighbourSets; ++k)
            for (float v : blk.graphs.graphs[k]) w.f32(v);
        for (const FixedQ8p8& v : blk.spatial.weights) w.i16(v.raw);
        for (const FixedQ8p8& v : blk.temporal.weights) w.i16(v.raw);
        for (float v : blk.spatial_affine.scale) w.f32(v);
        for (float v : blk.spatial_affine.bias) w.f32(v);
        for (float v : blk.temporal_affine.scale) w.f32(v);
        for (float v : blk.temporal_affine.bias) w.f32(v);
        if (blk.cfg.shortcut == ShortcutKind::Projection)
            for (const FixedQ8p8& v : blk.projection.weights) w.i16(v.raw);
    }

    const Classifier& cls = model.classifier;
    w.u32(static_cast<std::uint32_t>(cls.in_features));
    w.u32(static_cast<std::uint32_t>(cls.num_classes));
    w.u8(cls.has_bias ? 1 : 0);
    for (float v : cls.weights) w.f32(v);
    if (cls.has_bias)
        for (float v : cls.bias) w.f32(v);
}

Model read_dense(Reader& r) {
    char magic[4];
    r.bytes(magic, 4);
    if (std::string(magic, 4) != std::string(kMagic, 4))
        throw ConfigError("'" + r.path + "' is not a model file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw ConfigError("'" + r.path + "': unsupported version " + std::to_string(version));

    Model model;
    const std::uint32_t blocks = r.u32();
    model.cfg.frames = static_cast<int>(r.u32());
    model.cfg.vertices = static_cast<int>(r.u32());
    model.cfg.num_classes = static_cast<int>(r.u32());

    for (std::uint32_t b = 0; b < blocks; ++b) {
        Block blk;
        blk.cfg.in_channels = static_cast<int>(r.u32());
        blk.cfg.out_channels = static_cast<int>(r.u32());
        blk.cfg.temporal_stride = static_cast<int>(r.u32());
        blk.cfg.shortcut = static_cast<ShortcutKind>(r.u32());

        for (int k = 0; k < kNeighbourSets; ++k)
            for (float& v : blk.graphs.graphs[k]) v = r.f32();
        blk.graphs.requantize();

        blk.spatial = SpatialConvLayer(blk.cfg.in_channels, blk.cfg.out_channels);
        for (FixedQ8p8& v : blk.spatial.weights) v.raw = r.i16();
        blk.temporal =
            TemporalConvLayer(blk.cfg.out_channels, blk.cfg.out_channels, blk.cfg.temporal_stride);
        for (FixedQ8p8& v : blk.temporal.weights) v.raw = r.i16();

        blk.spatial_affine = AffinePostOp(blk.cfg.out_channels);
        for (float& v : blk.spatial_affine.scale) v = r.f32();
        for (float& v : blk.spatial_affine.bias) v = r.f32();
        blk.temporal_affine = AffinePostOp(blk.cfg.out_channels);
        for (float& v : blk.temporal_affine.scale) v = r.f32();
        for (float& v : blk.temporal_affine.bias) v = r.f32();

        if (blk.cfg.shortcut == ShortcutKind::Projection) {
            blk.projection = ProjectionShortcut(blk.cfg.in_channels, blk.cfg.out_channels);
            for (FixedQ8p8& v : blk.projection.weights) v.raw = r.i16();
        }
        model.cfg.blocks.push_back(blk.cfg);
        model.blocks.push_back(std::move(blk));
    }

    Classifier& cls = model.classifier;
    cls.in_features = static_cast<int>(r.u32());
    cls.num_classes = static_cast<int>(r.u32());
    cls.has_bias = r.u8() != 0;
    cls.weights.resize(static_cast<std::size_t>(cls.num_classes) * cls.in_features);
    for (float& v : cls.weights) v = r.f32();
    if (cls.has_bias) {
        cls.bias.resize(cls.num_classes);
        for (float& v : cls.bias) v = r.f32();
    }
    return model;
}

void write_masks(Writer& w, const PrunedModel& pruned) {
    w.bytes(kMaskMagic, 4);
    for (const PrunedBlockMasks& masks : pruned.masks) {
        write_bitfield(w, masks.spatial.bits);
        write_bitfield(w, masks.temporal_filters.bits);
        w.u8(static_cast<std::uint8_t>(masks.cavity.name.size()));
        w.bytes(masks.cavity.name.data(), masks.cavity.name.size());
        w.u32(static_cast<std::uint32_t>(masks.cavity.period));
        write_bitfield(w, masks.cavity.keep);
    }
    w.u8(pruned.spec.input_skip ? 1 : 0);
    for (const BlockPruneSpec& bs : pruned.spec.blocks) {
        w.f64(bs.drop_rate);
        w.u8(static_cast<std::uint8_t>(bs.pattern.size()));
        w.bytes(bs.pattern.data(), bs.pattern.size());
    }
}

void read_masks(Reader& r, PrunedModel& pruned) {
    char magic[4];
    r.bytes(magic, 4);
    if (std::string(magic, 4) != std::string(kMaskMagic, 4))
        throw ConfigError("'" + r.path + "': bad mask section magic");
    for (std::size_t l = 0; l < pruned.model.blocks.size(); ++l) {
        const Block& blk = pruned.model.blocks[l];
        PrunedBlockMasks masks;
        masks.spatial.bits = read_bitfield(r, static_cast<std::size_t>(blk.cfg.in_channels));
        masks.temporal_filters.bits =
            read_bitfield(r, static_cast<std::size_t>(blk.cfg.out_channels));
        std::string name(r.u8(), '\0');
        r.bytes(name.data(), name.size());
        masks.cavity.name = name;
        masks.cavity.period = static_cast<int>(r.u32());
        if (masks.cavity.period <= 0)
            throw ConfigError("'" + r.path + "': bad cavity period");
        masks.cavity.keep =
            read_bitfield(r, static_cast<std::size_t>(kTemporalTaps) * masks.cavity.period);
        pruned.masks.push_back(std::move(masks));
    }
    pruned.spec.input_skip = r.u8() != 0;
    for (std::size_t l = 0; l < pruned.model.blocks.size(); ++l) {
        BlockPruneSpec bs;
        bs.drop_rate = r.f64();
        std::string name(r.u8(), '\0');
        r.bytes(name.data(), name.size());
        bs.pattern = name;
        pruned.spec.blocks.push_back(std::move(bs));
    }

    // restore identity-shortcut diagonals from the spatial masks
    for (std::size_t l = 0; l < pruned.model.blocks.size(); ++l) {
        Block& blk = pruned.model.blocks[l];
        if (blk.cfg.shortcut != ShortcutKind::Identity) continue;
        blk.shortcut_keep = pruned.masks[l].spatial.bits;
    }
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
    Writer w(path);
    write_dense(w, model);
}

Model load_model(const std::string& path) {
    Reader r(path);
    return read_dense(r);
}

void save_pruned(const PrunedModel& pruned, const std::string& path) {
    Writer w(path);
    write_dense(w, pruned.model);
    write_masks(w, pruned);
}

PrunedModel load_pruned(const std::string& path) {
    Reader r(path);
    PrunedModel pruned;
    pruned.model = read_dense(r);
    if (r.at_eof()) {
        // plain model: all-keep masks, zero-rate spec
        for (const Block& blk : pruned.model.blocks) {
            PrunedBlockMasks masks;
            masks.spatial = ChannelMask(blk.cfg.in_channels, true);
            masks.temporal_filters = ChannelMask(blk.cfg.out_channels, true);
            masks.cavity = cavity_all_keep();
            pruned.masks.push_back(std::move(masks));
            pruned.spec.blocks.push_back({0.0, "all-keep"});
        }
        return pruned;
    }
    read_masks(r, pruned);
    return pruned;
}

bool has_mask_section(const std::string& path) {
    Reader r(path);
    (void)read_dense(r);
    return !r.at_eof();
}

}  // namespace hypgcn
