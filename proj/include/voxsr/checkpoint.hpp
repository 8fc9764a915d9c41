#pragma once

// VOXCKPT1 checkpoint container: 8-byte magic "VOXCKPT1", little-endian u64
// config digest, u32 tensor count, then per tensor {u32 name length, name,
// u32 ndims, u32 dims..., u8 scalar width (4 or 8), little-endian payload}.
// An optional optimizer block follows: u8 flag, u64 completed steps, and the
// Adam moment tensors in the same encoding.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "voxsr/common.hpp"
#include "voxsr/io.hpp"
#include "voxsr/net.hpp"
#include "voxsr/optim.hpp"

namespace voxsr {

inline constexpr char kCkptMagic[8] = {'V', 'O', 'X', 'C', 'K', 'P', 'T', '1'};

struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    bool wide = true;  // serialize as f64; false = f32
    std::vector<double> values;

    std::uint64_t count() const {
        std::uint64_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

struct Checkpoint {
    std::uint64_t config_digest = 0;
    std::vector<NamedTensor> tensors;
    bool has_optimizer = false;
    std::int64_t optimizer_step = 0;
    std::vector<NamedTensor> moments;  // adam.m.* then adam.v.*, param order

    const NamedTensor* find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    }
};

namespace detail {

inline void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline void put_tensor(std::string& out, const NamedTensor& t) {
    put_u32_le(out, static_cast<std::uint32_t>(t.name.size()));
    out.append(t.name);
    put_u32_le(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32_le(out, d);
    out.push_back(t.wide ? char(8) : char(4));
    if (t.count() != t.values.size())
        throw DataError("checkpoint tensor " + t.name + ": dims do not match value count");
    if (t.wide) {
        for (double x : t.values) put_u64_le(out, std::bit_cast<std::uint64_t>(x));
    } else {
        for (double x : t.values)
            put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }
}

struct ByteReader {
    const unsigned char* p;
    std::size_t left;
    std::string origin;

    void need(std::size_t n, const char* what) const {
        if (left < n) throw DataError("VOXCKPT1 " + origin + ": truncated " + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        const std::uint32_t v = get_u32_le(p);
        p += 4;
        left -= 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        const std::uint64_t v = get_u64_le(p);
        p += 8;
        left -= 8;
        return v;
    }
    unsigned char byte(const char* what) {
        need(1, what);
        const unsigned char v = *p;
        ++p;
        --left;
        return v;
    }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        left -= n;
        return s;
    }
};

inline NamedTensor get_tensor(ByteReader& r) {
    NamedTensor t;
    const std::uint32_t name_len = r.u32("tensor name length");
    if (name_len > 4096) throw DataError("VOXCKPT1 " + r.origin + ": implausible name length");
    t.name = r.str(name_len, "tensor name");
    const std::uint32_t ndims = r.u32("tensor rank");
    if (ndims > 8) throw DataError("VOXCKPT1 " + r.origin + ": implausible tensor rank");
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < ndims; ++i) {
        t.dims.push_back(r.u32("tensor dim"));
        count *= t.dims.back();
    }
    if (count > (std::uint64_t(1) << 32))
        throw DataError("VOXCKPT1 " + r.origin + ": implausible tensor size");
    const unsigned char width = r.byte("scalar width");
    if (width != 4 && width != 8)
        throw DataError("VOXCKPT1 " + r.origin + ": unsupported scalar width " +
                        std::to_string(int(width)));
    t.wide = width == 8;
    t.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i)
        t.values[i] = t.wide ? std::bit_cast<double>(r.u64("tensor data"))
                             : static_cast<double>(std::bit_cast<float>(r.u32("tensor data")));
    return t;
}

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ckpt) {
    std::string out;
    out.append(kCkptMagic, 8);
    detail::put_u64_le(out, ckpt.config_digest);
    detail::put_u32_le(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& t : ckpt.tensors) detail::put_tensor(out, t);
    out.push_back(ckpt.has_optimizer ? char(1) : char(0));
    if (ckpt.has_optimizer) {
        detail::put_u64_le(out, static_cast<std::uint64_t>(ckpt.optimizer_step));
        detail::put_u32_le(out, static_cast<std::uint32_t>(ckpt.moments.size()));
        for (const auto& t : ckpt.moments) detail::put_tensor(out, t);
    }
    return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes,
                                    const std::string& origin = "<memory>") {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kCkptMagic, 8) != 0)
        throw DataError("VOXCKPT1 " + origin + ": bad magic");
    detail::ByteReader r{reinterpret_cast<const unsigned char*>(bytes.data()) + 8,
                         bytes.size() - 8, origin};
    Checkpoint ckpt;
    ckpt.config_digest = r.u64("config digest");
    const std::uint32_t n = r.u32("tensor count");
    if (n > 100000) throw DataError("VOXCKPT1 " + origin + ": implausible tensor count");
    for (std::uint32_t i = 0; i < n; ++i) ckpt.tensors.push_back(detail::get_tensor(r));
    ckpt.has_optimizer = r.byte("optimizer flag") != 0;
    if (ckpt.has_optimizer) {
        ckpt.optimizer_step = static_cast<std::int64_t>(r.u64("optimizer step"));
        const std::uint32_t k = r.u32("moment tensor count");
        if (k > 200000) throw DataError("VOXCKPT1 " + origin + ": implausible moment count");
        for (std::uint32_t i = 0; i < k; ++i) ckpt.moments.push_back(detail::get_tensor(r));
    }
    if (r.left != 0) throw DataError("VOXCKPT1 " + origin + ": trailing bytes");
    return ckpt;
}

namespace detail {

inline std::vector<std::uint32_t> tensor_dims(const std::string& name,
                                              const TinyDenoiserNet<double>& net) {
    auto conv_dims = [](const Conv3x3Layer<double>& l, bool weights) {
        return weights ? std::vector<std::uint32_t>{std::uint32_t(l.out_ch),
                                                    std::uint32_t(l.in_ch), 3u, 3u}
                       : std::vector<std::uint32_t>{std::uint32_t(l.out_ch)};
    };
    if (name == "conv_in.w") return conv_dims(net.conv_in, true);
    if (name == "conv_in.b") return conv_dims(net.conv_in, false);
    if (name == "temb.w")
        return {std::uint32_t(net.temb.out_dim), std::uint32_t(net.temb.in_dim)};
    if (name == "temb.b") return {std::uint32_t(net.temb.out_dim)};
    if (name == "conv_out.w") return conv_dims(net.conv_out, true);
    if (name == "conv_out.b") return conv_dims(net.conv_out, false);
    for (std::size_t i = 0; i < net.blocks.size(); ++i) {
        if (name == "block" + std::to_string(i) + ".w") return conv_dims(net.blocks[i], true);
        if (name == "block" + std::to_string(i) + ".b") return conv_dims(net.blocks[i], false);
    }
    throw DataError("checkpoint: unknown tensor name " + name);
}

}  // namespace detail

/// Packs a net (and optionally its optimizer) into a checkpoint. A "net.meta"
/// tensor carries the architecture so a checkpoint loads without the original
/// config document.
inline Checkpoint make_checkpoint(TinyDenoiserNet<double>& net, std::uint64_t config_digest,
                                  const AdamW* optim = nullptr) {
    net.validate();
    Checkpoint ckpt;
    ckpt.config_digest = config_digest;
    ckpt.tensors.push_back(
        {"net.meta",
         {6},
         true,
         {double(net.cfg.channels), double(net.cfg.features), double(net.cfg.blocks),
          double(net.cfg.temb_freqs), double(net.cfg.in_extra),
          net.cfg.mask_channel ? 1.0 : 0.0}});
    for (const auto& ref : net.params())
        ckpt.tensors.push_back(
            {ref.name, detail::tensor_dims(ref.name, net), true, *ref.data});
    if (optim) {
        ckpt.has_optimizer = true;
        ckpt.optimizer_step = optim->step_count();
        const auto refs = net.params();
        for (std::size_t i = 0; i < refs.size(); ++i)
            ckpt.moments.push_back({"adam.m." + refs[i].name,
                                    detail::tensor_dims(refs[i].name, net), true,
                                    optim->first_moments()[i]});
        for (std::size_t i = 0; i < refs.size(); ++i)
            ckpt.moments.push_back({"adam.v." + refs[i].name,
                                    detail::tensor_dims(refs[i].name, net), true,
                                    optim->second_moments()[i]});
    }
    return ckpt;
}

/// Rebuilds the net stored in a checkpoint; shapes are validated tensor by
/// tensor against the architecture in net.meta.
inline TinyDenoiserNet<double> net_from_checkpoint(const Checkpoint& ckpt) {
    const NamedTensor* meta = ckpt.find("net.meta");
    if (!meta || meta->values.size() != 6)
        throw DataError("checkpoint: missing or malformed net.meta");
    NetConfig cfg;
    cfg.channels = static_cast<int>(meta->values[0]);
    cfg.features = static_cast<int>(meta->values[1]);
    cfg.blocks = static_cast<int>(meta->values[2]);
    cfg.temb_freqs = static_cast<int>(meta->values[3]);
    cfg.in_extra = static_cast<int>(meta->values[4]);
    cfg.mask_channel = meta->values[5] != 0.0;
    if (cfg.channels < 1 || cfg.features < 1 || cfg.blocks < 0 || cfg.temb_freqs < 1 ||
        cfg.in_extra < 0)
        throw DataError("checkpoint: implausible net.meta");

    TinyDenoiserNet<double> net = TinyDenoiserNet<double>::shaped(cfg);
    for (auto& ref : net.params()) {
        const NamedTensor* t = ckpt.find(ref.name);
        if (!t) throw DataError("checkpoint: missing tensor " + ref.name);
        if (t->dims != detail::tensor_dims(ref.name, net))
            throw DataError("checkpoint: tensor " + ref.name + " has wrong shape");
        *ref.data = t->values;
    }
    net.validate();
    return net;
}

/// Restores optimizer moments saved alongside the net. Returns false when the
/// checkpoint carries no optimizer block.
inline bool optimizer_from_checkpoint(const Checkpoint& ckpt, TinyDenoiserNet<double>& net,
                                      AdamW& optim) {
    if (!ckpt.has_optimizer) return false;
    const auto refs = net.params();
    if (ckpt.moments.size() != 2 * refs.size())
        throw DataError("checkpoint: optimizer block does not match parameter list");
    optim.set_step_count(ckpt.optimizer_step);
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const NamedTensor& m = ckpt.moments[i];
        const NamedTensor& v = ckpt.moments[refs.size() + i];
        if (m.name != "adam.m." + refs[i].name || v.name != "adam.v." + refs[i].name)
            throw DataError("checkpoint: moment tensors out of order");
        if (m.values.size() != refs[i].data->size() || v.values.size() != refs[i].data->size())
            throw DataError("checkpoint: moment tensor " + m.name + " has wrong size");
        optim.first_moments()[i] = m.values;
        optim.second_moments()[i] = v.values;
    }
    return true;
}

inline void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_file_bytes(path, encode_checkpoint(ckpt));
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file_bytes(path), path.string());
}

}  // namespace voxsr
