#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "voxsr/common.hpp"
#include "voxsr/volume.hpp"

namespace voxsr {

// VOXSR1 volume container: 8-byte magic "VOXSR1\0\0", little-endian u32
// C,H,W,Z, then C*H*W*Z little-endian f32 voxels, z fastest-varying.

inline constexpr char kVoxsrMagic[8] = {'V', 'O', 'X', 'S', 'R', '1', '\0', '\0'};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::string encode_voxsr1(const Volume& v) {
    if (v.channels < 1 || v.height < 1 || v.width < 1 || v.depth < 1)
        throw DataError("encode_voxsr1: all dims must be >= 1");
    std::string out;
    out.reserve(8 + 16 + v.data.size() * 4);
    out.append(kVoxsrMagic, 8);
    detail::put_u32_le(out, static_cast<std::uint32_t>(v.channels));
    detail::put_u32_le(out, static_cast<std::uint32_t>(v.height));
    detail::put_u32_le(out, static_cast<std::uint32_t>(v.width));
    detail::put_u32_le(out, static_cast<std::uint32_t>(v.depth));
    for (float x : v.data) detail::put_u32_le(out, std::bit_cast<std::uint32_t>(x));
    return out;
}

inline Volume decode_voxsr1(const std::string& bytes, const std::string& origin = "<memory>") {
    const auto fail = [&](const std::string& why) {
        throw DataError("VOXSR1 " + origin + ": " + why);
    };
    if (bytes.size() < 24) fail("truncated header");
    if (std::memcmp(bytes.data(), kVoxsrMagic, 8) != 0) fail("bad magic");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t c = detail::get_u32_le(p + 8);
    const std::uint32_t h = detail::get_u32_le(p + 12);
    const std::uint32_t w = detail::get_u32_le(p + 16);
    const std::uint32_t z = detail::get_u32_le(p + 20);
    if (c < 1 || h < 1 || w < 1 || z < 1) fail("zero dimension");
    const std::uint64_t count = std::uint64_t(c) * h * w * z;
    if (count > (std::uint64_t(1) << 32)) fail("implausible voxel count");
    const std::uint64_t want = 24 + count * 4;
    if (bytes.size() < want) fail("truncated payload");
    if (bytes.size() > want) fail("trailing bytes");
    Volume v(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w), static_cast<int>(z));
    for (std::uint64_t i = 0; i < count; ++i)
        v.data[i] = std::bit_cast<float>(detail::get_u32_le(p + 24 + i * 4));
    return v;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open " + path.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("short write to " + path.string());
}

inline void write_volume(const std::filesystem::path& path, const Volume& v) {
    const std::string bytes = encode_voxsr1(v);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("write_volume: cannot open " + path.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("write_volume: short write to " + path.string());
}

inline Volume read_volume(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("read_volume: cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_voxsr1(bytes, path.string());
}

}  // namespace voxsr
