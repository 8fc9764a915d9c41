#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "voxsr/io.hpp"
#include "voxsr/rng.hpp"

using namespace voxsr;

namespace {

std::filesystem::path temp_file(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / "voxsr_io_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("voxsr1 file round-trips bit-exact") {
    Volume v(3, 4, 5, 6);
    Rng rng(314);
    for (auto& x : v.data) x = static_cast<float>(rng.uniform01());

    const auto path = temp_file("roundtrip.vox");
    write_volume(path, v);
    const Volume back = read_volume(path);
    CHECK(same_values(back, v));
    CHECK(back.channels == 3);
    CHECK(back.depth == 6);
}

TEST_CASE("voxsr1 reader rejects corrupt input") {
    Volume v(1, 2, 2, 2, 0.5f);
    std::string bytes = encode_voxsr1(v);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH(decode_voxsr1(bad_magic), Catch::Matchers::ContainsSubstring("magic"));

    std::string truncated = bytes.substr(0, bytes.size() - 3);
    CHECK_THROWS_WITH(decode_voxsr1(truncated), Catch::Matchers::ContainsSubstring("truncated"));

    std::string padded = bytes + "zz";
    CHECK_THROWS_AS(decode_voxsr1(padded), DataError);

    CHECK_THROWS_AS(decode_voxsr1(std::string("short")), DataError);
}

TEST_CASE("voxsr1 layout is little-endian with z fastest") {
    Volume v(1, 1, 1, 2);
    v.at(0, 0, 0, 0) = 1.0f;
    v.at(0, 0, 0, 1) = 2.0f;
    const std::string bytes = encode_voxsr1(v);
    REQUIRE(bytes.size() == 24 + 8);
    // header: magic + C,H,W,Z = 1,1,1,2
    CHECK(bytes.substr(0, 6) == "VOXSR1");
    CHECK(static_cast<unsigned char>(bytes[8]) == 1);
    CHECK(static_cast<unsigned char>(bytes[20]) == 2);
    // 1.0f = 0x3f800000 LE, 2.0f = 0x40000000 LE
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + 24;
    CHECK(p[0] == 0x00);
    CHECK(p[3] == 0x3f);
    CHECK(p[7] == 0x40);
}

TEST_CASE("missing file raises a data error") {
    CHECK_THROWS_AS(read_volume("/nonexistent/voxsr/file.vox"), DataError);
}
