#ifndef CBF_TESTS_TEST_UTIL_HPP
#define CBF_TESTS_TEST_UTIL_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "packet.hpp"

namespace testutil {

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        dir_ = base / ("cbf_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

private:
    std::filesystem::path dir_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// Builds a well-formed IPv4 header (+payload) with a valid checksum. Options
// must already be padded to a multiple of 4 and at most 40 bytes.
struct HeaderSpec {
    std::uint8_t tos = 0;
    std::uint16_t identification = 0;
    std::uint8_t flags = 2; // DF
    std::uint16_t fragment_offset = 0;
    std::uint8_t ttl = 64;
    std::uint8_t protocol = 6;
    std::uint32_t src_addr = 0xC0A80001; // 192.168.0.1
    std::uint32_t dst_addr = 0x0A000001; // 10.0.0.1
    std::vector<std::uint8_t> options;
    std::vector<std::uint8_t> payload;
};

inline std::vector<std::uint8_t> make_packet(const HeaderSpec& spec) {
    const std::size_t hlen = 20 + spec.options.size();
    const std::uint8_t ihl = std::uint8_t(hlen / 4);
    const std::uint16_t total_length = std::uint16_t(hlen + spec.payload.size());

    std::vector<std::uint8_t> b;
    b.reserve(hlen + spec.payload.size());
    b.push_back(std::uint8_t(0x40 | ihl));
    b.push_back(spec.tos);
    b.push_back(std::uint8_t(total_length >> 8));
    b.push_back(std::uint8_t(total_length & 0xFF));
    b.push_back(std::uint8_t(spec.identification >> 8));
    b.push_back(std::uint8_t(spec.identification & 0xFF));
    const std::uint16_t ff = std::uint16_t((spec.flags << 13) | spec.fragment_offset);
    b.push_back(std::uint8_t(ff >> 8));
    b.push_back(std::uint8_t(ff & 0xFF));
    b.push_back(spec.ttl);
    b.push_back(spec.protocol);
    b.push_back(0);
    b.push_back(0);
    for (int shift = 24; shift >= 0; shift -= 8)
        b.push_back(std::uint8_t(spec.src_addr >> shift));
    for (int shift = 24; shift >= 0; shift -= 8)
        b.push_back(std::uint8_t(spec.dst_addr >> shift));
    b.insert(b.end(), spec.options.begin(), spec.options.end());

    const std::uint16_t sum =
        cbf::compute_header_checksum(std::span<const std::uint8_t>(b.data(), hlen));
    b[10] = std::uint8_t(sum >> 8);
    b[11] = std::uint8_t(sum & 0xFF);
    b.insert(b.end(), spec.payload.begin(), spec.payload.end());
    return b;
}

} // namespace testutil

#endif
