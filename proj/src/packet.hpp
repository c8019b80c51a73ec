#ifndef CBF_PACKET_HPP
#define CBF_PACKET_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cbf {

// Confidence option: experimental TLV, copied=0 class=2 number=30, length 4,
// payload = big-endian Q0.16 quantization of a confidence in [0,1].
inline constexpr std::uint8_t kConfidenceOptionType = 0x5E;
inline constexpr std::uint8_t kConfidenceOptionLength = 4;
inline constexpr double kConfidenceQuantum = 65535.0;

inline constexpr std::uint8_t kProtocolTcp = 6;
inline constexpr std::uint8_t kProtocolUdp = 17;

struct TransportSummary {
    std::optional<std::uint16_t> src_port;
    std::optional<std::uint16_t> dst_port;
    std::optional<std::uint8_t> tcp_flags; // low 6 bits of TCP offset+flags word
};

struct ParsedPacket {
    std::uint8_t version = 0;
    std::uint8_t ihl = 0; // 32-bit words
    std::uint8_t tos = 0;
    std::uint16_t total_length = 0;
    std::uint16_t identification = 0;
    std::uint8_t flags = 0; // 3 bits
    std::uint16_t fragment_offset = 0; // 13 bits
    std::uint8_t ttl = 0;
    std::uint8_t protocol = 0;
    std::uint16_t checksum = 0;
    std::uint32_t src_addr = 0; // host order
    std::uint32_t dst_addr = 0;
    std::vector<std::uint8_t> options;
    bool checksum_valid = false;
    TransportSummary transport;

    std::size_t header_length() const { return std::size_t(ihl) * 4; }
};

// Ones-complement sum of 16-bit big-endian words (RFC 1071 fold).
std::uint16_t ones_complement_sum(std::span<const std::uint8_t> bytes);

// Checksum to store in a header whose checksum field is zeroed.
std::uint16_t compute_header_checksum(std::span<const std::uint8_t> header);

// Whole-header validity check: sum including the checksum field is 0xFFFF.
bool header_checksum_valid(std::span<const std::uint8_t> header);

// Parses an IPv4 header plus TCP/UDP port/flag summary. Lenient about the
// checksum unless strict_checksum is set; validity is always reported in the
// result either way.
ParsedPacket parse_ipv4(std::span<const std::uint8_t> bytes, bool strict_checksum = false);

std::array<std::uint8_t, 4> encode_confidence_option(double confidence);

// Scans a TLV option region for the confidence option. NOP (0x01) and EOOL
// (0x00) bytes are stepped over one byte at a time so an option appended after
// padding is still found. Returns nullopt when no confidence option exists.
std::optional<double> decode_confidence_option(std::span<const std::uint8_t> options);

// Appends the confidence option after any existing options, bumping IHL and
// total_length by one word and recomputing the checksum. Payload bytes pass
// through untouched.
std::vector<std::uint8_t> rewrite_with_confidence(std::span<const std::uint8_t> bytes,
                                                  double confidence);

} // namespace cbf

#endif
