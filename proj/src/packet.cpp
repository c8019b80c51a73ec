#include "packet.hpp"

#include <cmath>
#include <cstring>

#include "error.hpp"

namespace cbf {

namespace {

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t off) {
    return std::uint16_t((b[off] << 8) | b[off + 1]);
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

void write_u16(std::vector<std::uint8_t>& b, std::size_t off, std::uint16_t v) {
    b[off] = std::uint8_t(v >> 8);
    b[off + 1] = std::uint8_t(v & 0xFF);
}

} // namespace

std::uint16_t ones_complement_sum(std::span<const std::uint8_t> bytes) {
    std::uint32_t sum = 0;
    std::size_t i = 0;
    for (; i + 1 < bytes.size(); i += 2)
        sum += std::uint32_t((bytes[i] << 8) | bytes[i + 1]);
    if (i < bytes.size())
        sum += std::uint32_t(bytes[i] << 8);
    while (sum >> 16)
        sum = (sum & 0xFFFF) + (sum >> 16);
    return std::uint16_t(sum);
}

std::uint16_t compute_header_checksum(std::span<const std::uint8_t> header) {
    return std::uint16_t(~ones_complement_sum(header));
}

bool header_checksum_valid(std::span<const std::uint8_t> header) {
    return ones_complement_sum(header) == 0xFFFF;
}

ParsedPacket parse_ipv4(std::span<const std::uint8_t> bytes, bool strict_checksum) {
    if (bytes.size() < 20)
        fail(Status::TruncatedHeader,
             "need at least 20 octets, got " + std::to_string(bytes.size()));

    ParsedPacket p;
    p.version = bytes[0] >> 4;
    p.ihl = bytes[0] & 0x0F;
    if (p.version != 4)
        fail(Status::NotIpv4, "version nibble is " + std::to_string(p.version));
    if (p.ihl < 5)
        fail(Status::TruncatedHeader, "ihl " + std::to_string(p.ihl) + " below minimum 5");

    const std::size_t hlen = p.header_length();
    if (bytes.size() < hlen)
        fail(Status::TruncatedHeader, "buffer shorter than ihl*4 = " + std::to_string(hlen));

    p.tos = bytes[1];
    p.total_length = read_u16(bytes, 2);
    p.identification = read_u16(bytes, 4);
    const std::uint16_t ff = read_u16(bytes, 6);
    p.flags = std::uint8_t(ff >> 13);
    p.fragment_offset = std::uint16_t(ff & 0x1FFF);
    p.ttl = bytes[8];
    p.protocol = bytes[9];
    p.checksum = read_u16(bytes, 10);
    p.src_addr = read_u32(bytes, 12);
    p.dst_addr = read_u32(bytes, 16);
    p.options.assign(bytes.begin() + 20, bytes.begin() + hlen);

    if (p.total_length < hlen)
        fail(Status::TruncatedHeader,
             "total_length " + std::to_string(p.total_length) + " below header length " +
                 std::to_string(hlen));

    p.checksum_valid = header_checksum_valid(bytes.subspan(0, hlen));
    if (strict_checksum && !p.checksum_valid)
        fail(Status::BadChecksum, "header checksum does not verify");

    // Port/flag summary only for unfragmented-first TCP/UDP with enough bytes.
    const bool first_fragment = p.fragment_offset == 0;
    if (first_fragment && (p.protocol == kProtocolTcp || p.protocol == kProtocolUdp)) {
        const std::span<const std::uint8_t> rest = bytes.subspan(hlen);
        if (rest.size() >= 4) {
            p.transport.src_port = read_u16(rest, 0);
            p.transport.dst_port = read_u16(rest, 2);
        }
        if (p.protocol == kProtocolTcp && rest.size() >= 14)
            p.transport.tcp_flags = std::uint8_t(rest[13] & 0x3F);
    }
    return p;
}

std::array<std::uint8_t, 4> encode_confidence_option(double confidence) {
    if (!(confidence >= 0.0 && confidence <= 1.0))
        fail(Status::OutOfRange, "confidence " + std::to_string(confidence) + " outside [0,1]");
    const auto q = std::uint16_t(std::lround(confidence * kConfidenceQuantum));
    return {kConfidenceOptionType, kConfidenceOptionLength, std::uint8_t(q >> 8),
            std::uint8_t(q & 0xFF)};
}

std::optional<double> decode_confidence_option(std::span<const std::uint8_t> options) {
    std::size_t i = 0;
    while (i < options.size()) {
        const std::uint8_t type = options[i];
        if (type == 0x00 || type == 0x01) { // EOOL / NOP: single octet
            ++i;
            continue;
        }
        if (i + 1 >= options.size())
            fail(Status::MalformedOptions, "option type without length byte");
        const std::uint8_t len = options[i + 1];
        if (len < 2 || i + len > options.size())
            fail(Status::MalformedOptions, "option length runs past buffer");
        if (type == kConfidenceOptionType && len == kConfidenceOptionLength) {
            const std::uint16_t q = std::uint16_t((options[i + 2] << 8) | options[i + 3]);
            return double(q) / kConfidenceQuantum;
        }
        i += len;
    }
    return std::nullopt;
}

std::vector<std::uint8_t> rewrite_with_confidence(std::span<const std::uint8_t> bytes,
                                                  double confidence) {
    const ParsedPacket p = parse_ipv4(bytes, false);
    if (p.ihl >= 15)
        fail(Status::NoHeaderRoom, "ihl already 15, no room for another option word");
    if (p.total_length > 0xFFFF - 4)
        fail(Status::NoHeaderRoom, "total_length too close to 65535 to grow by 4");

    const auto option = encode_confidence_option(confidence);
    const std::size_t hlen = p.header_length();

    std::vector<std::uint8_t> out;
    out.reserve(bytes.size() + 4);
    out.insert(out.end(), bytes.begin(), bytes.begin() + hlen);
    out.insert(out.end(), option.begin(), option.end());
    out.insert(out.end(), bytes.begin() + hlen, bytes.end());

    out[0] = std::uint8_t((4 << 4) | (p.ihl + 1));
    write_u16(out, 2, std::uint16_t(p.total_length + 4));
    write_u16(out, 10, 0);
    const std::uint16_t sum = compute_header_checksum(
        std::span<const std::uint8_t>(out.data(), hlen + 4));
    write_u16(out, 10, sum);
    return out;
}

} // namespace cbf
