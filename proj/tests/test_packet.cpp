#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "oracle.hpp"
#include "packet.hpp"
#include "test_util.hpp"

using namespace cbf;
using testutil::HeaderSpec;
using testutil::make_packet;

namespace {

std::vector<std::uint8_t> from_hex(const std::string& hex) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
        out.push_back(std::uint8_t(std::stoul(hex.substr(i, 2), nullptr, 16)));
    return out;
}

} // namespace

TEST_CASE("parse: minimal 20-byte header") {
    const auto bytes = make_packet({});
    const auto p = parse_ipv4(bytes);
    CHECK(p.version == 4);
    CHECK(p.ihl == 5);
    CHECK(p.options.empty());
    CHECK(p.checksum_valid);
}

TEST_CASE("parse: known header checksum verifies against the RFC 1071 oracle") {
    // 20-byte UDP header whose stored checksum is 0xb861.
    const auto bytes = from_hex("45000073000040004011b861c0a80001c0a800c7");
    REQUIRE(bytes.size() == 20);
    // Oracle first: the folded sum over the full header must be 0xFFFF.
    CHECK(oracle::rfc1071_sum(bytes) == 0xFFFF);

    const auto p = parse_ipv4(bytes);
    CHECK(p.checksum == 0xb861);
    CHECK(p.checksum_valid);
    CHECK(p.protocol == 17);
    CHECK(p.total_length == 0x73);
    // Capture is header-only, so no UDP bytes to summarize.
    CHECK(!p.transport.src_port.has_value());
}

TEST_CASE("parse: rejects short and non-IPv4 input") {
    std::vector<std::uint8_t> nineteen(19, 0);
    try {
        parse_ipv4(nineteen);
        FAIL("expected TruncatedHeader");
    } catch (const CbfError& e) {
        CHECK(e.status() == Status::TruncatedHeader);
    }

    auto bytes = make_packet({});
    bytes[0] = 0x65; // version 6
    try {
        parse_ipv4(bytes);
        FAIL("expected NotIpv4");
    } catch (const CbfError& e) {
        CHECK(e.status() == Status::NotIpv4);
    }

    // Claimed ihl larger than the buffer.
    auto short_opts = make_packet({});
    short_opts[0] = 0x47;
    try {
        parse_ipv4(short_opts);
        FAIL("expected TruncatedHeader");
    } catch (const CbfError& e) {
        CHECK(e.status() == Status::TruncatedHeader);
    }
}

TEST_CASE("parse: strict mode rejects corrupted checksums, lenient reports them") {
    auto bytes = make_packet({});
    bytes[11] ^= 0xFF;
    const auto p = parse_ipv4(bytes, false);
    CHECK(!p.checksum_valid);
    try {
        parse_ipv4(bytes, true);
        FAIL("expected BadChecksum");
    } catch (const CbfError& e) {
        CHECK(e.status() == Status::BadChecksum);
    }
}

TEST_CASE("parse: transport summary for TCP, UDP, and truncated payloads") {
    HeaderSpec tcp;
    tcp.protocol = kProtocolTcp;
    tcp.payload = {0x01, 0xBB, 0x00, 0x50, 0, 0, 0, 0, 0, 0, 0, 0, 0x50, 0x12, 0xFF, 0xFF,
                   0, 0, 0, 0};
    const auto pt = parse_ipv4(make_packet(tcp));
    CHECK(pt.transport.src_port == 443);
    CHECK(pt.transport.dst_port == 80);
    CHECK(pt.transport.tcp_flags == 0x12);

    HeaderSpec udp;
    udp.protocol = kProtocolUdp;
    udp.payload = {0x00, 0x35, 0x00, 0x35, 0x00, 0x08, 0x00, 0x00};
    const auto pu = parse_ipv4(make_packet(udp));
    CHECK(pu.transport.src_port == 53);
    CHECK(pu.transport.dst_port == 53);
    CHECK(!pu.transport.tcp_flags.has_value());

    HeaderSpec trunc;
    trunc.protocol = kProtocolTcp;
    trunc.payload = {0x01, 0xBB}; // not even the ports are complete
    const auto pc = parse_ipv4(make_packet(trunc));
    CHECK(!pc.transport.src_port.has_value());
    CHECK(!pc.transport.tcp_flags.has_value());

    HeaderSpec frag;
    frag.protocol = kProtocolTcp;
    frag.fragment_offset = 100; // later fragment: payload is not a TCP header
    frag.payload = std::vector<std::uint8_t>(20, 0xAB);
    const auto pf = parse_ipv4(make_packet(frag));
    CHECK(!pf.transport.src_port.has_value());
}

TEST_CASE("option encode: boundary and midpoint values") {
    const auto zero = encode_confidence_option(0.0);
    CHECK(zero == std::array<std::uint8_t, 4>{0x5E, 0x04, 0x00, 0x00});

    const auto one = encode_confidence_option(1.0);
    CHECK(one == std::array<std::uint8_t, 4>{0x5E, 0x04, 0xFF, 0xFF});

    // Rounding oracle: 0.5 * 65535 = 32767.5, ties round away from zero.
    CHECK(std::lround(0.5 * 65535.0) == 32768);
    const auto half = encode_confidence_option(0.5);
    CHECK(half == std::array<std::uint8_t, 4>{0x5E, 0x04, 0x80, 0x00});
}

TEST_CASE("option encode: rejects out-of-range confidences") {
    for (double bad : {-0.001, 1.001, std::nan("")}) {
        try {
            encode_confidence_option(bad);
            FAIL("expected OutOfRange");
        } catch (const CbfError& e) {
            CHECK(e.status() == Status::OutOfRange);
        }
    }
}

TEST_CASE("option decode: direct hits and absence") {
    const std::vector<std::uint8_t> max = {0x5E, 0x04, 0xFF, 0xFF};
    CHECK(decode_confidence_option(max) == 1.0);

    CHECK(!decode_confidence_option({}).has_value());

    // NOP and zero padding are stepped over; the option is still found.
    const std::vector<std::uint8_t> padded = {0x01, 0x01, 0x00, 0x00, 0x5E, 0x04, 0x12, 0x34};
    const auto v = decode_confidence_option(padded);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(double(0x1234) / 65535.0).epsilon(1e-12));

    // Foreign options are skipped; a 0x5E with the wrong length is not ours.
    const std::vector<std::uint8_t> foreign = {0x44, 0x04, 0xAA, 0xBB, 0x5E, 0x06, 0, 0,
                                               0,    0,    0x5E, 0x04, 0xFF, 0xFF, 0x01, 0x01};
    CHECK(decode_confidence_option(foreign) == 1.0);
}

TEST_CASE("option decode: malformed TLVs") {
    for (const std::vector<std::uint8_t>& bad :
         {std::vector<std::uint8_t>{0x5E},                  // type without length
          std::vector<std::uint8_t>{0x44, 0x08, 0x00},      // length past buffer
          std::vector<std::uint8_t>{0x44, 0x01, 0x00, 0x00} // length below 2
         }) {
        try {
            decode_confidence_option(bad);
            FAIL("expected MalformedOptions");
        } catch (const CbfError& e) {
            CHECK(e.status() == Status::MalformedOptions);
        }
    }
}

TEST_CASE("option roundtrip: quantization error within a half step on a 10k grid") {
    const double bound = 1.0 / 131070.0;
    for (int i = 0; i <= 10000; ++i) {
        const double c = double(i) / 10000.0;
        const auto bytes = encode_confidence_option(c);
        const auto back = decode_confidence_option(bytes);
        REQUIRE(back.has_value());
        CHECK(std::abs(*back - c) <= bound);
    }
}

TEST_CASE("rewrite: minimal header grows by one option word") {
    const auto original = make_packet({});
    const auto rewritten = rewrite_with_confidence(original, 0.0);
    REQUIRE(rewritten.size() == original.size() + 4);

    const auto p = parse_ipv4(rewritten);
    CHECK(p.ihl == 6);
    CHECK(p.total_length == parse_ipv4(original).total_length + 4);
    CHECK(p.checksum_valid);
    CHECK(p.options == std::vector<std::uint8_t>{0x5E, 0x04, 0x00, 0x00});
}

TEST_CASE("rewrite: full header has no room") {
    HeaderSpec spec;
    spec.options = std::vector<std::uint8_t>(40, 0x01); // ihl 15
    const auto bytes = make_packet(spec);
    try {
        rewrite_with_confidence(bytes, 0.5);
        FAIL("expected NoHeaderRoom");
    } catch (const CbfError& e) {
        CHECK(e.status() == Status::NoHeaderRoom);
    }
}

namespace {

// Option fillers that keep the TLV region scannable.
std::vector<std::uint8_t> random_options(std::mt19937_64& rng) {
    const std::size_t words = rng() % 10; // 0..9 words -> ihl 5..14
    std::vector<std::uint8_t> opts;
    while (opts.size() < words * 4) {
        switch (rng() % 3) {
        case 0:
            opts.push_back(0x01); // NOP
            break;
        case 1:
            opts.push_back(0x00); // zero padding
            break;
        default: {
            const std::size_t room = words * 4 - opts.size();
            if (room < 4) {
                opts.push_back(0x01);
                break;
            }
            const std::size_t len = 4 + rng() % std::min<std::size_t>(room - 4 + 1, 5);
            opts.push_back(0x44);
            opts.push_back(std::uint8_t(len));
            for (std::size_t i = 2; i < len; ++i)
                opts.push_back(std::uint8_t(rng() % 256));
            break;
        }
        }
    }
    opts.resize(words * 4, 0x01);
    return opts;
}

HeaderSpec random_header(std::mt19937_64& rng) {
    HeaderSpec spec;
    spec.tos = std::uint8_t(rng() % 256);
    spec.identification = std::uint16_t(rng() % 65536);
    spec.flags = std::uint8_t(rng() % 8);
    spec.fragment_offset = 0;
    spec.ttl = std::uint8_t(rng() % 256);
    spec.protocol = std::uint8_t(rng() % 256);
    spec.src_addr = std::uint32_t(rng());
    spec.dst_addr = std::uint32_t(rng());
    spec.options = random_options(rng);
    spec.payload = std::vector<std::uint8_t>(rng() % 64);
    for (auto& b : spec.payload)
        b = std::uint8_t(rng() % 256);
    return spec;
}

} // namespace

TEST_CASE("rewrite: 1000 fuzzed headers keep checksum soundness and structural delta") {
    std::mt19937_64 rng(20240817);
    const double bound = 1.0 / 131070.0;
    for (int iter = 0; iter < 1000; ++iter) {
        const HeaderSpec spec = random_header(rng);
        const auto original = make_packet(spec);
        const auto before = parse_ipv4(original);
        const double conf = double(rng() % 10001) / 10000.0;

        const auto rewritten = rewrite_with_confidence(original, conf);
        REQUIRE(rewritten.size() == original.size() + 4);

        // Oracle: folded ones-complement sum over the new header is 0xFFFF.
        const std::size_t new_hlen = (rewritten[0] & 0x0F) * 4;
        CHECK(oracle::rfc1071_sum({rewritten.data(), new_hlen}) == 0xFFFF);

        const auto after = parse_ipv4(rewritten);
        CHECK(after.ihl == before.ihl + 1);
        CHECK(after.total_length == before.total_length + 4);

        // Structural delta: only ihl nibble, total_length, and checksum moved;
        // the appended word is exactly the TLV option.
        const std::size_t old_hlen = before.header_length();
        for (std::size_t i = 0; i < old_hlen; ++i) {
            if (i == 0 || i == 2 || i == 3 || i == 10 || i == 11)
                continue;
            CHECK(rewritten[i] == original[i]);
        }
        const auto expected_option = encode_confidence_option(conf);
        CHECK(std::equal(expected_option.begin(), expected_option.end(),
                         rewritten.begin() + std::ptrdiff_t(old_hlen)));
        CHECK(std::equal(original.begin() + std::ptrdiff_t(old_hlen), original.end(),
                         rewritten.begin() + std::ptrdiff_t(old_hlen) + 4));

        // Decode roundtrip within the quantization bound.
        const auto decoded = decode_confidence_option(after.options);
        REQUIRE(decoded.has_value());
        CHECK(std::abs(*decoded - conf) <= bound);

        // Stripping the option and restoring ihl/total_length/checksum
        // reproduces the original bytes.
        std::vector<std::uint8_t> stripped(rewritten);
        stripped.erase(stripped.begin() + std::ptrdiff_t(old_hlen),
                       stripped.begin() + std::ptrdiff_t(old_hlen) + 4);
        stripped[0] = original[0];
        stripped[2] = original[2];
        stripped[3] = original[3];
        stripped[10] = 0;
        stripped[11] = 0;
        const std::uint16_t sum =
            compute_header_checksum({stripped.data(), old_hlen});
        stripped[10] = std::uint8_t(sum >> 8);
        stripped[11] = std::uint8_t(sum & 0xFF);
        CHECK(stripped == original);
    }
}
