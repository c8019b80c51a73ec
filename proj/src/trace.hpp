#ifndef CBF_TRACE_HPP
#define CBF_TRACE_HPP

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "types.hpp"

namespace cbf {

struct RawPacket {
    std::vector<std::uint8_t> bytes;
    double capture_ts = 0.0;
};

struct TraceRecord {
    std::uint64_t index = 0;
    double ts = 0.0;
    std::uint32_t src_addr = 0; // host order
    std::uint32_t dst_addr = 0;
    std::uint8_t protocol = 0;
    std::uint8_t ttl = 0;
    std::uint8_t tos = 0;
    std::uint16_t total_length = 0;
    std::optional<std::uint16_t> src_port;
    std::optional<std::uint16_t> dst_port;
    std::optional<std::uint8_t> tcp_flags;
    Label label = Label::Unknown;
};

std::string format_ipv4_addr(std::uint32_t addr);
std::uint32_t parse_ipv4_addr(const std::string& text);

// Trace CSV: header-mandatory, columns
// index,ts,src_addr,dst_addr,protocol,ttl,tos,total_length,src_port,dst_port,tcp_flags,label
// with ts at 6 decimals, optional columns empty when absent, and labels
// legit|attack|unknown (unknown written as empty).
std::vector<TraceRecord> read_trace_csv(const std::string& path);
void write_trace_csv(const std::vector<TraceRecord>& records, const std::string& path);

// Deterministic wire image of a record: 20-byte IPv4 header plus a TCP/UDP
// stub when the protocol calls for one, zero-padded to total_length.
std::vector<std::uint8_t> synth_packet(const TraceRecord& record);

// Parses raw bytes back into the CSV field set.
TraceRecord record_from_packet(std::span<const std::uint8_t> bytes, std::uint64_t index,
                               double ts, Label label = Label::Unknown,
                               bool strict_checksum = false);

// Classic pcap, magics 0xA1B2C3D4 / 0xD4C3B2A1, linktype 1 (Ethernet, frames
// unwrapped on ethertype 0x0800) or 101 (raw IP). Non-IPv4 records are
// skipped and counted.
std::vector<RawPacket> read_pcap(const std::string& path, std::uint64_t* skipped = nullptr);

class PcapWriter {
public:
    PcapWriter() = default;
    void open(const std::string& path, std::uint32_t linktype = 101);
    void write(double ts, std::span<const std::uint8_t> bytes);
    void close();
    bool is_open() const { return file_.is_open(); }

private:
    std::ofstream file_;
    std::string path_;
};

void write_pcap(const std::vector<TraceRecord>& records, const std::string& path);

struct FlowTemplate {
    std::uint32_t src_prefix24 = 0; // upper 24 bits of the source address
    std::uint8_t ttl = 64;
    std::uint16_t dst_port = 80;
    std::uint32_t dst_addr = 0;
    std::array<std::uint16_t, 3> lengths = {60, 576, 1400};
    std::uint8_t tos = 0;
};

// Ten templates over ten /24 prefixes, TTLs from {62,63,64,128}, ports from
// {80,443,53,22,123}, 70/30 TCP/UDP, three length buckets, ToS 0.
std::vector<FlowTemplate> default_legit_model();

enum class GenMode : int { Legit = 0, AttackRandom = 1, AttackMimic = 2 };

struct GeneratorConfig {
    GenMode mode = GenMode::Legit;
    std::uint32_t mimic_k = 0; // attributes copied from a legit draw, in schema order
    std::uint64_t count = 0;
    std::uint64_t seed = 0;
    double rate = 1000.0; // packets per second; ts = index / rate
    std::vector<FlowTemplate> legit_model = default_legit_model();
};

// Seeded mt19937_64 stream; identical configs produce byte-identical traces.
std::vector<TraceRecord> generate_trace(const GeneratorConfig& config);

struct PeriodSpan {
    double start_ts = 0.0;
    double end_ts = 0.0;
    PeriodKind kind = PeriodKind::NonAttack;
};

// Periods CSV: header start_ts,end_ts,period with rows attack|nonattack.
// Spans must be positive, non-overlapping, and contiguous once sorted.
std::vector<PeriodSpan> read_periods_csv(const std::string& path);

} // namespace cbf

#endif
