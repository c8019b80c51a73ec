#include "trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <sstream>

#include "error.hpp"
#include "packet.hpp"

namespace cbf {

namespace {

constexpr char kTraceHeader[] =
    "index,ts,src_addr,dst_addr,protocol,ttl,tos,total_length,src_port,dst_port,tcp_flags,label";
constexpr char kPeriodsHeader[] = "start_ts,end_ts,period";

constexpr std::uint32_t kPcapMagic = 0xA1B2C3D4;
constexpr std::uint32_t kPcapMagicSwapped = 0xD4C3B2A1;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line_no, const char* what,
                        std::uint64_t max_value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v > max_value)
        fail(Status::Parse,
             "line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return v;
}

double parse_ts(const std::string& s, std::size_t line_no, const char* what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty() || std::isnan(v))
        fail(Status::Parse,
             "line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return v;
}

std::string format_ts(double ts) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", ts);
    return buf;
}

void append_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(std::uint8_t(v >> 8));
    b.push_back(std::uint8_t(v & 0xFF));
}

void append_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(std::uint8_t(v >> 24));
    b.push_back(std::uint8_t(v >> 16));
    b.push_back(std::uint8_t(v >> 8));
    b.push_back(std::uint8_t(v & 0xFF));
}

// Bounded draws go through plain modulo so trace bytes do not depend on the
// standard library's distribution implementations.
struct SeededRng {
    explicit SeededRng(std::uint64_t seed) : gen(seed) {}
    std::uint64_t next() { return gen(); }
    std::uint32_t below(std::uint32_t n) { return std::uint32_t(next() % n); }
    std::uint32_t u32() { return std::uint32_t(next() & 0xFFFFFFFFu); }
    std::mt19937_64 gen;
};

struct FieldDraw {
    std::uint32_t src_addr = 0;
    std::uint32_t dst_addr = 0;
    std::uint8_t protocol = 0;
    std::uint8_t ttl = 0;
    std::uint8_t tos = 0;
    std::uint16_t total_length = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint8_t tcp_flags = 0;
};

// Fixed six draws per call so mimic traces stay coupled across k.
FieldDraw draw_legit(SeededRng& rng, const std::vector<FlowTemplate>& model) {
    static constexpr std::uint8_t kTcpFlagChoices[3] = {0x18, 0x10, 0x02};
    const FlowTemplate& tpl = model[rng.below(std::uint32_t(model.size()))];
    FieldDraw d;
    d.src_addr = (tpl.src_prefix24 << 8) | rng.below(256);
    d.dst_addr = tpl.dst_addr;
    d.protocol = rng.below(10) < 7 ? kProtocolTcp : kProtocolUdp;
    d.ttl = tpl.ttl;
    d.tos = tpl.tos;
    d.tcp_flags = kTcpFlagChoices[rng.below(3)];
    d.total_length = tpl.lengths[rng.below(3)];
    d.src_port = std::uint16_t(1024 + rng.below(65536 - 1024));
    d.dst_port = tpl.dst_port;
    return d;
}

// Fixed nine draws per call, every field uniform over its raw domain.
FieldDraw draw_random(SeededRng& rng) {
    FieldDraw d;
    d.src_addr = rng.u32();
    d.dst_addr = rng.u32();
    d.protocol = std::uint8_t(rng.below(256));
    d.ttl = std::uint8_t(rng.below(256));
    d.tos = std::uint8_t(rng.below(256));
    d.total_length = std::uint16_t(20 + rng.below(65516)); // [20, 65535]
    d.src_port = std::uint16_t(rng.below(65536));
    d.dst_port = std::uint16_t(rng.below(65536));
    d.tcp_flags = std::uint8_t(rng.below(64));
    return d;
}

// Combine in default-schema attribute order: protocol, ttl, src /24 prefix,
// dst_port, tcp_flags, length bucket, tos. Attributes below k mimic the
// legitimate draw; the source host byte stays random either way.
FieldDraw combine_mimic(const FieldDraw& legit, const FieldDraw& random, std::uint32_t k) {
    FieldDraw d = random;
    if (k > 0) d.protocol = legit.protocol;
    if (k > 1) d.ttl = legit.ttl;
    if (k > 2) d.src_addr = (legit.src_addr & 0xFFFFFF00u) | (random.src_addr & 0xFFu);
    if (k > 3) d.dst_port = legit.dst_port;
    if (k > 4) d.tcp_flags = legit.tcp_flags;
    if (k > 5) d.total_length = legit.total_length;
    return d;
}

TraceRecord record_from_draw(const FieldDraw& d, std::uint64_t index, double ts, Label label) {
    TraceRecord r;
    r.index = index;
    r.ts = ts;
    r.src_addr = d.src_addr;
    r.dst_addr = d.dst_addr;
    r.protocol = d.protocol;
    r.ttl = d.ttl;
    r.tos = d.tos;
    r.total_length = d.total_length;
    if (d.protocol == kProtocolTcp || d.protocol == kProtocolUdp) {
        r.src_port = d.src_port;
        r.dst_port = d.dst_port;
        if (d.protocol == kProtocolTcp)
            r.tcp_flags = d.tcp_flags;
    }
    r.label = label;
    return r;
}

} // namespace

std::string format_ipv4_addr(std::uint32_t addr) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (addr >> 24) & 0xFF, (addr >> 16) & 0xFF,
                  (addr >> 8) & 0xFF, addr & 0xFF);
    return buf;
}

std::uint32_t parse_ipv4_addr(const std::string& text) {
    std::uint32_t parts[4];
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        if (pos >= text.size())
            fail(Status::Parse, "bad IPv4 address '" + text + "'");
        std::uint32_t v = 0;
        const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), v);
        if (ec != std::errc{} || v > 255)
            fail(Status::Parse, "bad IPv4 address '" + text + "'");
        parts[i] = v;
        pos = std::size_t(ptr - text.data());
        if (i < 3) {
            if (pos >= text.size() || text[pos] != '.')
                fail(Status::Parse, "bad IPv4 address '" + text + "'");
            ++pos;
        }
    }
    if (pos != text.size())
        fail(Status::Parse, "bad IPv4 address '" + text + "'");
    return (parts[0] << 24) | (parts[1] << 16) | (parts[2] << 8) | parts[3];
}

std::vector<TraceRecord> read_trace_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Status::Io, "cannot open trace file " + path);

    std::string line;
    if (!std::getline(in, line))
        fail(Status::Parse, "line 1: missing header row");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != kTraceHeader)
        fail(Status::Parse, "line 1: unexpected header '" + line + "'");

    std::vector<TraceRecord> records;
    std::size_t line_no = 1;
    bool have_prev = false;
    std::uint64_t prev_index = 0;
    double prev_ts = 0.0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 12)
            fail(Status::Parse, "line " + std::to_string(line_no) + ": expected 12 columns, got " +
                                    std::to_string(fields.size()));
        TraceRecord r;
        r.index = parse_u64(fields[0], line_no, "index", UINT64_MAX);
        r.ts = parse_ts(fields[1], line_no, "ts");
        try {
            r.src_addr = parse_ipv4_addr(fields[2]);
            r.dst_addr = parse_ipv4_addr(fields[3]);
        } catch (const CbfError& e) {
            fail(Status::Parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
        r.protocol = std::uint8_t(parse_u64(fields[4], line_no, "protocol", 255));
        r.ttl = std::uint8_t(parse_u64(fields[5], line_no, "ttl", 255));
        r.tos = std::uint8_t(parse_u64(fields[6], line_no, "tos", 255));
        r.total_length = std::uint16_t(parse_u64(fields[7], line_no, "total_length", 65535));
        if (!fields[8].empty())
            r.src_port = std::uint16_t(parse_u64(fields[8], line_no, "src_port", 65535));
        if (!fields[9].empty())
            r.dst_port = std::uint16_t(parse_u64(fields[9], line_no, "dst_port", 65535));
        if (!fields[10].empty())
            r.tcp_flags = std::uint8_t(parse_u64(fields[10], line_no, "tcp_flags", 63));
        if (fields[11].empty() || fields[11] == "unknown")
            r.label = Label::Unknown;
        else if (fields[11] == "legit")
            r.label = Label::Legit;
        else if (fields[11] == "attack")
            r.label = Label::Attack;
        else
            fail(Status::Parse,
                 "line " + std::to_string(line_no) + ": bad label '" + fields[11] + "'");

        if (have_prev) {
            if (r.index <= prev_index)
                fail(Status::Parse, "line " + std::to_string(line_no) +
                                        ": index not strictly increasing");
            if (r.ts < prev_ts)
                fail(Status::NonMonotoneTimestamp,
                     "line " + std::to_string(line_no) + ": ts decreases from " +
                         format_ts(prev_ts) + " to " + format_ts(r.ts));
        }
        have_prev = true;
        prev_index = r.index;
        prev_ts = r.ts;
        records.push_back(r);
    }
    return records;
}

void write_trace_csv(const std::vector<TraceRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(Status::Io, "cannot open " + path + " for writing");
    out << kTraceHeader << '\n';
    for (const auto& r : records) {
        out << r.index << ',' << format_ts(r.ts) << ',' << format_ipv4_addr(r.src_addr) << ','
            << format_ipv4_addr(r.dst_addr) << ',' << unsigned(r.protocol) << ','
            << unsigned(r.ttl) << ',' << unsigned(r.tos) << ',' << r.total_length << ',';
        if (r.src_port) out << *r.src_port;
        out << ',';
        if (r.dst_port) out << *r.dst_port;
        out << ',';
        if (r.tcp_flags) out << unsigned(*r.tcp_flags);
        out << ',';
        if (r.label != Label::Unknown) out << label_name(r.label);
        out << '\n';
    }
    if (!out)
        fail(Status::Io, "failed writing trace to " + path);
}

std::vector<std::uint8_t> synth_packet(const TraceRecord& record) {
    std::vector<std::uint8_t> b;
    const bool tcp = record.protocol == kProtocolTcp;
    const bool udp = record.protocol == kProtocolUdp;
    const std::size_t transport_len = tcp ? 20 : (udp ? 8 : 0);
    const std::size_t buffer_len = std::max<std::size_t>(record.total_length, 20 + transport_len);
    b.reserve(buffer_len);

    b.push_back(0x45); // version 4, ihl 5
    b.push_back(record.tos);
    append_u16(b, record.total_length);
    append_u16(b, std::uint16_t(record.index & 0xFFFF));
    append_u16(b, 0x4000); // DF
    b.push_back(record.ttl);
    b.push_back(record.protocol);
    append_u16(b, 0); // checksum placeholder
    append_u32(b, record.src_addr);
    append_u32(b, record.dst_addr);
    const std::uint16_t sum =
        compute_header_checksum(std::span<const std::uint8_t>(b.data(), 20));
    b[10] = std::uint8_t(sum >> 8);
    b[11] = std::uint8_t(sum & 0xFF);

    if (tcp) {
        append_u16(b, record.src_port.value_or(0));
        append_u16(b, record.dst_port.value_or(0));
        append_u32(b, 0); // seq
        append_u32(b, 0); // ack
        b.push_back(0x50); // doff 5
        b.push_back(record.tcp_flags.value_or(0));
        append_u16(b, 0xFFFF); // window
        append_u16(b, 0); // checksum (not maintained)
        append_u16(b, 0); // urgent
    } else if (udp) {
        append_u16(b, record.src_port.value_or(0));
        append_u16(b, record.dst_port.value_or(0));
        const std::uint16_t udp_len =
            std::uint16_t(std::max<int>(8, int(record.total_length) - 20));
        append_u16(b, udp_len);
        append_u16(b, 0);
    }
    b.resize(buffer_len, 0);
    return b;
}

TraceRecord record_from_packet(std::span<const std::uint8_t> bytes, std::uint64_t index,
                               double ts, Label label, bool strict_checksum) {
    const ParsedPacket p = parse_ipv4(bytes, strict_checksum);
    TraceRecord r;
    r.index = index;
    r.ts = ts;
    r.src_addr = p.src_addr;
    r.dst_addr = p.dst_addr;
    r.protocol = p.protocol;
    r.ttl = p.ttl;
    r.tos = p.tos;
    r.total_length = p.total_length;
    r.src_port = p.transport.src_port;
    r.dst_port = p.transport.dst_port;
    r.tcp_flags = p.transport.tcp_flags;
    r.label = label;
    return r;
}

namespace {

struct PcapFields {
    bool swapped = false;
    std::uint32_t linktype = 0;
};

std::uint32_t load_u32le(const std::uint8_t* p, bool swapped) {
    std::uint32_t v = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                      (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
    if (swapped)
        v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
    return v;
}

} // namespace

std::vector<RawPacket> read_pcap(const std::string& path, std::uint64_t* skipped) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Status::Io, "cannot open pcap file " + path);

    std::uint8_t gh[24];
    in.read(reinterpret_cast<char*>(gh), sizeof(gh));
    if (in.gcount() != sizeof(gh))
        fail(Status::BadMagic, "file shorter than the 24-byte pcap global header");

    PcapFields f;
    const std::uint32_t magic = load_u32le(gh, false);
    if (magic == kPcapMagic)
        f.swapped = false;
    else if (magic == kPcapMagicSwapped)
        f.swapped = true;
    else
        fail(Status::BadMagic, "unrecognized pcap magic");
    f.linktype = load_u32le(gh + 20, f.swapped);
    if (f.linktype != 1 && f.linktype != 101)
        fail(Status::BadMagic, "unsupported linktype " + std::to_string(f.linktype) +
                                   " (expected Ethernet=1 or raw IP=101)");

    std::vector<RawPacket> packets;
    std::uint64_t skipped_count = 0;
    std::uint8_t rh[16];
    while (in.read(reinterpret_cast<char*>(rh), sizeof(rh))) {
        const std::uint32_t ts_sec = load_u32le(rh, f.swapped);
        const std::uint32_t ts_usec = load_u32le(rh + 4, f.swapped);
        const std::uint32_t incl_len = load_u32le(rh + 8, f.swapped);
        if (incl_len > (1u << 26))
            fail(Status::TruncatedRecord,
                 "implausible incl_len " + std::to_string(incl_len));
        std::vector<std::uint8_t> data(incl_len);
        if (incl_len > 0) {
            in.read(reinterpret_cast<char*>(data.data()), incl_len);
            if (std::size_t(in.gcount()) != incl_len)
                fail(Status::TruncatedRecord, "record data shorter than incl_len");
        }

        std::span<const std::uint8_t> ip(data);
        if (f.linktype == 1) {
            if (data.size() < 14 || data[12] != 0x08 || data[13] != 0x00) {
                ++skipped_count;
                continue;
            }
            ip = ip.subspan(14);
        }
        if (ip.empty() || (ip[0] >> 4) != 4) {
            ++skipped_count;
            continue;
        }
        packets.push_back({std::vector<std::uint8_t>(ip.begin(), ip.end()),
                           double(ts_sec) + double(ts_usec) * 1e-6});
    }
    if (in.gcount() != 0 && std::size_t(in.gcount()) != sizeof(rh))
        fail(Status::TruncatedRecord, "trailing bytes too short for a record header");
    if (skipped)
        *skipped = skipped_count;
    return packets;
}

void PcapWriter::open(const std::string& path, std::uint32_t linktype) {
    file_.open(path, std::ios::binary);
    if (!file_)
        fail(Status::Io, "cannot open " + path + " for writing");
    path_ = path;
    const std::uint32_t words[4] = {kPcapMagic, 0, 0, 65535};
    const std::uint16_t halves[2] = {2, 4};
    std::uint8_t gh[24];
    std::memcpy(gh, &words[0], 4);
    std::memcpy(gh + 4, &halves[0], 2);
    std::memcpy(gh + 6, &halves[1], 2);
    std::memcpy(gh + 8, &words[1], 4);  // thiszone
    std::memcpy(gh + 12, &words[2], 4); // sigfigs
    std::memcpy(gh + 16, &words[3], 4); // snaplen
    std::memcpy(gh + 20, &linktype, 4);
    file_.write(reinterpret_cast<const char*>(gh), sizeof(gh));
}

void PcapWriter::write(double ts, std::span<const std::uint8_t> bytes) {
    if (!file_.is_open())
        fail(Status::Io, "pcap writer not open");
    const auto micros = std::int64_t(std::llround(ts * 1e6));
    const std::uint32_t fields[4] = {std::uint32_t(micros / 1000000),
                                     std::uint32_t(micros % 1000000),
                                     std::uint32_t(bytes.size()), std::uint32_t(bytes.size())};
    file_.write(reinterpret_cast<const char*>(fields), sizeof(fields));
    file_.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

void PcapWriter::close() {
    if (!file_.is_open())
        return;
    file_.close();
    if (file_.fail())
        fail(Status::Io, "failed writing pcap to " + path_);
}

void write_pcap(const std::vector<TraceRecord>& records, const std::string& path) {
    PcapWriter w;
    w.open(path, 101);
    for (const auto& r : records) {
        const auto bytes = synth_packet(r);
        w.write(r.ts, bytes);
    }
    w.close();
}

std::vector<FlowTemplate> default_legit_model() {
    static constexpr std::uint8_t kTtls[4] = {62, 63, 64, 128};
    static constexpr std::uint16_t kPorts[5] = {80, 443, 53, 22, 123};
    std::vector<FlowTemplate> model;
    model.reserve(10);
    for (std::uint32_t t = 0; t < 10; ++t) {
        FlowTemplate tpl;
        tpl.src_prefix24 = (10u << 16) | (1u << 8) | t; // 10.1.t.0/24
        tpl.ttl = kTtls[t % 4];
        tpl.dst_port = kPorts[t % 5];
        tpl.dst_addr = (10u << 24) | 1u; // 10.0.0.1
        tpl.lengths = {std::uint16_t(60 + 4 * t), std::uint16_t(576 + 4 * t),
                       std::uint16_t(1400 + 4 * t)};
        tpl.tos = 0;
        model.push_back(tpl);
    }
    return model;
}

std::vector<TraceRecord> generate_trace(const GeneratorConfig& config) {
    if (config.mode != GenMode::Legit && config.mode != GenMode::AttackRandom &&
        config.mode != GenMode::AttackMimic)
        fail(Status::InvalidConfig, "unknown generator mode");
    if (!(config.rate > 0.0))
        fail(Status::InvalidConfig, "rate must be positive");
    if (config.mode != GenMode::AttackRandom && config.legit_model.empty())
        fail(Status::InvalidConfig, "legit model has no templates");
    if (config.mode == GenMode::AttackMimic && config.mimic_k >= 7)
        fail(Status::InvalidConfig, "mimic_k must be in [0, 7)");

    SeededRng rng(config.seed);
    std::vector<TraceRecord> records;
    records.reserve(config.count);
    for (std::uint64_t i = 0; i < config.count; ++i) {
        const double ts = double(i) / config.rate;
        FieldDraw d;
        Label label = Label::Attack;
        switch (config.mode) {
        case GenMode::Legit:
            d = draw_legit(rng, config.legit_model);
            label = Label::Legit;
            break;
        case GenMode::AttackRandom:
            d = draw_random(rng);
            break;
        case GenMode::AttackMimic: {
            const FieldDraw legit = draw_legit(rng, config.legit_model);
            const FieldDraw random = draw_random(rng);
            d = combine_mimic(legit, random, config.mimic_k);
            break;
        }
        }
        records.push_back(record_from_draw(d, i, ts, label));
    }
    return records;
}

std::vector<PeriodSpan> read_periods_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Status::Io, "cannot open periods file " + path);

    std::string line;
    if (!std::getline(in, line))
        fail(Status::Parse, "line 1: missing header row");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != kPeriodsHeader)
        fail(Status::Parse, "line 1: unexpected header '" + line + "'");

    std::vector<PeriodSpan> spans;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3)
            fail(Status::Parse, "line " + std::to_string(line_no) + ": expected 3 columns");
        PeriodSpan s;
        s.start_ts = parse_ts(fields[0], line_no, "start_ts");
        s.end_ts = parse_ts(fields[1], line_no, "end_ts");
        if (fields[2] == "attack")
            s.kind = PeriodKind::Attack;
        else if (fields[2] == "nonattack")
            s.kind = PeriodKind::NonAttack;
        else
            fail(Status::Parse,
                 "line " + std::to_string(line_no) + ": bad period '" + fields[2] + "'");
        if (!(s.start_ts < s.end_ts))
            fail(Status::InvalidConfig,
                 "line " + std::to_string(line_no) + ": period span must be positive");
        spans.push_back(s);
    }
    if (spans.empty())
        fail(Status::InvalidConfig, "periods file declares no intervals");

    std::sort(spans.begin(), spans.end(),
              [](const PeriodSpan& a, const PeriodSpan& b) { return a.start_ts < b.start_ts; });
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].start_ts < spans[i - 1].end_ts)
            fail(Status::InvalidConfig, "periods overlap at ts " + format_ts(spans[i].start_ts));
        if (spans[i].start_ts > spans[i - 1].end_ts)
            fail(Status::InvalidConfig,
                 "period gap between " + format_ts(spans[i - 1].end_ts) + " and " +
                     format_ts(spans[i].start_ts));
    }
    return spans;
}

} // namespace cbf
