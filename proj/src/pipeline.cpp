#include "pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "packet.hpp"

namespace cbf {

namespace {

constexpr char kDecisionsHeader[] =
    "packet_index,ts,period,score,threshold,verdict,rewritten,label";

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

int log_level_from_env() {
    const char* env = std::getenv("CBF_LOG");
    if (!env)
        return 0;
    const std::string v(env);
    if (v == "debug")
        return 2;
    if (v == "info")
        return 1;
    return 0;
}

// One packet of work for the filter loop. pcap input carries its own bytes;
// CSV rows leave bytes empty and are synthesized on demand so huge traces are
// not materialized up front.
struct FilterInput {
    TraceRecord record;
    std::vector<std::uint8_t> bytes;

    std::vector<std::uint8_t> wire_bytes() const {
        return bytes.empty() ? synth_packet(record) : bytes;
    }
};

bool sniff_pcap(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Status::Io, "cannot open input file " + path);
    std::uint8_t m[4];
    in.read(reinterpret_cast<char*>(m), 4);
    if (in.gcount() != 4)
        return false;
    const bool native = m[0] == 0xD4 && m[1] == 0xC3 && m[2] == 0xB2 && m[3] == 0xA1;
    const bool swapped = m[0] == 0xA1 && m[1] == 0xB2 && m[2] == 0xC3 && m[3] == 0xD4;
    return native || swapped;
}

std::vector<FilterInput> load_filter_inputs(const std::string& path, bool strict_checksum,
                                            std::uint64_t* skipped) {
    std::vector<FilterInput> inputs;
    if (sniff_pcap(path)) {
        const auto packets = read_pcap(path, skipped);
        inputs.reserve(packets.size());
        std::uint64_t index = 0;
        double prev_ts = -std::numeric_limits<double>::infinity();
        for (const auto& p : packets) {
            if (p.capture_ts < prev_ts)
                fail(Status::NonMonotoneTimestamp,
                     "pcap record " + std::to_string(index) + " goes back in time");
            prev_ts = p.capture_ts;
            FilterInput fi;
            fi.record = record_from_packet(p.bytes, index, p.capture_ts, Label::Unknown,
                                           strict_checksum);
            fi.bytes = p.bytes;
            inputs.push_back(std::move(fi));
            ++index;
        }
    } else {
        const auto records = read_trace_csv(path);
        inputs.reserve(records.size());
        for (const auto& r : records)
            inputs.push_back({r, {}});
    }
    return inputs;
}

nlohmann::json rate_json(std::optional<double> v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0)
        return std::nullopt;
    return double(num) / double(den);
}

} // namespace

bool log_enabled(int level) {
    static const int env_level = log_level_from_env();
    return env_level >= level;
}

void log_line(int level, const std::string& message) {
    if (log_enabled(level))
        std::cerr << "[cbf] " << message << '\n';
}

void run_gen(const GeneratorConfig& config, const std::string& out_csv,
             const std::string& out_pcap) {
    const auto records = generate_trace(config);
    write_trace_csv(records, out_csv);
    if (!out_pcap.empty())
        write_pcap(records, out_pcap);
    log_line(1, "gen: wrote " + std::to_string(records.size()) + " records to " + out_csv);
}

TrainSummary run_train(const std::string& in_trace, const std::string& out_profile,
                       const TrainOptions& options) {
    AttributeSchema schema =
        options.schema_path ? AttributeSchema::load_file(*options.schema_path) : default_schema();
    ConfidenceProfile profile(std::move(schema), options.profile);

    std::uint64_t skipped = 0;
    const auto inputs = load_filter_inputs(in_trace, options.strict_checksum, &skipped);
    for (const auto& in : inputs) {
        const ParsedPacket parsed = parse_ipv4(in.wire_bytes(), options.strict_checksum);
        profile.observe(extract_attributes(parsed, profile.schema()), in.record.ts);
    }
    if (profile.open_window().started)
        profile.close_window();
    profile.save(out_profile);
    if (skipped > 0)
        log_line(1, "train: skipped " + std::to_string(skipped) + " non-IPv4 records");
    return {inputs.size(), profile.windows_closed(), profile.total()};
}

FilterSummary run_filter(const std::string& in_trace, const std::string& out_decisions,
                         const FilterOptions& options) {
    std::optional<FilterEngine> engine;
    if (options.engine_in) {
        engine.emplace(FilterEngine::load(*options.engine_in));
    } else {
        if (options.profile_path.empty())
            fail(Status::InvalidConfig, "either a profile or an engine snapshot is required");
        engine.emplace(ConfidenceProfile::load(options.profile_path), options.engine);
    }

    const auto spans = read_periods_csv(options.periods_path);
    FilterSummary summary;
    const auto inputs = load_filter_inputs(in_trace, options.strict_checksum, &summary.skipped);

    if (!inputs.empty()) {
        if (inputs.front().record.ts < spans.front().start_ts)
            fail(Status::InvalidConfig, "trace starts before the first declared period");
        if (inputs.back().record.ts > spans.back().end_ts)
            fail(Status::InvalidConfig, "trace extends past the last declared period");
    }

    PcapWriter rewritten_out;
    if (options.rewrite_pcap)
        rewritten_out.open(*options.rewrite_pcap, 101);

    std::vector<DecisionRow> rows;
    rows.reserve(inputs.size());
    std::size_t span_idx = 0;
    bool span_entered = false;
    for (const auto& in : inputs) {
        const double ts = in.record.ts;
        while (!(span_idx + 1 == spans.size()) && ts >= spans[span_idx].end_ts) {
            ++span_idx;
            span_entered = false;
        }
        if (!span_entered) {
            engine->set_period(spans[span_idx].kind, spans[span_idx].start_ts);
            span_entered = true;
            log_line(2, std::string("filter: entering ") + period_name(spans[span_idx].kind) +
                            " period at ts " + format_fixed(spans[span_idx].start_ts, 6));
        }

        FilterEngine::ProcessResult result;
        try {
            result = engine->process(in.wire_bytes(), ts);
        } catch (const CbfError& e) {
            throw CbfError(e.status(), std::string(e.what()) + " (packet " +
                                           std::to_string(in.record.index) + ", ts " +
                                           format_fixed(ts, 6) + ")");
        }

        const Decision& d = result.decision;
        rows.push_back({in.record.index, ts, d.period, d.score, d.threshold, d.verdict,
                        d.rewritten, in.record.label});
        summary.packets += 1;
        if (d.verdict == Verdict::Accept)
            summary.accepted += 1;
        else
            summary.discarded += 1;
        if (d.rewritten) {
            summary.rewritten += 1;
            if (rewritten_out.is_open())
                rewritten_out.write(ts, result.packet);
        }
    }
    rewritten_out.close();

    write_decisions_csv(rows, out_decisions);
    if (options.engine_out)
        engine->save(*options.engine_out);
    log_line(1, "filter: " + std::to_string(summary.packets) + " packets, " +
                    std::to_string(summary.discarded) + " discarded, " +
                    std::to_string(summary.skipped) + " skipped");
    return summary;
}

void write_decisions_csv(const std::vector<DecisionRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(Status::Io, "cannot open " + path + " for writing");
    out << kDecisionsHeader << '\n';
    for (const auto& r : rows) {
        out << r.index << ',' << format_fixed(r.ts, 6) << ',' << period_name(r.period) << ','
            << format_fixed(r.score, 9) << ',';
        if (r.threshold)
            out << format_fixed(*r.threshold, 9);
        out << ',' << verdict_name(r.verdict) << ',' << (r.rewritten ? 1 : 0) << ',';
        if (r.label != Label::Unknown)
            out << label_name(r.label);
        out << '\n';
    }
    if (!out)
        fail(Status::Io, "failed writing decisions to " + path);
}

std::vector<DecisionRow> read_decisions_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Status::Io, "cannot open decisions file " + path);

    std::string line;
    if (!std::getline(in, line))
        fail(Status::Parse, "line 1: missing header row");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != kDecisionsHeader)
        fail(Status::Parse, "line 1: unexpected header '" + line + "'");

    std::vector<DecisionRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
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
        if (fields.size() != 8)
            fail(Status::Parse, "line " + std::to_string(line_no) + ": expected 8 columns");

        DecisionRow r;
        {
            const auto [ptr, ec] =
                std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), r.index);
            if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size())
                fail(Status::Parse, "line " + std::to_string(line_no) + ": bad packet_index");
        }
        char* end = nullptr;
        r.ts = std::strtod(fields[1].c_str(), &end);
        if (end != fields[1].c_str() + fields[1].size())
            fail(Status::Parse, "line " + std::to_string(line_no) + ": bad ts");
        if (fields[2] == "attack")
            r.period = PeriodKind::Attack;
        else if (fields[2] == "nonattack")
            r.period = PeriodKind::NonAttack;
        else
            fail(Status::Parse, "line " + std::to_string(line_no) + ": bad period");
        r.score = std::strtod(fields[3].c_str(), &end);
        if (end != fields[3].c_str() + fields[3].size() || !(r.score >= 0.0 && r.score <= 1.0))
            fail(Status::Parse, "line " + std::to_string(line_no) + ": bad score");
        if (!fields[4].empty()) {
            r.threshold = std::strtod(fields[4].c_str(), &end);
            if (end != fields[4].c_str() + fields[4].size())
                fail(Status::Parse, "line " + std::to_string(line_no) + ": bad threshold");
        }
        if (fields[5] == "accept")
            r.verdict = Verdict::Accept;
        else if (fields[5] == "discard")
            r.verdict = Verdict::Discard;
        else
            fail(Status::Parse, "line " + std::to_string(line_no) + ": bad verdict");
        if (fields[6] == "1")
            r.rewritten = true;
        else if (fields[6] == "0")
            r.rewritten = false;
        else
            fail(Status::Parse, "line " + std::to_string(line_no) + ": bad rewritten flag");
        if (fields[7].empty() || fields[7] == "unknown")
            r.label = Label::Unknown;
        else if (fields[7] == "legit")
            r.label = Label::Legit;
        else if (fields[7] == "attack")
            r.label = Label::Attack;
        else
            fail(Status::Parse, "line " + std::to_string(line_no) + ": bad label");
        rows.push_back(r);
    }
    return rows;
}

EvalReport compute_eval(const std::vector<DecisionRow>& rows) {
    EvalReport rep;
    std::optional<double> prev_threshold;
    for (const auto& r : rows) {
        LabelCounts& cell = r.label == Label::Legit    ? rep.legit
                            : r.label == Label::Attack ? rep.attack
                                                       : rep.unknown;
        if (r.verdict == Verdict::Accept)
            cell.accepted += 1;
        else
            cell.discarded += 1;

        const int bin = std::min(kHistogramBins - 1, int(r.score * kHistogramBins));
        rep.histogram[std::size_t(r.label)][std::size_t(bin)] += 1;

        if (r.threshold && (!prev_threshold || *prev_threshold != *r.threshold))
            rep.threshold_trace.emplace_back(r.ts, *r.threshold);
        prev_threshold = r.threshold;
    }

    rep.fpr = ratio(rep.attack.accepted, rep.attack.total());
    rep.fnr = ratio(rep.legit.discarded, rep.legit.total());
    const std::uint64_t all_discarded =
        rep.legit.discarded + rep.attack.discarded + rep.unknown.discarded;
    rep.precision = ratio(rep.attack.discarded, all_discarded);
    rep.recall = ratio(rep.attack.discarded, rep.attack.total());
    return rep;
}

std::string default_histogram_path(const std::string& report_json) {
    const std::string suffix = ".json";
    if (report_json.size() > suffix.size() &&
        report_json.compare(report_json.size() - suffix.size(), suffix.size(), suffix) == 0)
        return report_json.substr(0, report_json.size() - suffix.size()) + ".hist.csv";
    return report_json + ".hist.csv";
}

EvalReport run_eval(const std::string& decisions_csv, const std::string& report_json,
                    const std::string& histogram_csv) {
    const auto rows = read_decisions_csv(decisions_csv);
    if (std::none_of(rows.begin(), rows.end(),
                     [](const DecisionRow& r) { return r.label != Label::Unknown; }))
        fail(Status::Parse, "decisions file has no labeled rows to evaluate");

    const EvalReport rep = compute_eval(rows);

    auto counts_json = [](const LabelCounts& c) {
        return nlohmann::json{{"accept", c.accepted}, {"discard", c.discarded}};
    };
    nlohmann::json j{
        {"report_version", kReportVersion},
        {"counts",
         {{"legit", counts_json(rep.legit)},
          {"attack", counts_json(rep.attack)},
          {"unknown", counts_json(rep.unknown)}}},
        {"totals",
         {{"packets", rep.legit.total() + rep.attack.total() + rep.unknown.total()},
          {"accepted", rep.legit.accepted + rep.attack.accepted + rep.unknown.accepted},
          {"discarded", rep.legit.discarded + rep.attack.discarded + rep.unknown.discarded}}},
        {"fpr", rate_json(rep.fpr)},
        {"fnr", rate_json(rep.fnr)},
        {"precision", rate_json(rep.precision)},
        {"recall", rate_json(rep.recall)},
    };
    j["histogram"] = {{"bins", kHistogramBins},
                      {"legit", rep.histogram[0]},
                      {"attack", rep.histogram[1]},
                      {"unknown", rep.histogram[2]}};
    nlohmann::json tt = nlohmann::json::array();
    for (const auto& [ts, theta] : rep.threshold_trace)
        tt.push_back({ts, theta});
    j["threshold_trace"] = tt;

    std::ofstream out(report_json, std::ios::binary);
    if (!out)
        fail(Status::Io, "cannot open " + report_json + " for writing");
    out << j.dump(2) << '\n';
    if (!out)
        fail(Status::Io, "failed writing report to " + report_json);

    const std::string hist_path =
        histogram_csv.empty() ? default_histogram_path(report_json) : histogram_csv;
    std::ofstream hist(hist_path, std::ios::binary);
    if (!hist)
        fail(Status::Io, "cannot open " + hist_path + " for writing");
    hist << "bin_lo,bin_hi,legit,attack,unknown\n";
    for (int b = 0; b < kHistogramBins; ++b) {
        hist << format_fixed(double(b) / kHistogramBins, 6) << ','
             << format_fixed(double(b + 1) / kHistogramBins, 6) << ','
             << rep.histogram[0][std::size_t(b)] << ',' << rep.histogram[1][std::size_t(b)] << ','
             << rep.histogram[2][std::size_t(b)] << '\n';
    }
    if (!hist)
        fail(Status::Io, "failed writing histogram to " + hist_path);
    return rep;
}

namespace {

std::string describe_profile(const ConfidenceProfile& profile) {
    std::ostringstream out;
    const auto& schema = profile.schema();
    out << "attributes (" << schema.attribute_count() << "):";
    for (const auto& a : schema.attributes)
        out << ' ' << a.name;
    out << '\n';
    out << "pairs: " << schema.pair_count() << ", windows_closed: " << profile.windows_closed()
        << ", decay: " << profile.config().decay << '\n';
    if (profile.empty()) {
        out << "N_n = 0 (empty profile)\n";
        return out.str();
    }
    out << "N_n = " << format_fixed(profile.total(), profile.total() == std::floor(profile.total()) ? 0 : 6)
        << '\n';

    for (std::uint32_t k = 0; k < schema.pair_count(); ++k) {
        const auto& [r, s] = schema.pairs[k];
        out << "pair[" << k << "] " << schema.attributes[r].name << " x "
            << schema.attributes[s].name << " top confidences:\n";
        std::vector<std::tuple<double, AttrValue, AttrValue>> entries;
        for (const auto& [key, count] : profile.cumulative().pairs) {
            if (std::get<0>(key) == k)
                entries.emplace_back(count, std::get<1>(key), std::get<2>(key));
        }
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b))
                return std::get<0>(a) > std::get<0>(b);
            if (std::get<1>(a) != std::get<1>(b))
                return std::get<1>(a) < std::get<1>(b);
            return std::get<2>(a) < std::get<2>(b);
        });
        const std::size_t top = std::min<std::size_t>(entries.size(), 10);
        for (std::size_t i = 0; i < top; ++i) {
            const auto& [count, v1, v2] = entries[i];
            out << "  (" << v1 << ", " << v2 << ") " << format_fixed(count / profile.total(), 6)
                << '\n';
        }
    }
    return out.str();
}

} // namespace

std::string run_inspect(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Status::Io, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(Status::CorruptDocument, std::string("document: ") + e.what());
    }

    std::ostringstream out;
    if (j.contains("engine_version")) {
        const FilterEngine engine = FilterEngine::from_json(j);
        out << "engine snapshot: " << path << '\n';
        if (engine.period())
            out << "period: " << period_name(*engine.period()) << '\n';
        else
            out << "period: undeclared\n";
        if (engine.nominal().np)
            out << "np: " << format_fixed(*engine.nominal().np, 9) << " (lowered "
                << engine.nominal().updates << " times)\n";
        else
            out << "np: unset\n";
        if (engine.threshold())
            out << "threshold: " << format_fixed(*engine.threshold(), 9) << '\n';
        out << describe_profile(engine.profile());
    } else {
        const ConfidenceProfile profile = ConfidenceProfile::load(path);
        out << "profile: " << path << '\n';
        out << describe_profile(profile);
    }
    return out.str();
}

} // namespace cbf
