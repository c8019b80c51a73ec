#ifndef CBF_PIPELINE_HPP
#define CBF_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "engine.hpp"
#include "trace.hpp"

namespace cbf {

inline constexpr int kReportVersion = 1;
inline constexpr int kHistogramBins = 64;

// CBF_LOG=info|debug enables diagnostics on stderr.
bool log_enabled(int level); // 1 = info, 2 = debug
void log_line(int level, const std::string& message);

void run_gen(const GeneratorConfig& config, const std::string& out_csv,
             const std::string& out_pcap = {});

struct TrainOptions {
    std::optional<std::string> schema_path;
    ProfileConfig profile;
    bool strict_checksum = false;
};

struct TrainSummary {
    std::uint64_t records = 0;
    std::uint64_t windows_closed = 0;
    double n_total = 0.0;
};

TrainSummary run_train(const std::string& in_trace, const std::string& out_profile,
                       const TrainOptions& options);

struct FilterOptions {
    std::string profile_path;            // ignored when engine_in is set
    std::optional<std::string> engine_in;
    std::string periods_path;
    std::optional<std::string> rewrite_pcap;
    std::optional<std::string> engine_out;
    EngineOptions engine;                // ignored when engine_in is set
    bool strict_checksum = false;
};

struct FilterSummary {
    std::uint64_t packets = 0;
    std::uint64_t accepted = 0;
    std::uint64_t discarded = 0;
    std::uint64_t rewritten = 0;
    std::uint64_t skipped = 0; // non-IPv4 pcap records
};

FilterSummary run_filter(const std::string& in_trace, const std::string& out_decisions,
                         const FilterOptions& options);

struct DecisionRow {
    std::uint64_t index = 0;
    double ts = 0.0;
    PeriodKind period = PeriodKind::NonAttack;
    double score = 0.0;
    std::optional<double> threshold;
    Verdict verdict = Verdict::Accept;
    bool rewritten = false;
    Label label = Label::Unknown;
};

// Decisions CSV: packet_index,ts,period,score,threshold,verdict,rewritten,label
// with scores and thresholds at 9 decimals.
void write_decisions_csv(const std::vector<DecisionRow>& rows, const std::string& path);
std::vector<DecisionRow> read_decisions_csv(const std::string& path);

struct LabelCounts {
    std::uint64_t accepted = 0;
    std::uint64_t discarded = 0;
    std::uint64_t total() const { return accepted + discarded; }
};

struct EvalReport {
    LabelCounts legit, attack, unknown;
    std::optional<double> fpr;       // attack accepted / attack total
    std::optional<double> fnr;       // legit discarded / legit total
    std::optional<double> precision; // attack discarded / all discarded
    std::optional<double> recall;    // attack discarded / attack total
    std::array<std::array<std::uint64_t, kHistogramBins>, 3> histogram{}; // legit/attack/unknown
    std::vector<std::pair<double, double>> threshold_trace;               // (ts, theta) changes
};

EvalReport compute_eval(const std::vector<DecisionRow>& rows);
EvalReport run_eval(const std::string& decisions_csv, const std::string& report_json,
                    const std::string& histogram_csv = {});

// Derived histogram path when none is given: report.json -> report.hist.csv.
std::string default_histogram_path(const std::string& report_json);

std::string run_inspect(const std::string& path);

} // namespace cbf

#endif
