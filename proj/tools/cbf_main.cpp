// cbf — command-line front end over the libcbf C API.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "cbf/cbf.h"

namespace {

// Exit-code contract: 0 success, 2 usage/config, 3 input parse, 4 algorithm state.
int exit_code_for(cbf_status status) {
    switch (status) {
    case CBF_OK:
        return 0;
    case CBF_E_INVALID_ARGUMENT:
    case CBF_E_INVALID_CONFIG:
    case CBF_E_OUT_OF_RANGE:
        return 2;
    case CBF_E_PARSE:
    case CBF_E_NON_MONOTONE_TIMESTAMP:
    case CBF_E_VERSION_MISMATCH:
    case CBF_E_CORRUPT_DOCUMENT:
    case CBF_E_BAD_MAGIC:
    case CBF_E_TRUNCATED_RECORD:
    case CBF_E_TRUNCATED_HEADER:
    case CBF_E_NOT_IPV4:
    case CBF_E_BAD_CHECKSUM:
    case CBF_E_MALFORMED_OPTIONS:
    case CBF_E_IO:
        return 3;
    default:
        return 4;
    }
}

int report_failure(const char* command, cbf_status status) {
    std::fprintf(stderr, "cbf %s: %s: %s\n", command, cbf_status_name(status),
                 cbf_last_error());
    return exit_code_for(status);
}

bool parse_threshold_strategy(const std::string& text, int& strategy, double& percentile) {
    if (text == "min") {
        strategy = CBF_THRESHOLD_MIN;
        percentile = 0.0;
        return true;
    }
    const std::string prefix = "percentile:";
    if (text.rfind(prefix, 0) == 0) {
        char* end = nullptr;
        const std::string q = text.substr(prefix.size());
        const double v = std::strtod(q.c_str(), &end);
        if (q.empty() || end != q.c_str() + q.size() || !(v > 0.0 && v <= 1.0))
            return false;
        strategy = CBF_THRESHOLD_PERCENTILE;
        percentile = v;
        return true;
    }
    return false;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cbf — correlation-pattern confidence packet filtering"};
    app.require_subcommand(1);

    // --- gen ---
    auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled trace");
    std::string gen_mode = "legit";
    std::int64_t gen_mimic_k = 0;
    std::int64_t gen_count = 0;
    std::uint64_t gen_seed = 0;
    double gen_rate = 1000.0;
    std::string gen_out, gen_pcap;
    gen->add_option("--mode", gen_mode, "legit | attack-random | attack-mimic")
        ->default_val("legit");
    gen->add_option("--mimic-k", gen_mimic_k, "attributes copied from legit draws (attack-mimic)");
    gen->add_option("--count", gen_count, "number of packets")->required();
    gen->add_option("--seed", gen_seed, "PRNG seed (mt19937_64)");
    gen->add_option("--rate", gen_rate, "packets per second (ts = index/rate)");
    gen->add_option("--out", gen_out, "output trace CSV")->required();
    gen->add_option("--pcap", gen_pcap, "also write the trace as a raw-IP pcap");

    // --- train ---
    auto* train = app.add_subcommand("train", "Build a confidence profile from legitimate traffic");
    std::string train_in, train_profile, train_schema;
    double train_window = 60.0;
    std::uint64_t train_window_packets = 10000;
    double train_decay = 1.0;
    bool train_strict = false;
    train->add_option("--in", train_in, "input trace (CSV or pcap)")->required();
    train->add_option("--profile", train_profile, "output profile document")->required();
    train->add_option("--window", train_window, "tumbling window span in seconds");
    train->add_option("--window-packets", train_window_packets,
                      "window size in packets for untimestamped input");
    train->add_option("--decay", train_decay, "cumulative decay factor in (0,1]");
    train->add_option("--schema", train_schema, "attribute schema JSON (default: built-in)");
    train->add_flag("--strict-checksum", train_strict, "reject packets with bad header checksums");

    // --- filter ---
    auto* filter = app.add_subcommand("filter", "Score and filter a trace over declared periods");
    std::string filter_in, filter_profile, filter_periods, filter_out;
    std::string filter_rewrite, filter_engine_in, filter_engine_out;
    std::string filter_strategy = "min";
    bool filter_np_reset = false, filter_strict = false;
    filter->add_option("--in", filter_in, "input trace (CSV or pcap)")->required();
    filter->add_option("--profile", filter_profile, "trained profile document");
    filter->add_option("--periods", filter_periods, "periods CSV (start_ts,end_ts,period)")
        ->required();
    filter->add_option("--out", filter_out, "output decisions CSV")->required();
    filter->add_option("--rewrite", filter_rewrite,
                       "write confidence-tagged packets for non-attack accepts to this pcap");
    filter->add_option("--engine-in", filter_engine_in,
                       "resume from an engine snapshot instead of --profile");
    filter->add_option("--engine-out", filter_engine_out, "save the final engine snapshot");
    filter->add_option("--threshold-strategy", filter_strategy,
                       "min (default) | percentile:q (extension beyond the running minimum)");
    filter->add_flag("--np-reset-on-nonattack", filter_np_reset,
                     "clear the nominal profile whenever a non-attack period starts");
    filter->add_flag("--strict-checksum", filter_strict,
                     "reject packets with bad header checksums");

    // --- eval ---
    auto* eval = app.add_subcommand("eval", "Compute metrics from a decisions file");
    std::string eval_decisions, eval_report, eval_hist;
    eval->add_option("--decisions", eval_decisions, "decisions CSV from filter")->required();
    eval->add_option("--report", eval_report, "output report JSON")->required();
    eval->add_option("--hist", eval_hist, "histogram CSV path (default: <report>.hist.csv)");

    // --- inspect ---
    auto* inspect = app.add_subcommand("inspect", "Dump a profile document or engine snapshot");
    std::string inspect_path;
    inspect->add_option("--profile", inspect_path, "profile document or engine snapshot")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e); // --help / --version
        std::fprintf(stderr, "cbf: %s\n", e.what());
        return 2;
    }

    if (gen->parsed()) {
        if (gen_count < 0) {
            std::fprintf(stderr, "cbf gen: --count must be non-negative\n");
            return 2;
        }
        if (gen_mimic_k < 0) {
            std::fprintf(stderr, "cbf gen: --mimic-k must be non-negative\n");
            return 2;
        }
        cbf_gen_options opts{};
        opts.mode = gen_mode.c_str();
        opts.mimic_k = std::uint32_t(gen_mimic_k);
        opts.count = std::uint64_t(gen_count);
        opts.seed = gen_seed;
        opts.rate = gen_rate;
        opts.pcap_path = gen_pcap.empty() ? nullptr : gen_pcap.c_str();
        const cbf_status status = cbf_run_gen(&opts, gen_out.c_str());
        if (status != CBF_OK)
            return report_failure("gen", status);
        std::printf("wrote %lld records to %s\n", (long long)gen_count, gen_out.c_str());
        return 0;
    }

    if (train->parsed()) {
        cbf_train_options opts{};
        opts.schema_path = train_schema.empty() ? nullptr : train_schema.c_str();
        opts.window_seconds = train_window;
        opts.window_packets = train_window_packets;
        opts.decay = train_decay;
        opts.strict_checksum = train_strict ? 1 : 0;
        cbf_train_summary summary{};
        const cbf_status status =
            cbf_run_train(train_in.c_str(), train_profile.c_str(), &opts, &summary);
        if (status != CBF_OK)
            return report_failure("train", status);
        std::printf("trained on %llu records: windows_closed=%llu N_n=%.0f -> %s\n",
                    (unsigned long long)summary.records,
                    (unsigned long long)summary.windows_closed, summary.n_total,
                    train_profile.c_str());
        return 0;
    }

    if (filter->parsed()) {
        cbf_filter_options opts{};
        int strategy = CBF_THRESHOLD_MIN;
        double percentile = 0.0;
        if (!parse_threshold_strategy(filter_strategy, strategy, percentile)) {
            std::fprintf(stderr, "cbf filter: bad --threshold-strategy '%s'\n",
                         filter_strategy.c_str());
            return 2;
        }
        if (filter_profile.empty() && filter_engine_in.empty()) {
            std::fprintf(stderr, "cbf filter: --profile or --engine-in is required\n");
            return 2;
        }
        opts.profile_path = filter_profile.empty() ? nullptr : filter_profile.c_str();
        opts.engine_in = filter_engine_in.empty() ? nullptr : filter_engine_in.c_str();
        opts.periods_path = filter_periods.c_str();
        opts.rewrite_pcap = filter_rewrite.empty() ? nullptr : filter_rewrite.c_str();
        opts.engine_out = filter_engine_out.empty() ? nullptr : filter_engine_out.c_str();
        opts.threshold_strategy = strategy;
        opts.percentile = percentile;
        opts.np_reset_on_nonattack = filter_np_reset ? 1 : 0;
        opts.strict_checksum = filter_strict ? 1 : 0;
        cbf_filter_summary summary{};
        const cbf_status status =
            cbf_run_filter(filter_in.c_str(), filter_out.c_str(), &opts, &summary);
        if (status != CBF_OK)
            return report_failure("filter", status);
        std::printf("filtered %llu packets: accepted=%llu discarded=%llu rewritten=%llu "
                    "skipped=%llu -> %s\n",
                    (unsigned long long)summary.packets, (unsigned long long)summary.accepted,
                    (unsigned long long)summary.discarded,
                    (unsigned long long)summary.rewritten, (unsigned long long)summary.skipped,
                    filter_out.c_str());
        return 0;
    }

    if (eval->parsed()) {
        const cbf_status status = cbf_run_eval(eval_decisions.c_str(), eval_report.c_str(),
                                               eval_hist.empty() ? nullptr : eval_hist.c_str());
        if (status != CBF_OK)
            return report_failure("eval", status);
        std::printf("report written to %s\n", eval_report.c_str());
        return 0;
    }

    if (inspect->parsed()) {
        char* text = nullptr;
        const cbf_status status = cbf_run_inspect(inspect_path.c_str(), &text);
        if (status != CBF_OK)
            return report_failure("inspect", status);
        std::fputs(text, stdout);
        cbf_string_free(text);
        return 0;
    }

    return 2;
}
