#include "cbf/cbf.h"

#include <cmath>
#include <cstring>
#include <new>
#include <string>

#include "engine.hpp"
#include "error.hpp"
#include "packet.hpp"
#include "pipeline.hpp"
#include "profile.hpp"
#include "schema.hpp"

using namespace cbf;

namespace {

thread_local std::string g_last_error;

static_assert(int(Status::InvalidArgument) == CBF_E_INVALID_ARGUMENT);
static_assert(int(Status::ThresholdUnset) == CBF_E_THRESHOLD_UNSET);
static_assert(int(Status::Internal) == CBF_E_INTERNAL);

template <typename Fn> cbf_status guarded(Fn&& fn) {
    try {
        fn();
        return CBF_OK;
    } catch (const CbfError& e) {
        g_last_error = e.what();
        return cbf_status(int(e.status()));
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return CBF_E_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CBF_E_INTERNAL;
    }
}

cbf_status invalid(const char* message) {
    g_last_error = message;
    return CBF_E_INVALID_ARGUMENT;
}

ProfileConfig make_profile_config(double window_seconds, uint64_t window_packets, double decay) {
    ProfileConfig cfg;
    if (window_seconds > 0.0)
        cfg.window_seconds = window_seconds;
    if (window_packets > 0)
        cfg.window_packets = window_packets;
    if (decay > 0.0)
        cfg.decay = decay;
    return cfg;
}

EngineOptions make_engine_options(const cbf_engine_options* o) {
    EngineOptions opts;
    if (o) {
        opts.strategy = o->threshold_strategy == CBF_THRESHOLD_PERCENTILE
                            ? ThresholdStrategy::Percentile
                            : ThresholdStrategy::Min;
        opts.percentile = o->percentile;
        opts.np_reset_on_nonattack = o->np_reset_on_nonattack != 0;
    }
    return opts;
}

GenMode parse_gen_mode(const char* mode) {
    const std::string m = mode ? mode : "";
    if (m == "legit")
        return GenMode::Legit;
    if (m == "attack-random")
        return GenMode::AttackRandom;
    if (m == "attack-mimic")
        return GenMode::AttackMimic;
    fail(Status::InvalidConfig, "unknown mode '" + m + "'");
}

} // namespace

struct cbf_schema {
    AttributeSchema value;
};

struct cbf_profile {
    ConfidenceProfile value;
};

struct cbf_engine {
    FilterEngine value;
};

extern "C" {

const char* cbf_status_name(cbf_status status) {
    return status_name(Status(int(status)));
}

const char* cbf_last_error(void) {
    return g_last_error.c_str();
}

const char* cbf_version(void) {
    return "1.0.0";
}

cbf_status cbf_parse_ipv4(const uint8_t* data, size_t len, int strict_checksum,
                          cbf_parsed_packet* out) {
    if (!data || !out)
        return invalid("data and out must be non-NULL");
    return guarded([&] {
        const ParsedPacket p = parse_ipv4({data, len}, strict_checksum != 0);
        std::memset(out, 0, sizeof(*out));
        out->version = p.version;
        out->ihl = p.ihl;
        out->tos = p.tos;
        out->total_length = p.total_length;
        out->identification = p.identification;
        out->flags = p.flags;
        out->fragment_offset = p.fragment_offset;
        out->ttl = p.ttl;
        out->protocol = p.protocol;
        out->checksum = p.checksum;
        out->src_addr = p.src_addr;
        out->dst_addr = p.dst_addr;
        out->checksum_valid = p.checksum_valid ? 1 : 0;
        if (p.transport.src_port && p.transport.dst_port) {
            out->has_ports = 1;
            out->src_port = *p.transport.src_port;
            out->dst_port = *p.transport.dst_port;
        }
        if (p.transport.tcp_flags) {
            out->has_tcp_flags = 1;
            out->tcp_flags = *p.transport.tcp_flags;
        }
        out->options_len = uint8_t(p.options.size());
        std::memcpy(out->options, p.options.data(), p.options.size());
    });
}

cbf_status cbf_encode_confidence_option(double confidence, uint8_t out[4]) {
    if (!out)
        return invalid("out must be non-NULL");
    return guarded([&] {
        const auto bytes = encode_confidence_option(confidence);
        std::memcpy(out, bytes.data(), 4);
    });
}

cbf_status cbf_decode_confidence_option(const uint8_t* options, size_t len, int* present,
                                        double* confidence) {
    if ((!options && len > 0) || !present)
        return invalid("options and present must be non-NULL");
    return guarded([&] {
        const auto value = decode_confidence_option({options, len});
        *present = value ? 1 : 0;
        if (value && confidence)
            *confidence = *value;
    });
}

cbf_status cbf_rewrite_with_confidence(const uint8_t* data, size_t len, double confidence,
                                       uint8_t* out, size_t out_capacity, size_t* out_len) {
    if (!data || !out || !out_len)
        return invalid("data, out, and out_len must be non-NULL");
    return guarded([&] {
        const auto rewritten = rewrite_with_confidence({data, len}, confidence);
        if (out_capacity < rewritten.size())
            fail(Status::InvalidArgument,
                 "output capacity " + std::to_string(out_capacity) + " below required " +
                     std::to_string(rewritten.size()));
        std::memcpy(out, rewritten.data(), rewritten.size());
        *out_len = rewritten.size();
    });
}

cbf_status cbf_schema_create_default(cbf_schema** out) {
    if (!out)
        return invalid("out must be non-NULL");
    return guarded([&] { *out = new cbf_schema{default_schema()}; });
}

cbf_status cbf_schema_load(const char* path, cbf_schema** out) {
    if (!path || !out)
        return invalid("path and out must be non-NULL");
    return guarded([&] { *out = new cbf_schema{AttributeSchema::load_file(path)}; });
}

void cbf_schema_destroy(cbf_schema* schema) {
    delete schema;
}

size_t cbf_schema_attribute_count(const cbf_schema* schema) {
    return schema ? schema->value.attribute_count() : 0;
}

size_t cbf_schema_pair_count(const cbf_schema* schema) {
    return schema ? schema->value.pair_count() : 0;
}

cbf_status cbf_extract_attributes(const cbf_schema* schema, const uint8_t* data, size_t len,
                                  int64_t* values, size_t capacity) {
    if (!schema || !data || !values)
        return invalid("schema, data, and values must be non-NULL");
    return guarded([&] {
        if (capacity < schema->value.attribute_count())
            fail(Status::InvalidArgument, "values capacity below attribute count");
        const auto attrs = extract_attributes(parse_ipv4({data, len}), schema->value);
        std::memcpy(values, attrs.data(), attrs.size() * sizeof(int64_t));
    });
}

cbf_status cbf_profile_create(const cbf_schema* schema, double window_seconds,
                              uint64_t window_packets, double decay, cbf_profile** out) {
    if (!schema || !out)
        return invalid("schema and out must be non-NULL");
    return guarded([&] {
        *out = new cbf_profile{ConfidenceProfile(
            schema->value, make_profile_config(window_seconds, window_packets, decay))};
    });
}

void cbf_profile_destroy(cbf_profile* profile) {
    delete profile;
}

cbf_status cbf_profile_observe(cbf_profile* profile, const int64_t* values, size_t count,
                               double ts) {
    if (!profile || !values)
        return invalid("profile and values must be non-NULL");
    return guarded([&] {
        profile->value.observe(AttributeVector(values, values + count), ts);
    });
}

cbf_status cbf_profile_observe_packet(cbf_profile* profile, const uint8_t* data, size_t len,
                                      double ts) {
    if (!profile || !data)
        return invalid("profile and data must be non-NULL");
    return guarded([&] {
        const auto attrs = extract_attributes(parse_ipv4({data, len}), profile->value.schema());
        profile->value.observe(attrs, ts);
    });
}

cbf_status cbf_profile_close_window(cbf_profile* profile) {
    if (!profile)
        return invalid("profile must be non-NULL");
    return guarded([&] { profile->value.close_window(); });
}

cbf_status cbf_profile_conf_single(const cbf_profile* profile, size_t attribute, int64_t value,
                                   double* out) {
    if (!profile || !out)
        return invalid("profile and out must be non-NULL");
    return guarded([&] { *out = profile->value.conf_single(attribute, value); });
}

cbf_status cbf_profile_conf_pair(const cbf_profile* profile, size_t pair, int64_t v_first,
                                 int64_t v_second, double* out) {
    if (!profile || !out)
        return invalid("profile and out must be non-NULL");
    return guarded([&] { *out = profile->value.conf_pair(pair, v_first, v_second); });
}

cbf_status cbf_profile_score(const cbf_profile* profile, const int64_t* values, size_t count,
                             double* out) {
    if (!profile || !values || !out)
        return invalid("profile, values, and out must be non-NULL");
    return guarded([&] {
        *out = profile->value.score(AttributeVector(values, values + count));
    });
}

double cbf_profile_total(const cbf_profile* profile) {
    return profile ? profile->value.total() : 0.0;
}

uint64_t cbf_profile_windows_closed(const cbf_profile* profile) {
    return profile ? profile->value.windows_closed() : 0;
}

cbf_status cbf_profile_save(const cbf_profile* profile, const char* path) {
    if (!profile || !path)
        return invalid("profile and path must be non-NULL");
    return guarded([&] { profile->value.save(path); });
}

cbf_status cbf_profile_load(const char* path, cbf_profile** out) {
    if (!path || !out)
        return invalid("path and out must be non-NULL");
    return guarded([&] { *out = new cbf_profile{ConfidenceProfile::load(path)}; });
}

cbf_status cbf_engine_create(const cbf_profile* profile, const cbf_engine_options* options,
                             cbf_engine** out) {
    if (!profile || !out)
        return invalid("profile and out must be non-NULL");
    return guarded([&] {
        *out = new cbf_engine{FilterEngine(profile->value, make_engine_options(options))};
    });
}

void cbf_engine_destroy(cbf_engine* engine) {
    delete engine;
}

cbf_status cbf_engine_set_period(cbf_engine* engine, cbf_period period, double ts) {
    if (!engine)
        return invalid("engine must be non-NULL");
    return guarded([&] {
        engine->value.set_period(
            period == CBF_PERIOD_ATTACK ? PeriodKind::Attack : PeriodKind::NonAttack, ts);
    });
}

cbf_status cbf_engine_process(cbf_engine* engine, const uint8_t* data, size_t len, double ts,
                              cbf_decision* out_decision, uint8_t* out_packet,
                              size_t out_capacity, size_t* out_packet_len) {
    if (!engine || !data || !out_decision)
        return invalid("engine, data, and out_decision must be non-NULL");
    return guarded([&] {
        const auto result = engine->value.process({data, len}, ts);
        out_decision->verdict = int(result.decision.verdict);
        out_decision->score = result.decision.score;
        out_decision->period = int(result.decision.period);
        out_decision->rewritten = result.decision.rewritten ? 1 : 0;
        out_decision->has_threshold = result.decision.threshold ? 1 : 0;
        out_decision->threshold = result.decision.threshold.value_or(0.0);
        if (out_packet_len)
            *out_packet_len = result.packet.size();
        if (out_packet && !result.packet.empty()) {
            if (out_capacity < result.packet.size())
                fail(Status::InvalidArgument, "output capacity below rewritten packet size");
            std::memcpy(out_packet, result.packet.data(), result.packet.size());
        }
    });
}

cbf_status cbf_engine_reset(cbf_engine* engine) {
    if (!engine)
        return invalid("engine must be non-NULL");
    return guarded([&] { engine->value.reset(); });
}

int cbf_engine_np(const cbf_engine* engine, double* out_np) {
    if (!engine || !engine->value.nominal().np)
        return 0;
    if (out_np)
        *out_np = *engine->value.nominal().np;
    return 1;
}

cbf_status cbf_engine_save(const cbf_engine* engine, const char* path) {
    if (!engine || !path)
        return invalid("engine and path must be non-NULL");
    return guarded([&] { engine->value.save(path); });
}

cbf_status cbf_engine_load(const char* path, cbf_engine** out) {
    if (!path || !out)
        return invalid("path and out must be non-NULL");
    return guarded([&] { *out = new cbf_engine{FilterEngine::load(path)}; });
}

cbf_status cbf_run_gen(const cbf_gen_options* options, const char* out_csv) {
    if (!options || !out_csv)
        return invalid("options and out_csv must be non-NULL");
    return guarded([&] {
        GeneratorConfig config;
        config.mode = parse_gen_mode(options->mode);
        config.mimic_k = options->mimic_k;
        config.count = options->count;
        config.seed = options->seed;
        if (options->rate > 0.0)
            config.rate = options->rate;
        run_gen(config, out_csv, options->pcap_path ? options->pcap_path : "");
    });
}

cbf_status cbf_run_train(const char* in_trace, const char* out_profile,
                         const cbf_train_options* options, cbf_train_summary* out_summary) {
    if (!in_trace || !out_profile)
        return invalid("in_trace and out_profile must be non-NULL");
    return guarded([&] {
        TrainOptions opts;
        if (options) {
            if (options->schema_path)
                opts.schema_path = options->schema_path;
            opts.profile = make_profile_config(options->window_seconds, options->window_packets,
                                               options->decay);
            opts.strict_checksum = options->strict_checksum != 0;
        }
        const TrainSummary s = run_train(in_trace, out_profile, opts);
        if (out_summary)
            *out_summary = {s.records, s.windows_closed, s.n_total};
    });
}

cbf_status cbf_run_filter(const char* in_trace, const char* out_decisions,
                          const cbf_filter_options* options, cbf_filter_summary* out_summary) {
    if (!in_trace || !out_decisions || !options)
        return invalid("in_trace, out_decisions, and options must be non-NULL");
    return guarded([&] {
        FilterOptions opts;
        if (options->profile_path)
            opts.profile_path = options->profile_path;
        if (options->engine_in)
            opts.engine_in = options->engine_in;
        if (options->periods_path)
            opts.periods_path = options->periods_path;
        else
            fail(Status::InvalidConfig, "a periods file is required");
        if (options->rewrite_pcap)
            opts.rewrite_pcap = options->rewrite_pcap;
        if (options->engine_out)
            opts.engine_out = options->engine_out;
        opts.engine.strategy = options->threshold_strategy == CBF_THRESHOLD_PERCENTILE
                                   ? ThresholdStrategy::Percentile
                                   : ThresholdStrategy::Min;
        opts.engine.percentile = options->percentile;
        opts.engine.np_reset_on_nonattack = options->np_reset_on_nonattack != 0;
        opts.strict_checksum = options->strict_checksum != 0;
        const FilterSummary s = run_filter(in_trace, out_decisions, opts);
        if (out_summary)
            *out_summary = {s.packets, s.accepted, s.discarded, s.rewritten, s.skipped};
    });
}

cbf_status cbf_run_eval(const char* decisions_csv, const char* report_json,
                        const char* histogram_csv) {
    if (!decisions_csv || !report_json)
        return invalid("decisions_csv and report_json must be non-NULL");
    return guarded([&] {
        run_eval(decisions_csv, report_json, histogram_csv ? histogram_csv : "");
    });
}

cbf_status cbf_run_inspect(const char* path, char** out_text) {
    if (!path || !out_text)
        return invalid("path and out_text must be non-NULL");
    return guarded([&] {
        const std::string text = run_inspect(path);
        char* buf = new char[text.size() + 1];
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *out_text = buf;
    });
}

void cbf_string_free(char* text) {
    delete[] text;
}

} // extern "C"
