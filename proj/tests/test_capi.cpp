// Exercises the shared-library C surface the CLI is built on.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "cbf/cbf.h"
#include "test_util.hpp"

namespace {

// A 20-byte TCP/IP packet with a valid checksum plus a full TCP header.
std::vector<uint8_t> sample_packet() {
    testutil::HeaderSpec spec;
    spec.protocol = 6;
    spec.ttl = 64;
    spec.src_addr = 0x0A010203;
    spec.payload = {0x9C, 0x40, 0x00, 0x50, 0, 0, 0, 0, 0, 0, 0, 0,
                    0x50, 0x18, 0xFF, 0xFF, 0, 0, 0, 0};
    return testutil::make_packet(spec);
}

} // namespace

TEST_CASE("status names and version string") {
    CHECK(std::string(cbf_status_name(CBF_OK)) == "ok");
    CHECK(std::string(cbf_status_name(CBF_E_THRESHOLD_UNSET)) == "threshold_unset");
    CHECK(std::string(cbf_version()).find('.') != std::string::npos);
}

TEST_CASE("parse, extract, rewrite, decode through the C API") {
    const auto pkt = sample_packet();

    cbf_parsed_packet parsed{};
    REQUIRE(cbf_parse_ipv4(pkt.data(), pkt.size(), 1, &parsed) == CBF_OK);
    CHECK(parsed.version == 4);
    CHECK(parsed.ihl == 5);
    CHECK(parsed.checksum_valid == 1);
    CHECK(parsed.has_ports == 1);
    CHECK(parsed.src_port == 40000);
    CHECK(parsed.dst_port == 80);
    CHECK(parsed.has_tcp_flags == 1);
    CHECK(parsed.tcp_flags == 0x18);

    // Failure paths set a status and a message.
    cbf_parsed_packet scratch{};
    const cbf_status bad = cbf_parse_ipv4(pkt.data(), 10, 0, &scratch);
    CHECK(bad == CBF_E_TRUNCATED_HEADER);
    CHECK(std::strlen(cbf_last_error()) > 0);

    cbf_schema* schema = nullptr;
    REQUIRE(cbf_schema_create_default(&schema) == CBF_OK);
    CHECK(cbf_schema_attribute_count(schema) == 7);
    CHECK(cbf_schema_pair_count(schema) == 21);

    int64_t values[7] = {};
    REQUIRE(cbf_extract_attributes(schema, pkt.data(), pkt.size(), values, 7) == CBF_OK);
    CHECK(values[0] == 6);
    CHECK(values[1] == 64);
    CHECK(values[3] == 80);

    uint8_t option[4] = {};
    REQUIRE(cbf_encode_confidence_option(0.5, option) == CBF_OK);
    CHECK(option[0] == 0x5E);
    CHECK(option[1] == 0x04);
    CHECK(cbf_encode_confidence_option(1.5, option) == CBF_E_OUT_OF_RANGE);

    std::vector<uint8_t> rewritten(pkt.size() + 4);
    size_t out_len = 0;
    REQUIRE(cbf_rewrite_with_confidence(pkt.data(), pkt.size(), 0.25, rewritten.data(),
                                        rewritten.size(), &out_len) == CBF_OK);
    CHECK(out_len == pkt.size() + 4);

    cbf_parsed_packet reparsed{};
    REQUIRE(cbf_parse_ipv4(rewritten.data(), out_len, 1, &reparsed) == CBF_OK);
    CHECK(reparsed.ihl == 6);

    int present = 0;
    double confidence = 0.0;
    REQUIRE(cbf_decode_confidence_option(reparsed.options, reparsed.options_len, &present,
                                         &confidence) == CBF_OK);
    CHECK(present == 1);
    CHECK(std::abs(confidence - 0.25) <= 1.0 / 131070.0);

    cbf_schema_destroy(schema);
}

TEST_CASE("profile handle lifecycle, scoring, and persistence") {
    testutil::TempDir tmp;
    cbf_schema* schema = nullptr;
    REQUIRE(cbf_schema_create_default(&schema) == CBF_OK);
    cbf_profile* profile = nullptr;
    REQUIRE(cbf_profile_create(schema, 0, 0, 0, &profile) == CBF_OK);

    const auto pkt = sample_packet();
    for (int i = 0; i < 4; ++i)
        REQUIRE(cbf_profile_observe_packet(profile, pkt.data(), pkt.size(), double(i)) == CBF_OK);
    REQUIRE(cbf_profile_close_window(profile) == CBF_OK);
    CHECK(cbf_profile_total(profile) == 4.0);
    CHECK(cbf_profile_windows_closed(profile) == 1);

    double conf = 0.0;
    REQUIRE(cbf_profile_conf_single(profile, 1, 64, &conf) == CBF_OK);
    CHECK(conf == 1.0);
    REQUIRE(cbf_profile_conf_pair(profile, 0, 6, 64, &conf) == CBF_OK);
    CHECK(conf == 1.0);
    CHECK(cbf_profile_conf_pair(profile, 21, 6, 64, &conf) == CBF_E_UNKNOWN_PAIR);

    int64_t values[7] = {};
    REQUIRE(cbf_extract_attributes(schema, pkt.data(), pkt.size(), values, 7) == CBF_OK);
    double score = 0.0;
    REQUIRE(cbf_profile_score(profile, values, 7, &score) == CBF_OK);
    CHECK(score == 1.0);

    const std::string path = tmp.path("profile.json");
    REQUIRE(cbf_profile_save(profile, path.c_str()) == CBF_OK);
    cbf_profile* loaded = nullptr;
    REQUIRE(cbf_profile_load(path.c_str(), &loaded) == CBF_OK);
    CHECK(cbf_profile_total(loaded) == 4.0);

    CHECK(cbf_profile_load(tmp.path("missing.json").c_str(), &loaded) == CBF_E_IO);

    cbf_profile_destroy(loaded);
    cbf_profile_destroy(profile);
    cbf_schema_destroy(schema);
}

TEST_CASE("engine handle drives the period state machine") {
    testutil::TempDir tmp;
    cbf_schema* schema = nullptr;
    REQUIRE(cbf_schema_create_default(&schema) == CBF_OK);
    cbf_profile* profile = nullptr;
    REQUIRE(cbf_profile_create(schema, 0, 0, 0, &profile) == CBF_OK);
    const auto pkt = sample_packet();
    for (int i = 0; i < 3; ++i)
        REQUIRE(cbf_profile_observe_packet(profile, pkt.data(), pkt.size(), double(i)) == CBF_OK);
    REQUIRE(cbf_profile_close_window(profile) == CBF_OK);

    cbf_engine* engine = nullptr;
    REQUIRE(cbf_engine_create(profile, nullptr, &engine) == CBF_OK);

    double np = -1.0;
    CHECK(cbf_engine_np(engine, &np) == 0);

    REQUIRE(cbf_engine_set_period(engine, CBF_PERIOD_NONATTACK, 0.0) == CBF_OK);
    cbf_decision decision{};
    std::vector<uint8_t> out(pkt.size() + 4);
    size_t out_len = 0;
    REQUIRE(cbf_engine_process(engine, pkt.data(), pkt.size(), 0.0, &decision, out.data(),
                               out.size(), &out_len) == CBF_OK);
    CHECK(decision.verdict == CBF_VERDICT_ACCEPT);
    CHECK(decision.rewritten == 1);
    CHECK(decision.score == 1.0);
    CHECK(out_len == pkt.size() + 4);
    CHECK(cbf_engine_np(engine, &np) == 1);
    CHECK(np == 1.0);

    REQUIRE(cbf_engine_set_period(engine, CBF_PERIOD_ATTACK, 1.0) == CBF_OK);
    REQUIRE(cbf_engine_process(engine, pkt.data(), pkt.size(), 1.0, &decision, out.data(),
                               out.size(), &out_len) == CBF_OK);
    CHECK(decision.period == CBF_PERIOD_ATTACK);
    CHECK(decision.has_threshold == 1);
    CHECK(decision.threshold == 1.0);
    CHECK(decision.verdict == CBF_VERDICT_ACCEPT); // tie accepted

    const std::string snap = tmp.path("engine.json");
    REQUIRE(cbf_engine_save(engine, snap.c_str()) == CBF_OK);
    cbf_engine* restored = nullptr;
    REQUIRE(cbf_engine_load(snap.c_str(), &restored) == CBF_OK);
    CHECK(cbf_engine_np(restored, &np) == 1);

    REQUIRE(cbf_engine_reset(engine) == CBF_OK);
    CHECK(cbf_engine_np(engine, &np) == 0);
    REQUIRE(cbf_engine_set_period(engine, CBF_PERIOD_ATTACK, 0.0) == CBF_OK);
    CHECK(cbf_engine_process(engine, pkt.data(), pkt.size(), 0.1, &decision, nullptr, 0,
                             nullptr) == CBF_E_THRESHOLD_UNSET);

    cbf_engine_destroy(restored);
    cbf_engine_destroy(engine);
    cbf_profile_destroy(profile);
    cbf_schema_destroy(schema);
}

TEST_CASE("pipeline commands through the C API") {
    testutil::TempDir tmp;
    const std::string trace = tmp.path("t.csv");
    const std::string profile = tmp.path("p.json");
    const std::string periods = tmp.path("periods.csv");
    const std::string decisions = tmp.path("d.csv");
    const std::string report = tmp.path("r.json");

    cbf_gen_options gen{};
    gen.mode = "legit";
    gen.count = 200;
    gen.seed = 42;
    gen.rate = 1000.0;
    REQUIRE(cbf_run_gen(&gen, trace.c_str()) == CBF_OK);

    cbf_gen_options bad_gen = gen;
    bad_gen.mode = "zergrush";
    CHECK(cbf_run_gen(&bad_gen, trace.c_str()) == CBF_E_INVALID_CONFIG);

    cbf_train_summary summary{};
    REQUIRE(cbf_run_train(trace.c_str(), profile.c_str(), nullptr, &summary) == CBF_OK);
    CHECK(summary.records == 200);
    CHECK(summary.n_total == 200.0);

    testutil::write_file(periods, "start_ts,end_ts,period\n0.000000,1.000000,nonattack\n");
    cbf_filter_options filter{};
    filter.profile_path = profile.c_str();
    filter.periods_path = periods.c_str();
    cbf_filter_summary fsummary{};
    REQUIRE(cbf_run_filter(trace.c_str(), decisions.c_str(), &filter, &fsummary) == CBF_OK);
    CHECK(fsummary.packets == 200);
    CHECK(fsummary.discarded == 0);
    CHECK(fsummary.rewritten == 200);

    REQUIRE(cbf_run_eval(decisions.c_str(), report.c_str(), nullptr) == CBF_OK);

    char* text = nullptr;
    REQUIRE(cbf_run_inspect(profile.c_str(), &text) == CBF_OK);
    REQUIRE(text != nullptr);
    CHECK(std::string(text).find("N_n = 200") != std::string::npos);
    cbf_string_free(text);

    // NULL-argument contract.
    CHECK(cbf_run_gen(nullptr, trace.c_str()) == CBF_E_INVALID_ARGUMENT);
    CHECK(cbf_run_train(nullptr, profile.c_str(), nullptr, nullptr) == CBF_E_INVALID_ARGUMENT);
}
