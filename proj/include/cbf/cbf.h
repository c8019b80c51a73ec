/*
 * cbf — confidence-based packet filtering library.
 *
 * C interface over the C++ core: opaque handles, status-code returns, and
 * the pipeline entry points the cbf command-line tool is built on. All
 * functions returning cbf_status leave a human-readable detail message in
 * thread-local storage, retrievable with cbf_last_error() until the next
 * failing call on the same thread.
 *
 * Handles are single-owner and not internally synchronized: a schema,
 * profile, or engine may be used from one thread at a time (or moved between
 * threads). The buffer-level packet helpers are pure and thread-safe.
 */

#ifndef CBF_CBF_H
#define CBF_CBF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef CBF_BUILD
#    define CBF_API __declspec(dllexport)
#  else
#    define CBF_API __declspec(dllimport)
#  endif
#else
#  define CBF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cbf_status {
    CBF_OK = 0,
    CBF_E_INVALID_ARGUMENT = 1,
    CBF_E_TRUNCATED_HEADER = 2,
    CBF_E_NOT_IPV4 = 3,
    CBF_E_BAD_CHECKSUM = 4,
    CBF_E_NO_HEADER_ROOM = 5,
    CBF_E_MALFORMED_OPTIONS = 6,
    CBF_E_OUT_OF_RANGE = 7,
    CBF_E_EMPTY_PROFILE = 8,
    CBF_E_SCHEMA_MISMATCH = 9,
    CBF_E_UNKNOWN_PAIR = 10,
    CBF_E_THRESHOLD_UNSET = 11,
    CBF_E_PARSE = 12,
    CBF_E_NON_MONOTONE_TIMESTAMP = 13,
    CBF_E_VERSION_MISMATCH = 14,
    CBF_E_CORRUPT_DOCUMENT = 15,
    CBF_E_BAD_MAGIC = 16,
    CBF_E_TRUNCATED_RECORD = 17,
    CBF_E_INVALID_CONFIG = 18,
    CBF_E_IO = 19,
    CBF_E_INTERNAL = 20
} cbf_status;

CBF_API const char* cbf_status_name(cbf_status status);
CBF_API const char* cbf_last_error(void);
CBF_API const char* cbf_version(void);

/* ------------------------------------------------------------------ */
/* Packet-level operations (pure, buffer in / buffer out)             */
/* ------------------------------------------------------------------ */

typedef struct cbf_parsed_packet {
    uint8_t version;
    uint8_t ihl;       /* 32-bit words */
    uint8_t tos;
    uint16_t total_length;
    uint16_t identification;
    uint8_t flags;     /* 3 bits */
    uint16_t fragment_offset;
    uint8_t ttl;
    uint8_t protocol;
    uint16_t checksum;
    uint32_t src_addr; /* host order */
    uint32_t dst_addr;
    int checksum_valid;
    int has_ports;
    uint16_t src_port;
    uint16_t dst_port;
    int has_tcp_flags;
    uint8_t tcp_flags;
    uint8_t options[40];
    uint8_t options_len;
} cbf_parsed_packet;

/* Parse an IPv4 header plus TCP/UDP port summary. With strict_checksum the
 * call fails on an invalid header checksum; otherwise validity is only
 * reported through checksum_valid. */
CBF_API cbf_status cbf_parse_ipv4(const uint8_t* data, size_t len, int strict_checksum,
                                  cbf_parsed_packet* out);

/* Quantize a confidence in [0,1] into the 4-octet option (type 0x5E, length
 * 4, big-endian Q0.16 payload). */
CBF_API cbf_status cbf_encode_confidence_option(double confidence, uint8_t out[4]);

/* Scan an options region for the confidence option. *present is 0 when the
 * option is absent (confidence untouched). */
CBF_API cbf_status cbf_decode_confidence_option(const uint8_t* options, size_t len,
                                                int* present, double* confidence);

/* Append the confidence option to the packet in data: IHL+1, total_length+4,
 * checksum recomputed, payload untouched. out needs capacity len+4;
 * *out_len receives the rewritten size. */
CBF_API cbf_status cbf_rewrite_with_confidence(const uint8_t* data, size_t len,
                                               double confidence, uint8_t* out,
                                               size_t out_capacity, size_t* out_len);

/* ------------------------------------------------------------------ */
/* Attribute schema                                                   */
/* ------------------------------------------------------------------ */

typedef struct cbf_schema cbf_schema;

/* Attribute value reserved for fields the packet does not carry. */
#define CBF_VALUE_NONE (-1)

CBF_API cbf_status cbf_schema_create_default(cbf_schema** out);
CBF_API cbf_status cbf_schema_load(const char* path, cbf_schema** out);
CBF_API void cbf_schema_destroy(cbf_schema* schema);
CBF_API size_t cbf_schema_attribute_count(const cbf_schema* schema);
CBF_API size_t cbf_schema_pair_count(const cbf_schema* schema);

/* Discretize one packet into its attribute vector; values must have room for
 * cbf_schema_attribute_count entries. */
CBF_API cbf_status cbf_extract_attributes(const cbf_schema* schema, const uint8_t* data,
                                          size_t len, int64_t* values, size_t capacity);

/* ------------------------------------------------------------------ */
/* Confidence profile                                                 */
/* ------------------------------------------------------------------ */

typedef struct cbf_profile cbf_profile;

/* window_seconds <= 0, window_packets == 0, or decay <= 0 select the
 * defaults (60 s, 10000 packets, 1.0). */
CBF_API cbf_status cbf_profile_create(const cbf_schema* schema, double window_seconds,
                                      uint64_t window_packets, double decay,
                                      cbf_profile** out);
CBF_API void cbf_profile_destroy(cbf_profile* profile);

/* Count an attribute vector (or a raw packet) into the open window; pass a
 * NaN ts to use packet-count windowing. */
CBF_API cbf_status cbf_profile_observe(cbf_profile* profile, const int64_t* values,
                                       size_t count, double ts);
CBF_API cbf_status cbf_profile_observe_packet(cbf_profile* profile, const uint8_t* data,
                                              size_t len, double ts);
CBF_API cbf_status cbf_profile_close_window(cbf_profile* profile);

CBF_API cbf_status cbf_profile_conf_single(const cbf_profile* profile, size_t attribute,
                                           int64_t value, double* out);
CBF_API cbf_status cbf_profile_conf_pair(const cbf_profile* profile, size_t pair,
                                         int64_t v_first, int64_t v_second, double* out);
CBF_API cbf_status cbf_profile_score(const cbf_profile* profile, const int64_t* values,
                                     size_t count, double* out);

CBF_API double cbf_profile_total(const cbf_profile* profile);
CBF_API uint64_t cbf_profile_windows_closed(const cbf_profile* profile);

CBF_API cbf_status cbf_profile_save(const cbf_profile* profile, const char* path);
CBF_API cbf_status cbf_profile_load(const char* path, cbf_profile** out);

/* ------------------------------------------------------------------ */
/* Filter engine                                                      */
/* ------------------------------------------------------------------ */

typedef struct cbf_engine cbf_engine;

typedef enum cbf_period { CBF_PERIOD_NONATTACK = 0, CBF_PERIOD_ATTACK = 1 } cbf_period;
typedef enum cbf_verdict { CBF_VERDICT_ACCEPT = 0, CBF_VERDICT_DISCARD = 1 } cbf_verdict;
typedef enum cbf_threshold_strategy {
    CBF_THRESHOLD_MIN = 0,       /* nominal profile = running minimum score */
    CBF_THRESHOLD_PERCENTILE = 1 /* extension: nearest-rank percentile */
} cbf_threshold_strategy;

typedef struct cbf_engine_options {
    int threshold_strategy;    /* cbf_threshold_strategy */
    double percentile;         /* (0,1], percentile strategy only */
    int np_reset_on_nonattack; /* clear NP when a non-attack period starts */
} cbf_engine_options;

typedef struct cbf_decision {
    int verdict; /* cbf_verdict */
    double score;
    int period;  /* cbf_period */
    int rewritten;
    int has_threshold;
    double threshold;
} cbf_decision;

/* The engine copies the profile; options may be NULL for defaults. */
CBF_API cbf_status cbf_engine_create(const cbf_profile* profile,
                                     const cbf_engine_options* options, cbf_engine** out);
CBF_API void cbf_engine_destroy(cbf_engine* engine);

CBF_API cbf_status cbf_engine_set_period(cbf_engine* engine, cbf_period period, double ts);

/* Process one packet under the declared period. out_packet (capacity len+4)
 * receives the forwarded bytes — rewritten in non-attack periods — and may
 * be NULL when the caller only needs the decision. *out_packet_len is 0 for
 * discarded packets. */
CBF_API cbf_status cbf_engine_process(cbf_engine* engine, const uint8_t* data, size_t len,
                                      double ts, cbf_decision* out_decision,
                                      uint8_t* out_packet, size_t out_capacity,
                                      size_t* out_packet_len);

CBF_API cbf_status cbf_engine_reset(cbf_engine* engine);

/* Returns 1 and stores the nominal profile when it is set, else 0. */
CBF_API int cbf_engine_np(const cbf_engine* engine, double* out_np);

CBF_API cbf_status cbf_engine_save(const cbf_engine* engine, const char* path);
CBF_API cbf_status cbf_engine_load(const char* path, cbf_engine** out);

/* ------------------------------------------------------------------ */
/* Pipeline commands (the CLI surface)                                */
/* ------------------------------------------------------------------ */

typedef struct cbf_gen_options {
    const char* mode; /* "legit" | "attack-random" | "attack-mimic" */
    uint32_t mimic_k;
    uint64_t count;
    uint64_t seed;
    double rate;            /* packets per second; <= 0 selects 1000 */
    const char* pcap_path;  /* optional additional pcap output, may be NULL */
} cbf_gen_options;

CBF_API cbf_status cbf_run_gen(const cbf_gen_options* options, const char* out_csv);

typedef struct cbf_train_options {
    const char* schema_path; /* NULL for the default 7-attribute schema */
    double window_seconds;   /* <= 0 selects 60 */
    uint64_t window_packets; /* 0 selects 10000 */
    double decay;            /* <= 0 selects 1.0 */
    int strict_checksum;
} cbf_train_options;

typedef struct cbf_train_summary {
    uint64_t records;
    uint64_t windows_closed;
    double n_total;
} cbf_train_summary;

CBF_API cbf_status cbf_run_train(const char* in_trace, const char* out_profile,
                                 const cbf_train_options* options,
                                 cbf_train_summary* out_summary);

typedef struct cbf_filter_options {
    const char* profile_path; /* required unless engine_in is given */
    const char* engine_in;    /* resume from an engine snapshot, may be NULL */
    const char* periods_path; /* required */
    const char* rewrite_pcap; /* optional rewritten-packet pcap, may be NULL */
    const char* engine_out;   /* optional snapshot of the final engine state */
    int threshold_strategy;   /* cbf_threshold_strategy */
    double percentile;
    int np_reset_on_nonattack;
    int strict_checksum;
} cbf_filter_options;

typedef struct cbf_filter_summary {
    uint64_t packets;
    uint64_t accepted;
    uint64_t discarded;
    uint64_t rewritten;
    uint64_t skipped;
} cbf_filter_summary;

CBF_API cbf_status cbf_run_filter(const char* in_trace, const char* out_decisions,
                                  const cbf_filter_options* options,
                                  cbf_filter_summary* out_summary);

/* histogram_csv may be NULL: <report stem>.hist.csv is written next to the
 * report. */
CBF_API cbf_status cbf_run_eval(const char* decisions_csv, const char* report_json,
                                const char* histogram_csv);

/* Human-readable dump of a profile document or engine snapshot. The returned
 * string is owned by the caller; release it with cbf_string_free. */
CBF_API cbf_status cbf_run_inspect(const char* path, char** out_text);
CBF_API void cbf_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* CBF_CBF_H */
