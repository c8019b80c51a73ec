#include "error.hpp"

namespace cbf {

const char* status_name(Status s) {
    switch (s) {
    case Status::Ok: return "ok";
    case Status::InvalidArgument: return "invalid_argument";
    case Status::TruncatedHeader: return "truncated_header";
    case Status::NotIpv4: return "not_ipv4";
    case Status::BadChecksum: return "bad_checksum";
    case Status::NoHeaderRoom: return "no_header_room";
    case Status::MalformedOptions: return "malformed_options";
    case Status::OutOfRange: return "out_of_range";
    case Status::EmptyProfile: return "empty_profile";
    case Status::SchemaMismatch: return "schema_mismatch";
    case Status::UnknownPair: return "unknown_pair";
    case Status::ThresholdUnset: return "threshold_unset";
    case Status::Parse: return "parse_error";
    case Status::NonMonotoneTimestamp: return "non_monotone_timestamp";
    case Status::VersionMismatch: return "version_mismatch";
    case Status::CorruptDocument: return "corrupt_document";
    case Status::BadMagic: return "bad_magic";
    case Status::TruncatedRecord: return "truncated_record";
    case Status::InvalidConfig: return "invalid_config";
    case Status::Io: return "io_error";
    case Status::Internal: return "internal_error";
    }
    return "unknown";
}

} // namespace cbf
