#ifndef CBF_ERROR_HPP
#define CBF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cbf {

// Keep numeric values in sync with cbf_status in include/cbf/cbf.h.
enum class Status : int {
    Ok = 0,
    InvalidArgument = 1,
    TruncatedHeader = 2,
    NotIpv4 = 3,
    BadChecksum = 4,
    NoHeaderRoom = 5,
    MalformedOptions = 6,
    OutOfRange = 7,
    EmptyProfile = 8,
    SchemaMismatch = 9,
    UnknownPair = 10,
    ThresholdUnset = 11,
    Parse = 12,
    NonMonotoneTimestamp = 13,
    VersionMismatch = 14,
    CorruptDocument = 15,
    BadMagic = 16,
    TruncatedRecord = 17,
    InvalidConfig = 18,
    Io = 19,
    Internal = 20,
};

const char* status_name(Status s);

class CbfError : public std::runtime_error {
public:
    CbfError(Status status, const std::string& message)
        : std::runtime_error(message), status_(status) {}

    Status status() const { return status_; }

private:
    Status status_;
};

[[noreturn]] inline void fail(Status status, const std::string& message) {
    throw CbfError(status, message);
}

} // namespace cbf

#endif
