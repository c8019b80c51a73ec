#ifndef CBF_PROFILE_HPP
#define CBF_PROFILE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <tuple>

#include <nlohmann/json_fwd.hpp>

#include "schema.hpp"

namespace cbf {

inline constexpr int kProfileDocVersion = 1;

// Per-interval counts. Counts are kept as doubles so decayed aggregates stay
// exact representations of what close_window computed; undecayed counts remain
// integers well below 2^53.
struct WindowCounter {
    double n_total = 0.0;
    std::map<std::pair<std::uint32_t, AttrValue>, double> singles;
    std::map<std::tuple<std::uint32_t, AttrValue, AttrValue>, double> pairs;
    bool started = false;
    double start_ts = std::numeric_limits<double>::quiet_NaN();

    bool empty() const { return n_total == 0.0; }
    void clear();
    bool operator==(const WindowCounter& other) const {
        return n_total == other.n_total && singles == other.singles && pairs == other.pairs;
    }
};

struct ProfileConfig {
    double window_seconds = 60.0;   // tumbling window span for timestamped input
    std::uint64_t window_packets = 10000; // fallback when observations carry no ts
    double decay = 1.0;             // lambda in (0,1] applied to cumulative at close
};

// Correlation-pattern confidence profile. Observations land in the open
// window; confidence and score queries are answered from the cumulative
// aggregate only, so learning becomes visible at window close.
class ConfidenceProfile {
public:
    explicit ConfidenceProfile(AttributeSchema schema, ProfileConfig config = {});

    // Counts the packet in the open window, closing it first if ts crosses
    // the window boundary (or the packet budget, for NaN timestamps).
    void observe(const AttributeVector& values, double ts);

    // cumulative <- decay*cumulative + open_window, then open window resets.
    void close_window();

    double conf_single(std::size_t attribute, AttrValue value) const;
    double conf_pair(std::size_t pair_index, AttrValue v_first, AttrValue v_second) const;

    // Weighted mean of pair confidences over the schema pair set.
    double score(const AttributeVector& values) const;

    bool empty() const { return cumulative_.n_total <= 0.0; }
    double total() const { return cumulative_.n_total; }
    std::uint64_t windows_closed() const { return windows_closed_; }
    const AttributeSchema& schema() const { return schema_; }
    const ProfileConfig& config() const { return config_; }
    const WindowCounter& cumulative() const { return cumulative_; }
    const WindowCounter& open_window() const { return open_; }

    // Portable profile document; open-window contents are only serialized when
    // include_open is set (engine snapshots) and must be empty otherwise.
    nlohmann::json to_json(bool include_open = false) const;
    static ConfidenceProfile from_json(const nlohmann::json& j, ProfileConfig config = {});

    void save(const std::string& path) const;
    static ConfidenceProfile load(const std::string& path, ProfileConfig config = {});

    bool operator==(const ConfidenceProfile& other) const {
        return schema_ == other.schema_ && cumulative_ == other.cumulative_ &&
               open_ == other.open_ && windows_closed_ == other.windows_closed_ &&
               config_.decay == other.config_.decay;
    }

private:
    void check_values(const AttributeVector& values) const;

    AttributeSchema schema_;
    ProfileConfig config_;
    WindowCounter cumulative_;
    WindowCounter open_;
    std::uint64_t windows_closed_ = 0;
};

} // namespace cbf

#endif
