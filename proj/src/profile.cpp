#include "profile.hpp"

#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace cbf {

namespace {

// Integral counts serialize as JSON integers; decayed counts keep full
// double round-trip precision via the shortest-representation dump.
nlohmann::json count_to_json(double v) {
    if (v == std::floor(v) && std::abs(v) < 9007199254740992.0) // 2^53
        return nlohmann::json(std::int64_t(v));
    return nlohmann::json(v);
}

} // namespace

void WindowCounter::clear() {
    n_total = 0.0;
    singles.clear();
    pairs.clear();
    started = false;
    start_ts = std::numeric_limits<double>::quiet_NaN();
}

ConfidenceProfile::ConfidenceProfile(AttributeSchema schema, ProfileConfig config)
    : schema_(std::move(schema)), config_(config) {
    schema_.validate();
    if (!(config_.decay > 0.0 && config_.decay <= 1.0))
        fail(Status::InvalidConfig, "decay must be in (0,1]");
    if (!(config_.window_seconds > 0.0))
        fail(Status::InvalidConfig, "window_seconds must be positive");
    if (config_.window_packets == 0)
        fail(Status::InvalidConfig, "window_packets must be positive");
}

void ConfidenceProfile::check_values(const AttributeVector& values) const {
    if (values.size() != schema_.attribute_count())
        fail(Status::SchemaMismatch,
             "attribute vector has " + std::to_string(values.size()) + " values, schema has " +
                 std::to_string(schema_.attribute_count()));
}

void ConfidenceProfile::observe(const AttributeVector& values, double ts) {
    check_values(values);

    if (open_.started) {
        const bool time_boundary = !std::isnan(ts) && !std::isnan(open_.start_ts) &&
                                   ts >= open_.start_ts + config_.window_seconds;
        const bool count_boundary = std::isnan(ts) && open_.n_total >= double(config_.window_packets);
        if (time_boundary || count_boundary)
            close_window();
    }
    if (!open_.started) {
        open_.started = true;
        open_.start_ts = ts;
    }

    open_.n_total += 1.0;
    for (std::uint32_t i = 0; i < values.size(); ++i)
        open_.singles[{i, values[i]}] += 1.0;
    for (std::uint32_t k = 0; k < schema_.pairs.size(); ++k) {
        const auto& [r, s] = schema_.pairs[k];
        open_.pairs[{k, values[r], values[s]}] += 1.0;
    }
}

void ConfidenceProfile::close_window() {
    const double lambda = config_.decay;
    if (lambda != 1.0) {
        cumulative_.n_total *= lambda;
        for (auto& [key, count] : cumulative_.singles)
            count *= lambda;
        for (auto& [key, count] : cumulative_.pairs)
            count *= lambda;
    }
    cumulative_.n_total += open_.n_total;
    for (const auto& [key, count] : open_.singles)
        cumulative_.singles[key] += count;
    for (const auto& [key, count] : open_.pairs)
        cumulative_.pairs[key] += count;
    windows_closed_ += 1;
    open_.clear();
}

double ConfidenceProfile::conf_single(std::size_t attribute, AttrValue value) const {
    if (attribute >= schema_.attribute_count())
        fail(Status::SchemaMismatch, "attribute index " + std::to_string(attribute) + " out of range");
    if (empty())
        fail(Status::EmptyProfile, "no closed-window packets to compute confidence from");
    const auto it = cumulative_.singles.find({std::uint32_t(attribute), value});
    if (it == cumulative_.singles.end())
        return 0.0;
    return it->second / cumulative_.n_total;
}

double ConfidenceProfile::conf_pair(std::size_t pair_index, AttrValue v_first,
                                    AttrValue v_second) const {
    if (pair_index >= schema_.pair_count())
        fail(Status::UnknownPair, "pair index " + std::to_string(pair_index) + " out of range");
    if (empty())
        fail(Status::EmptyProfile, "no closed-window packets to compute confidence from");
    const auto it = cumulative_.pairs.find({std::uint32_t(pair_index), v_first, v_second});
    if (it == cumulative_.pairs.end())
        return 0.0;
    return it->second / cumulative_.n_total;
}

double ConfidenceProfile::score(const AttributeVector& values) const {
    check_values(values);
    if (empty())
        fail(Status::EmptyProfile, "cannot score against an empty profile");
    double acc = 0.0;
    for (std::uint32_t k = 0; k < schema_.pairs.size(); ++k) {
        const auto& [r, s] = schema_.pairs[k];
        acc += schema_.weights[k] * conf_pair(k, values[r], values[s]);
    }
    return acc / schema_.weight_sum();
}

nlohmann::json ConfidenceProfile::to_json(bool include_open) const {
    if (!include_open && !open_.empty())
        fail(Status::InvalidArgument,
             "open window not empty; close_window before saving a profile document");

    auto counter_json = [](const WindowCounter& c) {
        nlohmann::json singles = nlohmann::json::array();
        for (const auto& [key, count] : c.singles)
            singles.push_back({key.first, key.second, count_to_json(count)});
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& [key, count] : c.pairs)
            pairs.push_back(
                {std::get<0>(key), std::get<1>(key), std::get<2>(key), count_to_json(count)});
        return nlohmann::json{
            {"n_total", count_to_json(c.n_total)}, {"singles", singles}, {"pairs", pairs}};
    };

    nlohmann::json j{{"version", kProfileDocVersion},
                     {"schema", schema_.to_json()},
                     {"windows_closed", windows_closed_},
                     {"decay", config_.decay},
                     {"cumulative", counter_json(cumulative_)}};
    if (include_open) {
        j["open_window"] = counter_json(open_);
        j["open_window"]["started"] = open_.started;
        if (open_.started && !std::isnan(open_.start_ts))
            j["open_window"]["start_ts"] = open_.start_ts;
    }
    return j;
}

ConfidenceProfile ConfidenceProfile::from_json(const nlohmann::json& j, ProfileConfig config) {
    try {
        if (!j.contains("version"))
            fail(Status::CorruptDocument, "profile document missing version tag");
        if (!j.at("version").is_number_integer() ||
            j.at("version").get<int>() != kProfileDocVersion)
            fail(Status::VersionMismatch,
                 "unsupported profile document version " + j.at("version").dump());

        AttributeSchema schema = AttributeSchema::from_json(j.at("schema"));
        config.decay = j.at("decay").get<double>();
        ConfidenceProfile profile(std::move(schema), config);
        profile.windows_closed_ = j.at("windows_closed").get<std::uint64_t>();

        auto counter_from = [&profile](const nlohmann::json& cj, WindowCounter& out) {
            out.n_total = cj.at("n_total").get<double>();
            for (const auto& e : cj.at("singles")) {
                if (!e.is_array() || e.size() != 3)
                    fail(Status::CorruptDocument, "singles entries must be [i, value, count]");
                const auto attr = e[0].get<std::uint32_t>();
                if (attr >= profile.schema_.attribute_count())
                    fail(Status::CorruptDocument, "singles attribute index out of range");
                out.singles[{attr, e[1].get<AttrValue>()}] = e[2].get<double>();
            }
            for (const auto& e : cj.at("pairs")) {
                if (!e.is_array() || e.size() != 4)
                    fail(Status::CorruptDocument, "pairs entries must be [k, v_r, v_s, count]");
                const auto k = e[0].get<std::uint32_t>();
                if (k >= profile.schema_.pair_count())
                    fail(Status::CorruptDocument, "pairs index out of range");
                out.pairs[{k, e[1].get<AttrValue>(), e[2].get<AttrValue>()}] = e[3].get<double>();
            }
        };
        counter_from(j.at("cumulative"), profile.cumulative_);
        if (j.contains("open_window")) {
            const auto& ow = j.at("open_window");
            counter_from(ow, profile.open_);
            profile.open_.started = ow.value("started", !profile.open_.empty());
            profile.open_.start_ts = ow.value("start_ts",
                                              std::numeric_limits<double>::quiet_NaN());
        }
        return profile;
    } catch (const nlohmann::json::exception& e) {
        fail(Status::CorruptDocument, std::string("profile document: ") + e.what());
    }
}

void ConfidenceProfile::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(Status::Io, "cannot open " + path + " for writing");
    out << to_json().dump(2) << '\n';
    if (!out)
        fail(Status::Io, "failed writing profile to " + path);
}

ConfidenceProfile ConfidenceProfile::load(const std::string& path, ProfileConfig config) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Status::Io, "cannot open profile file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(Status::CorruptDocument, std::string("profile document: ") + e.what());
    }
    return from_json(j, config);
}

} // namespace cbf
