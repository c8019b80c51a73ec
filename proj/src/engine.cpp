#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "packet.hpp"

namespace cbf {

FilterEngine::FilterEngine(ConfidenceProfile profile, EngineOptions options)
    : profile_(std::move(profile)), options_(options) {
    if (options_.strategy == ThresholdStrategy::Percentile &&
        !(options_.percentile > 0.0 && options_.percentile <= 1.0))
        fail(Status::InvalidConfig, "percentile must be in (0,1]");
}

double FilterEngine::score_or_bootstrap(const AttributeVector& values) const {
    // With nothing learned yet every packet is treated as fully confident;
    // anything else would poison the NP minimum.
    if (profile_.empty())
        return 1.0;
    return profile_.score(values);
}

std::optional<double> FilterEngine::compute_threshold() const {
    if (options_.strategy == ThresholdStrategy::Min)
        return np_.np;
    if (nonattack_scores_.empty())
        return std::nullopt;
    // Nearest-rank percentile over all non-attack scores seen so far.
    std::vector<double> sorted(nonattack_scores_);
    std::sort(sorted.begin(), sorted.end());
    const auto rank = std::size_t(std::ceil(options_.percentile * double(sorted.size())));
    return sorted[std::max<std::size_t>(rank, 1) - 1];
}

void FilterEngine::set_period(PeriodKind kind, double ts) {
    if (kind == PeriodKind::Attack) {
        threshold_ = compute_threshold();
    } else {
        threshold_.reset();
        if (options_.np_reset_on_nonattack) {
            np_ = NominalProfile{};
            nonattack_scores_.clear();
        }
    }
    period_ = kind;
    period_since_ = ts;
}

FilterEngine::ProcessResult FilterEngine::process(std::span<const std::uint8_t> bytes, double ts) {
    if (!period_)
        fail(Status::InvalidArgument, "no period declared; call set_period first");

    const ParsedPacket parsed = parse_ipv4(bytes, false);
    const AttributeVector values = extract_attributes(parsed, profile_.schema());

    ProcessResult result;
    if (*period_ == PeriodKind::NonAttack) {
        const double s = score_or_bootstrap(values);
        np_.offer(s, ts);
        if (options_.strategy == ThresholdStrategy::Percentile)
            nonattack_scores_.push_back(s);

        bool rewritten = true;
        try {
            result.packet = rewrite_with_confidence(bytes, s);
        } catch (const CbfError& e) {
            if (e.status() != Status::NoHeaderRoom)
                throw;
            result.packet.assign(bytes.begin(), bytes.end());
            rewritten = false;
        }
        profile_.observe(values, ts);
        result.decision = {Verdict::Accept, s, PeriodKind::NonAttack, rewritten, std::nullopt};
        return result;
    }

    if (!threshold_)
        fail(Status::ThresholdUnset,
             "attack period has no discarding threshold (NP was never set)");
    const double s = score_or_bootstrap(values);
    const Verdict verdict = s < *threshold_ ? Verdict::Discard : Verdict::Accept;
    if (verdict == Verdict::Accept)
        result.packet.assign(bytes.begin(), bytes.end());
    result.decision = {verdict, s, PeriodKind::Attack, false, threshold_};
    return result;
}

void FilterEngine::reset() {
    profile_ = ConfidenceProfile(profile_.schema(), profile_.config());
    period_.reset();
    period_since_ = std::numeric_limits<double>::quiet_NaN();
    np_ = NominalProfile{};
    threshold_.reset();
    nonattack_scores_.clear();
}

nlohmann::json FilterEngine::to_json() const {
    nlohmann::json j{{"engine_version", kEngineDocVersion},
                     {"profile", profile_.to_json(true)},
                     {"np", np_.np ? nlohmann::json(*np_.np) : nlohmann::json(nullptr)},
                     {"np_updates", np_.updates},
                     {"threshold",
                      threshold_ ? nlohmann::json(*threshold_) : nlohmann::json(nullptr)},
                     {"period", period_ ? nlohmann::json(period_name(*period_))
                                        : nlohmann::json(nullptr)},
                     {"options",
                      {{"threshold_strategy",
                        options_.strategy == ThresholdStrategy::Min ? "min" : "percentile"},
                       {"percentile", options_.percentile},
                       {"np_reset_on_nonattack", options_.np_reset_on_nonattack}}}};
    if (!std::isnan(np_.set_at_ts))
        j["np_set_at"] = np_.set_at_ts;
    if (!std::isnan(period_since_))
        j["period_since"] = period_since_;
    if (options_.strategy == ThresholdStrategy::Percentile)
        j["nonattack_scores"] = nonattack_scores_;
    return j;
}

FilterEngine FilterEngine::from_json(const nlohmann::json& j) {
    try {
        if (!j.contains("engine_version"))
            fail(Status::CorruptDocument, "engine document missing engine_version tag");
        if (j.at("engine_version").get<int>() != kEngineDocVersion)
            fail(Status::VersionMismatch,
                 "unsupported engine document version " + j.at("engine_version").dump());

        EngineOptions options;
        const auto& oj = j.at("options");
        options.strategy = oj.at("threshold_strategy").get<std::string>() == "percentile"
                               ? ThresholdStrategy::Percentile
                               : ThresholdStrategy::Min;
        options.percentile = oj.at("percentile").get<double>();
        options.np_reset_on_nonattack = oj.at("np_reset_on_nonattack").get<bool>();

        FilterEngine engine(ConfidenceProfile::from_json(j.at("profile")), options);
        if (!j.at("np").is_null()) {
            engine.np_.np = j.at("np").get<double>();
            engine.np_.updates = j.at("np_updates").get<std::uint64_t>();
            engine.np_.set_at_ts = j.value("np_set_at", std::numeric_limits<double>::quiet_NaN());
        }
        if (!j.at("threshold").is_null())
            engine.threshold_ = j.at("threshold").get<double>();
        if (!j.at("period").is_null())
            engine.period_ = j.at("period").get<std::string>() == "attack"
                                 ? PeriodKind::Attack
                                 : PeriodKind::NonAttack;
        engine.period_since_ = j.value("period_since", std::numeric_limits<double>::quiet_NaN());
        if (j.contains("nonattack_scores"))
            engine.nonattack_scores_ = j.at("nonattack_scores").get<std::vector<double>>();
        return engine;
    } catch (const nlohmann::json::exception& e) {
        fail(Status::CorruptDocument, std::string("engine document: ") + e.what());
    }
}

void FilterEngine::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(Status::Io, "cannot open " + path + " for writing");
    out << to_json().dump(2) << '\n';
    if (!out)
        fail(Status::Io, "failed writing engine snapshot to " + path);
}

FilterEngine FilterEngine::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Status::Io, "cannot open engine snapshot " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(Status::CorruptDocument, std::string("engine document: ") + e.what());
    }
    return from_json(j);
}

} // namespace cbf
