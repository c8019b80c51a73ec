#ifndef CBF_ENGINE_HPP
#define CBF_ENGINE_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "profile.hpp"
#include "types.hpp"

namespace cbf {

inline constexpr int kEngineDocVersion = 1;

struct Decision {
    Verdict verdict = Verdict::Accept;
    double score = 0.0;
    PeriodKind period = PeriodKind::NonAttack;
    bool rewritten = false;
    std::optional<double> threshold; // only set in attack periods
};

enum class ThresholdStrategy : int { Min = 0, Percentile = 1 };

struct EngineOptions {
    ThresholdStrategy strategy = ThresholdStrategy::Min;
    double percentile = 0.0;          // rank fraction in (0,1], Percentile only
    bool np_reset_on_nonattack = false;
};

// Running minimum of non-attack scores; the value frozen as the discarding
// threshold when an attack period starts.
struct NominalProfile {
    std::optional<double> np;
    std::uint64_t updates = 0;
    double set_at_ts = std::numeric_limits<double>::quiet_NaN();

    void offer(double score, double ts) {
        if (!np || score < *np) {
            np = score;
            ++updates;
            set_at_ts = ts;
        }
    }
};

// Period-driven per-packet filter. Non-attack packets are scored against the
// cumulative profile, folded into the nominal profile, tagged with their
// confidence via header rewrite, and then observed. Attack packets are scored
// against the frozen cumulative profile and discarded below the threshold;
// the profile and NP never change while an attack period is active.
class FilterEngine {
public:
    explicit FilterEngine(ConfidenceProfile profile, EngineOptions options = {});

    void set_period(PeriodKind kind, double ts);

    struct ProcessResult {
        Decision decision;
        // Rewritten packet in non-attack periods (original bytes if the header
        // had no room); original bytes for accepted attack packets; empty for
        // discarded packets.
        std::vector<std::uint8_t> packet;
    };

    ProcessResult process(std::span<const std::uint8_t> bytes, double ts);

    void reset();

    std::optional<PeriodKind> period() const { return period_; }
    const NominalProfile& nominal() const { return np_; }
    std::optional<double> threshold() const { return threshold_; }
    const ConfidenceProfile& profile() const { return profile_; }
    const EngineOptions& options() const { return options_; }

    nlohmann::json to_json() const;
    static FilterEngine from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static FilterEngine load(const std::string& path);

private:
    double score_or_bootstrap(const AttributeVector& values) const;
    std::optional<double> compute_threshold() const;

    ConfidenceProfile profile_;
    EngineOptions options_;
    std::optional<PeriodKind> period_;
    double period_since_ = std::numeric_limits<double>::quiet_NaN();
    NominalProfile np_;
    std::optional<double> threshold_;
    std::vector<double> nonattack_scores_; // kept only for the percentile strategy
};

} // namespace cbf

#endif
