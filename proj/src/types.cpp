#include "types.hpp"

namespace cbf {

const char* period_name(PeriodKind k) {
    return k == PeriodKind::Attack ? "attack" : "nonattack";
}

const char* verdict_name(Verdict v) {
    return v == Verdict::Discard ? "discard" : "accept";
}

const char* label_name(Label l) {
    switch (l) {
    case Label::Legit: return "legit";
    case Label::Attack: return "attack";
    case Label::Unknown: return "unknown";
    }
    return "unknown";
}

} // namespace cbf
