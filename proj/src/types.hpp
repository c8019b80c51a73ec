#ifndef CBF_TYPES_HPP
#define CBF_TYPES_HPP

#include <cstdint>

namespace cbf {

enum class PeriodKind : int { NonAttack = 0, Attack = 1 };
enum class Verdict : int { Accept = 0, Discard = 1 };
enum class Label : int { Legit = 0, Attack = 1, Unknown = 2 };

const char* period_name(PeriodKind k);
const char* verdict_name(Verdict v);
const char* label_name(Label l);

} // namespace cbf

#endif
