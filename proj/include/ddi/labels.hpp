#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace ddi {

/// Interaction classes. Ids are fixed: the four interaction types first,
/// Negative last.
enum class Label : int { Advice = 0, Effect = 1, Mechanism = 2, Int = 3, Negative = 4 };

inline constexpr std::size_t kNumClasses = 5;
inline constexpr std::size_t kNumPositiveClasses = 4;

inline constexpr std::array<Label, kNumClasses> kAllLabels{
    Label::Advice, Label::Effect, Label::Mechanism, Label::Int, Label::Negative};

inline constexpr int label_id(Label l) { return static_cast<int>(l); }
inline constexpr bool is_positive(Label l) { return l != Label::Negative; }

Label label_from_id(int id);
std::string_view label_name(Label l);
/// Accepts the canonical names plus the corpus spelling "advise" and
/// "false"/"none"/"" for Negative; case-insensitive.
Label parse_label(std::string_view text);

}  // namespace ddi
