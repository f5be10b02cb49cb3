#include "ddi/labels.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace ddi {

Label label_from_id(int id) {
    if (id < 0 || id >= static_cast<int>(kNumClasses)) {
        throw std::out_of_range("class id " + std::to_string(id) + " out of range");
    }
    return static_cast<Label>(id);
}

std::string_view label_name(Label l) {
    switch (l) {
        case Label::Advice: return "advice";
        case Label::Effect: return "effect";
        case Label::Mechanism: return "mechanism";
        case Label::Int: return "int";
        case Label::Negative: return "negative";
    }
    return "negative";
}

Label parse_label(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "advice" || s == "advise") return Label::Advice;
    if (s == "effect") return Label::Effect;
    if (s == "mechanism") return Label::Mechanism;
    if (s == "int") return Label::Int;
    if (s == "negative" || s == "false" || s == "none" || s.empty()) return Label::Negative;
    throw std::invalid_argument("unknown interaction label '" + std::string(text) + "'");
}

}  // namespace ddi
