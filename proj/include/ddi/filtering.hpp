#pragma once

// Rule-based removal of negative-looking candidate pairs.
//
//   rule 1  both targets carry the same surface name
//   rule 2  one target is a kind of / special case of the other
//           (apposition in parentheses, "such as")
//   rule 3  both targets sit in one coordinate list
//
// Rules 2 and 3 match over blinded token sequences. Each pattern can be
// switched off individually.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ddi/corpus.hpp"

namespace ddi {

enum class FilterRule { SameName = 1, Hyponym = 2, Coordination = 3 };

enum class FilterMode { Train, Test };

std::string_view filter_mode_name(FilterMode m);
FilterMode parse_filter_mode(std::string_view text);

struct FilterPattern {
    std::string name;
    FilterRule rule;
    std::string description;
};

/// Every pattern known to the filter, in the order they are tried.
const std::vector<FilterPattern>& filter_patterns();

struct FilterConfig {
    bool same_name = true;
    /// Pattern name -> enabled. Patterns missing from the map are enabled.
    std::map<std::string, bool> patterns;

    bool enabled(const std::string& pattern) const;
};

nlohmann::json to_json(const FilterConfig& cfg);
FilterConfig filter_config_from_json(const nlohmann::json& j);

struct Removal {
    RawInstance instance;
    FilterRule rule;
    std::string pattern;  // "same_name" for rule 1
};

struct FilterReport {
    FilterMode mode = FilterMode::Train;
    std::size_t input_count = 0;
    std::array<std::size_t, 3> removed_by_rule{};
    std::array<std::size_t, kNumClasses> removed_by_label{};
    std::map<std::string, std::size_t> removed_by_pattern;
    std::vector<RawInstance> surviving;
    std::vector<Removal> removed;

    std::size_t removed_count() const { return removed.size(); }
    std::size_t removed_positive() const;
};

/// Returns the first rule/pattern that removes the instance, if any.
std::optional<std::pair<FilterRule, std::string>> match_filters(const RawInstance& inst,
                                                               const FilterConfig& cfg = {});

/// Surname equality used by rule 1: case-insensitive after collapsing
/// whitespace runs and trimming.
bool same_drug_name(std::string_view a, std::string_view b);

/// Both modes apply the same rules; in test mode the removals are kept for
/// reinsertion as predicted-Negative at scoring time.
FilterReport apply_filters(const std::vector<RawInstance>& instances, FilterMode mode,
                           const FilterConfig& cfg = {});

nlohmann::json to_json(const FilterReport& r);
FilterReport filter_report_from_json(const nlohmann::json& j);

}  // namespace ddi
