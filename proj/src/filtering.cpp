#include "ddi/filtering.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <stdexcept>

namespace ddi {

std::string_view filter_mode_name(FilterMode m) { return m == FilterMode::Train ? "train" : "test"; }

FilterMode parse_filter_mode(std::string_view text) {
    if (text == "train") return FilterMode::Train;
    if (text == "test") return FilterMode::Test;
    throw std::invalid_argument("filter mode must be 'train' or 'test', got '" + std::string(text) + "'");
}

namespace {

// Token classes used by the sequence patterns:
//   A B N  the three placeholders      ( ) ,  themselves
//   s a    "such" "as"                 & |    "and" "or"
//   x      anything else
char token_class(const std::string& tok) {
    if (tok == kDrugA) return 'A';
    if (tok == kDrugB) return 'B';
    if (tok == kDrugN) return 'N';
    if (tok == "(" || tok == ")" || tok == ",") return tok[0];
    if (tok == "such") return 's';
    if (tok == "as") return 'a';
    if (tok == "and") return '&';
    if (tok == "or") return '|';
    return 'x';
}

struct CompiledPattern {
    FilterPattern info;
    std::regex regex;
};

const std::vector<CompiledPattern>& compiled_patterns() {
    static const std::vector<CompiledPattern> kPatterns = [] {
        const std::vector<std::pair<FilterPattern, std::string>> specs{
            {{"paren_apposition", FilterRule::Hyponym, "DRUG-A ( DRUG-B )"}, R"(A\(B\))"},
            {{"paren_open", FilterRule::Hyponym, "DRUG-A ( DRUG-B ..."}, R"(A\(B)"},
            {{"such_as", FilterRule::Hyponym, "DRUG-A such as DRUG-B"}, R"(AsaB)"},
            {{"such_as_list", FilterRule::Hyponym,
              "DRUG-A such as DRUG-N [,] ... [and|or] DRUG-B"},
             R"(Asa(N,?)+[&|]?B)"},
            {{"comma_list", FilterRule::Coordination, "DRUG-A , (DRUG-N , )+ DRUG-B"},
             R"(A,(N,)+B)"},
            {{"comma_list_conj", FilterRule::Coordination,
              "DRUG-A , (DRUG-N , )* DRUG-N [,] and|or DRUG-B"},
             R"(A,(N,)*N,?[&|]B)"},
        };
        std::vector<CompiledPattern> out;
        for (const auto& [info, re] : specs) out.push_back({info, std::regex(re)});
        return out;
    }();
    return kPatterns;
}

std::string normalize_name(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

}  // namespace

const std::vector<FilterPattern>& filter_patterns() {
    static const std::vector<FilterPattern> kInfo = [] {
        std::vector<FilterPattern> out;
        for (const auto& p : compiled_patterns()) out.push_back(p.info);
        return out;
    }();
    return kInfo;
}

bool FilterConfig::enabled(const std::string& pattern) const {
    auto it = patterns.find(pattern);
    return it == patterns.end() || it->second;
}

nlohmann::json to_json(const FilterConfig& cfg) {
    nlohmann::json pats;
    for (const auto& p : filter_patterns()) pats[p.name] = cfg.enabled(p.name);
    return {{"same_name", cfg.same_name}, {"patterns", pats}};
}

FilterConfig filter_config_from_json(const nlohmann::json& j) {
    FilterConfig cfg;
    cfg.same_name = j.value("same_name", true);
    if (j.contains("patterns")) {
        for (const auto& [name, on] : j.at("patterns").items()) {
            const auto& all = filter_patterns();
            if (std::none_of(all.begin(), all.end(), [&](const FilterPattern& p) { return p.name == name; })) {
                throw std::invalid_argument("unknown filter pattern '" + name + "'");
            }
            cfg.patterns[name] = on.get<bool>();
        }
    }
    return cfg;
}

std::size_t FilterReport::removed_positive() const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < kNumPositiveClasses; ++c) n += removed_by_label[c];
    return n;
}

bool same_drug_name(std::string_view a, std::string_view b) {
    return normalize_name(a) == normalize_name(b);
}

std::optional<std::pair<FilterRule, std::string>> match_filters(const RawInstance& inst,
                                                               const FilterConfig& cfg) {
    if (cfg.same_name && !inst.provenance.name_a.empty() &&
        same_drug_name(inst.provenance.name_a, inst.provenance.name_b)) {
        return std::make_pair(FilterRule::SameName, std::string("same_name"));
    }
    std::string classes;
    classes.reserve(inst.tokens.size());
    for (const auto& t : inst.tokens) classes.push_back(token_class(t));
    for (const auto& p : compiled_patterns()) {
        if (!cfg.enabled(p.info.name)) continue;
        if (std::regex_search(classes, p.regex)) return std::make_pair(p.info.rule, p.info.name);
    }
    return std::nullopt;
}

FilterReport apply_filters(const std::vector<RawInstance>& instances, FilterMode mode,
                           const FilterConfig& cfg) {
    FilterReport r;
    r.mode = mode;
    r.input_count = instances.size();
    for (const auto& inst : instances) {
        auto hit = match_filters(inst, cfg);
        if (!hit) {
            r.surviving.push_back(inst);
            continue;
        }
        ++r.removed_by_rule[static_cast<std::size_t>(hit->first) - 1];
        ++r.removed_by_label[static_cast<std::size_t>(label_id(inst.label))];
        ++r.removed_by_pattern[hit->second];
        r.removed.push_back({inst, hit->first, hit->second});
    }
    return r;
}

nlohmann::json to_json(const FilterReport& r) {
    nlohmann::json by_label;
    for (Label l : kAllLabels) {
        by_label[std::string(label_name(l))] = r.removed_by_label[static_cast<std::size_t>(label_id(l))];
    }
    nlohmann::json removed = nlohmann::json::array();
    for (const auto& rm : r.removed) {
        removed.push_back({{"rule", static_cast<int>(rm.rule)},
                           {"pattern", rm.pattern},
                           {"instance", to_json(rm.instance)}});
    }
    return {{"mode", std::string(filter_mode_name(r.mode))},
            {"input_count", r.input_count},
            {"surviving_count", r.surviving.size()},
            {"removed_count", r.removed.size()},
            {"removed_by_rule",
             {{"1", r.removed_by_rule[0]}, {"2", r.removed_by_rule[1]}, {"3", r.removed_by_rule[2]}}},
            {"removed_by_label", by_label},
            {"removed_by_pattern", r.removed_by_pattern},
            {"removed", removed}};
}

FilterReport filter_report_from_json(const nlohmann::json& j) {
    FilterReport r;
    r.mode = parse_filter_mode(j.at("mode").get<std::string>());
    r.input_count = j.at("input_count").get<std::size_t>();
    for (const auto& item : j.at("removed")) {
        Removal rm{raw_instance_from_json(item.at("instance")),
                   static_cast<FilterRule>(item.at("rule").get<int>()),
                   item.at("pattern").get<std::string>()};
        ++r.removed_by_rule[static_cast<std::size_t>(rm.rule) - 1];
        ++r.removed_by_label[static_cast<std::size_t>(label_id(rm.instance.label))];
        ++r.removed_by_pattern[rm.pattern];
        r.removed.push_back(std::move(rm));
    }
    return r;
}

}  // namespace ddi
