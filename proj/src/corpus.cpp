#include "ddi/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace ddi {
namespace pt = boost::property_tree;

const EntityMention* SentenceRecord::entity(std::string_view entity_id) const {
    for (const auto& e : entities) {
        if (e.id == entity_id) return &e;
    }
    return nullptr;
}

namespace {

// Byte offset of every code point, plus the total length as a sentinel.
std::vector<std::size_t> code_point_offsets(const std::string& text) {
    std::vector<std::size_t> offsets;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if ((c & 0xC0u) != 0x80u) offsets.push_back(i);
    }
    offsets.push_back(text.size());
    return offsets;
}

std::size_t parse_offset(const std::string& s, const std::string& where) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), ::isdigit)) {
        throw CorpusError(where + ": malformed charOffset component '" + s + "'");
    }
    return std::stoul(s);
}

std::vector<CharSpan> parse_char_offset(const std::string& attr, const std::string& text,
                                        const std::string& where) {
    const auto cps = code_point_offsets(text);
    const std::size_t length = cps.size() - 1;
    std::vector<CharSpan> spans;
    std::string part;
    std::istringstream ss(attr);
    while (std::getline(ss, part, ';')) {
        part.erase(std::remove_if(part.begin(), part.end(), ::isspace), part.end());
        if (part.empty()) continue;
        const auto dash = part.find('-');
        if (dash == std::string::npos) throw CorpusError(where + ": malformed charOffset '" + attr + "'");
        const auto first = parse_offset(part.substr(0, dash), where);
        const auto last = parse_offset(part.substr(dash + 1), where);
        if (last < first || last >= length) {
            throw CorpusError(where + ": charOffset '" + attr + "' outside sentence of " +
                              std::to_string(length) + " characters");
        }
        spans.push_back({cps[first], cps[last + 1]});
    }
    if (spans.empty()) throw CorpusError(where + ": empty charOffset");
    std::sort(spans.begin(), spans.end(),
              [](const CharSpan& a, const CharSpan& b) { return a.begin < b.begin; });
    return spans;
}

std::string attr(const pt::ptree& node, const std::string& name, const std::string& where,
                 bool required = true) {
    auto v = node.get_optional<std::string>("<xmlattr>." + name);
    if (!v) {
        if (required) throw CorpusError(where + ": missing attribute '" + name + "'");
        return {};
    }
    return *v;
}

SentenceRecord parse_sentence(const pt::ptree& node, const std::string& doc_id,
                              const std::string& source) {
    SentenceRecord s;
    s.document_id = doc_id;
    s.id = attr(node, "id", source + ": sentence");
    s.text = attr(node, "text", source + ": sentence " + s.id);
    for (const auto& [tag, child] : node) {
        if (tag == "entity") {
            EntityMention e;
            e.id = attr(child, "id", source + ": entity in " + s.id);
            const std::string where = source + ": entity " + e.id;
            e.spans = parse_char_offset(attr(child, "charOffset", where), s.text, where);
            e.text = attr(child, "text", where);
            e.type = attr(child, "type", where, false);
            if (e.text.empty()) throw CorpusError(where + ": empty surface text");
            s.entities.push_back(std::move(e));
        }
    }
    for (const auto& [tag, child] : node) {
        if (tag != "pair") continue;
        PairAnnotation p;
        p.id = attr(child, "id", source + ": pair in " + s.id);
        const std::string where = source + ": pair " + p.id;
        p.e1 = attr(child, "e1", where);
        p.e2 = attr(child, "e2", where);
        if (!s.entity(p.e1) || !s.entity(p.e2)) {
            throw CorpusError(where + " references an unknown entity (" +
                              (s.entity(p.e1) ? p.e2 : p.e1) + ")");
        }
        if (p.e1 == p.e2) throw CorpusError(where + " pairs an entity with itself");
        std::string ddi = attr(child, "ddi", where);
        std::transform(ddi.begin(), ddi.end(), ddi.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ddi != "true" && ddi != "false") {
            throw CorpusError(where + ": ddi must be true or false, got '" + ddi + "'");
        }
        p.interaction = ddi == "true";
        if (p.interaction) {
            const auto type = attr(child, "type", where, false);
            if (type.empty()) throw CorpusError(where + ": interacting pair without a type");
            try {
                p.label = parse_label(type);
            } catch (const std::invalid_argument& e) {
                throw CorpusError(where + ": " + e.what());
            }
            if (p.label == Label::Negative) {
                throw CorpusError(where + ": interacting pair typed as negative");
            }
        }
        s.pairs.push_back(std::move(p));
    }
    return s;
}

void collect_documents(const pt::ptree& tree, const std::string& source,
                       std::vector<SentenceRecord>& out) {
    for (const auto& [tag, node] : tree) {
        if (tag == "document") {
            const auto doc_id = attr(node, "id", source + ": document");
            for (const auto& [ctag, child] : node) {
                if (ctag == "sentence") out.push_back(parse_sentence(child, doc_id, source));
            }
        } else if (tag != "<xmlattr>" && tag != "<xmlcomment>") {
            collect_documents(node, source, out);
        }
    }
}

bool is_placeholder_at(std::string_view text, std::size_t i, std::string_view& which) {
    for (auto p : {kDrugA, kDrugB, kDrugN}) {
        if (text.substr(i, p.size()) == p) {
            which = p;
            return true;
        }
    }
    return false;
}

}  // namespace

std::vector<SentenceRecord> parse_corpus_xml(const std::string& xml, const std::string& source) {
    pt::ptree tree;
    std::istringstream in(xml);
    try {
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw CorpusError(source + ": malformed XML: " + e.message() + " (line " +
                          std::to_string(e.line()) + ")");
    }
    std::vector<SentenceRecord> out;
    collect_documents(tree, source, out);
    return out;
}

std::vector<SentenceRecord> parse_corpus(const std::filesystem::path& path) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
        for (const auto& entry : std::filesystem::recursive_directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".xml") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else if (std::filesystem::is_regular_file(path)) {
        files.push_back(path);
    } else {
        throw CorpusError("corpus path " + path.string() + " does not exist");
    }
    std::vector<SentenceRecord> out;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw CorpusError("cannot read " + f.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        auto records = parse_corpus_xml(ss.str(), f.string());
        out.insert(out.end(), std::make_move_iterator(records.begin()),
                   std::make_move_iterator(records.end()));
    }
    return out;
}

std::string blind_entities(const SentenceRecord& s, const PairAnnotation& pair) {
    const auto* e1 = s.entity(pair.e1);
    const auto* e2 = s.entity(pair.e2);
    if (!e1 || !e2) throw CorpusError("pair " + pair.id + " references an unknown entity");
    const bool swapped = e2->start() < e1->start();
    const auto* a = swapped ? e2 : e1;
    const auto* b = swapped ? e1 : e2;

    struct Region {
        CharSpan span;
        std::string_view placeholder;
    };
    // A discontinuous mention is blinded at its first fragment; the remaining
    // fragments are text shared with neighbouring mentions.
    std::vector<Region> placed{{a->spans.front(), kDrugA}, {b->spans.front(), kDrugB}};
    if (placed[0].span.overlaps(placed[1].span)) {
        throw CorpusError("pair " + pair.id + ": target entities " + a->id + " and " + b->id +
                          " overlap (nested mentions are not supported)");
    }
    std::vector<CharSpan> others;
    for (const auto& e : s.entities) {
        if (&e == a || &e == b) continue;
        others.push_back(e.spans.front());
    }
    std::stable_sort(others.begin(), others.end(), [](const CharSpan& x, const CharSpan& y) {
        return x.size() != y.size() ? x.size() > y.size() : x.begin < y.begin;
    });
    for (const auto& span : others) {
        const bool clash = std::any_of(placed.begin(), placed.end(),
                                       [&](const Region& r) { return r.span.overlaps(span); });
        if (!clash) placed.push_back({span, kDrugN});
    }
    std::sort(placed.begin(), placed.end(),
              [](const Region& x, const Region& y) { return x.span.begin < y.span.begin; });

    std::string out;
    std::size_t cursor = 0;
    for (const auto& r : placed) {
        out.append(s.text, cursor, r.span.begin - cursor);
        out.append(r.placeholder);
        cursor = r.span.end;
    }
    out.append(s.text, cursor, std::string::npos);
    return out;
}

std::vector<std::string> tokenize_normalize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) tokens.push_back(std::move(word));
        word.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        std::string_view placeholder;
        if (is_placeholder_at(text, i, placeholder)) {
            flush();
            tokens.emplace_back(placeholder);
            i += placeholder.size();
        } else if (std::isspace(c)) {
            flush();
            ++i;
        } else if (std::isdigit(c)) {
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            word += "DG";
        } else if (text.substr(i, 2) == "DG") {
            // Already-normalized digit marker; kept so the tokenizer is idempotent.
            word += "DG";
            i += 2;
        } else if (std::isalpha(c) || c >= 0x80) {
            word.push_back(static_cast<char>(std::tolower(c)));
            ++i;
        } else {
            flush();
            tokens.emplace_back(1, static_cast<char>(c));
            ++i;
        }
    }
    flush();
    return tokens;
}

bool natural_less(std::string_view a, std::string_view b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
        const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
        if (da && db) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
            auto na = a.substr(i, ie - i);
            auto nb = b.substr(j, je - j);
            while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
            while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
            if (na.size() != nb.size()) return na.size() < nb.size();
            if (na != nb) return na < nb;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return a.size() - i < b.size() - j;
}

std::vector<RawInstance> generate_instances(const std::vector<SentenceRecord>& records) {
    std::vector<RawInstance> out;
    for (const auto& s : records) {
        for (const auto& pair : s.pairs) {
            const auto* e1 = s.entity(pair.e1);
            const auto* e2 = s.entity(pair.e2);
            if (!e1 || !e2) throw CorpusError("pair " + pair.id + " references an unknown entity");
            RawInstance inst;
            inst.label = pair.interaction ? pair.label : Label::Negative;
            inst.tokens = tokenize_normalize(blind_entities(s, pair));
            int a = -1, b = -1;
            for (std::size_t t = 0; t < inst.tokens.size(); ++t) {
                if (inst.tokens[t] == kDrugA) a = a < 0 ? static_cast<int>(t) : -2;
                if (inst.tokens[t] == kDrugB) b = b < 0 ? static_cast<int>(t) : -2;
            }
            if (a < 0 || b < 0 || a >= b) {
                throw CorpusError("pair " + pair.id +
                                  ": target entities not locatable after tokenization");
            }
            inst.drug_a = a;
            inst.drug_b = b;
            auto& prov = inst.provenance;
            prov.document = s.document_id;
            prov.sentence = s.id;
            prov.pair = pair.id;
            prov.e1 = pair.e1;
            prov.e2 = pair.e2;
            prov.swapped = e2->start() < e1->start();
            prov.name_a = prov.swapped ? e2->text : e1->text;
            prov.name_b = prov.swapped ? e1->text : e2->text;
            out.push_back(std::move(inst));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const RawInstance& x, const RawInstance& y) {
        const auto& p = x.provenance;
        const auto& q = y.provenance;
        if (p.document != q.document) return natural_less(p.document, q.document);
        if (p.sentence != q.sentence) return natural_less(p.sentence, q.sentence);
        return natural_less(p.pair, q.pair);
    });
    return out;
}

nlohmann::json to_json(const RawInstance& inst) {
    const auto& p = inst.provenance;
    return {{"document", p.document},
            {"sentence", p.sentence},
            {"pair", p.pair},
            {"e1", p.e1},
            {"e2", p.e2},
            {"name_a", p.name_a},
            {"name_b", p.name_b},
            {"swapped", p.swapped},
            {"label", std::string(label_name(inst.label))},
            {"tokens", inst.tokens},
            {"drug_a", inst.drug_a},
            {"drug_b", inst.drug_b}};
}

RawInstance raw_instance_from_json(const nlohmann::json& j) {
    RawInstance inst;
    auto& p = inst.provenance;
    p.document = j.at("document").get<std::string>();
    p.sentence = j.at("sentence").get<std::string>();
    p.pair = j.at("pair").get<std::string>();
    p.e1 = j.value("e1", "");
    p.e2 = j.value("e2", "");
    p.name_a = j.value("name_a", "");
    p.name_b = j.value("name_b", "");
    p.swapped = j.value("swapped", false);
    inst.label = parse_label(j.at("label").get<std::string>());
    inst.tokens = j.at("tokens").get<std::vector<std::string>>();
    inst.drug_a = j.at("drug_a").get<int>();
    inst.drug_b = j.at("drug_b").get<int>();
    const int m = static_cast<int>(inst.tokens.size());
    if (inst.drug_a < 0 || inst.drug_b >= m || inst.drug_a >= inst.drug_b) {
        throw CorpusError("instance " + p.pair + " has invalid drug indices");
    }
    return inst;
}

void write_instances(const std::filesystem::path& path, const std::vector<RawInstance>& instances) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& inst : instances) out << to_json(inst).dump() << '\n';
}

std::vector<RawInstance> read_instances(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read instance file " + path.string());
    std::vector<RawInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(raw_instance_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw CorpusError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace ddi
