#pragma once

// DDI-corpus XML reading and instance generation.
//
// Expected layout (one <document> per file):
//
//   <document id="...">
//     <sentence id="..." text="...">
//       <entity id="..." charOffset="0-6" type="drug" text="Aspirin"/>
//       <pair id="..." e1="..." e2="..." ddi="true" type="advise"/>
//     </sentence>
//   </document>
//
// charOffset is a list of inclusive "start-end" character ranges separated by
// ';' for discontinuous mentions. Offsets count Unicode code points.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ddi/labels.hpp"

namespace ddi {

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kDrugA = "DRUG-A";
inline constexpr std::string_view kDrugB = "DRUG-B";
inline constexpr std::string_view kDrugN = "DRUG-N";

/// Half-open byte range into the sentence text.
struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool overlaps(const CharSpan& o) const { return begin < o.end && o.begin < end; }
};

struct EntityMention {
    std::string id;
    std::vector<CharSpan> spans;  // byte ranges, in text order
    std::string text;
    std::string type;

    std::size_t start() const { return spans.front().begin; }
};

struct PairAnnotation {
    std::string id;
    std::string e1;
    std::string e2;
    bool interaction = false;
    Label label = Label::Negative;
};

struct SentenceRecord {
    std::string document_id;
    std::string id;
    std::string text;
    std::vector<EntityMention> entities;
    std::vector<PairAnnotation> pairs;

    const EntityMention* entity(std::string_view entity_id) const;
};

struct Provenance {
    std::string document;
    std::string sentence;
    std::string pair;
    std::string e1;
    std::string e2;
    std::string name_a;  // surface text of the entity blinded as DRUG-A
    std::string name_b;
    bool swapped = false;  // true when e2 precedes e1 in the text
};

struct RawInstance {
    std::vector<std::string> tokens;
    int drug_a = 0;
    int drug_b = 0;
    Label label = Label::Negative;
    Provenance provenance;
};

/// Parses every *.xml file under `path` (or the single file `path`).
std::vector<SentenceRecord> parse_corpus(const std::filesystem::path& path);
std::vector<SentenceRecord> parse_corpus_xml(const std::string& xml,
                                             const std::string& source = "<memory>");

/// Target pair spans become DRUG-A / DRUG-B (by textual order), every other
/// entity DRUG-N. Non-target mentions overlapping an already placed span are
/// absorbed, longest span first.
std::string blind_entities(const SentenceRecord& sentence, const PairAnnotation& pair);

/// Lowercases ASCII letters, replaces each digit run by "DG", splits
/// punctuation into single-character tokens and keeps DRUG-A/B/N intact.
std::vector<std::string> tokenize_normalize(std::string_view text);

/// One instance per annotated pair, ordered by (document, sentence, pair)
/// with numeric runs inside ids compared as numbers.
std::vector<RawInstance> generate_instances(const std::vector<SentenceRecord>& records);

/// Orders ids like "d2.s10" after "d2.s9".
bool natural_less(std::string_view a, std::string_view b);

nlohmann::json to_json(const RawInstance& inst);
RawInstance raw_instance_from_json(const nlohmann::json& j);

/// JSON-lines instance file, one record per line.
void write_instances(const std::filesystem::path& path, const std::vector<RawInstance>& instances);
std::vector<RawInstance> read_instances(const std::filesystem::path& path);

}  // namespace ddi
