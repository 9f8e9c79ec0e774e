#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/answer_tagger.hpp"
#include "qaforge/article.hpp"
#include "qaforge/dataset.hpp"
#include "qaforge/passage_builder.hpp"

namespace qaforge::verification {

inline constexpr std::string_view kSuperAnnotator = "super";

// A natural question with its candidate passage, tagged span and candidate entities.
struct CandidateExample {
    std::string id;
    std::string question;
    Passage passage;
    tagging::TaggedSpan answer;
    std::set<EntityId> candidate_answers;
    std::set<EntityId> candidate_topics;
};

enum class Stage1Flag { correct, incorrect_question, incorrect_passage, incorrect_fragment };

std::string_view to_string(Stage1Flag f);
Stage1Flag parse_flag(std::string_view s);  // throws ValidationError("flag", ...)

struct Stage1Decision {
    std::string item_id;
    std::string annotator_id;
    Stage1Flag flag = Stage1Flag::correct;
    std::string timestamp;

    friend bool operator==(const Stage1Decision&, const Stage1Decision&) = default;
};

struct Stage2Decision {
    std::string item_id;
    std::string annotator_id;
    std::set<EntityId> accepted_answer_entities;
    std::set<EntityId> accepted_topic_entities;
    bool rejected = false;
    std::string timestamp;

    friend bool operator==(const Stage2Decision&, const Stage2Decision&) = default;
};

// Throws ValidationError when the selection leaves the candidate sets or a
// rejection carries selections.
void validate_stage2(const Stage2Decision& d, const CandidateExample& item);

// One flag per item. A decision by the super-annotator overrides; otherwise
// all annotators must agree. Throws ValidationError listing conflicting ids.
std::map<std::string, Stage1Flag> resolve_stage1(std::span<const Stage1Decision> decisions,
                                                 std::string_view super_annotator = kSuperAnnotator);

struct Stage1Result {
    std::vector<CandidateExample> ir_pass;
    std::vector<CandidateExample> mrc_pass;  // also the stage-2 input
    std::vector<CandidateExample> rejected;
};

// correct: IR, MRC and stage 2. incorrect_fragment: IR only. Other flags:
// rejected. Throws ValidationError listing unflagged ids.
Stage1Result apply_stage1(std::span<const CandidateExample> items, std::span<const Stage1Decision> decisions,
                          std::string_view super_annotator = kSuperAnnotator);

struct Stage2Result {
    std::vector<KbqaExample> kbqa;
    std::size_t with_answers = 0;  // items with at least one accepted answer entity
    std::size_t with_topics = 0;   // ... and at least one accepted topic entity
    std::size_t rejected = 0;
};

// Several annotators on one item are combined by the super-annotator record
// when present, otherwise by intersecting their selections; any rejection rejects.
Stage2Result apply_stage2(std::span<const CandidateExample> items, std::span<const Stage2Decision> decisions,
                          std::string_view super_annotator = kSuperAnnotator);

struct AgreementReport {
    std::size_t items = 0;
    double accuracy = 0.0;
    std::optional<double> kappa;  // empty when chance agreement is 1
};

// Cohen's kappa and raw agreement over the ids both maps share. Throws
// std::invalid_argument when they share none.
AgreementReport agreement(const std::map<std::string, std::string>& a, const std::map<std::string, std::string>& b);

// Per-annotator categorical views of decisions.
std::map<std::string, std::string> stage1_labels(std::span<const Stage1Decision> decisions,
                                                 std::string_view annotator);
std::map<std::string, std::string> stage2_labels(std::span<const Stage2Decision> decisions,
                                                 std::string_view annotator);

struct MrcExample {
    std::string id;
    std::string question;
    std::string passage_id;
    std::string context;
    std::string answer_text;
    std::size_t answer_start = 0;  // byte offset into context; code points on disk

    friend bool operator==(const MrcExample&, const MrcExample&) = default;
};

struct IrExample {
    std::string id;
    std::string question;
    std::string passage_id;

    friend bool operator==(const IrExample&, const IrExample&) = default;
};

struct VerifiedDatasets {
    std::vector<KbqaExample> kbqa;
    std::vector<MrcExample> mrc;
    std::vector<IrExample> ir;
    passages::Corpus corpus;
};

struct Split {
    std::vector<std::string> train;
    std::vector<std::string> test;
};

struct Assembly {
    VerifiedDatasets datasets;
    Split kbqa_split;
    Split mrc_split;
    Split ir_split;
};

// ceil(fraction * n) ids drawn for test by a seeded permutation; both halves sorted.
Split seeded_split(std::vector<std::string> ids, std::uint64_t seed, double test_fraction);

// Natural KBQA examples must satisfy |IR| >= |MRC| >= |KBQA natural|, else
// AssemblyError. Template examples are appended to KBQA, and the KBQA split
// is stratified by source.
Assembly assemble(const Stage1Result& stage1, std::span<const KbqaExample> natural_kbqa,
                  std::span<const KbqaExample> template_kbqa, passages::Corpus corpus, std::uint64_t split_seed,
                  double test_fraction = 0.2);

}  // namespace qaforge::verification
