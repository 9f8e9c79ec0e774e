#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/dataset.hpp"
#include "qaforge/ids.hpp"
#include "qaforge/kg_store.hpp"
#include "qaforge/providers/interfaces.hpp"

namespace qaforge::templates {

enum class Technique { n_hop, reverse_n_hop, entity_mask, mixed };
enum class SlotKind { entity, relation };

struct SlotDescriptor {
    std::string name;
    SlotKind kind = SlotKind::entity;
    // Class entity used to refer to the answer without naming it. Not
    // restricted to the allowed entity set and never a topic entity.
    bool mask_class = false;

    friend bool operator==(const SlotDescriptor&, const SlotDescriptor&) = default;
};

// Natural-language and query templates share `{slot}` placeholders; `{{` and
// `}}` are literal braces. In the query template an entity slot expands to
// `wd:<id>` and a relation slot to `wdt:<id>`.
struct QuestionTemplate {
    std::string name;
    std::string nl_template;
    std::string sparql_template;
    std::vector<SlotDescriptor> signature;
    Technique technique = Technique::n_hop;
};

enum class VerificationStatus { unverified, correct, incorrect, resembling };

using InputMap = std::map<std::string, std::string>;

struct TemplateInstance {
    std::string id;
    std::string template_name;
    InputMap inputs;
    std::string question_raw;
    std::optional<std::string> question_refined;
    std::string query;  // instantiated query text
    std::set<EntityId> topic_entities;
    std::set<EntityId> answers;
    VerificationStatus status = VerificationStatus::unverified;
    bool refine_failed = false;

    const std::string& question() const { return question_refined ? *question_refined : question_raw; }
};

std::string_view to_string(Technique t);
std::string_view to_string(VerificationStatus s);
Technique parse_technique(std::string_view s);
VerificationStatus parse_status(std::string_view s);

// Slot names of a format string, in order of first appearance.
std::vector<std::string> slot_names(std::string_view format);
std::string fill_slots(std::string_view format, const std::map<std::string, std::string>& values);

// Throws TemplateError when the slot sets of both templates and the signature disagree.
void validate_template(const QuestionTemplate& tmpl);

std::vector<QuestionTemplate> load_templates(const std::filesystem::path& path);

// Input maps whose instantiated query has at least one answer. All candidates
// are permuted with the seed and the first `limit` returned, so a larger limit
// only extends the list.
std::vector<InputMap> gather_inputs(const kg::KnowledgeGraph& graph, const QuestionTemplate& tmpl,
                                    const std::set<EntityId>& allowed_entities,
                                    const std::set<RelationId>& allowed_relations, std::size_t limit,
                                    std::uint64_t seed = 0);

TemplateInstance instantiate(const kg::KnowledgeGraph& graph, const QuestionTemplate& tmpl, const InputMap& inputs);

// Inflects, then paraphrases. A provider failure leaves the instance
// unrefined with refine_failed set.
TemplateInstance refine_question(TemplateInstance instance, providers::RefineProvider& inflector,
                                 providers::RefineProvider& paraphraser);

// Word-level LCS over case-folded text divided by the longer word count.
double similarity_ratio(std::string_view original, std::string_view refined);
bool similarity_filter(std::string_view original, std::string_view refined, double threshold = 0.6);

// Statuses move only out of `unverified`.
void set_status(TemplateInstance& instance, VerificationStatus status);

using TallyKey = std::pair<std::string, VerificationStatus>;
std::map<TallyKey, std::size_t> tally_verification(std::span<const TemplateInstance> instances);

// KBQA examples from instances marked correct.
std::vector<KbqaExample> emit_verified(std::span<const TemplateInstance> instances);

}  // namespace qaforge::templates
