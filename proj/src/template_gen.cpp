#include "qaforge/template_gen.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "qaforge/bgp_query.hpp"
#include "qaforge/errors.hpp"
#include "qaforge/random.hpp"
#include "qaforge/text.hpp"

namespace qaforge::templates {

std::string_view to_string(Technique t) {
    switch (t) {
        case Technique::n_hop: return "n-hop";
        case Technique::reverse_n_hop: return "reverse-n-hop";
        case Technique::entity_mask: return "entity-mask";
        case Technique::mixed: return "mixed";
    }
    return "n-hop";
}

std::string_view to_string(VerificationStatus s) {
    switch (s) {
        case VerificationStatus::unverified: return "unverified";
        case VerificationStatus::correct: return "correct";
        case VerificationStatus::incorrect: return "incorrect";
        case VerificationStatus::resembling: return "resembling";
    }
    return "unverified";
}

Technique parse_technique(std::string_view s) {
    for (auto t : {Technique::n_hop, Technique::reverse_n_hop, Technique::entity_mask, Technique::mixed})
        if (to_string(t) == s) return t;
    throw TemplateError("unknown technique '" + std::string(s) + "'");
}

VerificationStatus parse_status(std::string_view s) {
    for (auto v : {VerificationStatus::unverified, VerificationStatus::correct, VerificationStatus::incorrect,
                   VerificationStatus::resembling})
        if (to_string(v) == s) return v;
    throw ValidationError("status", "unknown status '" + std::string(s) + "'");
}

namespace {

template <typename OnText, typename OnSlot>
void scan_format(std::string_view fmt, OnText on_text, OnSlot on_slot) {
    std::size_t i = 0;
    while (i < fmt.size()) {
        char c = fmt[i];
        if (c == '{' && i + 1 < fmt.size() && fmt[i + 1] == '{') {
            on_text('{');
            i += 2;
        } else if (c == '}' && i + 1 < fmt.size() && fmt[i + 1] == '}') {
            on_text('}');
            i += 2;
        } else if (c == '{') {
            auto close = fmt.find('}', i + 1);
            if (close == std::string_view::npos) throw TemplateError("unterminated slot in '" + std::string(fmt) + "'");
            auto name = fmt.substr(i + 1, close - i - 1);
            if (name.empty()) throw TemplateError("empty slot name in '" + std::string(fmt) + "'");
            on_slot(std::string(name));
            i = close + 1;
        } else if (c == '}') {
            throw TemplateError("stray '}' in '" + std::string(fmt) + "'");
        } else {
            on_text(c);
            ++i;
        }
    }
}

const SlotDescriptor& slot_of(const QuestionTemplate& tmpl, const std::string& name) {
    for (const auto& s : tmpl.signature)
        if (s.name == name) return s;
    throw TemplateError("template " + tmpl.name + " has no slot '" + name + "'");
}

bool has_label(const std::optional<std::string>* label) { return label && *label && !(*label)->empty(); }

std::string query_value(const SlotDescriptor& slot, const std::string& id) {
    return (slot.kind == SlotKind::entity ? "wd:" : "wdt:") + id;
}

}  // namespace

std::vector<std::string> slot_names(std::string_view format) {
    std::vector<std::string> names;
    scan_format(
        format, [](char) {},
        [&](std::string name) {
            if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
        });
    return names;
}

std::string fill_slots(std::string_view format, const std::map<std::string, std::string>& values) {
    std::string out;
    scan_format(
        format, [&](char c) { out.push_back(c); },
        [&](const std::string& name) {
            auto it = values.find(name);
            if (it == values.end()) throw TemplateError("slot '" + name + "' is unbound");
            out += it->second;
        });
    return out;
}

void validate_template(const QuestionTemplate& tmpl) {
    auto nl = slot_names(tmpl.nl_template);
    auto sq = slot_names(tmpl.sparql_template);
    std::set<std::string> nl_set(nl.begin(), nl.end()), sq_set(sq.begin(), sq.end()), sig;
    bool has_mask = false;
    for (const auto& s : tmpl.signature) {
        if (!sig.insert(s.name).second) throw TemplateError(tmpl.name + ": duplicate slot '" + s.name + "'");
        if (s.mask_class && s.kind != SlotKind::entity)
            throw TemplateError(tmpl.name + ": mask slot '" + s.name + "' must be an entity slot");
        has_mask = has_mask || s.mask_class;
    }
    if (nl_set != sq_set) throw TemplateError(tmpl.name + ": natural-language and query slots differ");
    if (nl_set != sig) throw TemplateError(tmpl.name + ": slots do not match the input signature");
    if (tmpl.technique == Technique::entity_mask && !has_mask)
        throw TemplateError(tmpl.name + ": entity-mask template without a mask-class slot");
}

std::vector<QuestionTemplate> load_templates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    const auto& list = doc.is_object() ? doc.at("templates") : doc;
    std::vector<QuestionTemplate> out;
    for (const auto& j : list) {
        QuestionTemplate t;
        t.name = j.at("name").get<std::string>();
        t.nl_template = j.at("nl_template").get<std::string>();
        t.sparql_template = j.at("sparql_template").get<std::string>();
        t.technique = parse_technique(j.value("technique", "n-hop"));
        for (const auto& s : j.at("signature")) {
            SlotDescriptor d;
            d.name = s.at("name").get<std::string>();
            auto kind = s.at("kind").get<std::string>();
            if (kind == "entity")
                d.kind = SlotKind::entity;
            else if (kind == "relation")
                d.kind = SlotKind::relation;
            else
                throw TemplateError(t.name + ": unknown slot kind '" + kind + "'");
            d.mask_class = s.value("mask_class", false);
            t.signature.push_back(std::move(d));
        }
        validate_template(t);
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<InputMap> gather_inputs(const kg::KnowledgeGraph& graph, const QuestionTemplate& tmpl,
                                    const std::set<EntityId>& allowed_entities,
                                    const std::set<RelationId>& allowed_relations, std::size_t limit,
                                    std::uint64_t seed) {
    validate_template(tmpl);
    if (allowed_entities.empty() || allowed_relations.empty())
        throw std::invalid_argument("allowed entity and relation sets must be non-empty");
    if (limit == 0) return {};

    std::map<std::string, std::string> as_vars;
    std::vector<std::string> free;
    for (const auto& s : tmpl.signature) {
        as_vars[s.name] = "?slot_" + s.name;
        free.push_back("?slot_" + s.name);
    }
    auto query = bgp::parse_query(fill_slots(tmpl.sparql_template, as_vars));
    auto rows = bgp::enumerate_bindings(graph, query.patterns, free);

    std::vector<InputMap> candidates;
    for (const auto& row : rows) {
        InputMap in;
        bool ok = true;
        std::set<std::string> used_entities, used_relations;
        for (const auto& s : tmpl.signature) {
            const auto& id = row.at("?slot_" + s.name);
            if (s.kind == SlotKind::relation) {
                RelationId r(id);
                ok = graph.has_relation(r) && allowed_relations.contains(r) && has_label(graph.relation_label(r)) &&
                     used_relations.insert(id).second;
            } else {
                EntityId e(id);
                ok = graph.has_entity(e) && has_label(graph.entity_label(e)) &&
                     (s.mask_class || allowed_entities.contains(e)) && used_entities.insert(id).second;
            }
            if (!ok) break;
            in[s.name] = id;
        }
        if (ok) candidates.push_back(std::move(in));
    }

    auto perm = seeded_permutation(candidates.size(), seed);
    std::vector<InputMap> out;
    for (std::size_t i = 0; i < perm.size() && out.size() < limit; ++i) out.push_back(candidates[perm[i]]);
    return out;
}

TemplateInstance instantiate(const kg::KnowledgeGraph& graph, const QuestionTemplate& tmpl, const InputMap& inputs) {
    validate_template(tmpl);
    for (const auto& [name, _] : inputs) slot_of(tmpl, name);

    std::map<std::string, std::string> labels, query_values;
    TemplateInstance inst;
    inst.template_name = tmpl.name;
    inst.inputs = inputs;
    inst.id = tmpl.name;
    char sep = ':';
    for (const auto& s : tmpl.signature) {
        auto it = inputs.find(s.name);
        if (it == inputs.end()) throw TemplateError(tmpl.name + ": slot '" + s.name + "' is unbound");
        const auto& id = it->second;
        const std::optional<std::string>* label = nullptr;
        if (s.kind == SlotKind::relation) {
            label = graph.relation_label(RelationId(id));
        } else {
            label = graph.entity_label(EntityId(id));
            if (!s.mask_class) inst.topic_entities.insert(EntityId(id));
        }
        if (!label) throw UnknownIdError(id);
        if (!has_label(label)) throw MissingLabelError(id);
        labels[s.name] = **label;
        query_values[s.name] = query_value(s, id);
        inst.id += sep + s.name + "=" + id;
        sep = ',';
    }

    inst.question_raw = fill_slots(tmpl.nl_template, labels);
    auto query = bgp::parse_query(fill_slots(tmpl.sparql_template, query_values));
    inst.query = bgp::to_string(query);
    inst.answers = bgp::execute(graph, query);
    if (inst.answers.empty()) throw TemplateError(inst.id + ": query has no answers");
    return inst;
}

TemplateInstance refine_question(TemplateInstance instance, providers::RefineProvider& inflector,
                                 providers::RefineProvider& paraphraser) {
    try {
        auto inflected = inflector.refine(instance.question_raw);
        instance.question_refined = paraphraser.refine(inflected);
        instance.refine_failed = false;
    } catch (const Error& e) {
        spdlog::warn("refinement of {} failed: {}", instance.id, e.what());
        instance.question_refined.reset();
        instance.refine_failed = true;
    }
    return instance;
}

double similarity_ratio(std::string_view original, std::string_view refined) {
    auto a = text::split_whitespace(text::fold_case(original));
    auto b = text::split_whitespace(text::fold_case(refined));
    auto longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    auto common = text::lcs_length(std::span<const std::string>(a), std::span<const std::string>(b));
    return static_cast<double>(common) / static_cast<double>(longest);
}

bool similarity_filter(std::string_view original, std::string_view refined, double threshold) {
    return similarity_ratio(original, refined) >= threshold;
}

void set_status(TemplateInstance& instance, VerificationStatus status) {
    if (status == VerificationStatus::unverified) throw std::logic_error("cannot reset status to unverified");
    if (instance.status != VerificationStatus::unverified && instance.status != status)
        throw std::logic_error("status of " + instance.id + " is already " + std::string(to_string(instance.status)));
    instance.status = status;
}

std::map<TallyKey, std::size_t> tally_verification(std::span<const TemplateInstance> instances) {
    std::map<TallyKey, std::size_t> out;
    for (const auto& i : instances) ++out[{i.template_name, i.status}];
    return out;
}

std::vector<KbqaExample> emit_verified(std::span<const TemplateInstance> instances) {
    std::vector<KbqaExample> out;
    for (const auto& i : instances) {
        if (i.status != VerificationStatus::correct) continue;
        KbqaExample ex;
        ex.id = i.id;
        ex.question = i.question();
        ex.topic_entities = i.topic_entities;
        ex.answer_entities = i.answers;
        ex.source = QuestionSource::template_based;
        ex.template_name = i.template_name;
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace qaforge::templates
