#include "qaforge/verification.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>

#include "qaforge/errors.hpp"
#include "qaforge/random.hpp"

namespace qaforge::verification {

namespace {

std::string id_list(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i == 8) return out + ", ... (" + std::to_string(ids.size()) + " total)";
        if (i) out += ", ";
        out += ids[i];
    }
    return out;
}

std::string join_ids(const std::set<EntityId>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += ",";
        out += id.str();
    }
    return out;
}

template <typename T>
std::set<T> intersect(const std::set<T>& a, const std::set<T>& b) {
    std::set<T> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

}  // namespace

std::string_view to_string(Stage1Flag f) {
    switch (f) {
        case Stage1Flag::correct: return "correct";
        case Stage1Flag::incorrect_question: return "incorrect_question";
        case Stage1Flag::incorrect_passage: return "incorrect_passage";
        case Stage1Flag::incorrect_fragment: return "incorrect_fragment";
    }
    return "correct";
}

Stage1Flag parse_flag(std::string_view s) {
    if (s == "correct") return Stage1Flag::correct;
    if (s == "incorrect_question") return Stage1Flag::incorrect_question;
    if (s == "incorrect_passage") return Stage1Flag::incorrect_passage;
    if (s == "incorrect_fragment") return Stage1Flag::incorrect_fragment;
    throw ValidationError("flag", "unknown flag '" + std::string(s) + "'");
}

void validate_stage2(const Stage2Decision& d, const CandidateExample& item) {
    for (const auto& e : d.accepted_answer_entities)
        if (!item.candidate_answers.contains(e))
            throw ValidationError("accepted_answer_entities", e.str() + " is not a candidate of " + item.id);
    for (const auto& e : d.accepted_topic_entities)
        if (!item.candidate_topics.contains(e))
            throw ValidationError("accepted_topic_entities", e.str() + " is not a candidate of " + item.id);
    if (d.rejected && (!d.accepted_answer_entities.empty() || !d.accepted_topic_entities.empty()))
        throw ValidationError("rejected", "a rejection of " + item.id + " carries selections");
}

std::map<std::string, Stage1Flag> resolve_stage1(std::span<const Stage1Decision> decisions,
                                                 std::string_view super_annotator) {
    std::map<std::string, std::vector<const Stage1Decision*>> by_item;
    for (const auto& d : decisions) by_item[d.item_id].push_back(&d);
    std::map<std::string, Stage1Flag> out;
    std::vector<std::string> conflicts;
    for (const auto& [item, ds] : by_item) {
        auto super = std::find_if(ds.rbegin(), ds.rend(), [&](auto* d) { return d->annotator_id == super_annotator; });
        if (super != ds.rend()) {
            out[item] = (*super)->flag;
            continue;
        }
        bool agree = std::all_of(ds.begin(), ds.end(), [&](auto* d) { return d->flag == ds.front()->flag; });
        if (!agree) {
            conflicts.push_back(item);
            continue;
        }
        out[item] = ds.front()->flag;
    }
    if (!conflicts.empty())
        throw ValidationError("flag", "unresolved annotator conflicts on " + id_list(conflicts));
    return out;
}

Stage1Result apply_stage1(std::span<const CandidateExample> items, std::span<const Stage1Decision> decisions,
                          std::string_view super_annotator) {
    auto flags = resolve_stage1(decisions, super_annotator);
    std::vector<std::string> missing;
    for (const auto& item : items)
        if (!flags.contains(item.id)) missing.push_back(item.id);
    if (!missing.empty()) throw ValidationError("item_id", "items without a stage-1 flag: " + id_list(missing));

    Stage1Result r;
    for (const auto& item : items) {
        switch (flags.at(item.id)) {
            case Stage1Flag::correct:
                r.ir_pass.push_back(item);
                r.mrc_pass.push_back(item);
                break;
            case Stage1Flag::incorrect_fragment:
                r.ir_pass.push_back(item);
                break;
            case Stage1Flag::incorrect_question:
            case Stage1Flag::incorrect_passage:
                r.rejected.push_back(item);
                break;
        }
    }
    return r;
}

Stage2Result apply_stage2(std::span<const CandidateExample> items, std::span<const Stage2Decision> decisions,
                          std::string_view super_annotator) {
    std::map<std::string, std::vector<const Stage2Decision*>> by_item;
    for (const auto& d : decisions) by_item[d.item_id].push_back(&d);

    std::vector<std::string> missing;
    for (const auto& item : items)
        if (!by_item.contains(item.id)) missing.push_back(item.id);
    if (!missing.empty()) throw ValidationError("item_id", "items without a stage-2 decision: " + id_list(missing));

    Stage2Result r;
    for (const auto& item : items) {
        const auto& ds = by_item.at(item.id);
        for (const auto* d : ds) validate_stage2(*d, item);

        Stage2Decision eff;
        auto super = std::find_if(ds.rbegin(), ds.rend(), [&](auto* d) { return d->annotator_id == super_annotator; });
        if (super != ds.rend()) {
            eff = **super;
        } else {
            eff = *ds.front();
            for (const auto* d : ds) {
                eff.rejected = eff.rejected || d->rejected;
                eff.accepted_answer_entities = intersect(eff.accepted_answer_entities, d->accepted_answer_entities);
                eff.accepted_topic_entities = intersect(eff.accepted_topic_entities, d->accepted_topic_entities);
            }
        }
        if (eff.rejected) {
            ++r.rejected;
            continue;
        }
        if (eff.accepted_answer_entities.empty()) continue;
        ++r.with_answers;
        if (eff.accepted_topic_entities.empty()) continue;
        ++r.with_topics;
        r.kbqa.push_back(KbqaExample{item.id, item.question, eff.accepted_topic_entities,
                                     eff.accepted_answer_entities, QuestionSource::natural, ""});
    }
    return r;
}

AgreementReport agreement(const std::map<std::string, std::string>& a, const std::map<std::string, std::string>& b) {
    std::map<std::string, double> ca, cb;
    std::size_t n = 0, same = 0;
    for (const auto& [id, la] : a) {
        auto it = b.find(id);
        if (it == b.end()) continue;
        ++n;
        same += la == it->second;
        ca[la] += 1;
        cb[it->second] += 1;
    }
    if (n == 0) throw std::invalid_argument("annotators share no items");
    AgreementReport r;
    r.items = n;
    const double dn = static_cast<double>(n);
    r.accuracy = static_cast<double>(same) / dn;
    double pe = 0.0;
    for (const auto& [label, count] : ca) {
        auto it = cb.find(label);
        if (it != cb.end()) pe += (count / dn) * (it->second / dn);
    }
    if (std::abs(1.0 - pe) > 1e-12) r.kappa = (r.accuracy - pe) / (1.0 - pe);
    return r;
}

std::map<std::string, std::string> stage1_labels(std::span<const Stage1Decision> decisions,
                                                 std::string_view annotator) {
    std::map<std::string, std::string> out;
    for (const auto& d : decisions)
        if (d.annotator_id == annotator) out[d.item_id] = std::string(to_string(d.flag));
    return out;
}

std::map<std::string, std::string> stage2_labels(std::span<const Stage2Decision> decisions,
                                                 std::string_view annotator) {
    std::map<std::string, std::string> out;
    for (const auto& d : decisions)
        if (d.annotator_id == annotator)
            out[d.item_id] = d.rejected ? "rejected"
                                        : "A=" + join_ids(d.accepted_answer_entities) +
                                              ";T=" + join_ids(d.accepted_topic_entities);
    return out;
}

Split seeded_split(std::vector<std::string> ids, std::uint64_t seed, double test_fraction) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw std::invalid_argument("test_fraction must be in [0, 1]");
    std::sort(ids.begin(), ids.end());
    const auto n_test =
        static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(ids.size()) - 1e-9));
    auto perm = seeded_permutation(ids.size(), seed);
    Split s;
    for (std::size_t i = 0; i < perm.size(); ++i) (i < n_test ? s.test : s.train).push_back(ids[perm[i]]);
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

Assembly assemble(const Stage1Result& stage1, std::span<const KbqaExample> natural_kbqa,
                  std::span<const KbqaExample> template_kbqa, passages::Corpus corpus, std::uint64_t split_seed,
                  double test_fraction) {
    Assembly out;
    auto& d = out.datasets;
    for (const auto& item : stage1.ir_pass) d.ir.push_back(IrExample{item.id, item.question, item.passage.id});
    for (const auto& item : stage1.mrc_pass)
        d.mrc.push_back(MrcExample{item.id, item.question, item.passage.id, item.passage.text, item.answer.text,
                                   item.answer.char_begin});
    for (const auto& e : natural_kbqa) {
        if (e.topic_entities.empty() || e.answer_entities.empty())
            throw AssemblyError("KBQA example " + e.id + " lacks topic or answer entities");
        d.kbqa.push_back(e);
    }
    if (d.ir.size() < d.mrc.size() || d.mrc.size() < d.kbqa.size())
        throw AssemblyError("size chain violated: IR " + std::to_string(d.ir.size()) + ", MRC " +
                            std::to_string(d.mrc.size()) + ", KBQA " + std::to_string(d.kbqa.size()));
    for (const auto& e : template_kbqa) {
        if (e.topic_entities.empty() || e.answer_entities.empty())
            throw AssemblyError("KBQA example " + e.id + " lacks topic or answer entities");
        d.kbqa.push_back(e);
    }
    d.corpus = std::move(corpus);

    std::vector<std::string> natural_ids, template_ids, mrc_ids, ir_ids;
    for (const auto& e : d.kbqa) (e.source == QuestionSource::natural ? natural_ids : template_ids).push_back(e.id);
    for (const auto& e : d.mrc) mrc_ids.push_back(e.id);
    for (const auto& e : d.ir) ir_ids.push_back(e.id);

    auto nat = seeded_split(natural_ids, split_seed, test_fraction);
    auto tpl = seeded_split(template_ids, split_seed + 1, test_fraction);
    out.kbqa_split.train = nat.train;
    out.kbqa_split.train.insert(out.kbqa_split.train.end(), tpl.train.begin(), tpl.train.end());
    out.kbqa_split.test = nat.test;
    out.kbqa_split.test.insert(out.kbqa_split.test.end(), tpl.test.begin(), tpl.test.end());
    out.mrc_split = seeded_split(mrc_ids, split_seed + 2, test_fraction);
    out.ir_split = seeded_split(ir_ids, split_seed + 3, test_fraction);
    return out;
}

}  // namespace qaforge::verification
