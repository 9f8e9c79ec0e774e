#pragma once

#include <set>
#include <string>

#include "qaforge/ids.hpp"

namespace qaforge {

enum class QuestionSource { natural, template_based };

// One KBQA example: question, topic entities and answer entities.
struct KbqaExample {
    std::string id;
    std::string question;
    std::set<EntityId> topic_entities;
    std::set<EntityId> answer_entities;
    QuestionSource source = QuestionSource::natural;
    std::string template_name;  // empty for natural questions

    friend bool operator==(const KbqaExample&, const KbqaExample&) = default;
};

}  // namespace qaforge
