#pragma once

#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

namespace qaforge {

// Opaque identifier with a tag so entity and relation ids cannot be mixed up.
template <typename Tag>
class StrongId {
public:
    StrongId() = default;
    explicit StrongId(std::string value) : value_(std::move(value)) {}
    explicit StrongId(std::string_view value) : value_(value) {}
    explicit StrongId(const char* value) : value_(value) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    friend auto operator<=>(const StrongId&, const StrongId&) = default;
    friend bool operator==(const StrongId&, const StrongId&) = default;

    friend std::ostream& operator<<(std::ostream& os, const StrongId& id) { return os << id.value_; }

private:
    std::string value_;
};

struct EntityTag {};
struct RelationTag {};

using EntityId = StrongId<EntityTag>;
using RelationId = StrongId<RelationTag>;

}  // namespace qaforge

template <typename Tag>
struct std::hash<qaforge::StrongId<Tag>> {
    std::size_t operator()(const qaforge::StrongId<Tag>& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
