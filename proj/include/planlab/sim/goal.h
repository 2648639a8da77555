#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "planlab/sim/types.h"

namespace planlab::sim {

// Boolean properties a goal may demand of some instance of a class.
// "held" is derived from location rather than a stored flag.
enum class FlagName { kOpen, kToggled, kHot, kCold, kClean, kSliced, kHeld };

enum class PredicateKind { kOn, kFlag, kStacked };

struct GoalPredicate {
    PredicateKind kind = PredicateKind::kFlag;
    std::string a;        // subject class
    std::string b;        // container class (kOn, kStacked)
    std::string c;        // outer container class (kStacked)
    FlagName flag = FlagName::kOpen;  // kFlag only

    static auto make_on(std::string obj, std::string container) -> GoalPredicate;
    static auto make_flag(std::string cls, FlagName f) -> GoalPredicate;
    static auto make_stacked(std::string inner, std::string mid, std::string outer) -> GoalPredicate;

    auto operator==(const GoalPredicate&) const -> bool = default;
};

struct GoalCondition {
    std::vector<GoalPredicate> predicates;

    auto operator==(const GoalCondition&) const -> bool = default;
};

class UnknownClassError : public std::runtime_error {
  public:
    explicit UnknownClassError(const std::string& cls)
        : std::runtime_error("unknown object class in goal: " + cls) {}
};

class GoalParseError : public std::runtime_error {
  public:
    explicit GoalParseError(const std::string& text)
        : std::runtime_error("cannot parse goal predicate: " + text) {}
};

auto flag_name_token(FlagName f) -> const std::string&;
auto flag_from_token(const std::string& token) -> std::optional<FlagName>;

// Canonical text forms: on(a,b), flag(c,hot), stacked(a,b,c).
auto format_predicate(const GoalPredicate& p) -> std::string;
auto parse_predicate(const std::string& text) -> GoalPredicate;
auto format_goal(const GoalCondition& goal) -> std::vector<std::string>;
auto parse_goal(const std::vector<std::string>& preds) -> GoalCondition;

// True when every predicate holds. Each predicate is satisfied by any instance
// of the named classes. Throws UnknownClassError for classes not in the catalog.
auto check_goal(const WorldState& state, const GoalCondition& goal) -> bool;

}  // namespace planlab::sim
