#include "planlab/sim/goal.h"

#include <algorithm>

namespace planlab::sim {

namespace {

const std::vector<std::pair<FlagName, std::string>> kFlagTokens = {
    {FlagName::kOpen, "open"},   {FlagName::kToggled, "toggled"}, {FlagName::kHot, "hot"},
    {FlagName::kCold, "cold"},   {FlagName::kClean, "clean"},     {FlagName::kSliced, "sliced"},
    {FlagName::kHeld, "held"},
};

auto split_args(const std::string& body) -> std::vector<std::string> {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : body) {
        if (ch == ',') {
            parts.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    return parts;
}

auto holds_flag(const ObjectInstance& inst, FlagName f) -> bool {
    switch (f) {
        case FlagName::kOpen: return inst.is_open;
        case FlagName::kToggled: return inst.is_on;
        case FlagName::kHot: return inst.is_hot;
        case FlagName::kCold: return inst.is_cold;
        case FlagName::kClean: return inst.is_clean;
        case FlagName::kSliced: return inst.is_sliced;
        case FlagName::kHeld: return inst.location.kind == LocationKind::kInHand;
    }
    return false;
}

void require_class(const WorldState& state, const std::string& cls) {
    if (state.scene == nullptr || !state.scene->catalog.contains(cls)) {
        throw UnknownClassError(cls);
    }
}

}  // namespace

auto GoalPredicate::make_on(std::string obj, std::string container) -> GoalPredicate {
    GoalPredicate p;
    p.kind = PredicateKind::kOn;
    p.a = std::move(obj);
    p.b = std::move(container);
    return p;
}

auto GoalPredicate::make_flag(std::string cls, FlagName f) -> GoalPredicate {
    GoalPredicate p;
    p.kind = PredicateKind::kFlag;
    p.a = std::move(cls);
    p.flag = f;
    return p;
}

auto GoalPredicate::make_stacked(std::string inner, std::string mid, std::string outer) -> GoalPredicate {
    GoalPredicate p;
    p.kind = PredicateKind::kStacked;
    p.a = std::move(inner);
    p.b = std::move(mid);
    p.c = std::move(outer);
    return p;
}

auto flag_name_token(FlagName f) -> const std::string& {
    for (const auto& [flag, token] : kFlagTokens) {
        if (flag == f) { return token; }
    }
    return kFlagTokens.back().second;
}

auto flag_from_token(const std::string& token) -> std::optional<FlagName> {
    for (const auto& [flag, tok] : kFlagTokens) {
        if (tok == token) { return flag; }
    }
    return std::nullopt;
}

auto format_predicate(const GoalPredicate& p) -> std::string {
    switch (p.kind) {
        case PredicateKind::kOn: return "on(" + p.a + "," + p.b + ")";
        case PredicateKind::kFlag: return "flag(" + p.a + "," + flag_name_token(p.flag) + ")";
        case PredicateKind::kStacked: return "stacked(" + p.a + "," + p.b + "," + p.c + ")";
    }
    return {};
}

auto parse_predicate(const std::string& text) -> GoalPredicate {
    const auto open = text.find('(');
    if (open == std::string::npos || text.empty() || text.back() != ')') {
        throw GoalParseError(text);
    }
    const std::string head = text.substr(0, open);
    const std::string body = text.substr(open + 1, text.size() - open - 2);
    const auto args = split_args(body);
    if (head == "on" && args.size() == 2 && !args[0].empty() && !args[1].empty()) {
        return GoalPredicate::make_on(args[0], args[1]);
    }
    if (head == "flag" && args.size() == 2 && !args[0].empty()) {
        const auto flag = flag_from_token(args[1]);
        if (flag.has_value()) { return GoalPredicate::make_flag(args[0], *flag); }
    }
    if (head == "stacked" && args.size() == 3 && !args[0].empty() && !args[1].empty() &&
        !args[2].empty()) {
        return GoalPredicate::make_stacked(args[0], args[1], args[2]);
    }
    throw GoalParseError(text);
}

auto format_goal(const GoalCondition& goal) -> std::vector<std::string> {
    std::vector<std::string> out;
    out.reserve(goal.predicates.size());
    for (const auto& p : goal.predicates) { out.push_back(format_predicate(p)); }
    return out;
}

auto parse_goal(const std::vector<std::string>& preds) -> GoalCondition {
    GoalCondition goal;
    goal.predicates.reserve(preds.size());
    for (const auto& text : preds) { goal.predicates.push_back(parse_predicate(text)); }
    return goal;
}

auto check_goal(const WorldState& state, const GoalCondition& goal) -> bool {
    for (const auto& p : goal.predicates) {
        require_class(state, p.a);
        if (p.kind != PredicateKind::kFlag) { require_class(state, p.b); }
        if (p.kind == PredicateKind::kStacked) { require_class(state, p.c); }

        bool satisfied = false;
        for (const auto& [id, inst] : state.instances) {
            if (inst.class_name != p.a) { continue; }
            if (p.kind == PredicateKind::kFlag) {
                satisfied = holds_flag(inst, p.flag);
            } else {
                if (inst.location.kind != LocationKind::kInReceptacle) { continue; }
                const auto it = state.instances.find(inst.location.ref);
                if (it == state.instances.end() || it->second.class_name != p.b) { continue; }
                if (p.kind == PredicateKind::kOn) {
                    satisfied = true;
                } else {
                    const auto& mid = it->second;
                    if (mid.location.kind != LocationKind::kInReceptacle) { continue; }
                    const auto outer = state.instances.find(mid.location.ref);
                    satisfied = outer != state.instances.end() && outer->second.class_name == p.c;
                }
            }
            if (satisfied) { break; }
        }
        if (!satisfied) { return false; }
    }
    return true;
}

}  // namespace planlab::sim
