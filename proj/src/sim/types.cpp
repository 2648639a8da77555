#include "planlab/sim/types.h"

#include <algorithm>
#include <array>
#include <tuple>

namespace planlab::sim {

namespace {

const std::vector<std::pair<Verb, std::string>> kVerbNames = {
    {Verb::kFind, "find"},        {Verb::kPickUp, "pick up"}, {Verb::kPutDown, "put down"},
    {Verb::kOpen, "open"},        {Verb::kClose, "close"},    {Verb::kTurnOn, "turn on"},
    {Verb::kTurnOff, "turn off"}, {Verb::kSlice, "slice"},    {Verb::kDone, "done"},
};

const std::vector<std::pair<ErrorTag, std::string>> kErrorNames = {
    {ErrorTag::kTargetNotFound, "TargetNotFound"},
    {ErrorTag::kHandOccupied, "HandOccupied"},
    {ErrorTag::kHandEmpty, "HandEmpty"},
    {ErrorTag::kNotOpenable, "NotOpenable"},
    {ErrorTag::kNotToggleable, "NotToggleable"},
    {ErrorTag::kNotSliceable, "NotSliceable"},
    {ErrorTag::kNoReceptacleVisited, "NoReceptacleVisited"},
    {ErrorTag::kContainerClosed, "ContainerClosed"},
    {ErrorTag::kAlreadyInState, "AlreadyInState"},
};

}  // namespace

auto verb_name(Verb v) -> const std::string& {
    for (const auto& [verb, name] : kVerbNames) {
        if (verb == v) { return name; }
    }
    return kVerbNames.back().second;
}

auto verb_from_name(const std::string& name) -> std::optional<Verb> {
    for (const auto& [verb, verb_str] : kVerbNames) {
        if (verb_str == name) { return verb; }
    }
    return std::nullopt;
}

auto error_tag_name(ErrorTag tag) -> const std::string& {
    for (const auto& [t, name] : kErrorNames) {
        if (t == tag) { return name; }
    }
    return kErrorNames.back().second;
}

auto error_tag_from_name(const std::string& name) -> std::optional<ErrorTag> {
    for (const auto& [t, tag_str] : kErrorNames) {
        if (tag_str == name) { return t; }
    }
    return std::nullopt;
}

auto all_verbs() -> const std::vector<Verb>& {
    static const std::vector<Verb> verbs = [] {
        std::vector<Verb> out;
        out.reserve(kVerbNames.size());
        for (const auto& [verb, name] : kVerbNames) { out.push_back(verb); }
        return out;
    }();
    return verbs;
}

auto flag_names(const ObjectInstance& inst) -> std::vector<std::string> {
    std::vector<std::string> out;
    if (inst.is_clean) { out.emplace_back("clean"); }
    if (inst.is_cold) { out.emplace_back("cold"); }
    if (inst.is_hot) { out.emplace_back("hot"); }
    if (inst.is_open) { out.emplace_back("open"); }
    if (inst.is_sliced) { out.emplace_back("sliced"); }
    if (inst.is_on) { out.emplace_back("toggled"); }
    return out;
}

auto format_action(const ActionStep& action) -> std::string {
    if (!action.target.has_value()) { return verb_name(action.verb); }
    return verb_name(action.verb) + " " + *action.target;
}

auto format_observation(const Observation& obs) -> std::string {
    std::vector<const VisibleObject*> order;
    order.reserve(obs.visible.size());
    for (const auto& v : obs.visible) { order.push_back(&v); }
    std::sort(order.begin(), order.end(), [](const VisibleObject* a, const VisibleObject* b) {
        return std::tie(a->class_name, a->id) < std::tie(b->class_name, b->id);
    });
    std::string out = "visible:";
    if (order.empty()) { out += " nothing"; }
    for (std::size_t i = 0; i < order.size(); ++i) {
        out += i == 0 ? " " : ", ";
        out += order[i]->class_name;
        if (!order[i]->flags.empty()) {
            out += "(";
            for (std::size_t j = 0; j < order[i]->flags.size(); ++j) {
                if (j > 0) { out += ","; }
                out += order[i]->flags[j];
            }
            out += ")";
        }
    }
    out += " | hand: ";
    out += obs.hand.has_value() ? *obs.hand : "empty";
    return out;
}

auto format_executed_step(const ExecutedStep& step) -> std::string {
    std::string out = format_action(step.action);
    if (step.status.ok) {
        out += " (this action success)";
    } else {
        out += " (this action failed: " + error_tag_name(*step.status.error) + ")";
    }
    return out;
}

}  // namespace planlab::sim
