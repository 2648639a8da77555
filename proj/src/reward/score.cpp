#include "planlab/reward/score.h"

#include "planlab/sim/world.h"
#include "planlab/taskgen/planner.h"

namespace planlab::reward {

namespace {

using sim::ActionStep;
using sim::ApplianceEffect;
using sim::Verb;
using sim::WorldState;

auto class_effect(const WorldState& state, const std::string& cls)
    -> std::optional<ApplianceEffect> {
    const auto it = state.scene->catalog.find(cls);
    if (it == state.scene->catalog.end()) { return std::nullopt; }
    return it->second.appliance_effect;
}

}  // namespace

auto reasoning_tags() -> const std::vector<std::string>& {
    static const std::vector<std::string> tags = {
        "navigate-to-target", "acquire-object", "place-object",  "open-container",
        "close-container",    "apply-heat",     "apply-cold",    "apply-clean",
        "cut-object",         "toggle-light",   "finish",
    };
    return tags;
}

auto tag_for(const WorldState& state, const ActionStep& action) -> std::string {
    const auto effect = action.target.has_value() ? class_effect(state, *action.target)
                                                  : std::nullopt;
    switch (action.verb) {
        case Verb::kFind: return "navigate-to-target";
        case Verb::kPickUp: return "acquire-object";
        case Verb::kPutDown: return "place-object";
        case Verb::kOpen: return "open-container";
        case Verb::kClose:
            return effect == ApplianceEffect::kCools ? "apply-cold" : "close-container";
        case Verb::kTurnOn:
            if (effect == ApplianceEffect::kHeats) { return "apply-heat"; }
            if (effect == ApplianceEffect::kCleans) { return "apply-clean"; }
            return "toggle-light";
        case Verb::kTurnOff: return "toggle-light";
        case Verb::kSlice: return "cut-object";
        case Verb::kDone: return "finish";
    }
    return "finish";
}

auto env_feasibility(const WorldState& state, const ActionStep& action) -> int {
    return sim::apply_action(state, action).second.ok ? 1 : 0;
}

auto oracle_process_reward(const sim::GoalCondition& goal,
                           const std::vector<ActionStep>& history, const ActionStep& candidate,
                           const WorldState& state_before) -> ProcessScore {
    const std::string tag = tag_for(state_before, candidate);

    std::vector<ActionStep> completion;
    try {
        completion = taskgen::plan_completion(goal, state_before);
    } catch (const taskgen::PlanFailure&) {
        return {0, tag};  // no completion exists from here
    }
    if (candidate == completion.front()) { return {5, tag}; }

    auto [after, status] = sim::apply_action(state_before, candidate);
    if (!status.ok) { return {1, tag}; }
    if (!history.empty() && history.back() == candidate) { return {2, tag}; }

    const int d_before = static_cast<int>(completion.size()) - 1;
    int d_after = 0;
    try {
        d_after = taskgen::distance_to_goal(goal, after);
    } catch (const taskgen::PlanFailure&) {
        return {1, tag};  // candidate made the goal unreachable
    }
    if (d_after + 1 == d_before) { return {4, tag}; }
    if (d_after < d_before) { return {3, tag}; }
    if (d_after == d_before) { return {2, tag}; }
    return {1, tag};
}

auto combine(const ProcessScore& r_proc, int r_env, double alpha) -> HybridScore {
    HybridScore out;
    out.r_proc = r_proc;
    out.r_env = r_env;
    out.r_total = alpha * r_proc.value + (1.0 - alpha) * (5.0 * r_env);
    return out;
}

}  // namespace planlab::reward
