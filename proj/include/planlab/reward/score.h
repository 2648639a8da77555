#pragma once

#include <optional>
#include <string>
#include <vector>

#include "planlab/sim/goal.h"
#include "planlab/sim/types.h"

namespace planlab::reward {

inline constexpr double kDefaultAlpha = 0.5;
inline constexpr double kDefaultTau = 3.75;

// 1..5 rubric score plus the reasoning category justifying the step.
struct ProcessScore {
    int value = 1;
    std::string rationale_tag;

    auto operator==(const ProcessScore&) const -> bool = default;
};

struct HybridScore {
    ProcessScore r_proc;
    int r_env = 0;  // 0|1
    double r_total = 0.0;

    auto operator==(const HybridScore&) const -> bool = default;
};

// Reasoning categories a step can be filed under; fixed vocabulary shared with
// the policy model's tag head.
auto reasoning_tags() -> const std::vector<std::string>&;

// Deterministic category for an action in context. Appliance effects
// disambiguate: TurnOn a heater is apply-heat, Close a cooler is apply-cold,
// TurnOn the cleaner is apply-clean; plain toggles are toggle-light.
auto tag_for(const sim::WorldState& state, const sim::ActionStep& action) -> std::string;

// 1 iff apply_action would succeed; pure dry run.
auto env_feasibility(const sim::WorldState& state, const sim::ActionStep& action) -> int;

// Scripted rubric, strongest rule first:
//   5  candidate equals the next step of the recomputed scripted completion
//   1  candidate is not executable here
//   2  candidate exactly repeats the immediately preceding step
//   4  candidate keeps the scripted completion length on pace (one step closer)
//   3  candidate strictly reduces the distance some other way
//   2  candidate leaves the distance unchanged (no-progress detour)
//   1  candidate increases the distance
// Value 0 is reserved for contexts where no completion exists at all.
auto oracle_process_reward(const sim::GoalCondition& goal,
                           const std::vector<sim::ActionStep>& history,
                           const sim::ActionStep& candidate,
                           const sim::WorldState& state_before) -> ProcessScore;

// r_total = alpha * r_proc + (1 - alpha) * (5 * r_env).
auto combine(const ProcessScore& r_proc, int r_env, double alpha = kDefaultAlpha) -> HybridScore;

}  // namespace planlab::reward
