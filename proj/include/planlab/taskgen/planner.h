#pragma once

#include <stdexcept>
#include <vector>

#include "planlab/sim/goal.h"
#include "planlab/sim/types.h"

namespace planlab::taskgen {

class PlanFailure : public std::runtime_error {
  public:
    explicit PlanFailure(const std::string& why) : std::runtime_error("planning failed: " + why) {}
};

// Scripted completion from an arbitrary reachable state to the goal, ending in
// Done. Deterministic; every emitted step succeeds when replayed in order.
// Throws PlanFailure when the goal shape is unsupported or unreachable.
// Doubles as the distance-to-goal metric for process-reward scoring.
auto plan_completion(const sim::GoalCondition& goal, const sim::WorldState& state)
    -> std::vector<sim::ActionStep>;

// Expert demonstration from the initial state: plan_completion minus Done.
auto expert_plan(const sim::GoalCondition& goal, const sim::WorldState& initial_state)
    -> std::vector<sim::ActionStep>;

// Steps to goal from this state, excluding Done. Zero when already satisfied.
auto distance_to_goal(const sim::GoalCondition& goal, const sim::WorldState& state) -> int;

}  // namespace planlab::taskgen
