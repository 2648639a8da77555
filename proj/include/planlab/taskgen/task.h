#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "planlab/sim/goal.h"
#include "planlab/sim/types.h"

namespace planlab::taskgen {

enum class TaskType { kExamineLight, kPickPlace, kStackPlace, kCleanPlace, kHeatPlace, kCoolPlace };

auto task_type_name(TaskType t) -> const std::string&;
auto task_type_from_name(const std::string& name) -> std::optional<TaskType>;
auto all_task_types() -> const std::vector<TaskType>&;

struct Task {
    std::string id;
    TaskType type = TaskType::kPickPlace;
    std::string split;  // "seen" or "unseen", from the layout
    std::string instruction;
    sim::GoalCondition goal;
    sim::WorldState initial_state;
    // Length of the scripted expert plan, excluding the Done terminator.
    int expert_length = 0;
};

}  // namespace planlab::taskgen
