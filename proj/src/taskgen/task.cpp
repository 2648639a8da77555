#include "planlab/taskgen/task.h"

namespace planlab::taskgen {

namespace {

const std::vector<std::pair<TaskType, std::string>> kTypeNames = {
    {TaskType::kExamineLight, "examine_light"}, {TaskType::kPickPlace, "pick_place"},
    {TaskType::kStackPlace, "stack_place"},     {TaskType::kCleanPlace, "clean_place"},
    {TaskType::kHeatPlace, "heat_place"},       {TaskType::kCoolPlace, "cool_place"},
};

}  // namespace

auto task_type_name(TaskType t) -> const std::string& {
    for (const auto& [type, name] : kTypeNames) {
        if (type == t) { return name; }
    }
    return kTypeNames.back().second;
}

auto task_type_from_name(const std::string& name) -> std::optional<TaskType> {
    for (const auto& [type, type_str] : kTypeNames) {
        if (type_str == name) { return type; }
    }
    return std::nullopt;
}

auto all_task_types() -> const std::vector<TaskType>& {
    static const std::vector<TaskType> types = [] {
        std::vector<TaskType> out;
        out.reserve(kTypeNames.size());
        for (const auto& [type, name] : kTypeNames) { out.push_back(type); }
        return out;
    }();
    return types;
}

}  // namespace planlab::taskgen
