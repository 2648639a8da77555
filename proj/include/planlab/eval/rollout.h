#pragma once

#include <functional>
#include <string>
#include <vector>

#include "planlab/model/scorer.h"
#include "planlab/taskgen/task.h"

namespace planlab::eval {

struct EpisodeResult {
    std::string task_id;
    bool success = false;
    std::vector<sim::ExecutedStep> steps;  // everything executed, Done included
    int model_length = 0;   // executed steps; failures count, Done does not
    int expert_length = 0;
    double pl = 0.0;  // success * expert_length / max(expert_length, model_length)

    auto operator==(const EpisodeResult&) const -> bool = default;
};

// Scripted policies and trained parameters share one rollout loop.
using Policy = std::function<model::ActionResponse(const model::ActionContext&)>;

auto greedy_policy(const model::ModelParams& params) -> Policy;

// Closed loop: build the context (goal, prior steps with status echoes,
// current observation), decode one step, apply it, repeat. Stops on Done or
// the step cap; non-executable steps become failed steps and consume budget.
// Success is judged on the final state alone.
auto rollout(const Policy& policy, const taskgen::Task& task, int max_steps = 25) -> EpisodeResult;
auto rollout(const model::ModelParams& params, const taskgen::Task& task, int max_steps = 25)
    -> EpisodeResult;

}  // namespace planlab::eval
