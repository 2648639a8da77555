#include "planlab/eval/rollout.h"

#include <algorithm>
#include <utility>

#include "planlab/sim/goal.h"
#include "planlab/sim/world.h"

namespace planlab::eval {

auto greedy_policy(const model::ModelParams& params) -> Policy {
    // Captured by value so the policy outlives its source.
    return [params](const model::ActionContext& ctx) { return model::greedy_action(params, ctx); };
}

auto rollout(const Policy& policy, const taskgen::Task& task, int max_steps) -> EpisodeResult {
    EpisodeResult episode;
    episode.task_id = task.id;
    episode.expert_length = task.expert_length;

    const auto goal_texts = sim::format_goal(task.goal);
    auto state = task.initial_state;
    for (int step = 0; step < max_steps; ++step) {
        model::ActionContext ctx;
        ctx.goal = goal_texts;
        ctx.prior = episode.steps;
        ctx.observation = sim::observe(state);
        ctx.step_index = static_cast<int>(episode.steps.size());

        const auto action = model::to_action_step(policy(ctx));
        auto [next, status] = sim::apply_action(state, action);
        episode.steps.push_back({action, status});
        state = std::move(next);
        if (action.verb == sim::Verb::kDone) { break; }
        ++episode.model_length;
    }
    episode.success = sim::check_goal(state, task.goal);
    const int denom = std::max(episode.expert_length, episode.model_length);
    if (episode.success) {
        episode.pl = denom == 0 ? 1.0 : static_cast<double>(episode.expert_length) / denom;
    }
    return episode;
}

auto rollout(const model::ModelParams& params, const taskgen::Task& task, int max_steps)
    -> EpisodeResult {
    return rollout(
        [&params](const model::ActionContext& ctx) { return model::greedy_action(params, ctx); },
        task, max_steps);
}

}  // namespace planlab::eval
