#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "planlab/model/vocab.h"
#include "planlab/sim/types.h"

namespace planlab::model {

// Everything the policy may condition on at one step, reconstructible both
// from a live rollout and from a stored dataset record.
struct ActionContext {
    std::vector<std::string> goal;         // canonical predicate texts
    std::vector<sim::ExecutedStep> prior;  // executed steps with status echoes
    sim::Observation observation;
    int step_index = 0;

    auto operator==(const ActionContext&) const -> bool = default;
};

enum class WorldModelMode { kActionConditioned, kGoalDirected };

auto mode_name(WorldModelMode mode) -> const std::string&;
auto mode_from_name(const std::string& name) -> std::optional<WorldModelMode>;

// Conditioning for the next-state head. Exactly one shape is legal per mode:
// action_conditioned reads (prev_state, action), goal_directed reads
// (goal, history); the unused fields must stay empty.
struct StateConditioning {
    WorldModelMode mode = WorldModelMode::kActionConditioned;
    std::vector<std::string> prev_state;    // descriptor tokens of s_{t-1}
    std::optional<sim::ActionStep> action;  // a_t
    std::vector<std::string> goal;
    std::vector<sim::ExecutedStep> history;

    auto operator==(const StateConditioning&) const -> bool = default;
};

// Sorted hashed indices in [0, dim); repeats are kept so a colliding feature
// contributes once per occurrence in both scoring and gradients.
using FeatureVec = std::vector<int>;

auto hash_feature(std::string_view feature, int dim) -> int;

auto action_context_features(const Vocabulary& vocab, const ActionContext& ctx, int dim)
    -> FeatureVec;

// Slot refinements: the verb distribution sees the selected tag, the object
// distribution sees both selections.
auto with_selected_tag(const FeatureVec& base, const std::string& tag, int dim) -> FeatureVec;
auto with_selected_tag_verb(const FeatureVec& base, const std::string& tag,
                            const std::string& verb, int dim) -> FeatureVec;

// Per-position features of the autoregressive state head.
auto state_step_features(const StateConditioning& cond, const std::string& prev_token,
                         int position, int dim) -> FeatureVec;

}  // namespace planlab::model
