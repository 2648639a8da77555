#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "planlab/model/scorer.h"
#include "planlab/reward/score.h"
#include "planlab/taskgen/task.h"

namespace planlab::search {

class SearchExhausted : public std::runtime_error {
  public:
    explicit SearchExhausted(const std::string& task_id)
        : std::runtime_error("no goal state found within the search budget: " + task_id) {}
};

struct SearchConfig {
    int candidates_per_node = 5;
    double temperature = 0.8;
    double tau = reward::kDefaultTau;
    int max_depth = 25;
    // The level-synchronous frontier keeps at most this many children, highest
    // total score first, ties broken by creation order within the level.
    int beam_width = 16;
    // Splices the scripted next step into every node's candidate set so an
    // untrained sampling policy still reaches goals; scored like any candidate.
    bool oracle_guidance = true;
    std::uint64_t seed = 0;
    model::WorldModelMode mode = model::WorldModelMode::kActionConditioned;
};

struct ScoredCandidate {
    model::ActionResponse response;
    reward::HybridScore score;

    auto operator==(const ScoredCandidate&) const -> bool = default;
};

struct SearchNode {
    int id = 0;
    std::optional<int> parent;
    int depth = 0;
    sim::WorldState state;
    std::optional<sim::ActionStep> incoming_action;
    std::optional<std::string> incoming_tag;
    std::optional<reward::HybridScore> score;  // of the incoming edge
    bool expanded = false;
    bool goal_reached = false;
    int sample_index = 0;  // creation order within the level; beam tiebreak
    // Everything scored here during expansion, in sampling order. Rejected
    // alternatives for preference pairs are drawn from this list.
    std::vector<ScoredCandidate> scored;
};

// nodes[0] is the root; ids are indices and children always follow parents.
struct SearchTree {
    std::vector<SearchNode> nodes;
};

// Scores one candidate against the state it would act in. History carries the
// executed path from the root, status echoes included.
using StepScorer = std::function<reward::HybridScore(
    const sim::WorldState& state, const std::vector<sim::ExecutedStep>& history,
    const std::string& tag, const sim::ActionStep& candidate)>;

// Proposes candidates for an unexpanded node; duplicates are already removed.
using CandidateFn = std::function<std::vector<model::ActionResponse>(
    const model::ActionContext& ctx, const SearchNode& node)>;

// Rubric-based scorer over the scripted planner; no network involved.
auto oracle_scorer(const taskgen::Task& task) -> StepScorer;

// Policy sampling plus optional scripted-step guidance per SearchConfig.
auto default_candidates(const model::ModelParams& policy, const taskgen::Task& task,
                        const SearchConfig& config) -> CandidateFn;

// Up to k distinct responses sampled at the given temperature; duplicates are
// resampled a bounded number of times, then dropped. Deterministic per seed.
auto sample_candidates(const model::ModelParams& policy, const model::ActionContext& ctx, int k,
                       double temperature, std::uint64_t seed)
    -> std::vector<model::ActionResponse>;

// Classes a task's progress can be read from: goal arguments, the appliances
// and tools that produce demanded flags, and the goal movables' starting
// containers. Fixed for the task's lifetime.
auto relevant_classes(const taskgen::Task& task) -> std::set<std::string>;

// Sorted predicate tokens (holding/on/open/toggled/hot/cold/clean/sliced) over
// instances of the relevant classes; a pure function of the world state.
auto state_descriptor(const sim::WorldState& state, const std::set<std::string>& relevant)
    -> std::vector<std::string>;

// Prompt-shaped context for a node: goal texts, executed path, observation.
auto node_context(const SearchTree& tree, int node_id, const std::vector<std::string>& goal_texts)
    -> model::ActionContext;

struct SftStep {
    model::ActionContext context;
    model::ActionResponse chosen;

    auto operator==(const SftStep&) const -> bool = default;
};
using SftTrajectory = std::vector<SftStep>;

struct ActionPrefPair {
    model::ActionContext context;
    model::ActionResponse chosen;
    std::vector<model::ActionResponse> rejected;  // scored siblings, never the chosen
    int source_node = 0;

    auto operator==(const ActionPrefPair&) const -> bool = default;
};

struct StatePrefPair {
    model::StateConditioning conditioning;
    std::vector<std::string> anchor;       // descriptor before the action
    std::vector<std::string> chosen_next;  // descriptor after the chosen action
    std::vector<std::vector<std::string>> rejected_next;
    int source_node = 0;

    auto operator==(const StatePrefPair&) const -> bool = default;
};

struct TreeStats {
    int nodes_created = 0;
    int nodes_expanded = 0;
    int goals_found = 0;
    int judge_calls = 0;
    int deepest_level = 0;
};

struct CollectResult {
    std::vector<SftTrajectory> trajectories;
    std::vector<ActionPrefPair> action_pairs;
    std::vector<StatePrefPair> state_pairs;
    TreeStats stats;
    SearchTree tree;
};

// One breadth-first level: proposes and scores candidates for every frontier
// node, attaches children for candidates at or above tau, and returns the
// beam-capped next frontier (goal children are terminal and never enter it).
auto expand(SearchTree& tree, const std::vector<int>& frontier, const CandidateFn& candidates,
            const StepScorer& scorer, const sim::GoalCondition& goal, const SearchConfig& config,
            TreeStats& stats) -> std::vector<int>;

// Runs expand until the first level with goal nodes, then backtracks every
// goal node into an SFT trajectory (ending in Done) and into preference pairs:
// per path step one ActionPrefPair when scored siblings exist, plus one
// StatePrefPair per sibling. Duplicate (context, chosen) pairs keep the first.
// Throws SearchExhausted when the budget runs out with no goal.
auto collect(const taskgen::Task& task, const CandidateFn& candidates, const StepScorer& scorer,
             const SearchConfig& config) -> CollectResult;

// Convenience wrapper: default candidates plus the oracle scorer.
auto collect(const taskgen::Task& task, const model::ModelParams& policy,
             const SearchConfig& config) -> CollectResult;

}  // namespace planlab::search
