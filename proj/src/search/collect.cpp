#include "planlab/search/collect.h"

#include <algorithm>
#include <utility>

#include "planlab/rng.h"
#include "planlab/sim/world.h"
#include "planlab/taskgen/planner.h"

namespace planlab::search {

namespace {

auto response_key(const model::ActionResponse& resp) -> std::string {
    return resp.tag + '\x1f' + sim::verb_name(resp.verb) + '\x1f' + resp.object;
}

auto path_from_root(const SearchTree& tree, int node_id) -> std::vector<int> {
    std::vector<int> path;
    for (int cur = node_id;;) {
        path.push_back(cur);
        const auto& parent = tree.nodes[cur].parent;
        if (!parent.has_value()) { break; }
        cur = *parent;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

void add_instrument_classes(const std::map<std::string, sim::ObjectClass>& catalog,
                            sim::FlagName flag, std::set<std::string>& out) {
    std::optional<sim::ApplianceEffect> effect;
    switch (flag) {
        case sim::FlagName::kHot: effect = sim::ApplianceEffect::kHeats; break;
        case sim::FlagName::kCold: effect = sim::ApplianceEffect::kCools; break;
        case sim::FlagName::kClean: effect = sim::ApplianceEffect::kCleans; break;
        default: break;
    }
    for (const auto& [name, cls] : catalog) {
        if (effect.has_value() && cls.appliance_effect == *effect) {
            out.insert(name);
            if (cls.linked_receptacle.has_value()) { out.insert(*cls.linked_receptacle); }
        }
        if (flag == sim::FlagName::kSliced && cls.has(sim::Capability::kCuttingTool)) {
            out.insert(name);
        }
    }
}

}  // namespace

auto oracle_scorer(const taskgen::Task& task) -> StepScorer {
    return [goal = task.goal](const sim::WorldState& state,
                              const std::vector<sim::ExecutedStep>& history, const std::string&,
                              const sim::ActionStep& candidate) {
        std::vector<sim::ActionStep> actions;
        actions.reserve(history.size());
        for (const auto& step : history) { actions.push_back(step.action); }
        const auto proc = reward::oracle_process_reward(goal, actions, candidate, state);
        return reward::combine(proc, reward::env_feasibility(state, candidate));
    };
}

auto sample_candidates(const model::ModelParams& policy, const model::ActionContext& ctx, int k,
                       double temperature, std::uint64_t seed)
    -> std::vector<model::ActionResponse> {
    if (k < 2) { throw std::invalid_argument("candidate count must be at least 2"); }
    std::vector<model::ActionResponse> out;
    out.reserve(k);
    Rng rng(seed);
    const int max_attempts = 4 * k;
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < k; ++attempt) {
        auto resp = model::sample_action(policy, ctx, temperature, rng);
        if (std::find(out.begin(), out.end(), resp) == out.end()) { out.push_back(std::move(resp)); }
    }
    return out;
}

auto default_candidates(const model::ModelParams& policy, const taskgen::Task& task,
                        const SearchConfig& config) -> CandidateFn {
    return [&policy, goal = task.goal, config](const model::ActionContext& ctx,
                                               const SearchNode& node) {
        std::vector<model::ActionResponse> out;
        if (config.oracle_guidance) {
            try {
                const auto completion = taskgen::plan_completion(goal, node.state);
                if (!completion.empty()) {
                    const auto& step = completion.front();
                    out.push_back(model::to_response(reward::tag_for(node.state, step), step));
                }
            } catch (const taskgen::PlanFailure&) {
                // Unplannable from here; the policy samples stand alone.
            }
        }
        for (auto& resp :
             sample_candidates(policy, ctx, config.candidates_per_node, config.temperature,
                               derive_seed(config.seed, "candidates", node.id))) {
            if (std::find(out.begin(), out.end(), resp) == out.end()) {
                out.push_back(std::move(resp));
            }
        }
        return out;
    };
}

auto relevant_classes(const taskgen::Task& task) -> std::set<std::string> {
    const auto& catalog = task.initial_state.scene->catalog;
    std::set<std::string> out;
    auto add = [&](const std::string& cls) {
        if (!cls.empty() && catalog.count(cls) > 0) { out.insert(cls); }
    };
    std::set<std::string> subjects;
    for (const auto& p : task.goal.predicates) {
        add(p.a);
        add(p.b);
        add(p.c);
        subjects.insert(p.a);
        if (p.kind == sim::PredicateKind::kStacked) { subjects.insert(p.b); }
        if (p.kind == sim::PredicateKind::kFlag) {
            add_instrument_classes(catalog, p.flag, out);
        }
    }
    // Starting containers of the goal movables: opening them is progress too.
    for (const auto& [id, inst] : task.initial_state.instances) {
        if (subjects.count(inst.class_name) == 0) { continue; }
        auto loc = inst.location;
        while (loc.kind == sim::LocationKind::kInReceptacle) {
            const auto& container = task.initial_state.instances.at(loc.ref);
            out.insert(container.class_name);
            loc = container.location;
        }
    }
    return out;
}

auto state_descriptor(const sim::WorldState& state, const std::set<std::string>& relevant)
    -> std::vector<std::string> {
    const auto& catalog = state.scene->catalog;
    std::set<std::string> tokens;
    for (const auto& [id, inst] : state.instances) {
        if (relevant.count(inst.class_name) == 0) { continue; }
        const auto& cls = catalog.at(inst.class_name);
        if (cls.has(sim::Capability::kPickupable)) {
            if (inst.location.kind == sim::LocationKind::kInHand) {
                tokens.insert("holding(" + inst.class_name + ")");
            } else if (inst.location.kind == sim::LocationKind::kInReceptacle) {
                const auto& container = state.instances.at(inst.location.ref);
                tokens.insert("on(" + inst.class_name + "," + container.class_name + ")");
            }
            if (inst.is_hot) { tokens.insert("hot(" + inst.class_name + ")"); }
            if (inst.is_cold) { tokens.insert("cold(" + inst.class_name + ")"); }
            if (inst.is_clean) { tokens.insert("clean(" + inst.class_name + ")"); }
            if (inst.is_sliced && cls.has(sim::Capability::kSliceable)) {
                tokens.insert("sliced(" + inst.class_name + ")");
            }
        }
        if (cls.has(sim::Capability::kOpenable) && inst.is_open) {
            tokens.insert("open(" + inst.class_name + ")");
        }
        if (cls.has(sim::Capability::kToggleable) && inst.is_on) {
            tokens.insert("toggled(" + inst.class_name + ")");
        }
    }
    return {tokens.begin(), tokens.end()};
}

auto node_context(const SearchTree& tree, int node_id, const std::vector<std::string>& goal_texts)
    -> model::ActionContext {
    model::ActionContext ctx;
    ctx.goal = goal_texts;
    for (const int id : path_from_root(tree, node_id)) {
        const auto& node = tree.nodes[id];
        if (node.incoming_action.has_value()) {
            // Only successful applications become edges.
            ctx.prior.push_back({*node.incoming_action, sim::ExecStatus::success()});
        }
    }
    ctx.observation = sim::observe(tree.nodes[node_id].state);
    ctx.step_index = tree.nodes[node_id].depth;
    return ctx;
}

auto expand(SearchTree& tree, const std::vector<int>& frontier, const CandidateFn& candidates,
            const StepScorer& scorer, const sim::GoalCondition& goal, const SearchConfig& config,
            TreeStats& stats) -> std::vector<int> {
    const auto goal_texts = sim::format_goal(goal);

    struct Pending {
        int parent;
        model::ActionResponse response;
        reward::HybridScore score;
        sim::WorldState state;
    };
    std::vector<Pending> accepted;

    for (const int nid : frontier) {
        auto& node = tree.nodes[nid];
        if (node.expanded || node.goal_reached || node.depth >= config.max_depth) { continue; }
        const auto ctx = node_context(tree, nid, goal_texts);
        node.expanded = true;
        ++stats.nodes_expanded;
        for (const auto& resp : candidates(ctx, node)) {
            const auto action = model::to_action_step(resp);
            const auto score = scorer(node.state, ctx.prior, resp.tag, action);
            ++stats.judge_calls;
            node.scored.push_back({resp, score});
            if (score.r_total < config.tau) { continue; }
            auto [next_state, status] = sim::apply_action(node.state, action);
            if (!status.ok) { continue; }
            accepted.push_back({nid, resp, score, std::move(next_state)});
        }
    }

    // Attach the whole level at once, then cut the next frontier to the beam.
    std::vector<int> child_ids;
    child_ids.reserve(accepted.size());
    int sample_index = 0;
    for (auto& pending : accepted) {
        SearchNode child;
        child.id = static_cast<int>(tree.nodes.size());
        child.parent = pending.parent;
        child.depth = tree.nodes[pending.parent].depth + 1;
        child.state = std::move(pending.state);
        child.incoming_action = model::to_action_step(pending.response);
        child.incoming_tag = pending.response.tag;
        child.score = pending.score;
        child.sample_index = sample_index++;
        child.goal_reached = sim::check_goal(child.state, goal);
        ++stats.nodes_created;
        stats.deepest_level = std::max(stats.deepest_level, child.depth);
        child_ids.push_back(child.id);
        tree.nodes.push_back(std::move(child));
    }

    std::vector<int> next;
    for (const int cid : child_ids) {
        const auto& child = tree.nodes[cid];
        if (!child.goal_reached && child.depth < config.max_depth) { next.push_back(cid); }
    }
    std::stable_sort(next.begin(), next.end(), [&](int a, int b) {
        return tree.nodes[a].score->r_total > tree.nodes[b].score->r_total;
    });
    if (static_cast<int>(next.size()) > config.beam_width) { next.resize(config.beam_width); }
    return next;
}

auto collect(const taskgen::Task& task, const CandidateFn& candidates, const StepScorer& scorer,
             const SearchConfig& config) -> CollectResult {
    CollectResult res;
    SearchTree& tree = res.tree;

    SearchNode root;
    root.state = task.initial_state;
    root.goal_reached = sim::check_goal(root.state, task.goal);
    tree.nodes.push_back(std::move(root));
    res.stats.nodes_created = 1;

    std::vector<int> goal_nodes;
    if (tree.nodes[0].goal_reached) { goal_nodes.push_back(0); }
    std::vector<int> frontier{0};
    while (goal_nodes.empty() && !frontier.empty()) {
        const auto before = tree.nodes.size();
        frontier = expand(tree, frontier, candidates, scorer, task.goal, config, res.stats);
        for (auto id = before; id < tree.nodes.size(); ++id) {
            if (tree.nodes[id].goal_reached) { goal_nodes.push_back(static_cast<int>(id)); }
        }
    }
    if (goal_nodes.empty()) { throw SearchExhausted(task.id); }
    res.stats.goals_found = static_cast<int>(goal_nodes.size());

    const auto goal_texts = sim::format_goal(task.goal);
    const auto relevant = relevant_classes(task);
    std::set<std::pair<int, std::string>> emitted;

    for (const int gid : goal_nodes) {
        const auto path = path_from_root(tree, gid);
        SftTrajectory traj;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            const auto& node = tree.nodes[path[i]];
            const auto& child = tree.nodes[path[i + 1]];
            auto ctx = node_context(tree, path[i], goal_texts);
            const auto chosen = model::to_response(*child.incoming_tag, *child.incoming_action);
            traj.push_back({ctx, chosen});

            if (!emitted.insert({node.id, response_key(chosen)}).second) { continue; }
            std::vector<model::ActionResponse> rejected;
            for (const auto& scored : node.scored) {
                if (!(scored.response == chosen)) { rejected.push_back(scored.response); }
            }
            if (rejected.empty()) { continue; }
            res.action_pairs.push_back({ctx, chosen, rejected, node.id});

            const auto anchor = state_descriptor(node.state, relevant);
            const auto chosen_next = state_descriptor(child.state, relevant);
            for (const auto& resp : rejected) {
                // Dry-run the sibling; a failed apply leaves the state as-is,
                // which is exactly the future such an action buys.
                const auto post = sim::apply_action(node.state, model::to_action_step(resp)).first;
                StatePrefPair pair;
                pair.anchor = anchor;
                pair.chosen_next = chosen_next;
                pair.rejected_next = {state_descriptor(post, relevant)};
                pair.source_node = node.id;
                pair.conditioning.mode = config.mode;
                if (config.mode == model::WorldModelMode::kActionConditioned) {
                    pair.conditioning.prev_state = anchor;
                    pair.conditioning.action = *child.incoming_action;
                } else {
                    pair.conditioning.goal = goal_texts;
                    pair.conditioning.history = ctx.prior;
                }
                res.state_pairs.push_back(std::move(pair));
            }
        }
        auto goal_ctx = node_context(tree, gid, goal_texts);
        const sim::ActionStep done{sim::Verb::kDone, std::nullopt};
        traj.push_back(
            {std::move(goal_ctx), model::to_response(reward::tag_for(tree.nodes[gid].state, done), done)});
        res.trajectories.push_back(std::move(traj));
    }
    return res;
}

auto collect(const taskgen::Task& task, const model::ModelParams& policy,
             const SearchConfig& config) -> CollectResult {
    return collect(task, default_candidates(policy, task, config), oracle_scorer(task), config);
}

}  // namespace planlab::search
