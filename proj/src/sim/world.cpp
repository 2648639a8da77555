#include "planlab/sim/world.h"

#include <algorithm>
#include <deque>
#include <sstream>

namespace planlab::sim {

namespace {

auto class_of(const WorldState& state, const ObjectInstance& inst) -> const ObjectClass* {
    const auto it = state.scene->catalog.find(inst.class_name);
    return it == state.scene->catalog.end() ? nullptr : &it->second;
}

// Containers an instance sits inside, innermost first. Ends at a node or the hand.
struct ChainEnd {
    bool in_hand = false;
    std::string node;
    std::vector<const ObjectInstance*> containers;
};

auto containment_chain(const WorldState& state, const ObjectInstance& inst) -> ChainEnd {
    ChainEnd end;
    const ObjectInstance* cur = &inst;
    // Containment is acyclic by construction; bound the walk defensively anyway.
    for (std::size_t hops = 0; hops <= state.instances.size(); ++hops) {
        switch (cur->location.kind) {
            case LocationKind::kAtNode:
                end.node = cur->location.ref;
                return end;
            case LocationKind::kInHand:
                end.in_hand = true;
                return end;
            case LocationKind::kInReceptacle: {
                const auto it = state.instances.find(cur->location.ref);
                if (it == state.instances.end()) { return end; }
                cur = &it->second;
                end.containers.push_back(cur);
                break;
            }
        }
    }
    return end;
}

auto chain_open(const WorldState& state, const ChainEnd& chain) -> bool {
    for (const ObjectInstance* container : chain.containers) {
        const ObjectClass* cls = class_of(state, *container);
        if (cls != nullptr && cls->has(Capability::kOpenable) && !container->is_open) {
            return false;
        }
    }
    return true;
}

// Lowest-id visible instance of a class, or nullopt.
auto visible_instance(const WorldState& state, const std::string& class_name)
    -> std::optional<std::string> {
    for (const auto& [id, inst] : state.instances) {
        if (inst.class_name == class_name && is_visible(state, inst)) { return id; }
    }
    return std::nullopt;
}

// Toggleable class whose linked_receptacle is this receptacle class, if any.
auto linked_toggleable(const WorldState& state, const std::string& receptacle_class)
    -> std::optional<std::string> {
    for (const auto& [name, cls] : state.scene->catalog) {
        if (cls.linked_receptacle.has_value() && *cls.linked_receptacle == receptacle_class) {
            return name;
        }
    }
    return std::nullopt;
}

void mark_contents(WorldState& state, const std::string& container_id,
                   void (*mutate)(ObjectInstance&)) {
    for (const auto& id : contents_of(state, container_id, /*transitive=*/true)) {
        mutate(state.instances.at(id));
    }
}

auto fail(const WorldState& state, ErrorTag tag) -> std::pair<WorldState, ExecStatus> {
    WorldState next = state;
    next.step_count += 1;
    return {std::move(next), ExecStatus::failure(tag)};
}

auto succeed(WorldState next) -> std::pair<WorldState, ExecStatus> {
    next.step_count += 1;
    return {std::move(next), ExecStatus::success()};
}

auto apply_find(const WorldState& state, const std::string& target)
    -> std::pair<WorldState, ExecStatus> {
    const auto nearest = nearest_instance(state, target);
    if (!nearest.has_value()) { return fail(state, ErrorTag::kTargetNotFound); }
    WorldState next = state;
    const auto& inst = next.instances.at(*nearest);
    next.agent.node = resolve_node(next, inst);
    const ObjectClass* cls = class_of(next, inst);
    if (cls != nullptr && cls->has(Capability::kReceptacle)) {
        next.agent.last_visited_receptacle = inst.id;
    }
    return succeed(std::move(next));
}

auto apply_pick_up(const WorldState& state, const std::string& target)
    -> std::pair<WorldState, ExecStatus> {
    if (state.agent.held.has_value()) { return fail(state, ErrorTag::kHandOccupied); }
    const auto id = visible_instance(state, target);
    if (!id.has_value()) { return fail(state, ErrorTag::kTargetNotFound); }
    // Fixed furniture is not liftable; report it like a missing pickup target.
    const ObjectClass* target_cls = class_of(state, state.instances.at(*id));
    if (target_cls == nullptr || !target_cls->has(Capability::kPickupable)) {
        return fail(state, ErrorTag::kTargetNotFound);
    }
    WorldState next = state;
    next.instances.at(*id).location = Location::in_hand();
    next.agent.held = *id;
    return succeed(std::move(next));
}

auto apply_put_down(const WorldState& state, const std::string& target)
    -> std::pair<WorldState, ExecStatus> {
    if (!state.agent.held.has_value()) { return fail(state, ErrorTag::kHandEmpty); }
    const auto& held = state.instances.at(*state.agent.held);
    if (held.class_name != target) { return fail(state, ErrorTag::kTargetNotFound); }
    if (!state.agent.last_visited_receptacle.has_value()) {
        return fail(state, ErrorTag::kNoReceptacleVisited);
    }
    const auto recep_it = state.instances.find(*state.agent.last_visited_receptacle);
    // A receptacle that left the agent's reach (picked up, or agent walked away)
    // is as good as never visited.
    if (recep_it == state.instances.end() || !is_visible(state, recep_it->second)) {
        return fail(state, ErrorTag::kNoReceptacleVisited);
    }
    // Placing a held container into its own contents would create a cycle.
    const auto recep_chain = containment_chain(state, recep_it->second);
    for (const ObjectInstance* container : recep_chain.containers) {
        if (container->id == *state.agent.held) {
            return fail(state, ErrorTag::kNoReceptacleVisited);
        }
    }
    const ObjectClass* recep_cls = class_of(state, recep_it->second);
    if (recep_cls != nullptr && recep_cls->has(Capability::kOpenable) && !recep_it->second.is_open) {
        return fail(state, ErrorTag::kContainerClosed);
    }

    WorldState next = state;
    auto& placed = next.instances.at(*state.agent.held);
    placed.location = Location::in_receptacle(recep_it->first);
    next.agent.held.reset();

    // Running faucet cleans whatever lands in its basin.
    if (recep_cls != nullptr) {
        const auto faucet_class = linked_toggleable(next, recep_cls->name);
        if (faucet_class.has_value()) {
            for (const auto& [fid, finst] : next.instances) {
                if (finst.class_name == *faucet_class && finst.is_on) {
                    placed.is_clean = true;
                    break;
                }
            }
        }
    }
    return succeed(std::move(next));
}

auto apply_open(const WorldState& state, const std::string& target)
    -> std::pair<WorldState, ExecStatus> {
    const auto id = visible_instance(state, target);
    if (!id.has_value()) { return fail(state, ErrorTag::kTargetNotFound); }
    const auto& inst = state.instances.at(*id);
    const ObjectClass* cls = class_of(state, inst);
    if (cls == nullptr || !cls->has(Capability::kOpenable)) {
        return fail(state, ErrorTag::kNotOpenable);
    }
    if (inst.is_open) { return fail(state, ErrorTag::kAlreadyInState); }
    WorldState next = state;
    next.instances.at(*id).is_open = true;
    return succeed(std::move(next));
}

auto apply_close(const WorldState& state, const std::string& target)
    -> std::pair<WorldState, ExecStatus> {
    const auto id = visible_instance(state, target);
    if (!id.has_value()) { return fail(state, ErrorTag::kTargetNotFound); }
    const auto& inst = state.instances.at(*id);
    const ObjectClass* cls = class_of(state, inst);
    if (cls == nullptr || !cls->has(Capability::kOpenable)) {
        return fail(state, ErrorTag::kNotOpenable);
    }
    if (!inst.is_open) { return fail(state, ErrorTag::kAlreadyInState); }
    WorldState next = state;
    next.instances.at(*id).is_open = false;
    if (cls->appliance_effect == ApplianceEffect::kCools) {
        mark_contents(next, *id, [](ObjectInstance& o) {
            o.is_cold = true;
            o.is_hot = false;
        });
    }
    return succeed(std::move(next));
}

auto apply_turn_on(const WorldState& state, const std::string& target)
    -> std::pair<WorldState, ExecStatus> {
    const auto id = visible_instance(state, target);
    if (!id.has_value()) { return fail(state, ErrorTag::kTargetNotFound); }
    const auto& inst = state.instances.at(*id);
    const ObjectClass* cls = class_of(state, inst);
    if (cls == nullptr || !cls->has(Capability::kToggleable)) {
        return fail(state, ErrorTag::kNotToggleable);
    }
    if (inst.is_on) { return fail(state, ErrorTag::kAlreadyInState); }
    WorldState next = state;
    auto& powered = next.instances.at(*id);
    powered.is_on = true;
    if (cls->appliance_effect == ApplianceEffect::kHeats) {
        // Heat only reaches the cavity when the door is shut.
        if (!cls->has(Capability::kOpenable) || !powered.is_open) {
            mark_contents(next, *id, [](ObjectInstance& o) {
                o.is_hot = true;
                o.is_cold = false;
            });
        }
    } else if (cls->appliance_effect == ApplianceEffect::kCleans &&
               cls->linked_receptacle.has_value()) {
        for (const auto& [bid, basin] : next.instances) {
            if (basin.class_name == *cls->linked_receptacle) {
                mark_contents(next, bid, [](ObjectInstance& o) { o.is_clean = true; });
            }
        }
    }
    return succeed(std::move(next));
}

auto apply_turn_off(const WorldState& state, const std::string& target)
    -> std::pair<WorldState, ExecStatus> {
    const auto id = visible_instance(state, target);
    if (!id.has_value()) { return fail(state, ErrorTag::kTargetNotFound); }
    const auto& inst = state.instances.at(*id);
    const ObjectClass* cls = class_of(state, inst);
    if (cls == nullptr || !cls->has(Capability::kToggleable)) {
        return fail(state, ErrorTag::kNotToggleable);
    }
    if (!inst.is_on) { return fail(state, ErrorTag::kAlreadyInState); }
    WorldState next = state;
    next.instances.at(*id).is_on = false;
    return succeed(std::move(next));
}

auto apply_slice(const WorldState& state, const std::string& target)
    -> std::pair<WorldState, ExecStatus> {
    const auto id = visible_instance(state, target);
    if (!id.has_value()) { return fail(state, ErrorTag::kTargetNotFound); }
    const auto& inst = state.instances.at(*id);
    const ObjectClass* cls = class_of(state, inst);
    if (cls == nullptr || !cls->has(Capability::kSliceable)) {
        return fail(state, ErrorTag::kNotSliceable);
    }
    if (inst.is_sliced) { return fail(state, ErrorTag::kAlreadyInState); }
    if (!state.agent.held.has_value()) { return fail(state, ErrorTag::kHandEmpty); }
    const auto& tool = state.instances.at(*state.agent.held);
    const ObjectClass* tool_cls = class_of(state, tool);
    if (tool_cls == nullptr || !tool_cls->has(Capability::kCuttingTool)) {
        return fail(state, ErrorTag::kNotSliceable);
    }
    WorldState next = state;
    next.instances.at(*id).is_sliced = true;
    return succeed(std::move(next));
}

}  // namespace

auto apply_action(const WorldState& state, const ActionStep& action)
    -> std::pair<WorldState, ExecStatus> {
    if (action.verb == Verb::kDone) { return succeed(state); }
    // Non-Done verbs need a target; a malformed step is a failed lookup.
    if (!action.target.has_value() || action.target->empty()) {
        return fail(state, ErrorTag::kTargetNotFound);
    }
    const std::string& target = *action.target;
    switch (action.verb) {
        case Verb::kFind: return apply_find(state, target);
        case Verb::kPickUp: return apply_pick_up(state, target);
        case Verb::kPutDown: return apply_put_down(state, target);
        case Verb::kOpen: return apply_open(state, target);
        case Verb::kClose: return apply_close(state, target);
        case Verb::kTurnOn: return apply_turn_on(state, target);
        case Verb::kTurnOff: return apply_turn_off(state, target);
        case Verb::kSlice: return apply_slice(state, target);
        case Verb::kDone: break;
    }
    return succeed(state);
}

auto observe(const WorldState& state) -> Observation {
    Observation obs;
    for (const auto& [id, inst] : state.instances) {
        if (state.agent.held.has_value() && id == *state.agent.held) { continue; }
        if (is_visible(state, inst)) {
            obs.visible.push_back({id, inst.class_name, flag_names(inst)});
        }
    }
    if (state.agent.held.has_value()) {
        obs.hand = state.instances.at(*state.agent.held).class_name;
    }
    return obs;
}

auto resolve_node(const WorldState& state, const ObjectInstance& inst) -> std::string {
    const auto chain = containment_chain(state, inst);
    return chain.in_hand ? state.agent.node : chain.node;
}

auto is_visible(const WorldState& state, const ObjectInstance& inst) -> bool {
    if (state.agent.held.has_value() && inst.id == *state.agent.held) { return false; }
    const auto chain = containment_chain(state, inst);
    const bool co_located = chain.in_hand || chain.node == state.agent.node;
    return co_located && chain_open(state, chain);
}

auto node_distance(const Layout& layout, const std::string& from, const std::string& to)
    -> std::optional<int> {
    if (from == to) { return 0; }
    std::map<std::string, int> dist;
    dist[from] = 0;
    std::deque<std::string> queue = {from};
    while (!queue.empty()) {
        const std::string cur = queue.front();
        queue.pop_front();
        const auto adj = layout.adjacency.find(cur);
        if (adj == layout.adjacency.end()) { continue; }
        for (const auto& next : adj->second) {
            if (dist.contains(next)) { continue; }
            dist[next] = dist[cur] + 1;
            if (next == to) { return dist[next]; }
            queue.push_back(next);
        }
    }
    return std::nullopt;
}

auto nearest_instance(const WorldState& state, const std::string& class_name)
    -> std::optional<std::string> {
    std::optional<std::string> best;
    int best_dist = 0;
    for (const auto& [id, inst] : state.instances) {
        if (inst.class_name != class_name) { continue; }
        const auto node = resolve_node(state, inst);
        const auto d = node_distance(state.scene->layout, state.agent.node, node);
        if (!d.has_value()) { continue; }
        if (!best.has_value() || *d < best_dist) {
            best = id;
            best_dist = *d;
        }
    }
    return best;
}

auto contents_of(const WorldState& state, const std::string& container_id, bool transitive)
    -> std::vector<std::string> {
    std::vector<std::string> out;
    for (const auto& [id, inst] : state.instances) {
        if (inst.location.kind != LocationKind::kInReceptacle) { continue; }
        if (inst.location.ref == container_id) {
            out.push_back(id);
        } else if (transitive) {
            const auto chain = containment_chain(state, inst);
            for (const ObjectInstance* container : chain.containers) {
                if (container->id == container_id) {
                    out.push_back(id);
                    break;
                }
            }
        }
    }
    return out;
}

auto canonical_key(const WorldState& state, bool include_step_count) -> std::string {
    std::ostringstream out;
    out << "agent@" << state.agent.node;
    out << "|held=" << state.agent.held.value_or("-");
    out << "|recep=" << state.agent.last_visited_receptacle.value_or("-");
    if (include_step_count) { out << "|step=" << state.step_count; }
    for (const auto& [id, inst] : state.instances) {
        out << "|" << id << ":";
        switch (inst.location.kind) {
            case LocationKind::kAtNode: out << "@" << inst.location.ref; break;
            case LocationKind::kInReceptacle: out << ">" << inst.location.ref; break;
            case LocationKind::kInHand: out << "^"; break;
        }
        for (const auto& flag : flag_names(inst)) { out << "+" << flag; }
    }
    return out.str();
}

auto validate_catalog(const std::map<std::string, ObjectClass>& catalog)
    -> std::optional<std::string> {
    for (const auto& [name, cls] : catalog) {
        if (name.empty() || name != cls.name) {
            return "class name mismatch for catalog entry '" + name + "'";
        }
        if (cls.appliance_effect.has_value()) {
            if (cls.linked_receptacle.has_value()) {
                const auto it = catalog.find(*cls.linked_receptacle);
                if (it == catalog.end() || !it->second.has(Capability::kReceptacle)) {
                    return "class '" + name + "' links to a non-receptacle";
                }
                if (!cls.has(Capability::kToggleable)) {
                    return "linked appliance '" + name + "' must be toggleable";
                }
            } else if (!cls.has(Capability::kReceptacle)) {
                return "appliance '" + name + "' must be a receptacle or linked to one";
            }
        }
        if (cls.linked_receptacle.has_value() && !cls.appliance_effect.has_value()) {
            return "class '" + name + "' has a linked receptacle but no effect";
        }
    }
    return std::nullopt;
}

}  // namespace planlab::sim
