#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "planlab/sim/types.h"

namespace planlab::sim {

// Executes one action. On success the returned state carries exactly the
// rule-defined effects; on failure it is identical to the input except for
// step_count, which increments on both paths.
auto apply_action(const WorldState& state, const ActionStep& action)
    -> std::pair<WorldState, ExecStatus>;

// Partial observation: instances co-located with the agent whose container
// chain is fully open (or unopenable), excluding the held instance, plus the
// held instance's class. Action outcomes travel in the step history, not here.
auto observe(const WorldState& state) -> Observation;

// Node the instance ultimately rests at; the agent's node for hand-held chains.
auto resolve_node(const WorldState& state, const ObjectInstance& inst) -> std::string;

// Visibility predicate used by PickUp/Open/Close/TurnOn/TurnOff/Slice targets.
auto is_visible(const WorldState& state, const ObjectInstance& inst) -> bool;

// BFS hop distance between layout nodes; nullopt when disconnected/unknown.
auto node_distance(const Layout& layout, const std::string& from, const std::string& to)
    -> std::optional<int>;

// Instances of a class ordered by (distance from agent, instance id).
auto nearest_instance(const WorldState& state, const std::string& class_name)
    -> std::optional<std::string>;

// Direct and transitive content instance ids of a container, sorted.
auto contents_of(const WorldState& state, const std::string& container_id, bool transitive)
    -> std::vector<std::string>;

// Canonical single-line rendering. Excludes step_count unless requested, so
// search deduplication treats step-shifted copies as the same state.
auto canonical_key(const WorldState& state, bool include_step_count = false) -> std::string;

// Catalog invariant checks (appliances are receptacles or linked to one, etc.).
// Returns a human-readable problem description or nullopt when well-formed.
auto validate_catalog(const std::map<std::string, ObjectClass>& catalog)
    -> std::optional<std::string>;

}  // namespace planlab::sim
