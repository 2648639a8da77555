#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "planlab/sim/types.h"
#include "planlab/taskgen/generate.h"

namespace planlab::testing {

// Two-node scene with the full appliance set, used by most sim tests.
//   prep: countertop, microwave, fridge, cabinet  |  wash: sinkbasin, faucet, diningtable, floorlamp
inline auto tiny_layout() -> sim::Layout {
    sim::Layout l;
    l.name = "tiny";
    l.split = "seen";
    l.nodes = {"prep", "wash"};
    l.adjacency["prep"] = {"wash"};
    l.adjacency["wash"] = {"prep"};
    l.furnishings["prep"] = {"countertop", "microwave", "fridge", "cabinet"};
    l.furnishings["wash"] = {"sinkbasin", "faucet", "diningtable", "floorlamp"};
    return l;
}

inline auto tiny_scene(const std::vector<std::string>& movables = {"apple", "knife"},
                       std::uint64_t seed = 7) -> sim::WorldState {
    return taskgen::build_scene(taskgen::default_catalog(), tiny_layout(), movables, seed);
}

inline auto step(sim::WorldState& state, sim::Verb verb, const std::string& target)
    -> sim::ExecStatus {
    auto [next, status] = sim::apply_action(state, sim::ActionStep{verb, target});
    state = std::move(next);
    return status;
}

inline auto step_done(sim::WorldState& state) -> sim::ExecStatus {
    auto [next, status] = sim::apply_action(state, sim::ActionStep{sim::Verb::kDone, {}});
    state = std::move(next);
    return status;
}

inline auto find_id(const sim::WorldState& state, const std::string& cls) -> std::string {
    for (const auto& [id, inst] : state.instances) {
        if (inst.class_name == cls) { return id; }
    }
    return {};
}

}  // namespace planlab::testing
