#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "planlab/sim/types.h"
#include "planlab/taskgen/task.h"

namespace planlab::taskgen {

class UnsatisfiableTask : public std::runtime_error {
  public:
    explicit UnsatisfiableTask(const std::string& why)
        : std::runtime_error("task generation failed: " + why) {}
};

// Built-in desk-scale content: 35 object classes, 8 layouts (4 seen, 4 unseen).
auto default_catalog() -> std::map<std::string, sim::ObjectClass>;
auto default_layouts() -> std::vector<sim::Layout>;

// Deterministic for a given seed: count tasks per task type, alternating over
// layouts of the requested split ("seen", "unseen", or "both"). Every task is
// validated by replaying its expert plan before being returned.
auto generate_tasks(const std::map<std::string, sim::ObjectClass>& catalog,
                    const std::vector<sim::Layout>& layouts, int count_per_type,
                    std::uint64_t seed, const std::string& split = "both") -> std::vector<Task>;

// Fresh world on the given layout: one instance per furnishing class, movables
// placed on surfaces, appliances closed and off, agent at a seeded node.
auto build_scene(const std::map<std::string, sim::ObjectClass>& catalog, const sim::Layout& layout,
                 const std::vector<std::string>& movable_classes, std::uint64_t seed)
    -> sim::WorldState;

}  // namespace planlab::taskgen
