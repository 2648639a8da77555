#include "planlab/taskgen/generate.h"

#include <algorithm>
#include <set>

#include "planlab/rng.h"
#include "planlab/sim/world.h"
#include "planlab/taskgen/planner.h"

namespace planlab::taskgen {

namespace {

using sim::ActionStep;
using sim::ApplianceEffect;
using sim::Capability;
using sim::GoalCondition;
using sim::GoalPredicate;
using sim::Layout;
using sim::ObjectClass;
using sim::WorldState;

constexpr unsigned kPick = static_cast<unsigned>(Capability::kPickupable);
constexpr unsigned kRecep = static_cast<unsigned>(Capability::kReceptacle);
constexpr unsigned kOpen = static_cast<unsigned>(Capability::kOpenable);
constexpr unsigned kToggle = static_cast<unsigned>(Capability::kToggleable);
constexpr unsigned kSlice = static_cast<unsigned>(Capability::kSliceable);
constexpr unsigned kCut = static_cast<unsigned>(Capability::kCuttingTool);

auto make_class(const std::string& name, unsigned caps,
                std::optional<ApplianceEffect> effect = std::nullopt,
                std::optional<std::string> linked = std::nullopt) -> ObjectClass {
    ObjectClass cls;
    cls.name = name;
    cls.capabilities = caps;
    cls.appliance_effect = effect;
    cls.linked_receptacle = std::move(linked);
    return cls;
}

// Object pools per task type. All classes below exist in default_catalog.
const std::vector<std::string> kExamineObjects = {"book", "vase", "pencil", "keychain",
                                                  "creditcard", "mug"};
const std::vector<std::string> kStackInner = {"sponge", "apple", "tomato", "spoon", "keychain",
                                              "washcloth"};
const std::vector<std::string> kStackMid = {"bowl", "pot", "pan", "plate"};
const std::vector<std::string> kStackDest = {"sinkbasin", "diningtable", "countertop", "cabinet"};
const std::vector<std::string> kCleanObjects = {"washcloth", "sponge", "plate", "bowl", "cup",
                                                "mug", "apple", "tomato", "lettuce"};
const std::vector<std::string> kFoods = {"apple", "tomato", "potato", "bread", "lettuce"};
const std::vector<std::string> kCoolObjects = {"apple", "tomato", "lettuce", "bread", "cup",
                                               "mug", "bowl"};

struct Template {
    std::string text;  // with {obj} {dest} {lamp} {mid} slots
};

auto fill(const std::string& tpl, const std::map<std::string, std::string>& slots) -> std::string {
    std::string out;
    out.reserve(tpl.size());
    for (std::size_t i = 0; i < tpl.size(); ++i) {
        if (tpl[i] == '{') {
            const auto end = tpl.find('}', i);
            out += slots.at(tpl.substr(i + 1, end - i - 1));
            i = end;
        } else {
            out.push_back(tpl[i]);
        }
    }
    return out;
}

auto surfaces_in(const WorldState& state) -> std::vector<std::string> {
    std::set<std::string> out;
    for (const auto& [id, inst] : state.instances) {
        const auto& cls = state.scene->catalog.at(inst.class_name);
        if (cls.has(Capability::kReceptacle) && !cls.has(Capability::kOpenable) &&
            !cls.has(Capability::kPickupable) && inst.class_name != "sinkbasin") {
            out.insert(inst.class_name);
        }
    }
    return {out.begin(), out.end()};
}

auto lamps_in(const WorldState& state) -> std::vector<std::string> {
    std::set<std::string> out;
    for (const auto& [id, inst] : state.instances) {
        const auto& cls = state.scene->catalog.at(inst.class_name);
        if (cls.has(Capability::kToggleable) && !cls.appliance_effect.has_value()) {
            out.insert(inst.class_name);
        }
    }
    return {out.begin(), out.end()};
}

struct Draft {
    TaskType type;
    std::vector<std::string> movables;  // classes that must exist in the scene
    GoalCondition goal;
    std::string instruction;
};

auto draft_task(TaskType type, const Layout& layout,
                const std::map<std::string, ObjectClass>& catalog, Rng& rng) -> Draft {
    // Build a probe scene just to enumerate available furniture classes.
    const WorldState probe = build_scene(catalog, layout, {}, 1);
    const auto surfaces = surfaces_in(probe);
    const auto lamps = lamps_in(probe);
    const auto pick_from = [&rng](const std::vector<std::string>& pool) {
        return pool[static_cast<std::size_t>(rng.uniform_below(pool.size()))];
    };

    Draft d;
    d.type = type;
    switch (type) {
        case TaskType::kExamineLight: {
            const auto obj = pick_from(kExamineObjects);
            const auto lamp = pick_from(lamps);
            d.movables = {obj};
            d.goal.predicates = {GoalPredicate::make_flag(obj, sim::FlagName::kHeld),
                                 GoalPredicate::make_flag(lamp, sim::FlagName::kToggled)};
            const std::vector<std::string> tpls = {
                "Examine a {obj} under the {lamp}.",
                "Look at the {obj} in the light of the {lamp}.",
                "Inspect the {obj} under the {lamp}.",
            };
            d.instruction = fill(pick_from(tpls), {{"obj", obj}, {"lamp", lamp}});
            break;
        }
        case TaskType::kPickPlace: {
            std::vector<std::string> objects;
            for (const auto& [name, cls] : catalog) {
                if (cls.has(Capability::kPickupable)) { objects.push_back(name); }
            }
            auto dests = surfaces;
            dests.emplace_back("cabinet");
            dests.emplace_back("drawer");
            const auto obj = pick_from(objects);
            const auto dest = pick_from(dests);
            d.movables = {obj};
            d.goal.predicates = {GoalPredicate::make_on(obj, dest)};
            const std::vector<std::string> tpls = {
                "Put a {obj} on the {dest}.",
                "Place the {obj} on the {dest}.",
                "Move a {obj} to the {dest}.",
                "Set the {obj} down on the {dest}.",
            };
            d.instruction = fill(pick_from(tpls), {{"obj", obj}, {"dest", dest}});
            break;
        }
        case TaskType::kStackPlace: {
            const auto inner = pick_from(kStackInner);
            const auto mid = pick_from(kStackMid);
            const auto dest = pick_from(kStackDest);
            d.movables = {inner, mid};
            d.goal.predicates = {GoalPredicate::make_stacked(inner, mid, dest)};
            const std::vector<std::string> tpls = {
                "Put a {mid} with a {obj} in it in the {dest}.",
                "Place the {obj} inside the {mid}, then put the {mid} in the {dest}.",
                "Stack a {obj} in a {mid} on the {dest}.",
            };
            d.instruction = fill(pick_from(tpls), {{"obj", inner}, {"mid", mid}, {"dest", dest}});
            break;
        }
        case TaskType::kCleanPlace: {
            const auto obj = pick_from(kCleanObjects);
            auto dests = surfaces;
            dests.emplace_back("cabinet");
            const auto dest = pick_from(dests);
            d.movables = {obj};
            d.goal.predicates = {GoalPredicate::make_flag(obj, sim::FlagName::kClean),
                                 GoalPredicate::make_on(obj, dest)};
            const std::vector<std::string> tpls = {
                "Put a cleaned {obj} in the {dest}.",
                "Wash the {obj} and put it in the {dest}.",
                "Place a clean {obj} on the {dest}.",
            };
            d.instruction = fill(pick_from(tpls), {{"obj", obj}, {"dest", dest}});
            break;
        }
        case TaskType::kHeatPlace: {
            const auto obj = pick_from(kFoods);
            const auto dest = pick_from(surfaces);
            d.movables = {obj};
            d.goal.predicates = {GoalPredicate::make_flag(obj, sim::FlagName::kHot),
                                 GoalPredicate::make_on(obj, dest)};
            const std::vector<std::string> tpls = {
                "Heat a {obj} and put it on the {dest}.",
                "Put a warm {obj} on the {dest}.",
                "Place a heated {obj} on the {dest}.",
            };
            d.instruction = fill(pick_from(tpls), {{"obj", obj}, {"dest", dest}});
            break;
        }
        case TaskType::kCoolPlace: {
            const auto obj = pick_from(kCoolObjects);
            const auto dest = pick_from(surfaces);
            d.movables = {obj};
            d.goal.predicates = {GoalPredicate::make_flag(obj, sim::FlagName::kCold),
                                 GoalPredicate::make_on(obj, dest)};
            const std::vector<std::string> tpls = {
                "Chill a {obj} and place it on the {dest}.",
                "Put a cold {obj} on the {dest}.",
                "Place a chilled {obj} on the {dest}.",
            };
            d.instruction = fill(pick_from(tpls), {{"obj", obj}, {"dest", dest}});
            break;
        }
    }
    return d;
}

auto distractor_pool(const std::map<std::string, ObjectClass>& catalog,
                     const std::vector<std::string>& exclude) -> std::vector<std::string> {
    std::vector<std::string> pool;
    for (const auto& [name, cls] : catalog) {
        if (!cls.has(Capability::kPickupable)) { continue; }
        if (std::find(exclude.begin(), exclude.end(), name) != exclude.end()) { continue; }
        pool.push_back(name);
    }
    return pool;
}

}  // namespace

auto default_catalog() -> std::map<std::string, ObjectClass> {
    std::map<std::string, ObjectClass> catalog;
    const auto add = [&catalog](ObjectClass cls) { catalog[cls.name] = std::move(cls); };

    // Fixed furniture.
    for (const auto& name : {"countertop", "diningtable", "coffeetable", "desk", "shelf",
                             "bureau", "sidetable", "sinkbasin"}) {
        add(make_class(name, kRecep));
    }
    add(make_class("cabinet", kRecep | kOpen));
    add(make_class("drawer", kRecep | kOpen));
    add(make_class("fridge", kRecep | kOpen, ApplianceEffect::kCools));
    add(make_class("microwave", kRecep | kOpen | kToggle, ApplianceEffect::kHeats));
    add(make_class("faucet", kToggle, ApplianceEffect::kCleans, "sinkbasin"));
    add(make_class("floorlamp", kToggle));
    add(make_class("desklamp", kToggle));

    // Movables.
    for (const auto& name : {"apple", "tomato", "potato", "bread", "lettuce"}) {
        add(make_class(name, kPick | kSlice));
    }
    for (const auto& name : {"cup", "mug", "plate", "bowl", "pot", "pan"}) {
        add(make_class(name, kPick | kRecep));
    }
    add(make_class("knife", kPick | kCut));
    for (const auto& name : {"spoon", "pencil", "book", "vase", "washcloth", "sponge",
                             "keychain", "creditcard", "remotecontrol", "saltshaker"}) {
        add(make_class(name, kPick));
    }
    return catalog;
}

auto default_layouts() -> std::vector<Layout> {
    std::vector<Layout> layouts;
    const auto make = [](const std::string& name, const std::string& split,
                         std::vector<std::pair<std::string, std::vector<std::string>>> nodes,
                         std::vector<std::pair<std::string, std::string>> edges) {
        Layout l;
        l.name = name;
        l.split = split;
        for (auto& [node, furn] : nodes) {
            l.nodes.push_back(node);
            l.furnishings[node] = furn;
            l.adjacency[node];
        }
        for (const auto& [a, b] : edges) {
            l.adjacency[a].push_back(b);
            l.adjacency[b].push_back(a);
        }
        return l;
    };

    layouts.push_back(make(
        "loft_a", "seen",
        {{"kitchen", {"countertop", "microwave", "fridge"}},
         {"sink_nook", {"sinkbasin", "faucet"}},
         {"dining", {"diningtable", "cabinet"}},
         {"lounge", {"coffeetable", "floorlamp", "shelf"}},
         {"study", {"desk", "desklamp", "drawer"}}},
        {{"kitchen", "sink_nook"}, {"kitchen", "dining"}, {"dining", "lounge"},
         {"lounge", "study"}}));
    layouts.push_back(make(
        "rowhouse_b", "seen",
        {{"galley", {"countertop", "microwave"}},
         {"wash_corner", {"sinkbasin", "faucet", "fridge"}},
         {"pantry", {"cabinet", "drawer", "shelf"}},
         {"den", {"sidetable", "coffeetable", "floorlamp"}},
         {"office", {"desk", "desklamp", "bureau"}},
         {"dinette", {"diningtable"}}},
        {{"galley", "wash_corner"}, {"galley", "dinette"}, {"wash_corner", "pantry"},
         {"dinette", "den"}, {"den", "office"}}));
    layouts.push_back(make(
        "studio_c", "seen",
        {{"kitchenette", {"countertop", "microwave", "fridge", "sinkbasin", "faucet"}},
         {"main_room", {"diningtable", "coffeetable", "floorlamp"}},
         {"alcove", {"desk", "desklamp", "drawer", "shelf"}},
         {"closet", {"cabinet", "bureau"}}},
        {{"kitchenette", "main_room"}, {"main_room", "alcove"}, {"alcove", "closet"},
         {"main_room", "closet"}}));
    layouts.push_back(make(
        "cottage_d", "seen",
        {{"hearth", {"coffeetable", "floorlamp", "shelf"}},
         {"kitchen", {"countertop", "microwave", "fridge"}},
         {"scullery", {"sinkbasin", "faucet", "cabinet"}},
         {"dining_room", {"diningtable", "sidetable"}},
         {"bedroom", {"bureau", "desklamp", "drawer", "desk"}}},
        {{"hearth", "kitchen"}, {"kitchen", "scullery"}, {"kitchen", "dining_room"},
         {"dining_room", "bedroom"}, {"hearth", "dining_room"}}));

    layouts.push_back(make(
        "flat_e", "unseen",
        {{"cookline", {"countertop", "microwave", "sinkbasin", "faucet"}},
         {"cold_corner", {"fridge", "cabinet"}},
         {"great_room", {"diningtable", "coffeetable", "floorlamp"}},
         {"workspace", {"desk", "desklamp", "drawer", "shelf", "bureau"}}},
        {{"cookline", "cold_corner"}, {"cookline", "great_room"}, {"great_room", "workspace"}}));
    layouts.push_back(make(
        "bungalow_f", "unseen",
        {{"kitchen_west", {"countertop", "fridge"}},
         {"kitchen_east", {"microwave", "sinkbasin", "faucet", "cabinet"}},
         {"parlor", {"coffeetable", "floorlamp", "sidetable"}},
         {"library", {"shelf", "desk", "desklamp"}},
         {"dining_hall", {"diningtable", "drawer", "bureau"}}},
        {{"kitchen_west", "kitchen_east"}, {"kitchen_east", "dining_hall"},
         {"dining_hall", "parlor"}, {"parlor", "library"}, {"kitchen_west", "dining_hall"}}));
    layouts.push_back(make(
        "duplex_g", "unseen",
        {{"lower_kitchen", {"countertop", "microwave", "fridge", "cabinet"}},
         {"lower_wash", {"sinkbasin", "faucet", "drawer"}},
         {"stair_landing", {"sidetable"}},
         {"upper_den", {"coffeetable", "floorlamp", "shelf"}},
         {"upper_study", {"desk", "desklamp", "bureau"}},
         {"upper_dining", {"diningtable"}}},
        {{"lower_kitchen", "lower_wash"}, {"lower_kitchen", "stair_landing"},
         {"stair_landing", "upper_den"}, {"upper_den", "upper_study"},
         {"stair_landing", "upper_dining"}}));
    layouts.push_back(make(
        "atrium_h", "unseen",
        {{"prep_station", {"countertop", "microwave"}},
         {"chill_station", {"fridge"}},
         {"wash_station", {"sinkbasin", "faucet"}},
         {"long_table", {"diningtable", "cabinet"}},
         {"reading_nook", {"shelf", "floorlamp", "coffeetable"}},
         {"office_pod", {"desk", "desklamp", "drawer", "bureau", "sidetable"}}},
        {{"prep_station", "chill_station"}, {"prep_station", "wash_station"},
         {"chill_station", "long_table"}, {"wash_station", "long_table"},
         {"long_table", "reading_nook"}, {"reading_nook", "office_pod"}}));
    return layouts;
}

auto build_scene(const std::map<std::string, ObjectClass>& catalog, const Layout& layout,
                 const std::vector<std::string>& movable_classes, std::uint64_t seed)
    -> WorldState {
    WorldState state;
    auto scene = std::make_shared<sim::SceneDef>();
    scene->catalog = catalog;
    scene->layout = layout;
    state.scene = std::move(scene);

    Rng rng(derive_seed(seed, "scene"));

    // One instance per furnishing entry; unknown or duplicate classes are
    // generator bugs, surfaced loudly.
    std::set<std::string> placed;
    for (const auto& node : layout.nodes) {
        const auto it = layout.furnishings.find(node);
        if (it == layout.furnishings.end()) { continue; }
        for (const auto& cls : it->second) {
            if (!catalog.contains(cls)) {
                throw UnsatisfiableTask("layout names unknown class " + cls);
            }
            if (!placed.insert(cls).second) {
                throw UnsatisfiableTask("duplicate furnishing class " + cls);
            }
            sim::ObjectInstance inst;
            inst.id = cls + "_1";
            inst.class_name = cls;
            inst.location = sim::Location::at_node(node);
            state.instances[inst.id] = inst;
        }
    }

    // Movables go on plain surfaces.
    std::vector<std::string> surface_ids;
    for (const auto& [id, inst] : state.instances) {
        const auto& cls = catalog.at(inst.class_name);
        if (cls.has(Capability::kReceptacle) && !cls.has(Capability::kOpenable) &&
            inst.class_name != "sinkbasin") {
            surface_ids.push_back(id);
        }
    }
    if (surface_ids.empty() && !movable_classes.empty()) {
        throw UnsatisfiableTask("layout has no surfaces for movables");
    }
    for (const auto& cls : movable_classes) {
        if (!catalog.contains(cls)) { throw UnsatisfiableTask("unknown movable class " + cls); }
        if (!placed.insert(cls).second) {
            throw UnsatisfiableTask("duplicate movable class " + cls);
        }
        sim::ObjectInstance inst;
        inst.id = cls + "_1";
        inst.class_name = cls;
        inst.location = sim::Location::in_receptacle(
            surface_ids[static_cast<std::size_t>(rng.uniform_below(surface_ids.size()))]);
        state.instances[inst.id] = inst;
    }

    state.agent.node = layout.nodes[static_cast<std::size_t>(rng.uniform_below(layout.nodes.size()))];
    return state;
}

auto generate_tasks(const std::map<std::string, ObjectClass>& catalog,
                    const std::vector<Layout>& layouts, int count_per_type, std::uint64_t seed,
                    const std::string& split) -> std::vector<Task> {
    if (const auto problem = sim::validate_catalog(catalog); problem.has_value()) {
        throw UnsatisfiableTask("bad catalog: " + *problem);
    }
    std::vector<Layout> usable;
    for (const auto& layout : layouts) {
        if (split == "both" || layout.split == split) { usable.push_back(layout); }
    }
    if (usable.empty()) { throw UnsatisfiableTask("no layouts for split " + split); }

    std::vector<Task> tasks;
    for (const TaskType type : all_task_types()) {
        for (int i = 0; i < count_per_type; ++i) {
            const std::uint64_t task_seed =
                derive_seed(seed, task_type_name(type), static_cast<std::uint64_t>(i));
            Rng rng(task_seed);
            const Layout& layout = usable[static_cast<std::size_t>(i) % usable.size()];

            // Re-draw until the drafted goal is unsatisfied at start and the
            // expert replays cleanly. Bounded; exhaustion is a content bug.
            Task task;
            bool built = false;
            for (int attempt = 0; attempt < 32 && !built; ++attempt) {
                Draft draft = draft_task(type, layout, catalog, rng);
                auto movables = draft.movables;
                auto pool = distractor_pool(catalog, movables);
                rng.shuffle(pool);
                const auto extra = 2 + rng.uniform_below(3);
                for (std::size_t k = 0; k < extra && k < pool.size(); ++k) {
                    movables.push_back(pool[k]);
                }
                WorldState state =
                    build_scene(catalog, layout, movables, derive_seed(task_seed, "place", attempt));
                if (sim::check_goal(state, draft.goal)) { continue; }
                std::vector<ActionStep> plan;
                try {
                    plan = expert_plan(draft.goal, state);
                } catch (const PlanFailure&) {
                    continue;
                }
                task.type = type;
                task.split = layout.split;
                task.instruction = draft.instruction;
                task.goal = draft.goal;
                task.initial_state = std::move(state);
                task.expert_length = static_cast<int>(plan.size());
                built = true;
            }
            if (!built) {
                throw UnsatisfiableTask("could not draft a solvable " + task_type_name(type) +
                                        " task on layout " + layout.name);
            }
            task.id = task_type_name(type) + "-" + layout.name + "-" + std::to_string(i) + "-s" +
                      std::to_string(task_seed % 100000);
            tasks.push_back(std::move(task));
        }
    }
    return tasks;
}

}  // namespace planlab::taskgen
