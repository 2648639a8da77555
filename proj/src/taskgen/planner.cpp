#include "planlab/taskgen/planner.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>

#include "planlab/sim/world.h"

namespace planlab::taskgen {

namespace {

using sim::ActionStep;
using sim::Capability;
using sim::GoalCondition;
using sim::GoalPredicate;
using sim::ObjectInstance;
using sim::Verb;
using sim::WorldState;

constexpr std::size_t kMaxPlanSteps = 64;

struct Ctx {
    WorldState state;
    std::vector<ActionStep> steps;
};

void push(Ctx& ctx, Verb verb, const std::string& target) {
    if (ctx.steps.size() >= kMaxPlanSteps) { throw PlanFailure("plan exceeds step bound"); }
    const ActionStep step{verb, target};
    auto [next, status] = sim::apply_action(ctx.state, step);
    if (!status.ok) {
        throw PlanFailure("scripted step failed: " + sim::format_action(step) + " (" +
                          sim::error_tag_name(*status.error) + ")");
    }
    ctx.state = std::move(next);
    ctx.steps.push_back(step);
}

auto instance_of(const WorldState& state, const std::string& cls) -> const ObjectInstance* {
    for (const auto& [id, inst] : state.instances) {
        if (inst.class_name == cls) { return &inst; }
    }
    return nullptr;
}

auto class_def(const WorldState& state, const std::string& cls) -> const sim::ObjectClass* {
    const auto it = state.scene->catalog.find(cls);
    return it == state.scene->catalog.end() ? nullptr : &it->second;
}

auto held_class(const WorldState& state) -> std::optional<std::string> {
    if (!state.agent.held.has_value()) { return std::nullopt; }
    return state.instances.at(*state.agent.held).class_name;
}

auto directly_in(const WorldState& state, const ObjectInstance& obj, const ObjectInstance& container)
    -> bool {
    return obj.location.kind == sim::LocationKind::kInReceptacle && obj.location.ref == container.id;
}

// Opens every closed container between the (co-located) instance and the agent,
// outermost first, so the instance becomes visible.
void open_blocking_containers(Ctx& ctx, const std::string& cls) {
    for (std::size_t guard = 0; guard < 8; ++guard) {
        const ObjectInstance* inst = instance_of(ctx.state, cls);
        if (inst == nullptr || sim::is_visible(ctx.state, *inst)) { return; }
        // Outermost closed container is itself visible; open it and repeat.
        const ObjectInstance* cur = inst;
        const ObjectInstance* blocking = nullptr;
        while (cur->location.kind == sim::LocationKind::kInReceptacle) {
            const auto it = ctx.state.instances.find(cur->location.ref);
            if (it == ctx.state.instances.end()) { break; }
            cur = &it->second;
            const auto* cdef = class_def(ctx.state, cur->class_name);
            if (cdef != nullptr && cdef->has(Capability::kOpenable) && !cur->is_open) {
                blocking = cur;  // keep scanning; outermost closed wins
            }
        }
        if (blocking == nullptr) { return; }
        push(ctx, Verb::kOpen, blocking->class_name);
    }
}

void ensure_hand_free(Ctx& ctx) {
    if (!ctx.state.agent.held.has_value()) { return; }
    const std::string held = *held_class(ctx.state);

    const auto usable = [&](const std::string& id) -> bool {
        const auto it = ctx.state.instances.find(id);
        if (it == ctx.state.instances.end() || !sim::is_visible(ctx.state, it->second)) {
            return false;
        }
        const auto* cls = class_def(ctx.state, it->second.class_name);
        if (cls == nullptr) { return false; }
        if (cls->has(Capability::kOpenable) && !it->second.is_open) { return false; }
        return true;
    };
    if (ctx.state.agent.last_visited_receptacle.has_value() &&
        usable(*ctx.state.agent.last_visited_receptacle)) {
        push(ctx, Verb::kPutDown, held);
        return;
    }

    // Park on the nearest plain surface (non-openable receptacle).
    const ObjectInstance* best = nullptr;
    int best_dist = std::numeric_limits<int>::max();
    for (const auto& [id, inst] : ctx.state.instances) {
        if (ctx.state.agent.held.has_value() && id == *ctx.state.agent.held) { continue; }
        const auto* cls = class_def(ctx.state, inst.class_name);
        if (cls == nullptr || !cls->has(Capability::kReceptacle) ||
            cls->has(Capability::kOpenable) || cls->has(Capability::kPickupable)) {
            continue;
        }
        const auto d = sim::node_distance(ctx.state.scene->layout, ctx.state.agent.node,
                                          sim::resolve_node(ctx.state, inst));
        if (d.has_value() && *d < best_dist) {
            best = &inst;
            best_dist = *d;
        }
    }
    if (best == nullptr) { throw PlanFailure("no surface available to free the hand"); }
    push(ctx, Verb::kFind, best->class_name);
    push(ctx, Verb::kPutDown, held);
}

void ensure_holding(Ctx& ctx, const std::string& cls) {
    if (held_class(ctx.state) == cls) { return; }
    ensure_hand_free(ctx);
    const ObjectInstance* inst = instance_of(ctx.state, cls);
    if (inst == nullptr) { throw PlanFailure("no instance of class " + cls); }
    if (sim::resolve_node(ctx.state, *inst) != ctx.state.agent.node) {
        push(ctx, Verb::kFind, cls);
    }
    open_blocking_containers(ctx, cls);
    push(ctx, Verb::kPickUp, cls);
}

// Makes `cls` the usable last-visited receptacle (visible and open if openable).
void goto_receptacle(Ctx& ctx, const std::string& cls) {
    const ObjectInstance* inst = instance_of(ctx.state, cls);
    if (inst == nullptr) { throw PlanFailure("no receptacle instance of class " + cls); }
    const bool is_last_visited = ctx.state.agent.last_visited_receptacle.has_value() &&
                                 *ctx.state.agent.last_visited_receptacle == inst->id;
    if (!is_last_visited || sim::resolve_node(ctx.state, *inst) != ctx.state.agent.node) {
        push(ctx, Verb::kFind, cls);
    }
    open_blocking_containers(ctx, cls);
    inst = instance_of(ctx.state, cls);
    const auto* cdef = class_def(ctx.state, cls);
    if (cdef != nullptr && cdef->has(Capability::kOpenable) && !inst->is_open) {
        push(ctx, Verb::kOpen, cls);
    }
}

void put_held_on(Ctx& ctx, const std::string& receptacle_cls) {
    const auto held = held_class(ctx.state);
    if (!held.has_value()) { throw PlanFailure("nothing in hand to place"); }
    goto_receptacle(ctx, receptacle_cls);
    push(ctx, Verb::kPutDown, *held);
}

// Brings an instance of `obj` into/onto `recep`. When the object already sits
// at the receptacle's node, one Find does double duty: walk to the receptacle
// first and lift the object from the same spot. The branch condition depends
// only on where the two instances rest, so replanning mid-sequence stays on
// the same path.
void fetch_and_place(Ctx& ctx, const std::string& obj, const std::string& recep) {
    if (held_class(ctx.state) == obj) {
        put_held_on(ctx, recep);
        return;
    }
    ensure_hand_free(ctx);
    const ObjectInstance* obj_inst = instance_of(ctx.state, obj);
    const ObjectInstance* recep_inst = instance_of(ctx.state, recep);
    if (obj_inst == nullptr) { throw PlanFailure("no instance of class " + obj); }
    if (recep_inst == nullptr) { throw PlanFailure("no receptacle instance of class " + recep); }
    if (sim::resolve_node(ctx.state, *obj_inst) == sim::resolve_node(ctx.state, *recep_inst)) {
        goto_receptacle(ctx, recep);
        open_blocking_containers(ctx, obj);
        push(ctx, Verb::kPickUp, obj);
        push(ctx, Verb::kPutDown, obj);
    } else {
        ensure_holding(ctx, obj);
        put_held_on(ctx, recep);
    }
}

auto satisfied(const Ctx& ctx, const GoalPredicate& p) -> bool {
    return sim::check_goal(ctx.state, GoalCondition{{p}});
}

// Simulates both strategies from the current state and replays the shorter
// one; ties keep the first. A strategy that throws PlanFailure is skipped.
void pick_shorter(Ctx& ctx, const std::function<void(Ctx&)>& first,
                  const std::function<void(Ctx&)>& second) {
    std::optional<Ctx> a;
    std::optional<Ctx> b;
    try {
        Ctx t{ctx.state, {}};
        first(t);
        a.emplace(std::move(t));
    } catch (const PlanFailure&) {}
    try {
        Ctx t{ctx.state, {}};
        second(t);
        b.emplace(std::move(t));
    } catch (const PlanFailure&) {}
    if (!a.has_value() && !b.has_value()) { throw PlanFailure("no strategy reaches the goal"); }
    const bool use_second =
        b.has_value() && (!a.has_value() || b->steps.size() < a->steps.size());
    for (const auto& step : (use_second ? *b : *a).steps) { push(ctx, step.verb, *step.target); }
}

// Appliance class with the given effect that has an instance in the scene.
auto appliance_class(const WorldState& state, sim::ApplianceEffect effect) -> std::string {
    for (const auto& [name, cls] : state.scene->catalog) {
        if (cls.appliance_effect == effect && instance_of(state, name) != nullptr) {
            return name;
        }
    }
    throw PlanFailure("scene lacks a required appliance");
}

void solve_pick(Ctx& ctx, const GoalPredicate& on) {
    if (satisfied(ctx, on)) { return; }
    fetch_and_place(ctx, on.a, on.b);
}

void do_examine(Ctx& ctx, const std::string& obj, const std::string& lamp, bool obj_first) {
    const auto hold_part = [&] {
        if (held_class(ctx.state) != obj) { ensure_holding(ctx, obj); }
    };
    const auto lamp_part = [&] {
        const ObjectInstance* inst = instance_of(ctx.state, lamp);
        if (inst == nullptr) { throw PlanFailure("no lamp instance"); }
        if (inst->is_on) { return; }
        if (!sim::is_visible(ctx.state, *inst)) { push(ctx, Verb::kFind, lamp); }
        push(ctx, Verb::kTurnOn, lamp);
    };
    if (obj_first) {
        hold_part();
        lamp_part();
    } else {
        lamp_part();
        hold_part();
    }
}

void solve_examine(Ctx& ctx, const std::string& obj, const std::string& lamp) {
    pick_shorter(ctx, [&](Ctx& t) { do_examine(t, obj, lamp, /*obj_first=*/true); },
                 [&](Ctx& t) { do_examine(t, obj, lamp, /*obj_first=*/false); });
}

void solve_heat(Ctx& ctx, const GoalPredicate& flag_pred, const GoalPredicate& on_pred) {
    const std::string obj = flag_pred.a;
    if (!satisfied(ctx, flag_pred)) {
        const std::string mw = appliance_class(ctx.state, sim::ApplianceEffect::kHeats);
        const ObjectInstance* obj_inst = instance_of(ctx.state, obj);
        const ObjectInstance* mw_inst = instance_of(ctx.state, mw);
        if (obj_inst == nullptr) { throw PlanFailure("no instance of class " + obj); }
        if (directly_in(ctx.state, *obj_inst, *mw_inst)) {
            if (sim::resolve_node(ctx.state, *mw_inst) != ctx.state.agent.node) {
                push(ctx, Verb::kFind, mw);
            }
        } else {
            fetch_and_place(ctx, obj, mw);
        }
        mw_inst = instance_of(ctx.state, mw);
        if (mw_inst->is_on) { push(ctx, Verb::kTurnOff, mw); }
        if (mw_inst->is_open) { push(ctx, Verb::kClose, mw); }
        push(ctx, Verb::kTurnOn, mw);
    }
    if (!satisfied(ctx, on_pred)) {
        fetch_and_place(ctx, obj, on_pred.b);
    }
}

void solve_cool(Ctx& ctx, const GoalPredicate& flag_pred, const GoalPredicate& on_pred) {
    const std::string obj = flag_pred.a;
    if (!satisfied(ctx, flag_pred)) {
        const std::string fridge = appliance_class(ctx.state, sim::ApplianceEffect::kCools);
        const ObjectInstance* obj_inst = instance_of(ctx.state, obj);
        const ObjectInstance* fridge_inst = instance_of(ctx.state, fridge);
        if (obj_inst == nullptr) { throw PlanFailure("no instance of class " + obj); }
        if (directly_in(ctx.state, *obj_inst, *fridge_inst)) {
            if (sim::resolve_node(ctx.state, *fridge_inst) != ctx.state.agent.node) {
                push(ctx, Verb::kFind, fridge);
            }
            if (!fridge_inst->is_open) { push(ctx, Verb::kOpen, fridge); }
        } else {
            fetch_and_place(ctx, obj, fridge);
        }
        push(ctx, Verb::kClose, fridge);
    }
    if (!satisfied(ctx, on_pred)) {
        fetch_and_place(ctx, obj, on_pred.b);
    }
}

void solve_clean(Ctx& ctx, const GoalPredicate& flag_pred, const GoalPredicate& on_pred) {
    const std::string obj = flag_pred.a;
    if (!satisfied(ctx, flag_pred)) {
        const std::string faucet = appliance_class(ctx.state, sim::ApplianceEffect::kCleans);
        const std::string basin = *class_def(ctx.state, faucet)->linked_receptacle;
        if (instance_of(ctx.state, basin) == nullptr) { throw PlanFailure("no basin instance"); }
        const ObjectInstance* obj_inst = instance_of(ctx.state, obj);
        const ObjectInstance* basin_inst = instance_of(ctx.state, basin);
        if (obj_inst == nullptr) { throw PlanFailure("no instance of class " + obj); }
        if (!directly_in(ctx.state, *obj_inst, *basin_inst)) {
            fetch_and_place(ctx, obj, basin);
        }
        // A running faucet cleans on placement; otherwise fire it now.
        if (!satisfied(ctx, flag_pred)) {
            const ObjectInstance* faucet_inst = instance_of(ctx.state, faucet);
            if (faucet_inst == nullptr) { throw PlanFailure("no faucet instance"); }
            if (!sim::is_visible(ctx.state, *faucet_inst)) { push(ctx, Verb::kFind, faucet); }
            if (faucet_inst->is_on) { push(ctx, Verb::kTurnOff, faucet); }
            push(ctx, Verb::kTurnOn, faucet);
        }
    }
    if (!satisfied(ctx, on_pred)) {
        fetch_and_place(ctx, obj, on_pred.b);
    }
}

void do_stack(Ctx& ctx, const GoalPredicate& stacked, bool inner_first) {
    const GoalPredicate a_in_b = GoalPredicate::make_on(stacked.a, stacked.b);
    const GoalPredicate b_in_c = GoalPredicate::make_on(stacked.b, stacked.c);
    const auto inner_part = [&] {
        if (!satisfied(ctx, a_in_b)) { fetch_and_place(ctx, stacked.a, stacked.b); }
    };
    const auto outer_part = [&] {
        if (!satisfied(ctx, b_in_c)) { fetch_and_place(ctx, stacked.b, stacked.c); }
    };
    if (inner_first) {
        inner_part();
        outer_part();
    } else {
        outer_part();
        inner_part();
    }
}

void solve_stack(Ctx& ctx, const GoalPredicate& stacked) {
    pick_shorter(ctx, [&](Ctx& t) { do_stack(t, stacked, /*inner_first=*/true); },
                 [&](Ctx& t) { do_stack(t, stacked, /*inner_first=*/false); });
}

void solve(Ctx& ctx, const GoalCondition& goal) {
    const GoalPredicate* on_pred = nullptr;
    const GoalPredicate* stacked_pred = nullptr;
    const GoalPredicate* held_pred = nullptr;
    const GoalPredicate* toggled_pred = nullptr;
    const GoalPredicate* state_flag = nullptr;  // hot/cold/clean
    for (const auto& p : goal.predicates) {
        switch (p.kind) {
            case sim::PredicateKind::kOn: on_pred = &p; break;
            case sim::PredicateKind::kStacked: stacked_pred = &p; break;
            case sim::PredicateKind::kFlag:
                if (p.flag == sim::FlagName::kHeld) {
                    held_pred = &p;
                } else if (p.flag == sim::FlagName::kToggled) {
                    toggled_pred = &p;
                } else {
                    state_flag = &p;
                }
                break;
        }
    }
    if (stacked_pred != nullptr && goal.predicates.size() == 1) {
        solve_stack(ctx, *stacked_pred);
        return;
    }
    if (held_pred != nullptr && toggled_pred != nullptr && goal.predicates.size() == 2) {
        solve_examine(ctx, held_pred->a, toggled_pred->a);
        return;
    }
    if (state_flag != nullptr && on_pred != nullptr && goal.predicates.size() == 2 &&
        state_flag->a == on_pred->a) {
        switch (state_flag->flag) {
            case sim::FlagName::kHot: solve_heat(ctx, *state_flag, *on_pred); return;
            case sim::FlagName::kCold: solve_cool(ctx, *state_flag, *on_pred); return;
            case sim::FlagName::kClean: solve_clean(ctx, *state_flag, *on_pred); return;
            default: break;
        }
    }
    if (on_pred != nullptr && goal.predicates.size() == 1) {
        solve_pick(ctx, *on_pred);
        return;
    }
    throw PlanFailure("unsupported goal shape");
}

}  // namespace

auto plan_completion(const GoalCondition& goal, const WorldState& state)
    -> std::vector<ActionStep> {
    Ctx ctx{state, {}};
    solve(ctx, goal);
    if (!sim::check_goal(ctx.state, goal)) { throw PlanFailure("completion misses the goal"); }
    ctx.steps.push_back(ActionStep{Verb::kDone, std::nullopt});
    return std::move(ctx.steps);
}

auto expert_plan(const GoalCondition& goal, const WorldState& initial_state)
    -> std::vector<ActionStep> {
    auto steps = plan_completion(goal, initial_state);
    steps.pop_back();
    return steps;
}

auto distance_to_goal(const GoalCondition& goal, const WorldState& state) -> int {
    return static_cast<int>(plan_completion(goal, state).size()) - 1;
}

}  // namespace planlab::taskgen
