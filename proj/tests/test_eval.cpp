#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "planlab/eval/metrics.h"
#include "planlab/eval/rollout.h"
#include "planlab/model/vocab.h"
#include "planlab/sim/world.h"
#include "planlab/taskgen/planner.h"
#include "support/fixtures.h"

using namespace planlab;
using testing::find_id;
using testing::tiny_scene;

namespace {

auto make_task(std::string id, taskgen::TaskType type, std::string split, sim::WorldState initial,
               sim::GoalCondition goal, int expert_length) -> taskgen::Task {
    taskgen::Task task;
    task.id = std::move(id);
    task.type = type;
    task.split = std::move(split);
    task.instruction = "scripted fixture";
    task.goal = std::move(goal);
    task.initial_state = std::move(initial);
    task.expert_length = expert_length;
    return task;
}

// Apple on the wash-side dining table, agent in the prep corner; the expert
// route is find apple, pick up, find countertop, put down.
auto pick_task() -> taskgen::Task {
    auto state = tiny_scene();
    for (auto& [id, inst] : state.instances) {
        if (inst.class_name == "apple") {
            inst.location = sim::Location::in_receptacle(find_id(state, "diningtable"));
        }
    }
    state.agent.node = "prep";
    state.agent.held.reset();
    state.agent.last_visited_receptacle.reset();
    sim::GoalCondition goal;
    goal.predicates = {sim::GoalPredicate::make_on("apple", "countertop")};
    return make_task("pick-fixture", taskgen::TaskType::kPickPlace, "seen", std::move(state),
                     std::move(goal), 4);
}

auto act(sim::Verb verb, const std::string& target) -> sim::ActionStep {
    return sim::ActionStep{verb, target};
}

auto done() -> sim::ActionStep { return sim::ActionStep{sim::Verb::kDone, {}}; }

// Plays the listed steps in order, then repeats the last one forever.
auto scripted(std::vector<sim::ActionStep> steps) -> eval::Policy {
    return [steps = std::move(steps), i = std::size_t{0}](const model::ActionContext&) mutable {
        const auto& action = steps[std::min(i, steps.size() - 1)];
        ++i;
        return model::to_response("finish", action);
    };
}

auto episode(std::string task_id, bool success, double pl) -> eval::EpisodeResult {
    eval::EpisodeResult ep;
    ep.task_id = std::move(task_id);
    ep.success = success;
    ep.pl = pl;
    return ep;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("replaying the expert plan scores a perfect episode") {
    const auto task = pick_task();
    const auto completion = taskgen::plan_completion(task.goal, task.initial_state);
    REQUIRE(static_cast<int>(completion.size()) == task.expert_length + 1);

    const auto ep = eval::rollout(scripted(completion), task);
    CHECK(ep.task_id == "pick-fixture");
    CHECK(ep.success);
    CHECK(ep.model_length == task.expert_length);
    CHECK(ep.expert_length == task.expert_length);
    CHECK(ep.pl == 1.0);
    REQUIRE(ep.steps.size() == completion.size());
    CHECK(ep.steps.back().action.verb == sim::Verb::kDone);
    for (const auto& step : ep.steps) { CHECK(step.status.ok); }
    CHECK(eval::classify_errors(ep).empty());
}

TEST_CASE("surrendering immediately scores zero") {
    const auto ep = eval::rollout(scripted({done()}), pick_task());
    CHECK_FALSE(ep.success);
    CHECK(ep.model_length == 0);
    CHECK(ep.pl == 0.0);
    REQUIRE(ep.steps.size() == 1);
    CHECK(ep.steps[0].action.verb == sim::Verb::kDone);
}

TEST_CASE("success at twice the expert length earns half credit") {
    const auto task = pick_task();
    std::vector<sim::ActionStep> steps = {
        act(sim::Verb::kFind, "countertop"), act(sim::Verb::kFind, "diningtable"),
        act(sim::Verb::kFind, "countertop"), act(sim::Verb::kFind, "diningtable")};
    const auto completion = taskgen::plan_completion(task.goal, task.initial_state);
    steps.insert(steps.end(), completion.begin(), completion.end());

    const auto ep = eval::rollout(scripted(steps), task);
    CHECK(ep.success);
    CHECK(ep.model_length == 2 * task.expert_length);
    CHECK(ep.pl == 0.5);
    CHECK(eval::classify_errors(ep) == eval::ErrorSet{eval::ErrorKind::kInefficient});
}

TEST_CASE("failed steps consume the budget until the cap") {
    const auto task = pick_task();
    const auto ep = eval::rollout(scripted({act(sim::Verb::kPutDown, "apple")}), task);
    CHECK_FALSE(ep.success);
    CHECK(ep.model_length == 25);
    CHECK(ep.steps.size() == 25);
    for (const auto& step : ep.steps) {
        CHECK_FALSE(step.status.ok);
        CHECK(step.status.error == sim::ErrorTag::kHandEmpty);
    }

    const auto short_run = eval::rollout(scripted({act(sim::Verb::kPutDown, "apple")}), task, 5);
    CHECK(short_run.steps.size() == 5);
    CHECK(short_run.model_length == 5);
}

TEST_CASE("rollout is deterministic for trained parameters") {
    const auto task = pick_task();
    auto params = model::init_params(model::build_vocabulary(taskgen::default_catalog()), 512);
    Rng rng(13);
    for (auto& w : params.action_w) { w = rng.uniform_double() * 2.0 - 1.0; }

    const auto first = eval::rollout(params, task);
    const auto second = eval::rollout(params, task);
    CHECK(first == second);

    const auto via_policy = eval::rollout(eval::greedy_policy(params), task);
    CHECK(via_policy == first);
}

TEST_CASE("aggregation averages per group and adds overall rows") {
    const auto base = pick_task();
    std::vector<taskgen::Task> tasks;
    tasks.push_back(make_task("a", taskgen::TaskType::kPickPlace, "seen", base.initial_state,
                              base.goal, 4));
    tasks.push_back(make_task("b", taskgen::TaskType::kPickPlace, "seen", base.initial_state,
                              base.goal, 4));
    tasks.push_back(make_task("c", taskgen::TaskType::kHeatPlace, "seen", base.initial_state,
                              base.goal, 6));
    tasks.push_back(make_task("d", taskgen::TaskType::kPickPlace, "unseen", base.initial_state,
                              base.goal, 4));

    const std::vector<eval::EpisodeResult> episodes = {
        episode("a", true, 1.0),
        episode("b", false, 0.0),
        episode("c", false, 0.0),
        episode("d", true, 0.5),
    };

    const auto report = eval::aggregate(episodes, tasks);
    REQUIRE(report.rows.size() == 6);

    CHECK(report.rows[0] == eval::MetricsRow{"heat_place", "seen", 1, 0.0, 0.0});
    CHECK(report.rows[1] == eval::MetricsRow{"pick_place", "seen", 2, 50.0, 50.0});
    CHECK(report.rows[2].task_type == "overall");
    CHECK(report.rows[2].split == "seen");
    CHECK(report.rows[2].episodes == 3);
    CHECK(report.rows[2].sr == doctest::Approx(100.0 / 3).epsilon(1e-12));
    CHECK(report.rows[3] == eval::MetricsRow{"pick_place", "unseen", 1, 100.0, 50.0});
    CHECK(report.rows[4] == eval::MetricsRow{"overall", "unseen", 1, 100.0, 50.0});
    CHECK(report.rows[5].task_type == "overall");
    CHECK(report.rows[5].split == "all");
    CHECK(report.rows[5].episodes == 4);
    CHECK(report.rows[5].sr == 50.0);
    CHECK(report.rows[5].pl == 37.5);

    auto reversed = episodes;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(eval::aggregate(reversed, tasks) == report);

    const auto table = eval::format_report(report);
    CHECK(table.find("pick_place") != std::string::npos);
    CHECK(table.find("50.00") != std::string::npos);

    CHECK_THROWS_AS(eval::aggregate({}, tasks), std::invalid_argument);
    CHECK_THROWS_AS(eval::aggregate({episode("nope", true, 1.0)}, tasks), std::invalid_argument);
}

TEST_CASE("the error taxonomy labels faulty trajectories exactly") {
    const auto task = pick_task();

    SUBCASE("putting down before picking up is a dependency error") {
        const auto ep =
            eval::rollout(scripted({act(sim::Verb::kPutDown, "apple"), done()}), task);
        REQUIRE(ep.steps.size() == 2);
        CHECK(ep.steps[0].status.error == sim::ErrorTag::kHandEmpty);
        CHECK(eval::classify_errors(ep) == eval::ErrorSet{eval::ErrorKind::kDependency});
    }

    SUBCASE("toggling an apple is an affordance error") {
        const auto ep = eval::rollout(
            scripted({act(sim::Verb::kFind, "apple"), act(sim::Verb::kTurnOn, "apple"), done()}),
            task);
        REQUIRE(ep.steps.size() == 3);
        CHECK(ep.steps[1].status.error == sim::ErrorTag::kNotToggleable);
        CHECK(eval::classify_errors(ep) == eval::ErrorSet{eval::ErrorKind::kAffordance});
    }

    SUBCASE("an immediate identical repeat is inefficient") {
        const auto ep = eval::rollout(
            scripted({act(sim::Verb::kFind, "apple"), act(sim::Verb::kFind, "apple"), done()}),
            task);
        for (std::size_t i = 0; i + 1 < ep.steps.size(); ++i) { CHECK(ep.steps[i].status.ok); }
        CHECK(eval::classify_errors(ep) == eval::ErrorSet{eval::ErrorKind::kInefficient});
    }

    SUBCASE("unclassified failures fall back to other") {
        eval::EpisodeResult ep;
        ep.task_id = "synthetic";
        ep.success = false;
        ep.model_length = 2;
        ep.expert_length = 4;
        ep.steps = {{act(sim::Verb::kFind, "apple"), sim::ExecStatus::success()},
                    {act(sim::Verb::kSlice, "apple"),
                     sim::ExecStatus::failure(sim::ErrorTag::kAlreadyInState)}};
        CHECK(eval::classify_errors(ep) == eval::ErrorSet{eval::ErrorKind::kOther});
    }
}

}  // TEST_SUITE
