#include "planlab/store/dataset.h"

#include <fstream>
#include <memory>
#include <sstream>
#include <utility>

#include "nlohmann/json.hpp"
#include "planlab/sim/goal.h"

namespace planlab::store {

namespace {

using nlohmann::json;

constexpr const char* kDatasetSchema = "planlab-dataset-v1";
constexpr const char* kTasksSchema = "planlab-tasks-v1";
constexpr const char* kEpisodesSchema = "planlab-episodes-v1";

auto need(const json& j, const char* key) -> const json& {
    const auto it = j.find(key);
    if (it == j.end()) { throw std::runtime_error(std::string("missing field: ") + key); }
    return *it;
}

auto opt_string(const json& j) -> std::optional<std::string> {
    if (j.is_null()) { return std::nullopt; }
    return j.get<std::string>();
}

auto to_json(const std::optional<std::string>& v) -> json {
    return v ? json(*v) : json(nullptr);
}

// --- actions and statuses ---

auto action_to_json(const sim::ActionStep& action) -> json {
    return {{"verb", sim::verb_name(action.verb)}, {"object", to_json(action.target)}};
}

auto action_from_json(const json& j) -> sim::ActionStep {
    const auto verb = sim::verb_from_name(need(j, "verb").get<std::string>());
    if (!verb) { throw std::runtime_error("unknown verb: " + need(j, "verb").dump()); }
    return {*verb, opt_string(need(j, "object"))};
}

auto status_to_json(const sim::ExecStatus& status) -> json {
    return status.ok ? json("success") : json(sim::error_tag_name(*status.error));
}

auto status_from_json(const json& j) -> sim::ExecStatus {
    const auto text = j.get<std::string>();
    if (text == "success") { return sim::ExecStatus::success(); }
    const auto tag = sim::error_tag_from_name(text);
    if (!tag) { throw std::runtime_error("unknown status: " + text); }
    return sim::ExecStatus::failure(*tag);
}

auto executed_to_json(const sim::ExecutedStep& step) -> json {
    auto j = action_to_json(step.action);
    j["status"] = status_to_json(step.status);
    return j;
}

auto executed_from_json(const json& j) -> sim::ExecutedStep {
    return {action_from_json(j), status_from_json(need(j, "status"))};
}

auto executed_list_to_json(const std::vector<sim::ExecutedStep>& steps) -> json {
    auto arr = json::array();
    for (const auto& s : steps) { arr.push_back(executed_to_json(s)); }
    return arr;
}

auto executed_list_from_json(const json& j) -> std::vector<sim::ExecutedStep> {
    std::vector<sim::ExecutedStep> out;
    for (const auto& item : j) { out.push_back(executed_from_json(item)); }
    return out;
}

// --- observations and contexts ---

auto observation_to_json(const sim::Observation& obs) -> json {
    auto visible = json::array();
    for (const auto& v : obs.visible) {
        visible.push_back({{"id", v.id}, {"class", v.class_name}, {"flags", v.flags}});
    }
    return {{"visible", std::move(visible)}, {"hand", to_json(obs.hand)}};
}

auto observation_from_json(const json& j) -> sim::Observation {
    sim::Observation obs;
    for (const auto& item : need(j, "visible")) {
        sim::VisibleObject v;
        v.id = need(item, "id").get<std::string>();
        v.class_name = need(item, "class").get<std::string>();
        v.flags = need(item, "flags").get<std::vector<std::string>>();
        obs.visible.push_back(std::move(v));
    }
    obs.hand = opt_string(need(j, "hand"));
    return obs;
}

void context_into_json(const model::ActionContext& ctx, json& j) {
    j["goal"] = ctx.goal;
    j["prior_steps"] = executed_list_to_json(ctx.prior);
    j["observation"] = observation_to_json(ctx.observation);
    j["step_index"] = ctx.step_index;
}

auto context_from_json(const json& j) -> model::ActionContext {
    model::ActionContext ctx;
    ctx.goal = need(j, "goal").get<std::vector<std::string>>();
    ctx.prior = executed_list_from_json(need(j, "prior_steps"));
    ctx.observation = observation_from_json(need(j, "observation"));
    ctx.step_index = need(j, "step_index").get<int>();
    return ctx;
}

auto response_to_json(const model::ActionResponse& resp) -> json {
    return {{"reasoning_tag", resp.tag},
            {"verb", sim::verb_name(resp.verb)},
            {"object", resp.object}};
}

auto response_from_json(const json& j) -> model::ActionResponse {
    model::ActionResponse resp;
    resp.tag = need(j, "reasoning_tag").get<std::string>();
    const auto verb = sim::verb_from_name(need(j, "verb").get<std::string>());
    if (!verb) { throw std::runtime_error("unknown verb: " + need(j, "verb").dump()); }
    resp.verb = *verb;
    resp.object = need(j, "object").get<std::string>();
    return resp;
}

// --- record lines ---

auto sft_to_json(const SftRecord& r) -> json {
    json j{{"kind", "sft"}, {"task_id", r.task_id}, {"chosen", response_to_json(r.chosen)}};
    context_into_json(r.context, j);
    return j;
}

auto sft_from_json(const json& j) -> SftRecord {
    SftRecord r;
    r.task_id = need(j, "task_id").get<std::string>();
    r.context = context_from_json(j);
    r.chosen = response_from_json(need(j, "chosen"));
    return r;
}

auto action_pref_to_json(const ActionPrefRecord& r) -> json {
    json j{{"kind", "action_pref"},
           {"task_id", r.task_id},
           {"chosen", response_to_json(r.chosen)}};
    context_into_json(r.context, j);
    auto rejected = json::array();
    for (const auto& resp : r.rejected) { rejected.push_back(response_to_json(resp)); }
    j["rejected"] = std::move(rejected);
    return j;
}

auto action_pref_from_json(const json& j) -> ActionPrefRecord {
    ActionPrefRecord r;
    r.task_id = need(j, "task_id").get<std::string>();
    r.context = context_from_json(j);
    r.chosen = response_from_json(need(j, "chosen"));
    for (const auto& item : need(j, "rejected")) { r.rejected.push_back(response_from_json(item)); }
    return r;
}

auto state_pref_to_json(const StatePrefRecord& r) -> json {
    json conditioning;
    if (r.conditioning.mode == model::WorldModelMode::kActionConditioned) {
        conditioning["prev_state"] = r.conditioning.prev_state;
        if (!r.conditioning.action) {
            throw std::runtime_error("action-conditioned record without an action");
        }
        conditioning["action"] = action_to_json(*r.conditioning.action);
    } else {
        conditioning["goal"] = r.conditioning.goal;
        conditioning["history"] = executed_list_to_json(r.conditioning.history);
    }
    return {{"kind", "state_pref"},
            {"task_id", r.task_id},
            {"mode", model::mode_name(r.conditioning.mode)},
            {"conditioning", std::move(conditioning)},
            {"anchor_tokens", r.anchor},
            {"chosen_tokens", r.chosen_next},
            {"rejected_tokens", r.rejected_next}};
}

auto state_pref_from_json(const json& j) -> StatePrefRecord {
    StatePrefRecord r;
    r.task_id = need(j, "task_id").get<std::string>();
    const auto mode = model::mode_from_name(need(j, "mode").get<std::string>());
    if (!mode) { throw std::runtime_error("unknown mode: " + need(j, "mode").dump()); }
    r.conditioning.mode = *mode;
    const auto& cond = need(j, "conditioning");
    if (*mode == model::WorldModelMode::kActionConditioned) {
        r.conditioning.prev_state = need(cond, "prev_state").get<std::vector<std::string>>();
        r.conditioning.action = action_from_json(need(cond, "action"));
    } else {
        r.conditioning.goal = need(cond, "goal").get<std::vector<std::string>>();
        r.conditioning.history = executed_list_from_json(need(cond, "history"));
    }
    r.anchor = need(j, "anchor_tokens").get<std::vector<std::string>>();
    r.chosen_next = need(j, "chosen_tokens").get<std::vector<std::string>>();
    r.rejected_next = need(j, "rejected_tokens").get<std::vector<std::vector<std::string>>>();
    return r;
}

// --- file plumbing ---

auto parse_config_object(const std::string& text) -> json {
    json parsed;
    try {
        parsed = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config_json is not valid JSON: ") + e.what());
    }
    if (!parsed.is_object()) { throw std::invalid_argument("config_json must be a JSON object"); }
    return parsed;
}

auto open_for_write(const std::string& path) -> std::ofstream {
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw std::runtime_error("cannot write " + path); }
    return out;
}

auto open_for_read(const std::string& path) -> std::ifstream {
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw std::runtime_error("cannot read " + path); }
    return in;
}

// Applies `parse` to every line after the header, converting any failure into
// SchemaViolation at that line.
template <typename HeaderFn, typename LineFn>
void read_lines(const std::string& path, const HeaderFn& header, const LineFn& parse) {
    auto in = open_for_read(path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) { continue; }
        try {
            const auto j = json::parse(line);
            if (line_no == 1) {
                header(j);
            } else {
                parse(j);
            }
        } catch (const SchemaViolation&) {
            throw;
        } catch (const HashMismatch&) {
            throw;
        } catch (const std::exception& e) {
            throw SchemaViolation(line_no, e.what());
        }
    }
    if (line_no == 0) { throw SchemaViolation(1, "empty file: " + path); }
}

void check_schema(const json& header, const char* expected) {
    const auto schema = need(header, "schema").get<std::string>();
    if (schema != expected) {
        throw std::runtime_error("unexpected schema: " + schema + " (want " + expected + ")");
    }
}

// --- tasks ---

auto appliance_name(sim::ApplianceEffect effect) -> std::string {
    switch (effect) {
        case sim::ApplianceEffect::kHeats: return "heats";
        case sim::ApplianceEffect::kCools: return "cools";
        case sim::ApplianceEffect::kCleans: return "cleans";
    }
    return {};
}

auto appliance_from_name(const std::string& name) -> sim::ApplianceEffect {
    if (name == "heats") { return sim::ApplianceEffect::kHeats; }
    if (name == "cools") { return sim::ApplianceEffect::kCools; }
    if (name == "cleans") { return sim::ApplianceEffect::kCleans; }
    throw std::runtime_error("unknown appliance effect: " + name);
}

auto catalog_to_json(const std::map<std::string, sim::ObjectClass>& catalog) -> json {
    json j = json::object();
    for (const auto& [name, cls] : catalog) {
        j[name] = {{"capabilities", cls.capabilities},
                   {"appliance_effect",
                    cls.appliance_effect ? json(appliance_name(*cls.appliance_effect))
                                         : json(nullptr)},
                   {"linked_receptacle", to_json(cls.linked_receptacle)}};
    }
    return j;
}

auto catalog_from_json(const json& j) -> std::map<std::string, sim::ObjectClass> {
    std::map<std::string, sim::ObjectClass> catalog;
    for (const auto& [name, def] : j.items()) {
        sim::ObjectClass cls;
        cls.name = name;
        cls.capabilities = need(def, "capabilities").get<unsigned>();
        const auto& effect = need(def, "appliance_effect");
        if (!effect.is_null()) {
            cls.appliance_effect = appliance_from_name(effect.get<std::string>());
        }
        cls.linked_receptacle = opt_string(need(def, "linked_receptacle"));
        catalog[name] = std::move(cls);
    }
    return catalog;
}

auto layout_to_json(const sim::Layout& layout) -> json {
    return {{"name", layout.name},
            {"split", layout.split},
            {"nodes", layout.nodes},
            {"adjacency", layout.adjacency},
            {"furnishings", layout.furnishings}};
}

auto layout_from_json(const json& j) -> sim::Layout {
    sim::Layout layout;
    layout.name = need(j, "name").get<std::string>();
    layout.split = need(j, "split").get<std::string>();
    layout.nodes = need(j, "nodes").get<std::vector<std::string>>();
    layout.adjacency = need(j, "adjacency").get<std::map<std::string, std::vector<std::string>>>();
    layout.furnishings =
        need(j, "furnishings").get<std::map<std::string, std::vector<std::string>>>();
    return layout;
}

auto location_to_json(const sim::Location& loc) -> json {
    static const std::map<sim::LocationKind, std::string> names = {
        {sim::LocationKind::kAtNode, "at_node"},
        {sim::LocationKind::kInReceptacle, "in_receptacle"},
        {sim::LocationKind::kInHand, "in_hand"}};
    return {{"kind", names.at(loc.kind)}, {"ref", loc.ref}};
}

auto location_from_json(const json& j) -> sim::Location {
    const auto kind = need(j, "kind").get<std::string>();
    const auto ref = need(j, "ref").get<std::string>();
    if (kind == "at_node") { return sim::Location::at_node(ref); }
    if (kind == "in_receptacle") { return sim::Location::in_receptacle(ref); }
    if (kind == "in_hand") { return sim::Location::in_hand(); }
    throw std::runtime_error("unknown location kind: " + kind);
}

auto task_to_json(const taskgen::Task& task) -> json {
    auto instances = json::array();
    for (const auto& [id, inst] : task.initial_state.instances) {
        instances.push_back({{"id", inst.id},
                             {"class", inst.class_name},
                             {"location", location_to_json(inst.location)},
                             {"open", inst.is_open},
                             {"on", inst.is_on},
                             {"sliced", inst.is_sliced},
                             {"clean", inst.is_clean},
                             {"hot", inst.is_hot},
                             {"cold", inst.is_cold}});
    }
    const auto& agent = task.initial_state.agent;
    return {{"id", task.id},
            {"type", taskgen::task_type_name(task.type)},
            {"split", task.split},
            {"instruction", task.instruction},
            {"goal", sim::format_goal(task.goal)},
            {"expert_length", task.expert_length},
            {"layout", task.initial_state.scene->layout.name},
            {"step_count", task.initial_state.step_count},
            {"agent",
             {{"node", agent.node},
              {"held", to_json(agent.held)},
              {"last_visited_receptacle", to_json(agent.last_visited_receptacle)}}},
            {"instances", std::move(instances)}};
}

auto task_from_json(const json& j,
                    const std::map<std::string, std::shared_ptr<const sim::SceneDef>>& scenes)
    -> taskgen::Task {
    taskgen::Task task;
    task.id = need(j, "id").get<std::string>();
    const auto type = taskgen::task_type_from_name(need(j, "type").get<std::string>());
    if (!type) { throw std::runtime_error("unknown task type: " + need(j, "type").dump()); }
    task.type = *type;
    task.split = need(j, "split").get<std::string>();
    task.instruction = need(j, "instruction").get<std::string>();
    task.goal = sim::parse_goal(need(j, "goal").get<std::vector<std::string>>());
    task.expert_length = need(j, "expert_length").get<int>();

    const auto layout_name = need(j, "layout").get<std::string>();
    const auto scene = scenes.find(layout_name);
    if (scene == scenes.end()) { throw std::runtime_error("unknown layout: " + layout_name); }
    task.initial_state.scene = scene->second;
    task.initial_state.step_count = need(j, "step_count").get<std::uint64_t>();

    const auto& agent = need(j, "agent");
    task.initial_state.agent.node = need(agent, "node").get<std::string>();
    task.initial_state.agent.held = opt_string(need(agent, "held"));
    task.initial_state.agent.last_visited_receptacle =
        opt_string(need(agent, "last_visited_receptacle"));

    for (const auto& item : need(j, "instances")) {
        sim::ObjectInstance inst;
        inst.id = need(item, "id").get<std::string>();
        inst.class_name = need(item, "class").get<std::string>();
        inst.location = location_from_json(need(item, "location"));
        inst.is_open = need(item, "open").get<bool>();
        inst.is_on = need(item, "on").get<bool>();
        inst.is_sliced = need(item, "sliced").get<bool>();
        inst.is_clean = need(item, "clean").get<bool>();
        inst.is_hot = need(item, "hot").get<bool>();
        inst.is_cold = need(item, "cold").get<bool>();
        task.initial_state.instances[inst.id] = std::move(inst);
    }
    return task;
}

// --- episodes ---

auto episode_to_json(const eval::EpisodeResult& ep) -> json {
    return {{"task_id", ep.task_id},
            {"success", ep.success},
            {"model_length", ep.model_length},
            {"expert_length", ep.expert_length},
            {"pl", ep.pl},
            {"steps", executed_list_to_json(ep.steps)}};
}

auto episode_from_json(const json& j) -> eval::EpisodeResult {
    eval::EpisodeResult ep;
    ep.task_id = need(j, "task_id").get<std::string>();
    ep.success = need(j, "success").get<bool>();
    ep.model_length = need(j, "model_length").get<int>();
    ep.expert_length = need(j, "expert_length").get<int>();
    ep.pl = need(j, "pl").get<double>();
    ep.steps = executed_list_from_json(need(j, "steps"));
    return ep;
}

}  // namespace

auto append_collect(Dataset& dataset, const std::string& task_id,
                    const search::CollectResult& result) -> void {
    for (const auto& traj : result.trajectories) {
        for (const auto& step : traj) {
            dataset.sft.push_back({task_id, step.context, step.chosen});
        }
    }
    for (const auto& pair : result.action_pairs) {
        dataset.action_pref.push_back({task_id, pair.context, pair.chosen, pair.rejected});
    }
    for (const auto& pair : result.state_pairs) {
        dataset.state_pref.push_back(
            {task_id, pair.conditioning, pair.anchor, pair.chosen_next, pair.rejected_next});
    }
}

auto to_train_data(const Dataset& dataset) -> train::TrainData {
    train::TrainData data;
    for (const auto& r : dataset.sft) { data.sft_steps.push_back({r.context, r.chosen}); }
    for (const auto& r : dataset.action_pref) {
        data.action_pairs.push_back({r.context, r.chosen, r.rejected, 0});
    }
    for (const auto& r : dataset.state_pref) {
        data.state_pairs.push_back({r.conditioning, r.anchor, r.chosen_next, r.rejected_next, 0});
    }
    return data;
}

auto write_dataset(const Dataset& dataset, const std::string& path) -> void {
    auto out = open_for_write(path);
    const json header = {{"schema", kDatasetSchema},
                         {"vocab_hash", dataset.vocab_hash},
                         {"config", parse_config_object(dataset.config_json)}};
    out << header.dump() << '\n';
    for (const auto& r : dataset.sft) { out << sft_to_json(r).dump() << '\n'; }
    for (const auto& r : dataset.action_pref) { out << action_pref_to_json(r).dump() << '\n'; }
    for (const auto& r : dataset.state_pref) { out << state_pref_to_json(r).dump() << '\n'; }
}

auto read_dataset(const std::string& path, const std::optional<std::string>& expect_vocab_hash)
    -> Dataset {
    Dataset dataset;
    read_lines(
        path,
        [&](const json& header) {
            check_schema(header, kDatasetSchema);
            dataset.vocab_hash = need(header, "vocab_hash").get<std::string>();
            dataset.config_json = need(header, "config").dump();
            if (expect_vocab_hash && dataset.vocab_hash != *expect_vocab_hash) {
                throw HashMismatch(*expect_vocab_hash, dataset.vocab_hash);
            }
        },
        [&](const json& j) {
            const auto kind = need(j, "kind").get<std::string>();
            if (kind == "sft") {
                dataset.sft.push_back(sft_from_json(j));
            } else if (kind == "action_pref") {
                dataset.action_pref.push_back(action_pref_from_json(j));
            } else if (kind == "state_pref") {
                dataset.state_pref.push_back(state_pref_from_json(j));
            } else {
                throw std::runtime_error("unknown record kind: " + kind);
            }
        });
    return dataset;
}

auto write_tasks(const TaskFile& file, const std::string& path) -> void {
    auto out = open_for_write(path);
    auto layouts = json::array();
    for (const auto& layout : file.layouts) { layouts.push_back(layout_to_json(layout)); }
    const json header = {{"schema", kTasksSchema},
                         {"config", parse_config_object(file.config_json)},
                         {"catalog", catalog_to_json(file.catalog)},
                         {"layouts", std::move(layouts)}};
    out << header.dump() << '\n';
    for (const auto& task : file.tasks) { out << task_to_json(task).dump() << '\n'; }
}

auto read_tasks(const std::string& path) -> TaskFile {
    TaskFile file;
    std::map<std::string, std::shared_ptr<const sim::SceneDef>> scenes;
    read_lines(
        path,
        [&](const json& header) {
            check_schema(header, kTasksSchema);
            file.config_json = need(header, "config").dump();
            file.catalog = catalog_from_json(need(header, "catalog"));
            for (const auto& item : need(header, "layouts")) {
                file.layouts.push_back(layout_from_json(item));
                scenes[file.layouts.back().name] = std::make_shared<const sim::SceneDef>(
                    sim::SceneDef{file.catalog, file.layouts.back()});
            }
        },
        [&](const json& j) { file.tasks.push_back(task_from_json(j, scenes)); });
    return file;
}

auto write_episodes(const EpisodeFile& file, const std::string& path) -> void {
    auto out = open_for_write(path);
    const json header = {{"schema", kEpisodesSchema},
                         {"config", parse_config_object(file.config_json)}};
    out << header.dump() << '\n';
    for (const auto& ep : file.episodes) { out << episode_to_json(ep).dump() << '\n'; }
}

auto read_episodes(const std::string& path) -> EpisodeFile {
    EpisodeFile file;
    read_lines(
        path,
        [&](const json& header) {
            check_schema(header, kEpisodesSchema);
            file.config_json = need(header, "config").dump();
        },
        [&](const json& j) { file.episodes.push_back(episode_from_json(j)); });
    return file;
}

}  // namespace planlab::store
