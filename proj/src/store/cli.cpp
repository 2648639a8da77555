#include "planlab/store/cli.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "planlab/eval/metrics.h"
#include "planlab/eval/rollout.h"
#include "planlab/model/scorer.h"
#include "planlab/model/vocab.h"
#include "planlab/reward/judge.h"
#include "planlab/rng.h"
#include "planlab/search/collect.h"
#include "planlab/sim/world.h"
#include "planlab/store/config.h"
#include "planlab/store/dataset.h"
#include "planlab/store/paramsio.h"
#include "planlab/taskgen/generate.h"
#include "planlab/train/pipeline.h"

namespace planlab::store {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CommonArgs {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::optional<std::string> in;
    std::optional<std::string> judge;
    std::optional<std::string> mode;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", args.seed, "run seed");
    sub->add_option("--out", args.out, "output directory (default: out)");
    sub->add_option("--in", args.in, "input directory (default: the --out directory)");
    sub->add_option("--judge", args.judge, "process reward source")
        ->check(CLI::IsMember({"oracle", "llm"}));
    sub->add_option("--mode", args.mode, "world model conditioning")
        ->check(CLI::IsMember({"action_conditioned", "goal_directed"}));
}

// Precedence: defaults, then the config file, then explicit flags.
auto resolve(const CommonArgs& args) -> RunConfig {
    RunConfig cfg;
    if (args.config_path) { apply_json_file(cfg, *args.config_path); }
    if (args.seed) { cfg.seed = *args.seed; }
    if (args.judge) { cfg.judge = *args.judge; }
    if (args.mode) { cfg.mode = *args.mode; }
    validate(cfg);
    return cfg;
}

auto in_dir(const CommonArgs& args) -> fs::path {
    return fs::path(args.in ? *args.in : args.out);
}

auto out_dir(const CommonArgs& args) -> fs::path {
    fs::create_directories(args.out);
    return fs::path(args.out);
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw std::runtime_error("cannot write " + path.string()); }
    out << j.dump() << '\n';
}

auto config_json(const RunConfig& cfg) -> json { return json::parse(to_json_text(cfg)); }

auto stats_to_json(const train::MarginStats& s) -> json {
    return {{"mean", s.mean}, {"p10", s.p10}, {"p25", s.p25},
            {"p50", s.p50},   {"p75", s.p75}, {"p90", s.p90}};
}

auto report_to_json(const train::LossReport& r) -> json {
    return {{"loss_action", r.loss_action},
            {"loss_state", r.loss_state},
            {"loss_total", r.loss_total},
            {"action_margins", stats_to_json(r.action_margins)},
            {"state_margins", stats_to_json(r.state_margins)},
            {"pair_accuracy_action", r.pair_accuracy_action},
            {"pair_accuracy_state", r.pair_accuracy_state}};
}

// --- data prerequisites ---

auto load_task_file(const fs::path& dir) -> TaskFile {
    return read_tasks((dir / "tasks.jsonl").string());
}

struct TrainInputs {
    model::Vocabulary vocab;
    train::TrainData data;
};

auto load_train_inputs(const fs::path& dir) -> TrainInputs {
    const auto file = load_task_file(dir);
    auto vocab = model::build_vocabulary(file.catalog);
    const auto dataset = read_dataset((dir / "dataset.jsonl").string(), vocab.digest());
    return {std::move(vocab), to_train_data(dataset)};
}

// --- subcommands ---

auto run_gen_scenes(const RunConfig& cfg, const fs::path& out) -> int {
    TaskFile file;
    file.config_json = to_json_text(cfg);
    file.catalog = taskgen::default_catalog();
    file.layouts = taskgen::default_layouts();
    write_tasks(file, (out / "scenes.jsonl").string());
    std::cout << "wrote " << (out / "scenes.jsonl").string() << ": " << file.catalog.size()
              << " classes, " << file.layouts.size() << " layouts\n";
    return 0;
}

auto run_gen_tasks(const RunConfig& cfg, const fs::path& out) -> int {
    TaskFile file;
    file.config_json = to_json_text(cfg);
    file.catalog = taskgen::default_catalog();
    file.layouts = taskgen::default_layouts();
    file.tasks = taskgen::generate_tasks(file.catalog, file.layouts, cfg.tasks_per_type, cfg.seed);
    write_tasks(file, (out / "tasks.jsonl").string());
    std::cout << "wrote " << (out / "tasks.jsonl").string() << ": " << file.tasks.size()
              << " tasks\n";
    return 0;
}

auto llm_scorer(std::shared_ptr<reward::JudgeClient> client, const taskgen::Task& task)
    -> search::StepScorer {
    return [client, goal = task.goal](const sim::WorldState& state,
                                      const std::vector<sim::ExecutedStep>& history,
                                      const std::string& tag, const sim::ActionStep& candidate) {
        const auto [next, status] = sim::apply_action(state, candidate);
        auto proc = client->score(goal, history, candidate, status, sim::observe(next));
        proc.rationale_tag = tag;
        return reward::combine(proc, reward::env_feasibility(state, candidate));
    };
}

auto run_collect(const RunConfig& cfg, const fs::path& in, const fs::path& out) -> int {
    const auto file = load_task_file(in);
    const auto vocab = model::build_vocabulary(file.catalog);
    const auto policy = model::init_params(vocab, cfg.feature_dim, cfg.state_len_cap);

    std::shared_ptr<reward::JudgeClient> client;
    if (cfg.judge == "llm") {
        reward::JudgeConfig jc;
        jc.endpoint = cfg.judge_endpoint;
        jc.model = cfg.judge_model;
        jc.api_key_env = cfg.judge_api_key_env;
        client = std::make_shared<reward::JudgeClient>(jc);
    }

    Dataset dataset;
    dataset.vocab_hash = vocab.digest();
    dataset.config_json = to_json_text(cfg);
    auto exhausted = json::array();
    search::TreeStats totals;
    for (std::size_t i = 0; i < file.tasks.size(); ++i) {
        const auto& task = file.tasks[i];
        auto sc = search_config(cfg);
        sc.seed = derive_seed(cfg.seed, "collect", i);
        try {
            const auto result =
                client ? search::collect(task, search::default_candidates(policy, task, sc),
                                         llm_scorer(client, task), sc)
                       : search::collect(task, policy, sc);
            append_collect(dataset, task.id, result);
            totals.nodes_created += result.stats.nodes_created;
            totals.nodes_expanded += result.stats.nodes_expanded;
            totals.goals_found += result.stats.goals_found;
            totals.judge_calls += result.stats.judge_calls;
            totals.deepest_level = std::max(totals.deepest_level, result.stats.deepest_level);
        } catch (const search::SearchExhausted&) {
            exhausted.push_back(task.id);
        }
    }

    write_dataset(dataset, (out / "dataset.jsonl").string());
    write_json(out / "collect_report.json",
               {{"config", config_json(cfg)},
                {"tasks", file.tasks.size()},
                {"exhausted", exhausted},
                {"goals_found", totals.goals_found},
                {"judge_calls", totals.judge_calls},
                {"nodes_created", totals.nodes_created},
                {"nodes_expanded", totals.nodes_expanded},
                {"deepest_level", totals.deepest_level},
                {"sft_records", dataset.sft.size()},
                {"action_pref_records", dataset.action_pref.size()},
                {"state_pref_records", dataset.state_pref.size()}});
    std::cout << "collected " << dataset.sft.size() << " sft + " << dataset.action_pref.size()
              << " action + " << dataset.state_pref.size() << " state records from "
              << file.tasks.size() - exhausted.size() << "/" << file.tasks.size() << " tasks\n";
    return 0;
}

auto run_train_sft(const RunConfig& cfg, const fs::path& in, const fs::path& out) -> int {
    const auto inputs = load_train_inputs(in);
    const auto stage = train::run_sft(inputs.vocab, inputs.data.sft_steps, train_config(cfg),
                                      cfg.feature_dim, cfg.state_len_cap);
    save_params(stage.params, (out / "params_sft.bin").string());
    write_json(out / "train_sft_report.json", {{"config", config_json(cfg)},
                                               {"mode", cfg.mode},
                                               {"epoch_losses", stage.epoch_losses}});
    std::cout << "sft: " << inputs.data.sft_steps.size() << " steps, final loss "
              << (stage.epoch_losses.empty() ? 0.0 : stage.epoch_losses.back()) << "\n";
    return 0;
}

auto run_train_pref(const RunConfig& cfg, const fs::path& in, const fs::path& out,
                    bool with_state) -> int {
    const auto ref = load_params((in / "params_sft.bin").string());
    const auto dataset = read_dataset((in / "dataset.jsonl").string(), ref.vocab.digest());
    const auto data = to_train_data(dataset);
    auto tc = train_config(cfg);
    if (!with_state) { tc.lambda = 0.0; }
    const auto stage = train::run_pref(ref, data.action_pairs, data.state_pairs, tc);

    const auto* params_name = with_state ? "params_d2po.bin" : "params_dpo.bin";
    save_params(stage.params, (out / params_name).string());
    auto epochs = json::array();
    for (const auto& r : stage.epoch_reports) { epochs.push_back(report_to_json(r)); }
    write_json(out / (with_state ? "train_d2po_report.json" : "train_dpo_report.json"),
               {{"config", config_json(cfg)},
                {"mode", cfg.mode},
                {"lambda", tc.lambda},
                {"epochs", epochs}});
    const auto label = with_state ? "d2po" : "dpo";
    if (stage.epoch_reports.empty()) {
        std::cout << label << ": no epochs run\n";
    } else {
        const auto& last = stage.epoch_reports.back();
        std::cout << label << ": pair accuracy " << last.pair_accuracy_action << " action, "
                  << last.pair_accuracy_state << " state\n";
    }
    return 0;
}

void write_eval_report(const RunConfig& cfg, const eval::EvalReport& report,
                       const fs::path& path) {
    auto rows = json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"split", row.split},
                        {"task_type", row.task_type},
                        {"episodes", row.episodes},
                        {"sr", row.sr},
                        {"pl", row.pl}});
    }
    write_json(path, {{"config", config_json(cfg)}, {"mode", cfg.mode}, {"rows", rows}});
}

auto run_eval(const RunConfig& cfg, const fs::path& in, const fs::path& out,
              const std::optional<std::string>& params_path) -> int {
    const auto file = load_task_file(in);
    const auto params =
        load_params(params_path ? *params_path : (in / "params_d2po.bin").string());
    const auto expected = model::build_vocabulary(file.catalog).digest();
    if (params.vocab.digest() != expected) {
        throw HashMismatch(expected, params.vocab.digest());
    }

    EpisodeFile episodes;
    episodes.config_json = to_json_text(cfg);
    for (const auto& task : file.tasks) {
        episodes.episodes.push_back(eval::rollout(params, task, cfg.eval_max_steps));
    }
    write_episodes(episodes, (out / "eval_episodes.jsonl").string());
    const auto report = eval::aggregate(episodes.episodes, file.tasks);
    write_eval_report(cfg, report, out / "eval_report.json");
    std::cout << eval::format_report(report);
    return 0;
}

auto run_report(const RunConfig& cfg, const fs::path& in, const fs::path& out) -> int {
    const auto file = load_task_file(in);
    const auto episodes = read_episodes((in / "eval_episodes.jsonl").string());
    const auto report = eval::aggregate(episodes.episodes, file.tasks);
    write_eval_report(cfg, report, out / "eval_report.json");
    std::cout << eval::format_report(report);
    return 0;
}

void fill_random(std::vector<double>& values, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& v : values) { v = (rng.uniform_double() - 0.5) * 0.6; }
}

// Central differences against the analytic gradients of the three losses.
// Sampling stays within coordinates whose analytic gradient clears 1e-4:
// double-precision differencing bottoms out near 1e-10 absolute, so smaller
// coordinates measure rounding noise rather than the gradient.
auto run_gradcheck(const RunConfig& cfg) -> int {
    const auto catalog = taskgen::default_catalog();
    const auto vocab = model::build_vocabulary(catalog);
    const auto tasks = taskgen::generate_tasks(catalog, taskgen::default_layouts(), 1,
                                               derive_seed(cfg.seed, "gradcheck-tasks"));
    const auto policy = model::init_params(vocab, cfg.feature_dim, cfg.state_len_cap);
    train::TrainData data;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto sc = search_config(cfg);
        sc.seed = derive_seed(cfg.seed, "gradcheck-collect", i);
        const auto result = search::collect(tasks[i], policy, sc);
        for (const auto& traj : result.trajectories) {
            data.sft_steps.insert(data.sft_steps.end(), traj.begin(), traj.end());
        }
        data.action_pairs.insert(data.action_pairs.end(), result.action_pairs.begin(),
                                 result.action_pairs.end());
        data.state_pairs.insert(data.state_pairs.end(), result.state_pairs.begin(),
                                result.state_pairs.end());
    }
    // Small batches keep the probe re-evaluations fast and every retained
    // term's gradient well above differencing noise.
    const auto cap = [](auto& v) {
        if (v.size() > 48) { v.resize(48); }
    };
    cap(data.sft_steps);
    cap(data.action_pairs);
    cap(data.state_pairs);

    auto theta = model::init_params(vocab, cfg.feature_dim, cfg.state_len_cap);
    auto ref = theta;
    fill_random(theta.action_w, derive_seed(cfg.seed, "gradcheck-theta", 0));
    fill_random(theta.state_w, derive_seed(cfg.seed, "gradcheck-theta", 1));
    fill_random(ref.action_w, derive_seed(cfg.seed, "gradcheck-ref", 0));
    fill_random(ref.state_w, derive_seed(cfg.seed, "gradcheck-ref", 1));

    const auto mode = world_mode(cfg);
    const auto sft = train::sft_loss_and_grad(theta, data.sft_steps);
    const auto act = train::dpo_action_loss(theta, ref, data.action_pairs, cfg.beta);
    const auto sta = train::dpo_state_loss(theta, ref, data.state_pairs, cfg.beta, mode);
    const std::vector<const std::vector<double>*> grads = {&sft.grad, &act.grad, &sta.grad};

    const auto loss_at = [&](int which) {
        switch (which) {
            case 0: return train::sft_loss_and_grad(theta, data.sft_steps).loss;
            case 1: return train::dpo_action_loss(theta, ref, data.action_pairs, cfg.beta).loss;
            default:
                return train::dpo_state_loss(theta, ref, data.state_pairs, cfg.beta, mode).loss;
        }
    };

    struct Probe {
        int loss;
        std::size_t index;
    };
    std::vector<std::vector<std::size_t>> pools(3);
    for (int which = 0; which < 3; ++which) {
        const auto& grad = *grads[which];
        for (std::size_t i = 0; i < grad.size(); ++i) {
            if (std::abs(grad[i]) >= 3e-5) { pools[which].push_back(i); }
        }
        Rng rng(derive_seed(cfg.seed, "gradcheck-sample", which));
        rng.shuffle(pools[which]);
    }
    std::vector<Probe> probes;
    constexpr std::size_t kTarget = 1200;
    for (std::size_t round = 0; probes.size() < kTarget; ++round) {
        bool any = false;
        for (int which = 0; which < 3 && probes.size() < kTarget; ++which) {
            if (round < pools[which].size()) {
                probes.push_back({which, pools[which][round]});
                any = true;
            }
        }
        if (!any) { break; }
    }
    if (probes.size() < 1000) {
        std::cerr << json{{"error", "gradient support too small: " +
                                        std::to_string(probes.size()) + " checkable weights"}}
                         .dump()
                  << "\n";
        return 1;
    }

    const double h = 1e-5;
    double max_rel = 0.0;
    for (const auto& probe : probes) {
        auto& w = probe.loss == 2 ? theta.state_w : theta.action_w;
        const double g = (*grads[probe.loss])[probe.index];
        const double orig = w[probe.index];
        w[probe.index] = orig + h;
        const double hi = loss_at(probe.loss);
        w[probe.index] = orig - h;
        const double lo = loss_at(probe.loss);
        w[probe.index] = orig;
        const double fd = (hi - lo) / (2 * h);
        const double rel = std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-6});
        max_rel = std::max(max_rel, rel);
    }

    std::cout << json{{"max_rel_err", max_rel}, {"checked", probes.size()}, {"threshold", 1e-5}}
                     .dump()
              << "\n";
    return max_rel > 1e-5 ? 1 : 0;
}

}  // namespace

auto cli_main(const std::vector<std::string>& args) -> int {
    CLI::App app{"planlab: symbolic embodied planning, tree-search preference data, and "
                 "dual preference training"};
    app.require_subcommand(1);

    CommonArgs common;
    std::optional<std::string> eval_params;

    auto* gen_scenes = app.add_subcommand("gen-scenes", "write the scene catalog and layouts");
    auto* gen_tasks = app.add_subcommand("gen-tasks", "generate a validated task corpus");
    auto* collect = app.add_subcommand("collect", "tree-search preference data over the corpus");
    auto* train_sft = app.add_subcommand("train-sft", "supervised stage on collected steps");
    auto* train_dpo = app.add_subcommand("train-dpo", "action-preference stage from the sft "
                                                      "checkpoint");
    auto* train_d2po = app.add_subcommand("train-d2po", "action plus state preference stage "
                                                        "from the sft checkpoint");
    auto* eval_cmd = app.add_subcommand("eval", "greedy rollouts over the corpus");
    auto* report = app.add_subcommand("report", "aggregate metrics from saved episodes");
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference audit of the loss "
                                                      "gradients");
    for (auto* sub : {gen_scenes, gen_tasks, collect, train_sft, train_dpo, train_d2po, eval_cmd,
                      report, gradcheck}) {
        add_common(sub, common);
    }
    eval_cmd->add_option("--params", eval_params,
                         "parameter file to evaluate (default: <in>/params_d2po.bin)");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("planlab");
    for (const auto& a : args) { argv.push_back(a.c_str()); }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
    }

    try {
        const auto cfg = resolve(common);
        if (app.got_subcommand(gen_scenes)) { return run_gen_scenes(cfg, out_dir(common)); }
        if (app.got_subcommand(gen_tasks)) { return run_gen_tasks(cfg, out_dir(common)); }
        if (app.got_subcommand(collect)) {
            return run_collect(cfg, in_dir(common), out_dir(common));
        }
        if (app.got_subcommand(train_sft)) {
            return run_train_sft(cfg, in_dir(common), out_dir(common));
        }
        if (app.got_subcommand(train_dpo)) {
            return run_train_pref(cfg, in_dir(common), out_dir(common), false);
        }
        if (app.got_subcommand(train_d2po)) {
            return run_train_pref(cfg, in_dir(common), out_dir(common), true);
        }
        if (app.got_subcommand(eval_cmd)) {
            return run_eval(cfg, in_dir(common), out_dir(common), eval_params);
        }
        if (app.got_subcommand(report)) { return run_report(cfg, in_dir(common), out_dir(common)); }
        if (app.got_subcommand(gradcheck)) { return run_gradcheck(cfg); }
        std::cerr << json{{"error", "no subcommand"}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
}

}  // namespace planlab::store
