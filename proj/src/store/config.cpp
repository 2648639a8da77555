#include "planlab/store/config.h"

#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"

namespace planlab::store {

namespace {

using nlohmann::json;

// One overlay entry per field keeps to_json_text and apply_json_text in sync.
template <typename Fn>
void each_field(RunConfig& c, const Fn& fn) {
    fn("seed", c.seed);
    fn("tasks_per_type", c.tasks_per_type);
    fn("candidates_per_node", c.candidates_per_node);
    fn("temperature", c.temperature);
    fn("tau", c.tau);
    fn("max_depth", c.max_depth);
    fn("beam_width", c.beam_width);
    fn("oracle_guidance", c.oracle_guidance);
    fn("judge", c.judge);
    fn("judge_endpoint", c.judge_endpoint);
    fn("judge_model", c.judge_model);
    fn("judge_api_key_env", c.judge_api_key_env);
    fn("mode", c.mode);
    fn("feature_dim", c.feature_dim);
    fn("state_len_cap", c.state_len_cap);
    fn("beta", c.beta);
    fn("lambda", c.lambda);
    fn("sft_epochs", c.sft_epochs);
    fn("dpo_epochs", c.dpo_epochs);
    fn("lr_sft", c.lr_sft);
    fn("lr_dpo", c.lr_dpo);
    fn("batch_size", c.batch_size);
    fn("eval_max_steps", c.eval_max_steps);
}

void require_positive(const char* name, double value) {
    if (!(value > 0)) {
        throw ConfigError(std::string(name) + " must be positive, got " + std::to_string(value));
    }
}

}  // namespace

auto to_json_text(const RunConfig& config) -> std::string {
    json j = json::object();
    auto copy = config;
    each_field(copy, [&](const char* key, const auto& value) { j[key] = value; });
    return j.dump();
}

auto apply_json_text(RunConfig& config, const std::string& text) -> void {
    json parsed;
    try {
        parsed = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("not valid JSON: ") + e.what());
    }
    if (!parsed.is_object()) { throw ConfigError("config must be a JSON object"); }

    auto remaining = parsed;
    each_field(config, [&](const char* key, auto& value) {
        const auto it = remaining.find(key);
        if (it == remaining.end()) { return; }
        try {
            value = it->get<std::decay_t<decltype(value)>>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad value for ") + key + ": " + e.what());
        }
        remaining.erase(key);
    });
    for (const auto& [key, value] : remaining.items()) {
        if (key.find("api_key") != std::string::npos && key != "judge_api_key_env") {
            throw ConfigError("credentials belong in the environment, not the config: " + key);
        }
        throw ConfigError("unknown key: " + key);
    }
}

auto apply_json_file(RunConfig& config, const std::string& path) -> void {
    std::ifstream in(path);
    if (!in) { throw ConfigError("cannot read " + path); }
    std::ostringstream text;
    text << in.rdbuf();
    apply_json_text(config, text.str());
}

auto validate(const RunConfig& config) -> void {
    if (config.judge != "oracle" && config.judge != "llm") {
        throw ConfigError("judge must be oracle or llm, got " + config.judge);
    }
    if (!model::mode_from_name(config.mode)) {
        throw ConfigError("mode must be action_conditioned or goal_directed, got " + config.mode);
    }
    if (config.judge == "llm" && config.judge_endpoint.empty()) {
        throw ConfigError("the llm judge needs judge_endpoint");
    }
    require_positive("tasks_per_type", config.tasks_per_type);
    require_positive("candidates_per_node", config.candidates_per_node);
    require_positive("temperature", config.temperature);
    require_positive("max_depth", config.max_depth);
    require_positive("beam_width", config.beam_width);
    require_positive("feature_dim", config.feature_dim);
    require_positive("state_len_cap", config.state_len_cap);
    require_positive("beta", config.beta);
    if (config.lambda < 0) { throw ConfigError("lambda must be nonnegative"); }
    if (config.sft_epochs < 0 || config.dpo_epochs < 0) {
        throw ConfigError("epoch counts must be nonnegative");
    }
    require_positive("lr_sft", config.lr_sft);
    require_positive("lr_dpo", config.lr_dpo);
    require_positive("batch_size", config.batch_size);
    require_positive("eval_max_steps", config.eval_max_steps);
}

auto world_mode(const RunConfig& config) -> model::WorldModelMode {
    const auto mode = model::mode_from_name(config.mode);
    if (!mode) { throw ConfigError("unknown mode: " + config.mode); }
    return *mode;
}

auto search_config(const RunConfig& config) -> search::SearchConfig {
    search::SearchConfig sc;
    sc.candidates_per_node = config.candidates_per_node;
    sc.temperature = config.temperature;
    sc.tau = config.tau;
    sc.max_depth = config.max_depth;
    sc.beam_width = config.beam_width;
    sc.oracle_guidance = config.oracle_guidance;
    sc.seed = config.seed;
    sc.mode = world_mode(config);
    return sc;
}

auto train_config(const RunConfig& config) -> train::TrainConfig {
    train::TrainConfig tc;
    tc.beta = config.beta;
    tc.lambda = config.lambda;
    tc.sft_epochs = config.sft_epochs;
    tc.dpo_epochs = config.dpo_epochs;
    tc.lr_sft = config.lr_sft;
    tc.lr_dpo = config.lr_dpo;
    tc.batch_size = config.batch_size;
    tc.seed = config.seed;
    tc.mode = world_mode(config);
    return tc;
}

}  // namespace planlab::store
