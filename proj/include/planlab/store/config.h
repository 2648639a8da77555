#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "planlab/model/features.h"
#include "planlab/reward/score.h"
#include "planlab/search/collect.h"
#include "planlab/train/losses.h"

namespace planlab::store {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& why) : std::runtime_error("config error: " + why) {}
};

// Every knob a run can turn, serialized into each artifact it produces.
// Precedence is defaults, then the config file, then CLI flags. Credentials
// never live here: judge_api_key_env names the environment variable that
// holds the key.
struct RunConfig {
    std::uint64_t seed = 0;
    int tasks_per_type = 10;

    int candidates_per_node = 5;
    double temperature = 0.8;
    double tau = reward::kDefaultTau;
    int max_depth = 25;
    int beam_width = 16;
    bool oracle_guidance = true;

    std::string judge = "oracle";  // oracle | llm
    std::string judge_endpoint;    // http(s) endpoint for the llm judge
    std::string judge_model = "gpt-4o";
    std::string judge_api_key_env = "PLANLAB_JUDGE_API_KEY";

    std::string mode = "action_conditioned";  // action_conditioned | goal_directed
    int feature_dim = 4096;
    int state_len_cap = 64;

    double beta = 0.1;
    double lambda = 1.0;
    int sft_epochs = 3;
    int dpo_epochs = 1;
    double lr_sft = 0.1;
    double lr_dpo = 0.05;
    int batch_size = 32;

    int eval_max_steps = 25;

    auto operator==(const RunConfig&) const -> bool = default;
};

// Canonical JSON object, keys sorted; round trips through apply_json_text.
auto to_json_text(const RunConfig& config) -> std::string;

// Overlays the keys present in the text onto the config; untouched fields
// keep their current values. Unknown keys and type mismatches throw.
auto apply_json_text(RunConfig& config, const std::string& text) -> void;
auto apply_json_file(RunConfig& config, const std::string& path) -> void;

// Throws ConfigError unless every field is in range and enums are spelled
// correctly.
auto validate(const RunConfig& config) -> void;

auto world_mode(const RunConfig& config) -> model::WorldModelMode;
auto search_config(const RunConfig& config) -> search::SearchConfig;
auto train_config(const RunConfig& config) -> train::TrainConfig;

}  // namespace planlab::store
