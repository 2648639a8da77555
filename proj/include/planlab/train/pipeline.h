#pragma once

#include <vector>

#include "planlab/train/losses.h"

namespace planlab::train {

struct TrainData {
    std::vector<search::SftStep> sft_steps;
    std::vector<search::ActionPrefPair> action_pairs;
    std::vector<search::StatePrefPair> state_pairs;
};

struct PipelineResult {
    model::ModelParams sft_params;
    model::ModelParams ref_params;   // frozen copy of the post-SFT parameters
    model::ModelParams dpo_params;   // action-only branch (lambda forced to 0)
    model::ModelParams d2po_params;  // branch trained at the configured lambda
    std::vector<double> sft_epoch_losses;          // full-dataset loss after each epoch
    std::vector<LossReport> dpo_epoch_reports;     // full-dataset report after each epoch
    std::vector<LossReport> d2po_epoch_reports;
};

struct SftStage {
    model::ModelParams params;
    std::vector<double> epoch_losses;
};

struct PrefStage {
    model::ModelParams params;
    std::vector<LossReport> epoch_reports;
};

// Supervised warm start from zero weights; only the action head moves, so the
// result still scores next states uniformly.
auto run_sft(const model::Vocabulary& vocab, const std::vector<search::SftStep>& steps,
             const TrainConfig& config, int feature_dim = 4096, int state_len_cap = 64)
    -> SftStage;

// Preference stage at config.lambda from a frozen reference. One epoch walks
// the action pairs once; the state pairs are partitioned evenly across those
// steps, co-sampled per update.
auto run_pref(const model::ModelParams& ref,
              const std::vector<search::ActionPrefPair>& action_pairs,
              const std::vector<search::StatePrefPair>& state_pairs, const TrainConfig& config)
    -> PrefStage;

// SFT from zero-initialized parameters, then two preference branches from the
// same frozen reference. Both branches walk identical minibatch schedules, so
// running the whole pipeline at lambda = 0 leaves the branches bit-identical.
auto run_pipeline(const model::Vocabulary& vocab, const TrainData& data, const TrainConfig& config)
    -> PipelineResult;

}  // namespace planlab::train
