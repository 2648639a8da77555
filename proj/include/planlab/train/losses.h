#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "planlab/model/scorer.h"
#include "planlab/search/collect.h"

namespace planlab::train {

class EmptyBatch : public std::invalid_argument {
  public:
    explicit EmptyBatch(const std::string& what) : std::invalid_argument("empty batch: " + what) {}
};

struct TrainConfig {
    double beta = 0.1;
    double lambda = 1.0;
    int sft_epochs = 3;
    int dpo_epochs = 1;
    double lr_sft = 0.1;
    double lr_dpo = 0.05;
    int batch_size = 32;
    std::uint64_t seed = 0;
    model::WorldModelMode mode = model::WorldModelMode::kActionConditioned;
};

struct MarginStats {
    double mean = 0.0;
    double p10 = 0.0;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
    double p90 = 0.0;
};

// Mean and interpolated quantiles; zeros on an empty list.
auto margin_stats(std::vector<double> margins) -> MarginStats;

struct LossReport {
    double loss_action = 0.0;
    double loss_state = 0.0;
    double loss_total = 0.0;  // loss_action + lambda * loss_state, exactly
    MarginStats action_margins;
    MarginStats state_margins;
    double pair_accuracy_action = 0.0;  // fraction of expanded terms with margin > 0
    double pair_accuracy_state = 0.0;
};

struct SftResult {
    double loss = 0.0;
    std::vector<double> grad;  // action-head layout
};

struct PrefResult {
    double loss = 0.0;
    std::vector<double> grad;     // layout of whichever head the loss trains
    std::vector<double> margins;  // beta-scaled implicit-reward margin per expanded term
};

// -mean log pi_theta(chosen | context) over the batch.
auto sft_loss_and_grad(const model::ModelParams& params, const std::vector<search::SftStep>& batch)
    -> SftResult;

// -mean log sigmoid(beta * [(theta(w) - ref(w)) - (theta(l) - ref(l))]) over
// log-probabilities; a pair with several rejected items expands into one
// uniformly weighted term per item.
auto dpo_action_loss(const model::ModelParams& params, const model::ModelParams& ref,
                     const std::vector<search::ActionPrefPair>& batch, double beta) -> PrefResult;

// Same objective over anchored state sequences. Every pair's conditioning must
// carry the expected world-model mode.
auto dpo_state_loss(const model::ModelParams& params, const model::ModelParams& ref,
                    const std::vector<search::StatePrefPair>& batch, double beta,
                    model::WorldModelMode mode) -> PrefResult;

// Losses and margins at the current parameters, no update. An empty state
// batch reports zero state loss rather than failing, so the report stays
// usable for action-only runs.
auto evaluate_losses(const model::ModelParams& params, const model::ModelParams& ref,
                     const std::vector<search::ActionPrefPair>& action_batch,
                     const std::vector<search::StatePrefPair>& state_batch,
                     const TrainConfig& config) -> LossReport;

// One gradient-descent update on L_action + lambda * L_state. lambda = 0
// ignores the state batch entirely and reproduces the action-only update bit
// for bit; otherwise the state batch must be non-empty. The report reflects
// the pre-update parameters.
auto d2po_step(const model::ModelParams& params, const model::ModelParams& ref,
               const std::vector<search::ActionPrefPair>& action_batch,
               const std::vector<search::StatePrefPair>& state_batch, const TrainConfig& config)
    -> std::pair<model::ModelParams, LossReport>;

}  // namespace planlab::train
