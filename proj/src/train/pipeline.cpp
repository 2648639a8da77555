#include "planlab/train/pipeline.h"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <tuple>

#include "planlab/rng.h"

namespace planlab::train {

namespace {

auto shuffled_indices(std::size_t n, std::uint64_t seed) -> std::vector<std::size_t> {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    return order;
}

template <typename T>
auto gather(const std::vector<T>& all, const std::vector<std::size_t>& order, std::size_t begin,
            std::size_t end) -> std::vector<T> {
    std::vector<T> out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) { out.push_back(all[order[i]]); }
    return out;
}

}  // namespace

auto run_sft(const model::Vocabulary& vocab, const std::vector<search::SftStep>& steps,
             const TrainConfig& config, int feature_dim, int state_len_cap) -> SftStage {
    SftStage stage;
    stage.params = model::init_params(vocab, feature_dim, state_len_cap);
    const auto batch = static_cast<std::size_t>(std::max(config.batch_size, 1));
    const std::size_t n = steps.size();
    for (int epoch = 0; epoch < config.sft_epochs; ++epoch) {
        const auto order = shuffled_indices(n, derive_seed(config.seed, "sft", epoch));
        for (std::size_t begin = 0; begin < n; begin += batch) {
            const auto end = std::min(begin + batch, n);
            const auto res = sft_loss_and_grad(stage.params, gather(steps, order, begin, end));
            for (std::size_t i = 0; i < stage.params.action_w.size(); ++i) {
                stage.params.action_w[i] -= config.lr_sft * res.grad[i];
            }
        }
        stage.epoch_losses.push_back(sft_loss_and_grad(stage.params, steps).loss);
    }
    return stage;
}

auto run_pref(const model::ModelParams& ref,
              const std::vector<search::ActionPrefPair>& action_pairs,
              const std::vector<search::StatePrefPair>& state_pairs, const TrainConfig& config)
    -> PrefStage {
    const auto batch = static_cast<std::size_t>(std::max(config.batch_size, 1));
    const std::size_t n_act = action_pairs.size();
    const std::size_t n_state = state_pairs.size();
    const std::size_t steps_per_epoch = (n_act + batch - 1) / batch;
    if (config.dpo_epochs > 0 && config.lambda != 0.0 && n_state == 0) {
        throw EmptyBatch("state preference pairs");
    }

    PrefStage stage;
    stage.params = ref;
    for (int epoch = 0; epoch < config.dpo_epochs; ++epoch) {
        const auto action_order =
            shuffled_indices(n_act, derive_seed(config.seed, "pref-action", epoch));
        const auto state_order =
            shuffled_indices(n_state, derive_seed(config.seed, "pref-state", epoch));
        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            const auto action_batch = gather(action_pairs, action_order, s * batch,
                                             std::min((s + 1) * batch, n_act));
            const auto state_batch = gather(state_pairs, state_order,
                                            s * n_state / steps_per_epoch,
                                            (s + 1) * n_state / steps_per_epoch);
            // A step whose state slice came up empty (fewer state pairs than
            // steps) updates the action head alone.
            auto step_cfg = config;
            if (state_batch.empty()) { step_cfg.lambda = 0.0; }
            std::tie(stage.params, std::ignore) =
                d2po_step(stage.params, ref, action_batch, state_batch, step_cfg);
        }
        stage.epoch_reports.push_back(
            evaluate_losses(stage.params, ref, action_pairs, state_pairs, config));
    }
    return stage;
}

auto run_pipeline(const model::Vocabulary& vocab, const TrainData& data, const TrainConfig& config)
    -> PipelineResult {
    PipelineResult result;
    auto sft = run_sft(vocab, data.sft_steps, config);
    result.sft_params = std::move(sft.params);
    result.sft_epoch_losses = std::move(sft.epoch_losses);
    result.ref_params = result.sft_params;  // frozen; both branches start here

    auto action_only = config;
    action_only.lambda = 0.0;
    auto dpo = run_pref(result.ref_params, data.action_pairs, data.state_pairs, action_only);
    result.dpo_params = std::move(dpo.params);
    result.dpo_epoch_reports = std::move(dpo.epoch_reports);

    auto d2po = run_pref(result.ref_params, data.action_pairs, data.state_pairs, config);
    result.d2po_params = std::move(d2po.params);
    result.d2po_epoch_reports = std::move(d2po.epoch_reports);
    return result;
}

}  // namespace planlab::train
