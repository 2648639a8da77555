#include "planlab/train/losses.h"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace planlab::train {

namespace {

// -log sigmoid(z), stable at large |z|.
auto softplus_neg(double z) -> double {
    return std::max(0.0, -z) + std::log1p(std::exp(-std::abs(z)));
}

// sigmoid(-z) without overflow on either sign.
auto sigmoid_neg(double z) -> double {
    if (z >= 0.0) {
        const double t = std::exp(-z);
        return t / (1.0 + t);
    }
    return 1.0 / (1.0 + std::exp(z));
}

auto fraction_positive(const std::vector<double>& margins) -> double {
    if (margins.empty()) { return 0.0; }
    std::size_t positive = 0;
    for (const double m : margins) {
        if (m > 0.0) { ++positive; }
    }
    return static_cast<double>(positive) / static_cast<double>(margins.size());
}

}  // namespace

auto margin_stats(std::vector<double> margins) -> MarginStats {
    MarginStats out;
    if (margins.empty()) { return out; }
    double sum = 0.0;
    for (const double m : margins) { sum += m; }
    out.mean = sum / static_cast<double>(margins.size());
    std::sort(margins.begin(), margins.end());
    const auto quantile = [&margins](double q) {
        const double pos = q * static_cast<double>(margins.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const auto hi = std::min(lo + 1, margins.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return margins[lo] * (1.0 - frac) + margins[hi] * frac;
    };
    out.p10 = quantile(0.10);
    out.p25 = quantile(0.25);
    out.p50 = quantile(0.50);
    out.p75 = quantile(0.75);
    out.p90 = quantile(0.90);
    return out;
}

auto sft_loss_and_grad(const model::ModelParams& params, const std::vector<search::SftStep>& batch)
    -> SftResult {
    if (batch.empty()) { throw EmptyBatch("sft steps"); }
    SftResult res;
    res.grad.assign(params.action_w.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const auto& step : batch) {
        res.loss -= model::logprob_action(params, step.context, step.chosen) * inv;
        model::grad_logprob_action(params, step.context, step.chosen, -inv, res.grad);
    }
    return res;
}

auto dpo_action_loss(const model::ModelParams& params, const model::ModelParams& ref,
                     const std::vector<search::ActionPrefPair>& batch, double beta) -> PrefResult {
    if (batch.empty()) { throw EmptyBatch("action preference pairs"); }
    std::size_t terms = 0;
    for (const auto& pair : batch) { terms += pair.rejected.size(); }
    if (terms == 0) { throw EmptyBatch("action preference pairs carry no rejected responses"); }

    PrefResult res;
    res.grad.assign(params.action_w.size(), 0.0);
    res.margins.reserve(terms);
    const double inv = 1.0 / static_cast<double>(terms);
    for (const auto& pair : batch) {
        if (pair.rejected.empty()) { continue; }
        const double chosen_gap = model::logprob_action(params, pair.context, pair.chosen) -
                                  model::logprob_action(ref, pair.context, pair.chosen);
        double chosen_scale = 0.0;
        for (const auto& rejected : pair.rejected) {
            const double rejected_gap = model::logprob_action(params, pair.context, rejected) -
                                        model::logprob_action(ref, pair.context, rejected);
            const double margin = beta * (chosen_gap - rejected_gap);
            res.margins.push_back(margin);
            res.loss += softplus_neg(margin) * inv;
            // d(-log sigmoid(m))/dm = -sigmoid(-m); m moves with beta times
            // the policy log-probs, the reference terms are constants.
            const double weight = sigmoid_neg(margin) * beta * inv;
            chosen_scale -= weight;
            model::grad_logprob_action(params, pair.context, rejected, weight, res.grad);
        }
        model::grad_logprob_action(params, pair.context, pair.chosen, chosen_scale, res.grad);
    }
    return res;
}

auto dpo_state_loss(const model::ModelParams& params, const model::ModelParams& ref,
                    const std::vector<search::StatePrefPair>& batch, double beta,
                    model::WorldModelMode mode) -> PrefResult {
    if (batch.empty()) { throw EmptyBatch("state preference pairs"); }
    std::size_t terms = 0;
    for (const auto& pair : batch) {
        if (pair.conditioning.mode != mode) {
            throw model::ModeMismatch("batch expects " + model::mode_name(mode) + ", pair carries " +
                                      model::mode_name(pair.conditioning.mode));
        }
        terms += pair.rejected_next.size();
    }
    if (terms == 0) { throw EmptyBatch("state preference pairs carry no rejected sequences"); }

    PrefResult res;
    res.grad.assign(params.state_w.size(), 0.0);
    res.margins.reserve(terms);
    const double inv = 1.0 / static_cast<double>(terms);
    for (const auto& pair : batch) {
        if (pair.rejected_next.empty()) { continue; }
        const auto chosen_target = model::assemble_state_target(pair.anchor, pair.chosen_next);
        const double chosen_gap = model::logprob_state(params, pair.conditioning, chosen_target) -
                                  model::logprob_state(ref, pair.conditioning, chosen_target);
        double chosen_scale = 0.0;
        for (const auto& rejected : pair.rejected_next) {
            const auto rejected_target = model::assemble_state_target(pair.anchor, rejected);
            const double rejected_gap =
                model::logprob_state(params, pair.conditioning, rejected_target) -
                model::logprob_state(ref, pair.conditioning, rejected_target);
            const double margin = beta * (chosen_gap - rejected_gap);
            res.margins.push_back(margin);
            res.loss += softplus_neg(margin) * inv;
            const double weight = sigmoid_neg(margin) * beta * inv;
            chosen_scale -= weight;
            model::grad_logprob_state(params, pair.conditioning, rejected_target, weight, res.grad);
        }
        model::grad_logprob_state(params, pair.conditioning, chosen_target, chosen_scale, res.grad);
    }
    return res;
}

auto evaluate_losses(const model::ModelParams& params, const model::ModelParams& ref,
                     const std::vector<search::ActionPrefPair>& action_batch,
                     const std::vector<search::StatePrefPair>& state_batch,
                     const TrainConfig& config) -> LossReport {
    LossReport report;
    const auto action = dpo_action_loss(params, ref, action_batch, config.beta);
    report.loss_action = action.loss;
    report.action_margins = margin_stats(action.margins);
    report.pair_accuracy_action = fraction_positive(action.margins);
    if (!state_batch.empty()) {
        const auto state = dpo_state_loss(params, ref, state_batch, config.beta, config.mode);
        report.loss_state = state.loss;
        report.state_margins = margin_stats(state.margins);
        report.pair_accuracy_state = fraction_positive(state.margins);
    }
    report.loss_total = report.loss_action + config.lambda * report.loss_state;
    return report;
}

auto d2po_step(const model::ModelParams& params, const model::ModelParams& ref,
               const std::vector<search::ActionPrefPair>& action_batch,
               const std::vector<search::StatePrefPair>& state_batch, const TrainConfig& config)
    -> std::pair<model::ModelParams, LossReport> {
    const auto action = dpo_action_loss(params, ref, action_batch, config.beta);

    LossReport report;
    report.loss_action = action.loss;
    report.action_margins = margin_stats(action.margins);
    report.pair_accuracy_action = fraction_positive(action.margins);

    model::ModelParams next = params;
    for (std::size_t i = 0; i < next.action_w.size(); ++i) {
        next.action_w[i] -= config.lr_dpo * action.grad[i];
    }

    // The heads occupy disjoint parameter blocks, so lambda = 0 leaves the
    // state head bit-identical to the action-only update.
    if (config.lambda != 0.0) {
        const auto state = dpo_state_loss(params, ref, state_batch, config.beta, config.mode);
        report.loss_state = state.loss;
        report.state_margins = margin_stats(state.margins);
        report.pair_accuracy_state = fraction_positive(state.margins);
        for (std::size_t i = 0; i < next.state_w.size(); ++i) {
            next.state_w[i] -= config.lr_dpo * config.lambda * state.grad[i];
        }
    }
    report.loss_total = report.loss_action + config.lambda * report.loss_state;
    return {std::move(next), report};
}

}  // namespace planlab::train
