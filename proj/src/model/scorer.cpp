#include "planlab/model/scorer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace planlab::model {

namespace {

// Column layout of action_w: [tags | verbs | objects].
struct Block {
    int offset;
    int size;
};

auto tag_block(const ModelParams& p) -> Block {
    return {0, static_cast<int>(p.vocab.tags.size())};
}
auto verb_block(const ModelParams& p) -> Block {
    return {static_cast<int>(p.vocab.tags.size()), static_cast<int>(p.vocab.verbs.size())};
}
auto object_block(const ModelParams& p) -> Block {
    return {static_cast<int>(p.vocab.tags.size() + p.vocab.verbs.size()),
            static_cast<int>(p.vocab.objects.size())};
}

auto block_logits(const std::vector<double>& w, int total_cols, const FeatureVec& feats,
                  Block block) -> std::vector<double> {
    std::vector<double> logits(block.size, 0.0);
    for (const int f : feats) {
        const double* row = w.data() + static_cast<std::size_t>(f) * total_cols + block.offset;
        for (int c = 0; c < block.size; ++c) { logits[c] += row[c]; }
    }
    return logits;
}

auto log_softmax_at(const std::vector<double>& logits, int target) -> double {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (const double l : logits) { sum += std::exp(l - mx); }
    return logits[target] - mx - std::log(sum);
}

auto softmax(std::vector<double> logits) -> std::vector<double> {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& l : logits) {
        l = std::exp(l - mx);
        sum += l;
    }
    for (double& l : logits) { l /= sum; }
    return logits;
}

// d logprob / d w[f][block.offset + c] = multiplicity(f) * ([c == target] - p_c)
void accumulate_slot_grad(const std::vector<double>& logits, int target, const FeatureVec& feats,
                          Block block, int total_cols, double scale, std::vector<double>& grad) {
    const auto probs = softmax(logits);
    for (const int f : feats) {
        double* row = grad.data() + static_cast<std::size_t>(f) * total_cols + block.offset;
        for (int c = 0; c < block.size; ++c) {
            row[c] += scale * ((c == target ? 1.0 : 0.0) - probs[c]);
        }
    }
}

auto greedy_index(const std::vector<double>& logits) -> int {
    // First maximum wins, so exact ties resolve to the lowest token id.
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

auto sample_index(const std::vector<double>& logits, double temperature, Rng& rng) -> int {
    if (temperature <= 0.0) { return greedy_index(logits); }
    std::vector<double> scaled(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) { scaled[i] = logits[i] / temperature; }
    const auto probs = softmax(std::move(scaled));
    const double u = rng.uniform_double();
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) { return static_cast<int>(i); }
    }
    return static_cast<int>(probs.size()) - 1;  // floating-point dust
}

void check_mode_shape(const StateConditioning& cond) {
    if (cond.mode == WorldModelMode::kActionConditioned) {
        if (!cond.action.has_value()) {
            throw ModeMismatch("action_conditioned requires an action");
        }
        if (!cond.goal.empty() || !cond.history.empty()) {
            throw ModeMismatch("action_conditioned must not carry goal or history");
        }
    } else {
        if (cond.action.has_value() || !cond.prev_state.empty()) {
            throw ModeMismatch("goal_directed must not carry an action or a previous state");
        }
    }
}

auto state_target_ids(const ModelParams& params, const std::vector<std::string>& target)
    -> std::vector<int> {
    if (static_cast<int>(target.size()) > params.state_len_cap) {
        throw std::length_error("state target longer than the sequence cap");
    }
    if (target.empty() || target.back() != kEndToken) {
        throw std::invalid_argument("state target must end with the terminator token");
    }
    std::vector<int> ids;
    ids.reserve(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (i + 1 < target.size() && target[i] == kEndToken) {
            throw std::invalid_argument("terminator token before the end of a state target");
        }
        const auto id = params.vocab.state_token_id(target[i]);
        if (!id.has_value()) { throw UnknownToken(target[i]); }
        ids.push_back(*id);
    }
    return ids;
}

}  // namespace

auto to_response(const std::string& tag, const sim::ActionStep& action) -> ActionResponse {
    return ActionResponse{tag, action.verb, action.target.value_or(kNoObject)};
}

auto to_action_step(const ActionResponse& resp) -> sim::ActionStep {
    if (resp.object == kNoObject) { return sim::ActionStep{resp.verb, std::nullopt}; }
    return sim::ActionStep{resp.verb, resp.object};
}

auto ModelParams::action_cols() const -> int {
    return static_cast<int>(vocab.tags.size() + vocab.verbs.size() + vocab.objects.size());
}
auto ModelParams::state_cols() const -> int { return static_cast<int>(vocab.state_tokens.size()); }

auto init_params(Vocabulary vocab, int feature_dim, int state_len_cap) -> ModelParams {
    ModelParams params;
    params.vocab = std::move(vocab);
    params.feature_dim = feature_dim;
    params.state_len_cap = state_len_cap;
    params.action_w.assign(static_cast<std::size_t>(feature_dim) * params.action_cols(), 0.0);
    params.state_w.assign(static_cast<std::size_t>(feature_dim) * params.state_cols(), 0.0);
    return params;
}

auto logprob_action(const ModelParams& params, const ActionContext& ctx,
                    const ActionResponse& resp) -> double {
    const auto tag = params.vocab.tag_id(resp.tag);
    if (!tag.has_value()) { throw UnknownToken(resp.tag); }
    const auto verb = params.vocab.verb_id(sim::verb_name(resp.verb));
    if (!verb.has_value()) { throw UnknownToken(sim::verb_name(resp.verb)); }
    const auto object = params.vocab.object_id(resp.object);
    if (!object.has_value()) { throw UnknownToken(resp.object); }

    const int cols = params.action_cols();
    const auto base = action_context_features(params.vocab, ctx, params.feature_dim);
    const auto verb_feats = with_selected_tag(base, resp.tag, params.feature_dim);
    const auto obj_feats =
        with_selected_tag_verb(base, resp.tag, sim::verb_name(resp.verb), params.feature_dim);

    double lp = log_softmax_at(block_logits(params.action_w, cols, base, tag_block(params)), *tag);
    lp += log_softmax_at(block_logits(params.action_w, cols, verb_feats, verb_block(params)),
                         *verb);
    lp += log_softmax_at(block_logits(params.action_w, cols, obj_feats, object_block(params)),
                         *object);
    return lp;
}

auto grad_logprob_action(const ModelParams& params, const ActionContext& ctx,
                         const ActionResponse& resp, double scale, std::vector<double>& grad)
    -> void {
    const auto tag = params.vocab.tag_id(resp.tag);
    if (!tag.has_value()) { throw UnknownToken(resp.tag); }
    const auto verb = params.vocab.verb_id(sim::verb_name(resp.verb));
    if (!verb.has_value()) { throw UnknownToken(sim::verb_name(resp.verb)); }
    const auto object = params.vocab.object_id(resp.object);
    if (!object.has_value()) { throw UnknownToken(resp.object); }

    const int cols = params.action_cols();
    const auto base = action_context_features(params.vocab, ctx, params.feature_dim);
    const auto verb_feats = with_selected_tag(base, resp.tag, params.feature_dim);
    const auto obj_feats =
        with_selected_tag_verb(base, resp.tag, sim::verb_name(resp.verb), params.feature_dim);

    accumulate_slot_grad(block_logits(params.action_w, cols, base, tag_block(params)), *tag, base,
                         tag_block(params), cols, scale, grad);
    accumulate_slot_grad(block_logits(params.action_w, cols, verb_feats, verb_block(params)),
                         *verb, verb_feats, verb_block(params), cols, scale, grad);
    accumulate_slot_grad(block_logits(params.action_w, cols, obj_feats, object_block(params)),
                         *object, obj_feats, object_block(params), cols, scale, grad);
}

auto assemble_state_target(const std::vector<std::string>& anchor,
                           const std::vector<std::string>& next) -> std::vector<std::string> {
    std::vector<std::string> target;
    target.reserve(anchor.size() + next.size() + 3);
    target.push_back(kCurToken);
    target.insert(target.end(), anchor.begin(), anchor.end());
    target.push_back(kNextToken);
    target.insert(target.end(), next.begin(), next.end());
    target.push_back(kEndToken);
    return target;
}

auto logprob_state(const ModelParams& params, const StateConditioning& cond,
                   const std::vector<std::string>& target) -> double {
    check_mode_shape(cond);
    const auto ids = state_target_ids(params, target);
    const Block full{0, params.state_cols()};
    const int end_id = *params.vocab.state_token_id(kEndToken);

    double lp = 0.0;
    std::string prev = "<bos>";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int position = static_cast<int>(i) + 1;
        if (position == params.state_len_cap) {
            // Forced terminator: probability one, nothing to add.
            if (ids[i] != end_id) {
                throw std::length_error("state target must end at the sequence cap");
            }
            break;
        }
        const auto feats = state_step_features(cond, prev, position, params.feature_dim);
        lp += log_softmax_at(block_logits(params.state_w, full.size, feats, full), ids[i]);
        prev = target[i];
    }
    return lp;
}

auto grad_logprob_state(const ModelParams& params, const StateConditioning& cond,
                        const std::vector<std::string>& target, double scale,
                        std::vector<double>& grad) -> void {
    check_mode_shape(cond);
    const auto ids = state_target_ids(params, target);
    const Block full{0, params.state_cols()};
    const int end_id = *params.vocab.state_token_id(kEndToken);

    std::string prev = "<bos>";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int position = static_cast<int>(i) + 1;
        if (position == params.state_len_cap) {
            if (ids[i] != end_id) {
                throw std::length_error("state target must end at the sequence cap");
            }
            break;
        }
        const auto feats = state_step_features(cond, prev, position, params.feature_dim);
        accumulate_slot_grad(block_logits(params.state_w, full.size, feats, full), ids[i], feats,
                             full, full.size, scale, grad);
        prev = target[i];
    }
}

auto greedy_action(const ModelParams& params, const ActionContext& ctx) -> ActionResponse {
    const int cols = params.action_cols();
    const auto base = action_context_features(params.vocab, ctx, params.feature_dim);
    const int tag =
        greedy_index(block_logits(params.action_w, cols, base, tag_block(params)));
    const std::string& tag_name = params.vocab.tags[tag];
    const auto verb_feats = with_selected_tag(base, tag_name, params.feature_dim);
    const int verb =
        greedy_index(block_logits(params.action_w, cols, verb_feats, verb_block(params)));
    const std::string& verb_text = params.vocab.verbs[verb];
    const auto obj_feats = with_selected_tag_verb(base, tag_name, verb_text, params.feature_dim);
    const int object =
        greedy_index(block_logits(params.action_w, cols, obj_feats, object_block(params)));
    return ActionResponse{tag_name, *sim::verb_from_name(verb_text),
                          params.vocab.objects[object]};
}

auto sample_action(const ModelParams& params, const ActionContext& ctx, double temperature,
                   Rng& rng) -> ActionResponse {
    if (temperature <= 0.0) { return greedy_action(params, ctx); }
    const int cols = params.action_cols();
    const auto base = action_context_features(params.vocab, ctx, params.feature_dim);
    const int tag = sample_index(block_logits(params.action_w, cols, base, tag_block(params)),
                                 temperature, rng);
    const std::string& tag_name = params.vocab.tags[tag];
    const auto verb_feats = with_selected_tag(base, tag_name, params.feature_dim);
    const int verb = sample_index(
        block_logits(params.action_w, cols, verb_feats, verb_block(params)), temperature, rng);
    const std::string& verb_text = params.vocab.verbs[verb];
    const auto obj_feats = with_selected_tag_verb(base, tag_name, verb_text, params.feature_dim);
    const int object = sample_index(
        block_logits(params.action_w, cols, obj_feats, object_block(params)), temperature, rng);
    return ActionResponse{tag_name, *sim::verb_from_name(verb_text),
                          params.vocab.objects[object]};
}

auto sample_action(const ModelParams& params, const ActionContext& ctx, double temperature,
                   std::uint64_t seed) -> ActionResponse {
    Rng rng(seed);
    return sample_action(params, ctx, temperature, rng);
}

}  // namespace planlab::model
