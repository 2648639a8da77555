#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "planlab/model/features.h"
#include "planlab/model/vocab.h"
#include "planlab/rng.h"
#include "planlab/sim/types.h"

namespace planlab::model {

class UnknownToken : public std::runtime_error {
  public:
    explicit UnknownToken(const std::string& token)
        : std::runtime_error("token not in vocabulary: " + token) {}
};

class ModeMismatch : public std::runtime_error {
  public:
    explicit ModeMismatch(const std::string& why)
        : std::runtime_error("world-model mode mismatch: " + why) {}
};

// One full policy output: reasoning tag plus the action. The object slot is
// always scored; actions without a target carry kNoObject.
struct ActionResponse {
    std::string tag;
    sim::Verb verb = sim::Verb::kDone;
    std::string object = kNoObject;

    auto operator==(const ActionResponse&) const -> bool = default;
};

auto to_response(const std::string& tag, const sim::ActionStep& action) -> ActionResponse;
auto to_action_step(const ActionResponse& resp) -> sim::ActionStep;

// Log-linear weights for both heads. Inference treats a value as an immutable
// snapshot; training produces fresh copies. Zero weights mean uniform heads.
struct ModelParams {
    std::string version = "planlab-params-v1";
    Vocabulary vocab;
    int feature_dim = 4096;
    // Distribution-defining bound: at this position the state head emits
    // [END] with probability one, so sequence probabilities sum to one.
    int state_len_cap = 64;
    std::vector<double> action_w;  // feature_dim x (tags + verbs + objects), row-major
    std::vector<double> state_w;   // feature_dim x state_tokens, row-major

    [[nodiscard]] auto action_cols() const -> int;
    [[nodiscard]] auto state_cols() const -> int;
};

auto init_params(Vocabulary vocab, int feature_dim = 4096, int state_len_cap = 64) -> ModelParams;

// Sum of three conditional log-softmax terms: (tag | ctx), (verb | ctx, tag),
// (object | ctx, tag, verb). Always <= 0; exponentials sum to one over the
// full response space. Throws UnknownToken for tags or objects outside the
// vocabulary.
auto logprob_action(const ModelParams& params, const ActionContext& ctx,
                    const ActionResponse& resp) -> double;

// Accumulates scale * d logprob_action / d action_w into grad (same layout as
// params.action_w, which grad must match in size).
auto grad_logprob_action(const ModelParams& params, const ActionContext& ctx,
                         const ActionResponse& resp, double scale, std::vector<double>& grad)
    -> void;

// [CUR] anchor... [NEXT] next... [END], the canonical state-head target.
auto assemble_state_target(const std::vector<std::string>& anchor,
                           const std::vector<std::string>& next) -> std::vector<std::string>;

// Autoregressive sum of per-token conditional log-softmax terms over the
// whole target, which must end in [END]. At position state_len_cap the [END]
// token is forced (contributes zero); longer targets throw std::length_error.
auto logprob_state(const ModelParams& params, const StateConditioning& cond,
                   const std::vector<std::string>& target) -> double;

auto grad_logprob_state(const ModelParams& params, const StateConditioning& cond,
                        const std::vector<std::string>& target, double scale,
                        std::vector<double>& grad) -> void;

// Greedy decoding breaks ties toward the lowest token id. Sampling divides
// logits by the temperature and draws by inverse CDF from the seeded stream;
// temperature zero reduces to greedy.
auto greedy_action(const ModelParams& params, const ActionContext& ctx) -> ActionResponse;
auto sample_action(const ModelParams& params, const ActionContext& ctx, double temperature,
                   Rng& rng) -> ActionResponse;
auto sample_action(const ModelParams& params, const ActionContext& ctx, double temperature,
                   std::uint64_t seed) -> ActionResponse;

}  // namespace planlab::model
