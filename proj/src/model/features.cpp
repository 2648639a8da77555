#include "planlab/model/features.h"

#include <algorithm>

#include "planlab/rng.h"

namespace planlab::model {

namespace {

auto step_bucket(int step) -> std::string {
    if (step <= 4) { return std::to_string(std::max(step, 0)); }
    if (step <= 8) { return "5-8"; }
    if (step <= 16) { return "9-16"; }
    return "17+";
}

auto status_text(const sim::ExecStatus& status) -> std::string {
    return status.ok ? "ok" : sim::error_tag_name(*status.error);
}

auto executed_text(const sim::ExecutedStep& step) -> std::string {
    return sim::verb_name(step.action.verb) + ":" + step.action.target.value_or(kNoObject) + ":" +
           status_text(step.status);
}

// "on(apple,fridge)" -> head "on", args {"apple", "fridge"}. Canonical
// predicate texts only; anything malformed degrades to a single opaque arg.
void split_predicate(const std::string& text, std::string& head, std::vector<std::string>& args) {
    const auto open = text.find('(');
    if (open == std::string::npos || text.back() != ')') {
        head = text;
        return;
    }
    head = text.substr(0, open);
    std::size_t start = open + 1;
    for (std::size_t i = start; i < text.size(); ++i) {
        if (text[i] == ',' || text[i] == ')') {
            args.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
}

struct Collector {
    int dim;
    FeatureVec out;

    void add(const std::string& feature) { out.push_back(hash_feature(feature, dim)); }

    auto add_goal(const std::vector<std::string>& goal) -> std::string {
        std::vector<std::string> shape_parts;
        for (const auto& text : goal) {
            add("goal=" + text);
            std::string head;
            std::vector<std::string> args;
            split_predicate(text, head, args);
            // flag(x,cold) is shaped by its flag, on/stacked by the head.
            if (head == "flag" && args.size() == 2) {
                shape_parts.push_back(args[1]);
            } else {
                shape_parts.push_back(head);
            }
            for (const auto& arg : args) { add("garg=" + arg); }
        }
        std::sort(shape_parts.begin(), shape_parts.end());
        std::string shape;
        for (const auto& part : shape_parts) {
            if (!shape.empty()) { shape += "+"; }
            shape += part;
        }
        add("shape=" + shape);
        return shape;
    }

    auto sorted() -> FeatureVec {
        std::sort(out.begin(), out.end());
        return std::move(out);
    }
};

}  // namespace

auto mode_name(WorldModelMode mode) -> const std::string& {
    static const std::string ac = "action_conditioned";
    static const std::string gd = "goal_directed";
    return mode == WorldModelMode::kActionConditioned ? ac : gd;
}

auto mode_from_name(const std::string& name) -> std::optional<WorldModelMode> {
    if (name == "action_conditioned") { return WorldModelMode::kActionConditioned; }
    if (name == "goal_directed") { return WorldModelMode::kGoalDirected; }
    return std::nullopt;
}

auto hash_feature(std::string_view feature, int dim) -> int {
    return static_cast<int>(fnv1a(feature) % static_cast<std::uint64_t>(dim));
}

auto action_context_features(const Vocabulary& vocab, const ActionContext& ctx, int dim)
    -> FeatureVec {
    Collector c{dim, {}};
    c.add("bias");
    const std::string shape = c.add_goal(ctx.goal);
    const std::string held = ctx.observation.hand.value_or("<empty>");
    c.add("held=" + held);
    // Task phase in one feature: what kind of goal, and is the hand loaded.
    c.add("shape_held=" + shape + ":" + held);

    // The last successful visit to a receptacle class is where a put-down
    // would land, mirroring the simulator's bookkeeping.
    std::string last_recep = "<none>";
    for (auto it = ctx.prior.rbegin(); it != ctx.prior.rend(); ++it) {
        if (it->status.ok && it->action.verb == sim::Verb::kFind && it->action.target.has_value() &&
            vocab.is_receptacle(*it->action.target)) {
            last_recep = *it->action.target;
            break;
        }
    }
    c.add("lastrecep=" + last_recep);

    if (ctx.prior.empty()) {
        c.add("last=<start>");
    } else {
        const auto& last = ctx.prior.back();
        c.add("last=" + sim::verb_name(last.action.verb) + ":" + status_text(last.status));
        c.add("lastobj=" + last.action.target.value_or(kNoObject));
    }

    for (const auto& obj : ctx.observation.visible) {
        c.add("vis=" + obj.class_name);
        for (const auto& flag : obj.flags) { c.add("visflag=" + obj.class_name + ":" + flag); }
    }
    c.add("step=" + step_bucket(ctx.step_index));
    return c.sorted();
}

auto with_selected_tag(const FeatureVec& base, const std::string& tag, int dim) -> FeatureVec {
    FeatureVec out = base;
    out.push_back(hash_feature("sel_tag=" + tag, dim));
    std::sort(out.begin(), out.end());
    return out;
}

auto with_selected_tag_verb(const FeatureVec& base, const std::string& tag,
                            const std::string& verb, int dim) -> FeatureVec {
    FeatureVec out = base;
    out.push_back(hash_feature("sel_tag=" + tag, dim));
    out.push_back(hash_feature("sel_verb=" + verb, dim));
    out.push_back(hash_feature("sel=" + tag + ":" + verb, dim));
    std::sort(out.begin(), out.end());
    return out;
}

auto state_step_features(const StateConditioning& cond, const std::string& prev_token,
                         int position, int dim) -> FeatureVec {
    Collector c{dim, {}};
    c.add("sbias");
    c.add("mode=" + mode_name(cond.mode));
    if (cond.mode == WorldModelMode::kActionConditioned) {
        for (const auto& token : cond.prev_state) { c.add("cur=" + token); }
        if (cond.action.has_value()) {
            const std::string obj = cond.action->target.value_or(kNoObject);
            c.add("act=" + sim::verb_name(cond.action->verb) + ":" + obj);
            c.add("act_verb=" + sim::verb_name(cond.action->verb));
            c.add("act_obj=" + obj);
        }
    } else {
        c.add_goal(cond.goal);
        if (cond.history.empty()) {
            c.add("h_last=<start>");
        } else {
            c.add("h_last=" + executed_text(cond.history.back()));
        }
        for (const auto& step : cond.history) { c.add("hist=" + executed_text(step)); }
        c.add("histn=" + step_bucket(static_cast<int>(cond.history.size())));
    }
    c.add("prev=" + prev_token);
    c.add("pos=" + step_bucket(position));
    return c.sorted();
}

}  // namespace planlab::model
