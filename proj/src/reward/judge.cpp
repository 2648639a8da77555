#include "planlab/reward/judge.h"

#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <sstream>

#include "httplib.h"
#include "nlohmann/json.hpp"

namespace planlab::reward {

namespace {

// Must stay byte-identical to assets/judge_prompt.txt; a test enforces it.
constexpr const char* kPromptTemplate =
    R"(Please serve as an unbiased evaluator for the AI-generated next step in the task planning according to the goal progress. The task involves robotic actions that typically follow a logical sequence of steps to achieve a defined goal.

{example}

## Input Data:
### Goal: {goal}

### Previous Steps: {previous_steps}
---

## AI-generated Next Step to Evaluate:
Step: {step}
Execution Result: {action_ret}
After executing the step, you can see the following environment state: {observation}

## Evaluation Criteria:

### Goal Progress (1-5 points):
Evaluate how effectively the step moves toward completing the task by considering:
1. **Action Sequence** - Does it follow a logical progression of actions based on the task requirements? (e.g., preparation → execution → refinement → goal completion)
2. **Previous Actions** - How does it build on prior steps? Does it avoid unnecessary repetition or conflicting actions?
3. **Goal State** - Does the step advance the task toward achieving the defined goal or final condition?
4. **Environment State** - Does the environment state after executing the step align with the expected progress toward the goal?

Scoring for Goal Progress:
- **[1]:** Step moves away from the goal or makes goal completion more difficult.
- **[2]:** Step is redundant or repeats the exact same action as the immediate previous step without progress.
- **[3]:** Step makes moderate progress toward the goal.
- **[4]:** Step makes significant progress toward the goal, aligning well with the task sequence.
- **[5]:** Step makes excellent progress, directly advancing toward goal completion.

### Examples:
- A step that repeats an action unnecessarily (e.g., "find object" followed by "find object") = [2].
- A step that logically follows the sequence (e.g., "find object" before "pick up object") = [4].
- A step that conflicts with the goal (e.g., "pick up object" followed by "put down object" without correct location) = [1].

---

## Output Format:
### Evaluation:
Analysis: Briefly explain how the step compares to prior actions, whether it follows a logical sequence, and how it advances the goal.
Goal Progress Score: Use the following scale format: [1], [2], [3], [4], [5].
)";

}  // namespace

auto default_prompt_template() -> const std::string& {
    static const std::string tpl = kPromptTemplate;
    return tpl;
}

auto render_slots(const std::string& tpl, const std::map<std::string, std::string>& slots)
    -> std::string {
    std::string out;
    out.reserve(tpl.size());
    for (std::size_t i = 0; i < tpl.size();) {
        if (tpl[i] == '{') {
            const auto end = tpl.find('}', i);
            if (end != std::string::npos) {
                const auto it = slots.find(tpl.substr(i + 1, end - i - 1));
                if (it != slots.end()) {
                    out += it->second;
                    i = end + 1;
                    continue;
                }
            }
        }
        out.push_back(tpl[i]);
        ++i;
    }
    return out;
}

auto format_goal_text(const sim::GoalCondition& goal) -> std::string {
    std::string out;
    for (const auto& text : sim::format_goal(goal)) {
        if (!out.empty()) { out += " and "; }
        out += text;
    }
    return out;
}

auto format_history_text(const std::vector<sim::ExecutedStep>& history) -> std::string {
    if (history.empty()) { return "none"; }
    std::string out;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i > 0) { out += "\n"; }
        out += std::to_string(i + 1) + ". " + sim::format_executed_step(history[i]);
    }
    return out;
}

auto parse_score_line(const std::string& content) -> std::optional<int> {
    const auto marker = content.rfind("Goal Progress Score");
    if (marker == std::string::npos) { return std::nullopt; }
    for (std::size_t i = marker; i + 2 < content.size(); ++i) {
        if (content[i] == '[' && content[i + 1] >= '1' && content[i + 1] <= '5' &&
            content[i + 2] == ']') {
            return content[i + 1] - '0';
        }
    }
    return std::nullopt;
}

struct JudgeClient::Impl {
    JudgeConfig cfg;
    std::string template_text;
    std::counting_semaphore<> slots;

    explicit Impl(JudgeConfig c)
        : cfg(std::move(c)), slots(std::max(1, cfg.max_in_flight)) {
        if (cfg.prompt_path.empty()) {
            template_text = default_prompt_template();
        } else {
            std::ifstream in(cfg.prompt_path, std::ios::binary);
            if (!in) { throw JudgeUnavailable("cannot read prompt template " + cfg.prompt_path); }
            std::ostringstream buf;
            buf << in.rdbuf();
            template_text = buf.str();
        }
    }
};

JudgeClient::JudgeClient(JudgeConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
JudgeClient::~JudgeClient() = default;

auto JudgeClient::render_prompt(const sim::GoalCondition& goal,
                                const std::vector<sim::ExecutedStep>& history,
                                const sim::ActionStep& candidate,
                                const sim::ExecStatus& execution_result,
                                const sim::Observation& observation_after) const -> std::string {
    std::string action_ret = execution_result.ok
                                 ? "success"
                                 : "failed: " + sim::error_tag_name(*execution_result.error);
    return render_slots(impl_->template_text,
                        {{"example", impl_->cfg.example_text},
                         {"goal", format_goal_text(goal)},
                         {"previous_steps", format_history_text(history)},
                         {"step", sim::format_action(candidate)},
                         {"action_ret", std::move(action_ret)},
                         {"observation", sim::format_observation(observation_after)}});
}

auto JudgeClient::score(const sim::GoalCondition& goal,
                        const std::vector<sim::ExecutedStep>& history,
                        const sim::ActionStep& candidate, const sim::ExecStatus& execution_result,
                        const sim::Observation& observation_after) -> ProcessScore {
    const std::string prompt =
        render_prompt(goal, history, candidate, execution_result, observation_after);

    nlohmann::json body = {
        {"model", impl_->cfg.model},
        {"temperature", 0},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };

    httplib::Headers headers;
    if (const char* key = std::getenv(impl_->cfg.api_key_env.c_str());
        key != nullptr && *key != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    impl_->slots.acquire();
    httplib::Result res = [&] {
        httplib::Client client(impl_->cfg.endpoint);
        client.set_connection_timeout(0, impl_->cfg.timeout_ms * 1000LL);
        client.set_read_timeout(0, impl_->cfg.timeout_ms * 1000LL);
        client.set_write_timeout(0, impl_->cfg.timeout_ms * 1000LL);
        return client.Post(impl_->cfg.path, headers, body.dump(), "application/json");
    }();
    impl_->slots.release();

    if (!res) { throw JudgeUnavailable(httplib::to_string(res.error())); }
    if (res->status != 200) {
        throw JudgeUnavailable("endpoint returned status " + std::to_string(res->status));
    }

    std::string content;
    try {
        const auto reply = nlohmann::json::parse(res->body);
        content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw JudgeUnavailable(std::string("malformed reply: ") + e.what());
    }

    const auto value = parse_score_line(content);
    if (!value.has_value()) { throw JudgeUnparseable("no bracketed Goal Progress Score"); }
    return ProcessScore{*value, ""};
}

}  // namespace planlab::reward
