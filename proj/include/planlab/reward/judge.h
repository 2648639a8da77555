#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "planlab/reward/score.h"
#include "planlab/sim/goal.h"
#include "planlab/sim/types.h"

namespace planlab::reward {

// Settings for the external chat-completion scoring endpoint. The API key is
// read from the named environment variable; it never appears in config files.
struct JudgeConfig {
    std::string endpoint;  // e.g. "http://127.0.0.1:8801"
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "PLANLAB_JUDGE_API_KEY";
    std::string prompt_path;   // empty: built-in template (same text as the asset file)
    std::string example_text;  // fills the {example} slot, may be empty
    int timeout_ms = 10000;
    int max_in_flight = 4;
};

class JudgeUnavailable : public std::runtime_error {
  public:
    explicit JudgeUnavailable(const std::string& why)
        : std::runtime_error("judge unavailable: " + why) {}
};

class JudgeUnparseable : public std::runtime_error {
  public:
    explicit JudgeUnparseable(const std::string& why)
        : std::runtime_error("judge response unparseable: " + why) {}
};

// Scoring prompt template with {example} {goal} {previous_steps} {step}
// {action_ret} {observation} slots. Kept byte-identical to the asset file.
auto default_prompt_template() -> const std::string&;

// Replaces every {name} occurrence; unknown slots are left untouched.
auto render_slots(const std::string& tpl, const std::map<std::string, std::string>& slots)
    -> std::string;

// "on(apple,fridge) and flag(apple,cold)".
auto format_goal_text(const sim::GoalCondition& goal) -> std::string;

// Numbered lines, one executed step per line; "none" when empty.
auto format_history_text(const std::vector<sim::ExecutedStep>& history) -> std::string;

// Bracketed integer from the last "Goal Progress Score" line, if any.
auto parse_score_line(const std::string& content) -> std::optional<int>;

// Blocking client for the rubric endpoint. Thread-safe; at most max_in_flight
// requests are outstanding at once, each with its own timeout.
class JudgeClient {
  public:
    explicit JudgeClient(JudgeConfig cfg);
    ~JudgeClient();
    JudgeClient(const JudgeClient&) = delete;
    auto operator=(const JudgeClient&) -> JudgeClient& = delete;

    // Renders the prompt for one candidate step. Exposed for tests.
    [[nodiscard]] auto render_prompt(const sim::GoalCondition& goal,
                                     const std::vector<sim::ExecutedStep>& history,
                                     const sim::ActionStep& candidate,
                                     const sim::ExecStatus& execution_result,
                                     const sim::Observation& observation_after) const
        -> std::string;

    // One request, temperature 0. Throws JudgeUnavailable on transport
    // problems and JudgeUnparseable when no bracketed score is found. The
    // returned rationale_tag is empty; callers fill it from tag_for.
    auto score(const sim::GoalCondition& goal, const std::vector<sim::ExecutedStep>& history,
               const sim::ActionStep& candidate, const sim::ExecStatus& execution_result,
               const sim::Observation& observation_after) -> ProcessScore;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace planlab::reward
