#include "planlab/eval/metrics.h"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace planlab::eval {

namespace {

struct Tally {
    int episodes = 0;
    int successes = 0;
    double pl_sum = 0.0;
};

auto row_from(std::string type, std::string split, const Tally& t) -> MetricsRow {
    MetricsRow row;
    row.task_type = std::move(type);
    row.split = std::move(split);
    row.episodes = t.episodes;
    row.sr = 100.0 * t.successes / t.episodes;
    row.pl = 100.0 * t.pl_sum / t.episodes;
    return row;
}

}  // namespace

auto aggregate(const std::vector<EpisodeResult>& results, const std::vector<taskgen::Task>& tasks)
    -> EvalReport {
    if (results.empty()) { throw std::invalid_argument("no episodes to aggregate"); }
    std::map<std::string, std::pair<std::string, std::string>> info;  // id -> (type, split)
    for (const auto& task : tasks) {
        info[task.id] = {taskgen::task_type_name(task.type), task.split};
    }

    // Episodes are re-ordered by content before summation, so the float sums
    // are identical for any permutation of the input.
    auto sorted = results;
    std::sort(sorted.begin(), sorted.end(), [](const EpisodeResult& a, const EpisodeResult& b) {
        return std::tie(a.task_id, a.pl, a.model_length, a.success) <
               std::tie(b.task_id, b.pl, b.model_length, b.success);
    });

    std::map<std::pair<std::string, std::string>, Tally> groups;  // (split, type)
    std::map<std::string, Tally> split_totals;
    Tally total;
    for (const auto& ep : sorted) {
        const auto it = info.find(ep.task_id);
        if (it == info.end()) {
            throw std::invalid_argument("episode references unknown task: " + ep.task_id);
        }
        const auto& [type, split] = it->second;
        for (Tally* t : {&groups[{split, type}], &split_totals[split], &total}) {
            t->episodes += 1;
            t->successes += ep.success ? 1 : 0;
            t->pl_sum += ep.pl;
        }
    }

    EvalReport report;
    for (const auto& [split, split_tally] : split_totals) {
        for (const auto& [key, tally] : groups) {
            if (key.first == split) { report.rows.push_back(row_from(key.second, split, tally)); }
        }
        report.rows.push_back(row_from("overall", split, split_tally));
    }
    report.rows.push_back(row_from("overall", "all", total));
    return report;
}

auto format_report(const EvalReport& report) -> std::string {
    std::ostringstream out;
    out << std::left << std::setw(8) << "split" << std::setw(16) << "task_type" << std::right
        << std::setw(10) << "episodes" << std::setw(10) << "SR" << std::setw(10) << "PL" << '\n';
    out << std::fixed << std::setprecision(2);
    for (const auto& row : report.rows) {
        out << std::left << std::setw(8) << row.split << std::setw(16) << row.task_type
            << std::right << std::setw(10) << row.episodes << std::setw(10) << row.sr
            << std::setw(10) << row.pl << '\n';
    }
    return out.str();
}

auto error_kind_name(ErrorKind kind) -> const std::string& {
    static const std::string names[] = {"DependencyError", "AffordanceError", "InefficientError",
                                        "Other"};
    return names[static_cast<int>(kind)];
}

auto classify_errors(const EpisodeResult& result) -> ErrorSet {
    ErrorSet labels;
    for (const auto& step : result.steps) {
        if (step.status.ok) { continue; }
        switch (*step.status.error) {
            case sim::ErrorTag::kHandOccupied:
            case sim::ErrorTag::kHandEmpty:
            case sim::ErrorTag::kNoReceptacleVisited:
            case sim::ErrorTag::kContainerClosed:
                labels.insert(ErrorKind::kDependency);
                break;
            case sim::ErrorTag::kNotOpenable:
            case sim::ErrorTag::kNotToggleable:
            case sim::ErrorTag::kNotSliceable:
            case sim::ErrorTag::kTargetNotFound:
                labels.insert(ErrorKind::kAffordance);
                break;
            case sim::ErrorTag::kAlreadyInState:
                break;  // no-op failure; surfaces as Other when the task fails
        }
    }
    bool repeat = false;
    for (std::size_t i = 0; i + 1 < result.steps.size(); ++i) {
        if (result.steps[i].action == result.steps[i + 1].action) { repeat = true; }
    }
    if (repeat || (result.success && result.model_length > result.expert_length)) {
        labels.insert(ErrorKind::kInefficient);
    }
    if (!result.success && labels.empty()) { labels.insert(ErrorKind::kOther); }
    return labels;
}

}  // namespace planlab::eval
