#pragma once

#include <set>
#include <string>
#include <vector>

#include "planlab/eval/rollout.h"
#include "planlab/taskgen/task.h"

namespace planlab::eval {

struct MetricsRow {
    std::string task_type;  // a task type name, or "overall"
    std::string split;      // "seen", "unseen", or "all" on the grand total
    int episodes = 0;
    double sr = 0.0;  // percent
    double pl = 0.0;  // percent

    auto operator==(const MetricsRow&) const -> bool = default;
};

struct EvalReport {
    std::vector<MetricsRow> rows;

    auto operator==(const EvalReport&) const -> bool = default;
};

// Groups by task type within each split, appends per-split and grand totals.
// Row order is deterministic (split, then type) and independent of the
// episode order. Episodes must join to a listed task by id.
auto aggregate(const std::vector<EpisodeResult>& results, const std::vector<taskgen::Task>& tasks)
    -> EvalReport;

// Paper-shaped column layout: one line per row, SR and PL to two decimals.
auto format_report(const EvalReport& report) -> std::string;

enum class ErrorKind { kDependency, kAffordance, kInefficient, kOther };

auto error_kind_name(ErrorKind kind) -> const std::string&;

using ErrorSet = std::set<ErrorKind>;

// Rule-based reading of the failure taxonomy; every unsuccessful or
// inefficient episode carries at least one label, clean successes none.
auto classify_errors(const EpisodeResult& result) -> ErrorSet;

}  // namespace planlab::eval
