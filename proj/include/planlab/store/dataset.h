#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "planlab/eval/rollout.h"
#include "planlab/model/features.h"
#include "planlab/model/scorer.h"
#include "planlab/search/collect.h"
#include "planlab/taskgen/task.h"
#include "planlab/train/pipeline.h"

namespace planlab::store {

class SchemaViolation : public std::runtime_error {
  public:
    SchemaViolation(int line, const std::string& why)
        : std::runtime_error("line " + std::to_string(line) + ": " + why), line_(line) {}
    [[nodiscard]] auto line() const -> int { return line_; }

  private:
    int line_;
};

class HashMismatch : public std::runtime_error {
  public:
    HashMismatch(const std::string& expected, const std::string& found)
        : std::runtime_error("vocabulary hash mismatch: expected " + expected + ", file carries " +
                             found) {}
};

// Training records. Each is self-contained: the only cross-reference they
// carry is the task id.
struct SftRecord {
    std::string task_id;
    model::ActionContext context;
    model::ActionResponse chosen;

    auto operator==(const SftRecord&) const -> bool = default;
};

struct ActionPrefRecord {
    std::string task_id;
    model::ActionContext context;
    model::ActionResponse chosen;
    std::vector<model::ActionResponse> rejected;

    auto operator==(const ActionPrefRecord&) const -> bool = default;
};

struct StatePrefRecord {
    std::string task_id;
    model::StateConditioning conditioning;
    std::vector<std::string> anchor;
    std::vector<std::string> chosen_next;
    std::vector<std::vector<std::string>> rejected_next;

    auto operator==(const StatePrefRecord&) const -> bool = default;
};

// One line-delimited JSON file: a header line carrying schema, vocabulary
// hash, and the full run config, then one record per line. config_json must
// be a JSON object; it is stored key-normalized.
struct Dataset {
    std::string vocab_hash;
    std::string config_json = "{}";
    std::vector<SftRecord> sft;
    std::vector<ActionPrefRecord> action_pref;
    std::vector<StatePrefRecord> state_pref;

    auto operator==(const Dataset&) const -> bool = default;
};

// Appends everything one collection run produced, stamped with the task id.
auto append_collect(Dataset& dataset, const std::string& task_id,
                    const search::CollectResult& result) -> void;

// Strips task ids into the shapes the trainer consumes.
auto to_train_data(const Dataset& dataset) -> train::TrainData;

auto write_dataset(const Dataset& dataset, const std::string& path) -> void;
// Throws SchemaViolation with the offending line and HashMismatch when an
// expected vocabulary hash is given and the header disagrees.
auto read_dataset(const std::string& path,
                  const std::optional<std::string>& expect_vocab_hash = std::nullopt) -> Dataset;

// Task corpus file: a header with the catalog, the layouts, and the config,
// then one task per line with its full initial world state.
struct TaskFile {
    std::string config_json = "{}";
    std::map<std::string, sim::ObjectClass> catalog;
    std::vector<sim::Layout> layouts;
    std::vector<taskgen::Task> tasks;
};

auto write_tasks(const TaskFile& file, const std::string& path) -> void;
auto read_tasks(const std::string& path) -> TaskFile;

// Evaluation episodes, one per line under a config header.
struct EpisodeFile {
    std::string config_json = "{}";
    std::vector<eval::EpisodeResult> episodes;

    auto operator==(const EpisodeFile&) const -> bool = default;
};

auto write_episodes(const EpisodeFile& file, const std::string& path) -> void;
auto read_episodes(const std::string& path) -> EpisodeFile;

}  // namespace planlab::store
