#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace planlab::sim {

enum class Capability : unsigned {
    kPickupable = 1u << 0,
    kReceptacle = 1u << 1,
    kOpenable = 1u << 2,
    kToggleable = 1u << 3,
    kSliceable = 1u << 4,
    kCuttingTool = 1u << 5,
};

enum class ApplianceEffect { kHeats, kCools, kCleans };

struct ObjectClass {
    std::string name;
    unsigned capabilities = 0;
    std::optional<ApplianceEffect> appliance_effect;
    // Set when the effect applies to another class's contents (faucet -> sinkbasin).
    std::optional<std::string> linked_receptacle;

    [[nodiscard]] auto has(Capability c) const -> bool {
        return (capabilities & static_cast<unsigned>(c)) != 0;
    }
};

struct Layout {
    std::string name;
    std::string split;  // "seen" or "unseen"
    std::vector<std::string> nodes;
    std::map<std::string, std::vector<std::string>> adjacency;
    std::map<std::string, std::vector<std::string>> furnishings;  // node -> class names
};

struct SceneDef {
    std::map<std::string, ObjectClass> catalog;
    Layout layout;
};

enum class LocationKind { kAtNode, kInReceptacle, kInHand };

struct Location {
    LocationKind kind = LocationKind::kAtNode;
    std::string ref;  // node name or container instance id; empty for kInHand

    static auto at_node(std::string node) -> Location { return {LocationKind::kAtNode, std::move(node)}; }
    static auto in_receptacle(std::string id) -> Location { return {LocationKind::kInReceptacle, std::move(id)}; }
    static auto in_hand() -> Location { return {LocationKind::kInHand, {}}; }

    auto operator==(const Location&) const -> bool = default;
};

struct ObjectInstance {
    std::string id;
    std::string class_name;
    Location location;
    bool is_open = false;
    bool is_on = false;
    bool is_sliced = false;
    bool is_clean = false;
    bool is_hot = false;
    bool is_cold = false;

    auto operator==(const ObjectInstance&) const -> bool = default;
};

struct AgentState {
    std::string node;
    std::optional<std::string> held;                      // instance id
    std::optional<std::string> last_visited_receptacle;   // instance id, set by Find

    auto operator==(const AgentState&) const -> bool = default;
};

// Immutable value; apply_action returns a fresh copy.
struct WorldState {
    std::shared_ptr<const SceneDef> scene;
    std::map<std::string, ObjectInstance> instances;
    AgentState agent;
    std::uint64_t step_count = 0;
};

enum class Verb { kFind, kPickUp, kPutDown, kOpen, kClose, kTurnOn, kTurnOff, kSlice, kDone };

struct ActionStep {
    Verb verb = Verb::kDone;
    std::optional<std::string> target;  // class name; absent for Done

    auto operator==(const ActionStep&) const -> bool = default;
};

enum class ErrorTag {
    kTargetNotFound,
    kHandOccupied,
    kHandEmpty,
    kNotOpenable,
    kNotToggleable,
    kNotSliceable,
    kNoReceptacleVisited,
    kContainerClosed,
    kAlreadyInState,
};

struct ExecStatus {
    bool ok = true;
    std::optional<ErrorTag> error;

    static auto success() -> ExecStatus { return {true, std::nullopt}; }
    static auto failure(ErrorTag tag) -> ExecStatus { return {false, tag}; }

    auto operator==(const ExecStatus&) const -> bool = default;
};

struct VisibleObject {
    std::string id;
    std::string class_name;
    std::vector<std::string> flags;  // canonical flag names, sorted

    auto operator==(const VisibleObject&) const -> bool = default;
};

struct Observation {
    std::vector<VisibleObject> visible;        // sorted by instance id
    std::optional<std::string> hand;           // class of held instance

    auto operator==(const Observation&) const -> bool = default;
};

// One executed action with its outcome, as echoed into prompts and records.
struct ExecutedStep {
    ActionStep action;
    ExecStatus status;

    auto operator==(const ExecutedStep&) const -> bool = default;
};

auto verb_name(Verb v) -> const std::string&;
auto verb_from_name(const std::string& name) -> std::optional<Verb>;
auto error_tag_name(ErrorTag tag) -> const std::string&;
auto error_tag_from_name(const std::string& name) -> std::optional<ErrorTag>;
auto all_verbs() -> const std::vector<Verb>&;

// Canonical flag-token names in sorted order: clean, cold, hot, open, sliced, toggled.
auto flag_names(const ObjectInstance& inst) -> std::vector<std::string>;

auto format_action(const ActionStep& action) -> std::string;

// Canonical single-line text form shared by dataset records and judge prompts:
//   "visible: apple, fridge(open), knife | hand: empty"
// Entries sorted by class name then instance id; flags in sorted order.
auto format_observation(const Observation& obs) -> std::string;

// "pick up apple (this action success)" / "open fridge (this action failed: AlreadyInState)".
auto format_executed_step(const ExecutedStep& step) -> std::string;

}  // namespace planlab::sim
