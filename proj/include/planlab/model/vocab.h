#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "planlab/sim/types.h"

namespace planlab::model {

inline const std::string kNoObject = "<none>";
inline const std::string kCurToken = "[CUR]";
inline const std::string kNextToken = "[NEXT]";
inline const std::string kEndToken = "[END]";

// Fixed token inventories for one run. Ids are positions in the vectors and
// stay dense and stable; the digest travels with every dataset and parameter
// file so drift is caught at load time.
struct Vocabulary {
    std::vector<std::string> tags;          // reasoning tags
    std::vector<std::string> verbs;         // action verbs, enum order
    std::vector<std::string> objects;       // kNoObject + sorted class names
    std::vector<std::string> state_tokens;  // separators + sorted predicate tokens
    std::vector<std::string> receptacle_classes;  // sorted; for context features

    [[nodiscard]] auto tag_id(const std::string& t) const -> std::optional<int>;
    [[nodiscard]] auto verb_id(const std::string& v) const -> std::optional<int>;
    [[nodiscard]] auto object_id(const std::string& o) const -> std::optional<int>;
    [[nodiscard]] auto state_token_id(const std::string& s) const -> std::optional<int>;
    [[nodiscard]] auto is_receptacle(const std::string& cls) const -> bool;

    // Canonical text form fed to the digest; also usable for serialization.
    [[nodiscard]] auto canonical_text() const -> std::string;
    [[nodiscard]] auto digest() const -> std::string;  // 16 hex chars
};

// Token inventories derived from an object catalog: every reasoning tag and
// verb, every class name as an object, and every predicate token that a state
// descriptor over this catalog could emit.
auto build_vocabulary(const std::map<std::string, sim::ObjectClass>& catalog) -> Vocabulary;

}  // namespace planlab::model
