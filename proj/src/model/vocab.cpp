#include "planlab/model/vocab.h"

#include <algorithm>

#include "planlab/reward/score.h"
#include "planlab/rng.h"

namespace planlab::model {

namespace {

auto index_of(const std::vector<std::string>& items, const std::string& needle)
    -> std::optional<int> {
    const auto it = std::find(items.begin(), items.end(), needle);
    if (it == items.end()) { return std::nullopt; }
    return static_cast<int>(it - items.begin());
}

}  // namespace

auto Vocabulary::tag_id(const std::string& t) const -> std::optional<int> {
    return index_of(tags, t);
}
auto Vocabulary::verb_id(const std::string& v) const -> std::optional<int> {
    return index_of(verbs, v);
}
auto Vocabulary::object_id(const std::string& o) const -> std::optional<int> {
    return index_of(objects, o);
}
auto Vocabulary::state_token_id(const std::string& s) const -> std::optional<int> {
    return index_of(state_tokens, s);
}
auto Vocabulary::is_receptacle(const std::string& cls) const -> bool {
    return std::binary_search(receptacle_classes.begin(), receptacle_classes.end(), cls);
}

auto Vocabulary::canonical_text() const -> std::string {
    std::string out;
    const auto section = [&out](const char* name, const std::vector<std::string>& items) {
        out += name;
        out += '\n';
        for (const auto& item : items) {
            out += item;
            out += '\n';
        }
    };
    section("#tags", tags);
    section("#verbs", verbs);
    section("#objects", objects);
    section("#state_tokens", state_tokens);
    section("#receptacles", receptacle_classes);
    return out;
}

auto Vocabulary::digest() const -> std::string {
    auto h = fnv1a(canonical_text());
    std::string hex(16, '0');
    for (int i = 15; i >= 0; --i) {
        hex[i] = "0123456789abcdef"[h & 0xf];
        h >>= 4;
    }
    return hex;
}

auto build_vocabulary(const std::map<std::string, sim::ObjectClass>& catalog) -> Vocabulary {
    Vocabulary v;
    v.tags = reward::reasoning_tags();
    for (const auto verb : sim::all_verbs()) { v.verbs.push_back(sim::verb_name(verb)); }

    v.objects.push_back(kNoObject);
    for (const auto& [name, cls] : catalog) { v.objects.push_back(name); }

    for (const auto& [name, cls] : catalog) {
        if (cls.has(sim::Capability::kReceptacle)) { v.receptacle_classes.push_back(name); }
    }

    // Predicate tokens cover everything a descriptor over this catalog can
    // say; the map iteration keeps each family sorted by class name.
    std::vector<std::string> preds;
    for (const auto& [name, cls] : catalog) {
        if (cls.has(sim::Capability::kPickupable)) {
            preds.push_back("holding(" + name + ")");
            preds.push_back("hot(" + name + ")");
            preds.push_back("cold(" + name + ")");
            preds.push_back("clean(" + name + ")");
            for (const auto& recep : v.receptacle_classes) {
                preds.push_back("on(" + name + "," + recep + ")");
            }
        }
        if (cls.has(sim::Capability::kOpenable)) { preds.push_back("open(" + name + ")"); }
        if (cls.has(sim::Capability::kToggleable)) { preds.push_back("toggled(" + name + ")"); }
        if (cls.has(sim::Capability::kSliceable)) { preds.push_back("sliced(" + name + ")"); }
    }
    std::sort(preds.begin(), preds.end());

    v.state_tokens = {kCurToken, kNextToken, kEndToken};
    v.state_tokens.insert(v.state_tokens.end(), preds.begin(), preds.end());
    return v;
}

}  // namespace planlab::model
