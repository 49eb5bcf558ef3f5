#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "anytime/error.hpp"

namespace anytime {

/// One network block: identity, average execution time and the blocks it
/// consumes (the "route"). The induced graph must be acyclic.
struct LayerProfile {
    int id = 0;
    std::string name;
    double latency_ms = 0.0;
    std::vector<int> deps;
};

/// A detection sub-head attached after a layer, producing predictions for
/// one feature-map scale. head_latency_ms is the cost of running just this
/// sub-head (zero when the head is already materialized as a layer).
struct SubExitProfile {
    int id = 0;
    int attach_layer = 0;
    std::string scale;
    double head_latency_ms = 0.0;
};

/// A usable exit: one sub-exit per scale plus the quality the combined
/// prediction achieves. `trained` distinguishes trained tuples from
/// free inference-time matches.
struct ExitSpec {
    std::map<std::string, int> sub_exits; // scale -> sub-exit id
    double quality = 0.0;
    bool trained = true;
    std::string provenance; // optional, e.g. "synthetic"; empty = unset

    friend bool operator==(const ExitSpec& a, const ExitSpec& b) {
        return a.sub_exits == b.sub_exits && a.quality == b.quality &&
               a.trained == b.trained;
    }
};

/// Declarative description of one model variant: layer DAG with latencies,
/// sub-exit placement and the exit-quality table. Immutable after load;
/// every operation in this library is a pure function of it.
struct NetworkProfile {
    std::string name;
    std::vector<std::string> scales;
    std::vector<LayerProfile> layers;
    std::vector<SubExitProfile> sub_exits;
    std::vector<ExitSpec> exits;
    double default_quality = 0.0; // quality before any exit is reachable
    double final_quality = 0.0;   // quality of the complete network

    const LayerProfile* find_layer(int id) const {
        for (const auto& l : layers)
            if (l.id == id) return &l;
        return nullptr;
    }
    const SubExitProfile* find_sub_exit(int id) const {
        for (const auto& s : sub_exits)
            if (s.id == id) return &s;
        return nullptr;
    }
    double total_latency_ms() const {
        double t = 0.0;
        for (const auto& l : layers) t += l.latency_ms;
        return t;
    }
};

namespace detail {

inline std::string join_ids(const std::vector<int>& ids, const char* sep = " -> ") {
    std::ostringstream os;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) os << sep;
        os << ids[i];
    }
    return os.str();
}

/// id -> dense index map; throws on duplicate ids.
inline std::unordered_map<int, int> layer_index_map(const NetworkProfile& p) {
    std::unordered_map<int, int> idx;
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        if (!idx.emplace(p.layers[i].id, static_cast<int>(i)).second)
            throw Error("duplicate layer id " + std::to_string(p.layers[i].id));
    }
    return idx;
}

/// DFS cycle search over the dependency graph; returns the cycle as ids.
inline std::vector<int> find_dependency_cycle(const NetworkProfile& p,
                                              const std::unordered_map<int, int>& idx) {
    const int n = static_cast<int>(p.layers.size());
    std::vector<int> color(n, 0); // 0 unvisited, 1 on stack, 2 done
    std::vector<int> stack;
    std::vector<int> cycle;

    auto dfs = [&](auto&& self, int i) -> bool {
        color[i] = 1;
        stack.push_back(i);
        for (int dep : p.layers[i].deps) {
            auto it = idx.find(dep);
            if (it == idx.end()) continue; // dangling deps reported separately
            int j = it->second;
            if (color[j] == 1) {
                auto from = std::find(stack.begin(), stack.end(), j);
                for (auto s = from; s != stack.end(); ++s) cycle.push_back(p.layers[*s].id);
                cycle.push_back(p.layers[j].id);
                return true;
            }
            if (color[j] == 0 && self(self, j)) return true;
        }
        stack.pop_back();
        color[i] = 2;
        return false;
    };
    for (int i = 0; i < n; ++i)
        if (color[i] == 0 && dfs(dfs, i)) return cycle;
    return {};
}

} // namespace detail

/// Transitive dependency closure of a set of layer ids, the layers included.
inline std::set<int> dependency_closure(const NetworkProfile& profile,
                                        const std::vector<int>& roots) {
    auto idx = detail::layer_index_map(profile);
    std::set<int> out;
    std::vector<int> todo(roots);
    while (!todo.empty()) {
        int id = todo.back();
        todo.pop_back();
        auto it = idx.find(id);
        if (it == idx.end()) throw Error("dangling layer reference " + std::to_string(id));
        if (!out.insert(id).second) continue;
        for (int dep : profile.layers[it->second].deps) todo.push_back(dep);
    }
    return out;
}

/// Layers that must have executed before `exit` can produce a prediction:
/// union over its sub-exits of the closure of each attach layer.
inline std::set<int> required_layers(const NetworkProfile& profile, const ExitSpec& exit) {
    std::vector<int> roots;
    for (const auto& [scale, sub_id] : exit.sub_exits) {
        const SubExitProfile* se = profile.find_sub_exit(sub_id);
        if (!se)
            throw Error("exit references unknown sub-exit " + std::to_string(sub_id) +
                        " for scale '" + scale + "'");
        roots.push_back(se->attach_layer);
    }
    return dependency_closure(profile, roots);
}

/// An exit together with its availability (required-layer) set.
struct ReachableExit {
    ExitSpec exit;
    std::set<int> required; // layer ids
    int index = 0;          // canonical index (first occurrence in the table)
};

/// Every usable exit of the profile, deduplicated by sub-exit mapping
/// (first occurrence wins), each with its required-layer set.
inline std::vector<ReachableExit> enumerate_reachable_exits(const NetworkProfile& profile) {
    if (profile.exits.empty()) throw Error("profile '" + profile.name + "' declares no usable exits");
    std::vector<ReachableExit> out;
    for (const auto& e : profile.exits) {
        bool dup = false;
        for (const auto& seen : out)
            if (seen.exit.sub_exits == e.sub_exits) { dup = true; break; }
        if (dup) continue;
        ReachableExit re;
        re.exit = e;
        re.required = required_layers(profile, e);
        re.index = static_cast<int>(out.size());
        out.push_back(std::move(re));
    }
    return out;
}

/// Index (into enumerate_reachable_exits) of the designated final exit:
/// the unique exit whose required set equals the union of all exits'
/// required sets. Throws if that exit is missing or ambiguous.
inline int final_exit_index(const NetworkProfile& profile,
                            const std::vector<ReachableExit>& usable) {
    std::set<int> all;
    for (const auto& re : usable) all.insert(re.required.begin(), re.required.end());
    int found = -1;
    for (const auto& re : usable) {
        if (re.required == all) {
            if (found >= 0)
                throw Error("profile '" + profile.name + "' has more than one final exit candidate");
            found = re.index;
        }
    }
    if (found < 0)
        throw Error("profile '" + profile.name +
                    "' has no final exit (no exit covers the exit-relevant closure)");
    return found;
}

inline int final_exit_index(const NetworkProfile& profile) {
    return final_exit_index(profile, enumerate_reachable_exits(profile));
}

/// Full structural validation; throws Error with a message naming the
/// offending field, id or cycle.
inline void validate_profile(const NetworkProfile& p) {
    if (p.layers.empty()) throw Error("profile '" + p.name + "' has no layers");
    if (p.scales.empty()) throw Error("profile '" + p.name + "' declares no scales");
    {
        std::set<std::string> seen;
        for (const auto& s : p.scales)
            if (!seen.insert(s).second) throw Error("duplicate scale tag '" + s + "'");
    }
    auto idx = detail::layer_index_map(p);
    for (const auto& l : p.layers) {
        if (!(l.latency_ms >= 0.0) || !std::isfinite(l.latency_ms))
            throw Error("layer " + std::to_string(l.id) + " has negative or non-finite latency");
        for (int dep : l.deps)
            if (!idx.count(dep))
                throw Error("layer " + std::to_string(l.id) + " depends on unknown layer " +
                            std::to_string(dep));
    }
    auto cycle = detail::find_dependency_cycle(p, idx);
    if (!cycle.empty())
        throw Error("dependency cycle detected: " + detail::join_ids(cycle));

    std::set<int> sub_ids;
    for (const auto& s : p.sub_exits) {
        if (!sub_ids.insert(s.id).second)
            throw Error("duplicate sub-exit id " + std::to_string(s.id));
        if (!idx.count(s.attach_layer))
            throw Error("sub-exit " + std::to_string(s.id) + " attaches to unknown layer " +
                        std::to_string(s.attach_layer));
        if (std::find(p.scales.begin(), p.scales.end(), s.scale) == p.scales.end())
            throw Error("sub-exit " + std::to_string(s.id) + " uses undeclared scale '" +
                        s.scale + "'");
        if (!(s.head_latency_ms >= 0.0) || !std::isfinite(s.head_latency_ms))
            throw Error("sub-exit " + std::to_string(s.id) + " has negative or non-finite head latency");
    }
    if (p.exits.empty()) throw Error("profile '" + p.name + "' declares no usable exits");
    for (std::size_t i = 0; i < p.exits.size(); ++i) {
        const auto& e = p.exits[i];
        if (e.sub_exits.size() != p.scales.size())
            throw Error("exit " + std::to_string(i) + " must map exactly one sub-exit per scale");
        for (const auto& scale : p.scales) {
            auto it = e.sub_exits.find(scale);
            if (it == e.sub_exits.end())
                throw Error("exit " + std::to_string(i) + " is missing scale '" + scale + "'");
            const SubExitProfile* se = p.find_sub_exit(it->second);
            if (!se)
                throw Error("exit " + std::to_string(i) + " references unknown sub-exit " +
                            std::to_string(it->second));
            if (se->scale != scale)
                throw Error("exit " + std::to_string(i) + " maps scale '" + scale +
                            "' to sub-exit " + std::to_string(se->id) + " of scale '" +
                            se->scale + "'");
        }
        if (!std::isfinite(e.quality))
            throw Error("exit " + std::to_string(i) + " has non-finite quality");
    }
    if (!std::isfinite(p.default_quality)) throw Error("default_quality must be finite");
    if (!std::isfinite(p.final_quality)) throw Error("final_quality must be finite");

    // exactly one final exit (checked on the deduplicated exit table)
    final_exit_index(p, enumerate_reachable_exits(p));
}

} // namespace anytime
