#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hat/model.hpp"

namespace hat {

// Reference interpreter for hierarchical and flat automata, used to certify
// that flattening preserves behavior. A configuration is the current leaf
// state; firing a label consults the nearest state among the leaf and its
// ancestors that has an outgoing transition with that label (inner-first
// priority), enters the target, and descends along initial markers to a
// leaf.
//
// Entering a composite with several initial substates is ambiguous and an
// error; entering one with none simply disables that transition — there is
// no way in, so the run cannot take it. On a flat automaton everything
// degenerates to plain transition lookup.

struct Configuration {
    std::string leaf;

    friend bool operator==(const Configuration&, const Configuration&) = default;
    friend auto operator<=>(const Configuration&, const Configuration&) = default;
};

struct Trace {
    std::vector<std::string> labels;
    bool accepted = false;  // some reaching configuration is final-inheriting

    friend bool operator==(const Trace&, const Trace&) = default;
};

struct ConfigurationResult {
    std::optional<Configuration> config;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return config.has_value(); }
};

struct StepResult {
    std::optional<std::set<Configuration>> configs;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return configs.has_value(); }
};

struct TracesResult {
    std::optional<std::vector<Trace>> traces;  // sorted by (length, labels)
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return traces.has_value(); }
};

struct EquivalenceResult {
    std::optional<bool> equivalent;
    std::optional<Trace> counterexample;  // shortest, then lexicographically least
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return equivalent.has_value(); }
};

namespace detail {

struct Interpreter {
    const Automaton& model;
    std::map<std::string, const State*> by_name;
    std::map<std::string, std::string> parent;
    std::set<std::string> labels;

    explicit Interpreter(const Automaton& m) : model(m) {
        for_each_state(m.top_states, [&](const State& s, const State* p, int) {
            by_name.emplace(s.name, &s);
            if (p) parent.emplace(s.name, p->name);
        });
        for (const Transition& t : m.transitions) labels.insert(t.label);
    }

    // Descends the unique-initial chain; nullopt without diagnostic means a
    // dead entry (no initial substate anywhere to go).
    std::optional<std::string> enter(const State& state, std::vector<Diagnostic>& diags,
                                     bool zero_is_error) const {
        const State* current = &state;
        while (current->is_composite()) {
            const State* next = nullptr;
            int count = 0;
            for (const State& sub : current->substates) {
                if (sub.modifiers.is_initial) {
                    next = &sub;
                    ++count;
                }
            }
            if (count > 1) {
                diags.push_back(Diagnostic::make_error(
                    diag::no_unique_initial, "composite state '" + current->name + "' has " +
                                                 std::to_string(count) + " initial substates"));
                return std::nullopt;
            }
            if (count == 0) {
                if (zero_is_error) {
                    diags.push_back(Diagnostic::make_error(
                        diag::no_unique_initial,
                        "composite state '" + current->name + "' has no initial substate"));
                }
                return std::nullopt;
            }
            current = next;
        }
        return current->name;
    }

    bool final_inheriting(const std::string& leaf) const {
        std::string name = leaf;
        while (true) {
            if (by_name.at(name)->modifiers.is_final) return true;
            auto it = parent.find(name);
            if (it == parent.end()) return false;
            name = it->second;
        }
    }
};

}  // namespace detail

// The configuration a run starts in: the innermost initial descendant leaf
// of the unique top-level initial state.
inline ConfigurationResult initial_configuration(const Automaton& model) {
    std::vector<Diagnostic> diags;
    const State* top_initial = nullptr;
    int count = 0;
    for (const State& s : model.top_states) {
        if (s.modifiers.is_initial) {
            top_initial = &s;
            ++count;
        }
    }
    if (count == 0) {
        diags.push_back(
            Diagnostic::make_error(diag::no_top_initial, "no top-level state marked <<initial>>"));
        return {std::nullopt, std::move(diags)};
    }
    if (count > 1) {
        diags.push_back(Diagnostic::make_error(
            diag::multiple_top_initial,
            std::to_string(count) + " top-level states marked <<initial>>"));
        return {std::nullopt, std::move(diags)};
    }
    detail::Interpreter interp(model);
    auto leaf = interp.enter(*top_initial, diags, /*zero_is_error=*/true);
    if (!leaf) return {std::nullopt, std::move(diags)};
    return {Configuration{*leaf}, std::move(diags)};
}

namespace detail {

inline StepResult step_impl(const Interpreter& interp, const Configuration& config,
                            const std::string& label) {
    std::vector<Diagnostic> diags;
    std::string at = config.leaf;
    while (true) {
        std::vector<const Transition*> outgoing;
        for (const Transition& t : interp.model.transitions) {
            if (t.source == at && t.label == label) outgoing.push_back(&t);
        }
        if (!outgoing.empty()) {
            std::set<Configuration> result;
            for (const Transition* t : outgoing) {
                auto leaf = interp.enter(*interp.by_name.at(t->target), diags,
                                         /*zero_is_error=*/false);
                if (has_errors(diags)) return {std::nullopt, std::move(diags)};
                if (leaf) result.insert(Configuration{*leaf});
            }
            return {std::move(result), std::move(diags)};
        }
        auto it = interp.parent.find(at);
        if (it == interp.parent.end()) return {std::set<Configuration>{}, std::move(diags)};
        at = it->second;  // inner transitions shadow outer ones
    }
}

}  // namespace detail

// All configurations reachable by firing `label` from `config`. Empty set if
// neither the leaf nor any ancestor has an outgoing transition so labeled.
inline StepResult step(const Automaton& model, const Configuration& config,
                       const std::string& label) {
    detail::Interpreter interp(model);
    return detail::step_impl(interp, config, label);
}

// Every label sequence of length <= depth executable from the initial
// configuration, breadth-first over configuration sets.
inline TracesResult traces(const Automaton& model, int depth) {
    ConfigurationResult start = initial_configuration(model);
    if (!start.ok()) return {std::nullopt, std::move(start.diagnostics)};
    detail::Interpreter interp(model);

    std::vector<Trace> out;
    using Key = std::vector<std::string>;
    std::map<Key, std::set<Configuration>> current;
    current.emplace(Key{}, std::set<Configuration>{*start.config});
    for (int length = 0; length <= depth; ++length) {
        std::map<Key, std::set<Configuration>> next;
        for (const auto& [labels, configs] : current) {
            bool accepted = false;
            for (const Configuration& c : configs) {
                accepted = accepted || interp.final_inheriting(c.leaf);
            }
            out.push_back(Trace{labels, accepted});
            if (length == depth) continue;
            for (const std::string& label : interp.labels) {
                std::set<Configuration> successors;
                for (const Configuration& c : configs) {
                    StepResult stepped = detail::step_impl(interp, c, label);
                    if (!stepped.ok()) return {std::nullopt, std::move(stepped.diagnostics)};
                    successors.insert(stepped.configs->begin(), stepped.configs->end());
                }
                if (successors.empty()) continue;
                Key extended = labels;
                extended.push_back(label);
                next.emplace(std::move(extended), std::move(successors));
            }
        }
        current = std::move(next);
    }
    std::sort(out.begin(), out.end(), [](const Trace& a, const Trace& b) {
        if (a.labels.size() != b.labels.size()) return a.labels.size() < b.labels.size();
        return a.labels < b.labels;
    });
    return {std::move(out), {}};
}

// Bounded trace equivalence: equal executable label sequences with equal
// acceptance markings, up to `depth`. On failure reports the shortest (then
// lexicographically least) differing trace.
inline EquivalenceResult equivalent(const Automaton& a, const Automaton& b, int depth) {
    TracesResult ta = traces(a, depth);
    if (!ta.ok()) return {std::nullopt, std::nullopt, std::move(ta.diagnostics)};
    TracesResult tb = traces(b, depth);
    if (!tb.ok()) return {std::nullopt, std::nullopt, std::move(tb.diagnostics)};

    std::map<std::vector<std::string>, bool> ma, mb;
    for (const Trace& t : *ta.traces) ma.emplace(t.labels, t.accepted);
    for (const Trace& t : *tb.traces) mb.emplace(t.labels, t.accepted);

    std::vector<std::vector<std::string>> keys;
    for (const auto& [k, v] : ma) keys.push_back(k);
    for (const auto& [k, v] : mb) {
        if (!ma.count(k)) keys.push_back(k);
    }
    std::sort(keys.begin(), keys.end(), [](const auto& x, const auto& y) {
        if (x.size() != y.size()) return x.size() < y.size();
        return x < y;
    });
    for (const auto& key : keys) {
        auto ia = ma.find(key);
        auto ib = mb.find(key);
        if (ia == ma.end() || ib == mb.end() || ia->second != ib->second) {
            bool accepted = ia != ma.end() ? ia->second : ib->second;
            return {false, Trace{key, accepted}, {}};
        }
    }
    return {true, std::nullopt, {}};
}

}  // namespace hat
