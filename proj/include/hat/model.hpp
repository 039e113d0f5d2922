#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hat/diagnostics.hpp"

namespace hat {

// In-memory representation of hierarchical automata.
//
// A model is a forest of named states plus one global, ordered set of
// transitions. State names live in a flat global namespace: every name is
// unique across the whole tree, so a transition endpoint never needs
// qualification. Values are immutable by convention — operations that change
// a model build a new one.

struct ModifierSet {
    bool is_initial = false;
    bool is_final = false;

    bool contains(const ModifierSet& other) const {
        return (!other.is_initial || is_initial) && (!other.is_final || is_final);
    }
    bool empty() const { return !is_initial && !is_final; }

    friend bool operator==(const ModifierSet&, const ModifierSet&) = default;
    friend auto operator<=>(const ModifierSet&, const ModifierSet&) = default;
};

struct State {
    std::string name;
    ModifierSet modifiers;
    std::vector<State> substates;  // empty = leaf

    bool is_composite() const { return !substates.empty(); }

    friend bool operator==(const State&, const State&) = default;
};

struct Transition {
    std::string source;
    std::string label;
    std::string target;

    friend bool operator==(const Transition&, const Transition&) = default;
    friend auto operator<=>(const Transition&, const Transition&) = default;
};

struct Automaton {
    std::vector<State> top_states;
    std::vector<Transition> transitions;  // declaration order; set semantics on the triple

    friend bool operator==(const Automaton&, const Automaton&) = default;
};

// Locale-independent [A-Za-z_][A-Za-z0-9_]* check.
inline bool is_identifier_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool is_identifier_char(char c) {
    return is_identifier_start(c) || (c >= '0' && c <= '9');
}
inline bool is_identifier(const std::string& text) {
    if (text.empty() || !is_identifier_start(text[0])) return false;
    for (char c : text) {
        if (!is_identifier_char(c)) return false;
    }
    return true;
}

namespace detail {

template <class Fn>
void for_each_state(const std::vector<State>& states, Fn&& fn, const State* parent = nullptr,
                    int depth = 0) {
    for (const State& s : states) {
        fn(s, parent, depth);
        for_each_state(s.substates, fn, &s, depth + 1);
    }
}

}  // namespace detail

// Checks every model invariant and returns one diagnostic per violation.
// Errors reject the model; warnings (several sibling states marked initial)
// do not. Pure: identical models yield byte-identical diagnostic lists.
inline std::vector<Diagnostic> validate(const Automaton& model) {
    std::vector<Diagnostic> out;
    std::map<std::string, int> name_count;
    detail::for_each_state(model.top_states, [&](const State& s, const State*, int) {
        name_count[s.name] += 1;
    });
    detail::for_each_state(model.top_states, [&](const State& s, const State*, int) {
        if (!is_identifier(s.name)) {
            out.push_back(Diagnostic::make_error(
                diag::bad_ident, "state name '" + s.name + "' is not a plain identifier"));
        } else if (name_count[s.name] > 1) {
            out.push_back(Diagnostic::make_error(diag::dup_name,
                                                 "duplicate state name '" + s.name + "'"));
            name_count[s.name] = 0;  // report each duplicated name once
        }
    });
    for (const Transition& t : model.transitions) {
        for (const std::string* endpoint : {&t.source, &t.target}) {
            if (name_count.find(*endpoint) == name_count.end()) {
                out.push_back(Diagnostic::make_error(
                    diag::undeclared_ref,
                    "transition references undeclared state '" + *endpoint + "'"));
            }
        }
        if (!is_identifier(t.label)) {
            out.push_back(Diagnostic::make_error(
                diag::bad_ident, "transition label '" + t.label + "' is not a plain identifier"));
        }
    }
    std::map<Transition, int> triple_count;
    for (const Transition& t : model.transitions) {
        if (++triple_count[t] == 2) {
            out.push_back(Diagnostic::make_error(
                diag::dup_transition, "duplicate transition " + t.source + " -" + t.label + "> " +
                                          t.target));
        }
    }
    // Multiple initial siblings are legal for matching but rejected later by
    // operations that need a unique entry point.
    auto check_siblings = [&](const std::vector<State>& siblings, const std::string& scope) {
        int initials = 0;
        for (const State& s : siblings) initials += s.modifiers.is_initial ? 1 : 0;
        if (initials > 1) {
            out.push_back(Diagnostic::make_warning(
                diag::multiple_initial, std::to_string(initials) + " sibling states marked "
                                            "<<initial>> " + scope));
        }
    };
    check_siblings(model.top_states, "at top level");
    detail::for_each_state(model.top_states, [&](const State& s, const State*, int) {
        if (s.is_composite()) check_siblings(s.substates, "inside '" + s.name + "'");
    });
    return out;
}

inline bool is_valid(const Automaton& model) { return !has_errors(validate(model)); }

struct StateIndexEntry {
    const State* state = nullptr;
    std::optional<std::string> parent;  // none for top-level states
    int depth = 0;
};

using StateIndex = std::map<std::string, StateIndexEntry>;

// name -> (state, parent, depth) for every declared state. Requires a model
// that validate() accepts; indexing an invalid model is a contract violation.
inline StateIndex state_index(const Automaton& model) {
    if (has_errors(validate(model))) {
        throw std::invalid_argument("state_index: model failed validation");
    }
    StateIndex index;
    detail::for_each_state(model.top_states,
                           [&](const State& s, const State* parent, int depth) {
                               StateIndexEntry entry;
                               entry.state = &s;
                               if (parent) entry.parent = parent->name;
                               entry.depth = depth;
                               index.emplace(s.name, entry);
                           });
    return index;
}

}  // namespace hat
