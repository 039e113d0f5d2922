#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hat/model.hpp"

namespace hat {

// Flattening of hierarchical automata into behaviorally equivalent flat ones.
// The pipeline: forward transitions into composites down to the innermost
// initial leaf, copy transitions out of composites down onto their leaves
// (inner transitions shadow outer ones on the same label), inherit final/
// initial markings, then hoist all leaves to the top level.

struct FlattenResult {
    std::optional<Automaton> model;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return model.has_value(); }
};

namespace detail {

struct TreeInfo {
    std::map<std::string, const State*> by_name;
    std::map<std::string, std::string> parent;  // absent for top-level states

    explicit TreeInfo(const Automaton& model) {
        for_each_state(model.top_states, [&](const State& s, const State* parent, int) {
            by_name.emplace(s.name, &s);
            if (parent) this->parent.emplace(s.name, parent->name);
        });
    }

    bool is_ancestor_or_self(const std::string& ancestor, std::string name) const {
        while (true) {
            if (name == ancestor) return true;
            auto it = parent.find(name);
            if (it == parent.end()) return false;
            name = it->second;
        }
    }
};

// Unique <<initial>> child, or a diagnostic naming the composite.
inline std::optional<const State*> unique_initial_child(const State& composite,
                                                        std::vector<Diagnostic>& diags) {
    const State* found = nullptr;
    int count = 0;
    for (const State& sub : composite.substates) {
        if (sub.modifiers.is_initial) {
            found = &sub;
            ++count;
        }
    }
    if (count != 1) {
        diags.push_back(Diagnostic::make_error(
            diag::no_unique_initial, "composite state '" + composite.name + "' has " +
                                         std::to_string(count) + " initial substates"));
        return std::nullopt;
    }
    return found;
}

inline std::optional<std::string> descend_to_initial_leaf(const State& state,
                                                          std::vector<Diagnostic>& diags) {
    const State* current = &state;
    while (current->is_composite()) {
        auto child = unique_initial_child(*current, diags);
        if (!child) return std::nullopt;
        current = *child;
    }
    return current->name;
}

template <class Fn>
void for_each_leaf(const State& state, Fn&& fn) {
    if (!state.is_composite()) {
        fn(state);
        return;
    }
    for (const State& sub : state.substates) for_each_leaf(sub, fn);
}

inline void hoist(const State& state, bool inherited_final,
                  const std::optional<std::string>& initial_leaf, std::vector<State>& out) {
    bool is_final = inherited_final || state.modifiers.is_final;
    if (!state.is_composite()) {
        State leaf;
        leaf.name = state.name;
        leaf.modifiers.is_final = is_final;
        leaf.modifiers.is_initial = initial_leaf && *initial_leaf == state.name;
        out.push_back(std::move(leaf));
        return;
    }
    for (const State& sub : state.substates) hoist(sub, is_final, initial_leaf, out);
}

}  // namespace detail

// Retargets every transition aimed at a composite to the composite's
// innermost initial descendant leaf. Requires every composite to have exactly
// one initial substate. Initial markers stay in place, so any number of
// incoming transitions forward correctly.
inline FlattenResult forward_targets(const Automaton& model) {
    std::vector<Diagnostic> diags;
    detail::for_each_state(model.top_states, [&](const State& s, const State*, int) {
        if (s.is_composite()) detail::unique_initial_child(s, diags);
    });
    if (has_errors(diags)) return {std::nullopt, std::move(diags)};

    detail::TreeInfo info(model);
    Automaton out;
    out.top_states = model.top_states;
    for (const Transition& t : model.transitions) {
        Transition retargeted = t;
        const State* target = info.by_name.at(t.target);
        if (target->is_composite()) {
            auto leaf = detail::descend_to_initial_leaf(*target, diags);
            if (!leaf) return {std::nullopt, std::move(diags)};
            retargeted.target = *leaf;
        }
        bool duplicate = false;
        for (const Transition& existing : out.transitions) {
            if (existing == retargeted) duplicate = true;
        }
        if (!duplicate) out.transitions.push_back(std::move(retargeted));
    }
    return {std::move(out), std::move(diags)};
}

// Replaces each transition leaving a composite by copies from those leaf
// descendants that are not shadowed: a leaf keeps an inherited label only if
// neither it nor any ancestor strictly inside the composite already has an
// outgoing transition with that label. Expects forward_targets output (all
// transition targets are leaves).
inline Automaton copy_down_sources(const Automaton& model) {
    detail::TreeInfo info(model);
    for (const Transition& t : model.transitions) {
        if (info.by_name.at(t.target)->is_composite()) {
            throw std::invalid_argument(
                "copy_down_sources: transition targets a composite; run forward_targets first");
        }
    }
    std::set<std::pair<std::string, std::string>> has_outgoing;  // (source, label)
    for (const Transition& t : model.transitions) has_outgoing.insert({t.source, t.label});

    Automaton out;
    out.top_states = model.top_states;
    std::vector<Transition> added;
    auto push_unique = [](std::vector<Transition>& list, Transition t) {
        for (const Transition& existing : list) {
            if (existing == t) return;
        }
        list.push_back(std::move(t));
    };
    for (const Transition& t : model.transitions) {
        const State* source = info.by_name.at(t.source);
        if (!source->is_composite()) {
            push_unique(out.transitions, t);
            continue;
        }
        detail::for_each_leaf(*source, [&](const State& leaf) {
            // Shadow check against the original transition set: leaf or any
            // ancestor strictly below the composite already handling `label`.
            for (std::string s = leaf.name; s != source->name;
                 s = info.parent.at(s)) {
                if (has_outgoing.count({s, t.label})) return;
            }
            push_unique(added, {leaf.name, t.label, t.target});
        });
    }
    for (Transition& t : added) push_unique(out.transitions, std::move(t));
    return out;
}

// Full pipeline; the output is flat (every state top-level), valid, and
// trace-equivalent to the input.
inline FlattenResult flatten(const Automaton& model) {
    std::vector<Diagnostic> diags = validate(model);
    if (has_errors(diags)) return {std::nullopt, std::move(diags)};
    diags.clear();

    int top_initials = 0;
    for (const State& s : model.top_states) top_initials += s.modifiers.is_initial ? 1 : 0;
    if (top_initials > 1) {
        diags.push_back(Diagnostic::make_error(
            diag::multiple_top_initial,
            std::to_string(top_initials) + " top-level states marked <<initial>>"));
        return {std::nullopt, std::move(diags)};
    }

    FlattenResult forwarded = forward_targets(model);
    if (!forwarded.ok()) return forwarded;
    Automaton copied = copy_down_sources(*forwarded.model);

    // The one leaf that stays initial: the innermost initial descendant of
    // the top-level initial state.
    std::optional<std::string> initial_leaf;
    for (const State& s : copied.top_states) {
        if (s.modifiers.is_initial) {
            auto leaf = detail::descend_to_initial_leaf(s, diags);
            if (!leaf) return {std::nullopt, std::move(diags)};
            initial_leaf = *leaf;
        }
    }

    Automaton flat;
    flat.transitions = std::move(copied.transitions);
    for (const State& top : copied.top_states) {
        detail::hoist(top, false, initial_leaf, flat.top_states);
    }
    return {std::move(flat), std::move(diags)};
}

// The bundled transition-forwarding rule in integrated notation, as shipped
// in samples/fig3.rul. Simplified on purpose: it drops the <<initial>>
// marker it matched, so with several transitions into one composite only the
// first gets forwarded — flatten() is the faithful generalization.
inline std::string fig3_rule() {
    return "rule forward {\n"
           "state $source;\n"
           "\n"
           "state $outer {\n"
           "  state $inner << [[ initial :- ]] >>;\n"
           "}\n"
           "\n"
           "$source -$event> [[ $outer :- $inner]];\n"
           "}\n";
}

}  // namespace hat
