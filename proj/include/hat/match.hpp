#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hat/model.hpp"
#include "hat/rules.hpp"

namespace hat {

// Occurrence finding for normalized pattern sides. Matching is open-world: a
// host element may carry modifiers, substates and transitions beyond what the
// pattern requires. Element assignment is injective; repeated schema
// variables must bind the same identifier everywhere.

using Binding = std::map<std::string, std::string>;  // variable (no '$') -> identifier

struct Match {
    Binding binding;
    std::map<int, std::string> state_map;  // pattern state id -> host state name
    std::map<int, int> transition_map;     // pattern transition id -> host transition index

    friend bool operator==(const Match&, const Match&) = default;
    friend auto operator<=>(const Match&, const Match&) = default;
};

namespace detail {

// Pre-order view of the host model used during matching.
struct HostView {
    const Automaton* model = nullptr;
    std::vector<const State*> states;                     // document order
    std::map<std::string, const State*> by_name;

    explicit HostView(const Automaton& m) : model(&m) {
        for_each_state(m.top_states, [&](const State& s, const State*, int) {
            states.push_back(&s);
            by_name.emplace(s.name, &s);
        });
    }
};

class Matcher {
public:
    Matcher(const HostView& host, const PatternSide& side, Binding seed)
        : host_(host), binding_(std::move(seed)) {
        for (const PatternStateRef& ref : pattern_states_of(side)) {
            units_.push_back(Unit{ref.state->id, ref.parent_id, ref.state, nullptr});
        }
        for (const PatternTransition& t : side.transitions) {
            units_.push_back(Unit{t.id, -1, nullptr, &t});
        }
        std::sort(units_.begin(), units_.end(),
                  [](const Unit& a, const Unit& b) { return a.id < b.id; });
    }

    std::vector<Match> run(const std::vector<Constraint>* constraints,
                           const std::vector<PatternSide>* nacs) {
        constraints_ = constraints;
        nacs_ = nacs;
        descend(0);
        return std::move(results_);
    }

private:
    struct Unit {
        int id;
        int parent_id;  // pattern parent for states, -1 at pattern top level
        const PatternState* state;
        const PatternTransition* transition;
    };

    const HostView& host_;
    Binding binding_;
    std::vector<Unit> units_;
    std::map<int, std::string> state_map_;
    std::map<int, int> transition_map_;
    std::set<std::string> used_states_;
    std::set<int> used_transitions_;
    const std::vector<Constraint>* constraints_ = nullptr;
    const std::vector<PatternSide>* nacs_ = nullptr;
    std::vector<Match> results_;

    // Binds var -> value unless it contradicts an existing binding. Returns
    // whether the attempt is consistent; `undo` records fresh bindings.
    bool bind_term(const Term& term, const std::string& value,
                   std::vector<std::string>& undo) {
        if (!term.is_var()) return term.text == value;
        auto it = binding_.find(term.text);
        if (it != binding_.end()) return it->second == value;
        binding_.emplace(term.text, value);
        undo.push_back(term.text);
        return true;
    }

    void unbind(const std::vector<std::string>& undo) {
        for (const std::string& var : undo) binding_.erase(var);
    }

    void descend(std::size_t unit_index) {
        if (unit_index == units_.size()) {
            emit();
            return;
        }
        const Unit& unit = units_[unit_index];
        if (unit.state) {
            try_state(unit, unit_index);
        } else {
            try_transition(unit, unit_index);
        }
    }

    void try_state(const Unit& unit, std::size_t unit_index) {
        const PatternState& pattern = *unit.state;
        // A nested pattern state requires direct containment in the host;
        // a top-level pattern state may sit at any host depth.
        const std::vector<const State*>* candidates;
        std::vector<const State*> children;
        if (unit.parent_id >= 0) {
            const State* host_parent = host_.by_name.at(state_map_.at(unit.parent_id));
            for (const State& sub : host_parent->substates) children.push_back(&sub);
            candidates = &children;
        } else {
            candidates = &host_.states;
        }
        for (const State* candidate : *candidates) {
            if (used_states_.count(candidate->name)) continue;
            if (!candidate->modifiers.contains(pattern.modifiers)) continue;
            std::vector<std::string> undo;
            if (!bind_term(pattern.name, candidate->name, undo)) {
                unbind(undo);
                continue;
            }
            used_states_.insert(candidate->name);
            state_map_.emplace(pattern.id, candidate->name);
            descend(unit_index + 1);
            state_map_.erase(pattern.id);
            used_states_.erase(candidate->name);
            unbind(undo);
        }
    }

    void try_transition(const Unit& unit, std::size_t unit_index) {
        const PatternTransition& pattern = *unit.transition;
        const auto& transitions = host_.model->transitions;
        for (int i = 0; i < static_cast<int>(transitions.size()); ++i) {
            if (used_transitions_.count(i)) continue;
            const Transition& candidate = transitions[static_cast<std::size_t>(i)];
            std::vector<std::string> undo;
            bool consistent = bind_term(pattern.source, candidate.source, undo) &&
                              bind_term(pattern.label, candidate.label, undo) &&
                              bind_term(pattern.target, candidate.target, undo);
            if (!consistent) {
                unbind(undo);
                continue;
            }
            used_transitions_.insert(i);
            transition_map_.emplace(pattern.id, i);
            descend(unit_index + 1);
            transition_map_.erase(pattern.id);
            used_transitions_.erase(i);
            unbind(undo);
        }
    }

    std::string resolve(const Term& term) const {
        return term.is_var() ? binding_.at(term.text) : term.text;
    }

    void emit() {
        if (constraints_) {
            for (const Constraint& c : *constraints_) {
                bool equal = resolve(c.left) == resolve(c.right);
                if (equal != c.expect_equal) return;
            }
        }
        if (nacs_) {
            for (const PatternSide& nac : *nacs_) {
                Matcher embedder(host_, nac, binding_);
                if (!embedder.run(nullptr, nullptr).empty()) return;
            }
        }
        results_.push_back(Match{binding_, state_map_, transition_map_});
    }
};

}  // namespace detail

// All embeddings of a pattern side into the model, extending `seed`.
// Deterministic: pattern elements are processed in declaration order, host
// candidates in document order, so matches come out in lexicographic order
// of the candidate choices.
inline std::vector<Match> find_embeddings(const Automaton& model, const PatternSide& side,
                                          const Binding& seed = {}) {
    detail::HostView host(model);
    return detail::Matcher(host, side, seed).run(nullptr, nullptr);
}

// All matches of a rule's LHS: embeddings that satisfy every where-constraint
// and admit no embedding of any NAC extending the binding. When the rule has
// transition object ids, each id is bound to the matched host transition,
// spelled `src-lbl>tgt`.
inline std::vector<Match> find_matches(const Automaton& model, const NormalizedRule& rule,
                                       const Binding& seed = {}) {
    detail::HostView host(model);
    std::vector<Match> matches =
        detail::Matcher(host, rule.lhs, seed).run(&rule.constraints, &rule.nacs);
    for (Match& m : matches) {
        for (const auto& [var, lhs_id] : rule.transition_ids) {
            const Transition& t =
                model.transitions[static_cast<std::size_t>(m.transition_map.at(lhs_id))];
            m.binding[var] = t.source + "-" + t.label + ">" + t.target;
        }
    }
    return matches;
}

}  // namespace hat
