#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hat/match.hpp"
#include "hat/model.hpp"
#include "hat/rules.hpp"

namespace hat {

// Rule application. apply_at performs a single rewrite at a given match;
// apply drives it with a strategy (once / fixpoint). Deletions follow the
// dangling condition: a match whose deletions would orphan transitions or
// unmatched substates is rejected rather than cascaded.

struct Strategy {
    enum class Kind { once, fixpoint };
    Kind kind = Kind::once;
    int max_iterations = 10000;  // fixpoint only

    static Strategy once() { return {Kind::once, 10000}; }
    static Strategy fixpoint(int max_iterations = 10000) {
        return {Kind::fixpoint, max_iterations};
    }
};

struct ApplyOutcome {
    std::optional<Automaton> model;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return model.has_value(); }
};

struct ApplicationRecord {
    std::string rule;
    Binding binding;
};

struct ApplyReport {
    int applications = 0;
    Automaton final_model;
    std::vector<ApplicationRecord> log;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return !has_errors(diagnostics); }
};

namespace detail {

class Rewriter {
public:
    Rewriter(const Automaton& model, const NormalizedRule& rule, const Match& match)
        : model_(model), rule_(rule), match_(match) {}

    ApplyOutcome run() {
        index_sides();
        if (!resolve_plan()) return {std::nullopt, std::move(diags_)};
        if (!check_dangling()) return {std::nullopt, std::move(diags_)};
        if (!check_collisions()) return {std::nullopt, std::move(diags_)};
        Automaton result = build();
        auto validation = validate(result);
        for (const Diagnostic& d : validation) {
            if (d.severity == Severity::error) {
                diags_.push_back(Diagnostic::make_error(
                    diag::post_invalid, "rewritten model failed validation: " + d.message));
            }
        }
        if (has_errors(diags_)) return {std::nullopt, std::move(diags_)};
        return {std::move(result), std::move(diags_)};
    }

private:
    const Automaton& model_;
    const NormalizedRule& rule_;
    const Match& match_;
    std::vector<Diagnostic> diags_;

    std::map<int, const PatternState*> lhs_states_, rhs_states_;
    std::map<int, const PatternTransition*> lhs_transitions_, rhs_transitions_;
    std::map<int, int> lhs_to_rhs_, rhs_to_lhs_;

    std::set<std::string> deleted_states_;     // host names
    std::set<int> deleted_transitions_;        // host indices
    std::map<std::string, std::string> renames_;          // host old name -> new name
    std::map<std::string, ModifierSet> modifier_updates_;  // host name -> final modifiers
    std::map<int, Transition> transition_updates_;         // host index -> final triple
    std::vector<std::string> created_names_;
    std::vector<Transition> created_transitions_;

    void index_sides() {
        for (const PatternStateRef& ref : pattern_states_of(rule_.lhs)) {
            lhs_states_.emplace(ref.state->id, ref.state);
        }
        for (const PatternStateRef& ref : pattern_states_of(rule_.rhs)) {
            rhs_states_.emplace(ref.state->id, ref.state);
        }
        for (const PatternTransition& t : rule_.lhs.transitions) {
            lhs_transitions_.emplace(t.id, &t);
        }
        for (const PatternTransition& t : rule_.rhs.transitions) {
            rhs_transitions_.emplace(t.id, &t);
        }
        for (auto [l, r] : rule_.correspondence) {
            lhs_to_rhs_.emplace(l, r);
            rhs_to_lhs_.emplace(r, l);
        }
    }

    std::optional<std::string> resolve(const Term& term) {
        if (!term.is_var()) return term.text;
        auto it = match_.binding.find(term.text);
        if (it != match_.binding.end()) return it->second;
        diags_.push_back(Diagnostic::make_error(
            diag::unbound_rhs_var, "schema variable $" + term.text + " has no binding"));
        return std::nullopt;
    }

    bool resolve_plan() {
        // Deletions: LHS elements without an RHS correspondent.
        for (const auto& [id, state] : lhs_states_) {
            if (!lhs_to_rhs_.count(id)) deleted_states_.insert(match_.state_map.at(id));
        }
        for (const auto& [id, t] : lhs_transitions_) {
            if (!lhs_to_rhs_.count(id)) deleted_transitions_.insert(match_.transition_map.at(id));
        }
        // Corresponded states: renames and modifier deltas.
        for (auto [l, r] : rule_.correspondence) {
            auto ls = lhs_states_.find(l);
            if (ls == lhs_states_.end()) continue;
            const PatternState& lhs_state = *ls->second;
            const PatternState& rhs_state = *rhs_states_.at(r);
            const std::string& host_name = match_.state_map.at(l);
            auto new_name = resolve(rhs_state.name);
            if (!new_name) return false;
            if (*new_name != host_name) renames_[host_name] = *new_name;
            const State* host = find_state(host_name);
            ModifierSet mods;
            // Left modifiers were required present by matching; they go away
            // unless the RHS restates them. Host extras survive untouched.
            mods.is_initial = rhs_state.modifiers.is_initial ||
                              (!lhs_state.modifiers.is_initial && host->modifiers.is_initial);
            mods.is_final = rhs_state.modifiers.is_final ||
                            (!lhs_state.modifiers.is_final && host->modifiers.is_final);
            modifier_updates_[host_name] = mods;
        }
        // Corresponded transitions: the RHS terms give the rewritten triple.
        for (auto [l, r] : rule_.correspondence) {
            auto lt = lhs_transitions_.find(l);
            if (lt == lhs_transitions_.end()) continue;
            const PatternTransition& rhs_t = *rhs_transitions_.at(r);
            auto source = resolve(rhs_t.source);
            auto label = resolve(rhs_t.label);
            auto target = resolve(rhs_t.target);
            if (!source || !label || !target) return false;
            transition_updates_[match_.transition_map.at(l)] = {*source, *label, *target};
        }
        // Created elements: resolve every name up front, nested ones included,
        // so the collision check sees them and build() cannot fail.
        bool ok = true;
        for_each_created_state([&](const PatternState& s, const std::string*) {
            collect_created_names(s, ok);
        });
        for (const PatternTransition& t : rule_.rhs.transitions) {
            if (rhs_to_lhs_.count(t.id)) continue;
            auto source = resolve(t.source);
            auto label = resolve(t.label);
            auto target = resolve(t.target);
            if (!source || !label || !target) return false;
            created_transitions_.push_back({*source, *label, *target});
        }
        return ok;
    }

    void collect_created_names(const PatternState& s, bool& ok) {
        if (auto name = resolve(s.name)) {
            created_names_.push_back(*name);
        } else {
            ok = false;
        }
        for (const PatternState& sub : s.substates) collect_created_names(sub, ok);
    }

    const State* find_state(const std::string& name) const {
        const State* found = nullptr;
        for_each_state(model_.top_states, [&](const State& s, const State*, int) {
            if (s.name == name) found = &s;
        });
        return found;
    }

    // Walks RHS states that have no correspondent, reporting each with the
    // host name of its insertion site (nullptr = model top level). Only roots
    // of created subtrees are reported; nested created states instantiate
    // with their parent.
    template <class Fn>
    void walk_created(const std::vector<PatternState>& states,
                      const std::string* site_host_name, Fn&& fn) {
        for (const PatternState& s : states) {
            if (rhs_to_lhs_.count(s.id)) {
                // Corresponded: its own host is the site for created children.
                const std::string& host = match_.state_map.at(rhs_to_lhs_.at(s.id));
                walk_created(s.substates, &host, fn);
            } else {
                fn(s, site_host_name);
            }
        }
    }

    template <class Fn>
    void for_each_created_state(Fn&& fn) {
        walk_created(rule_.rhs.states, nullptr, fn);
    }

    bool check_dangling() {
        for (const std::string& name : deleted_states_) {
            for (std::size_t i = 0; i < model_.transitions.size(); ++i) {
                const Transition& t = model_.transitions[i];
                if ((t.source == name || t.target == name) &&
                    !deleted_transitions_.count(static_cast<int>(i))) {
                    diags_.push_back(Diagnostic::make_error(
                        diag::dangling, "deleting state '" + name +
                                            "' would orphan transition " + t.source + " -" +
                                            t.label + "> " + t.target));
                    return false;
                }
            }
            const State* host = find_state(name);
            for (const State& sub : host->substates) {
                if (!deleted_states_.count(sub.name)) {
                    diags_.push_back(Diagnostic::make_error(
                        diag::dangling, "deleting state '" + name + "' would orphan substate '" +
                                            sub.name + "' not matched and deleted by the rule"));
                    return false;
                }
            }
        }
        return true;
    }

    bool check_collisions() {
        std::map<std::string, int> final_names;
        for_each_state(model_.top_states, [&](const State& s, const State*, int) {
            if (deleted_states_.count(s.name)) return;
            auto it = renames_.find(s.name);
            final_names[it != renames_.end() ? it->second : s.name] += 1;
        });
        for (const std::string& name : created_names_) final_names[name] += 1;
        for (const auto& [name, count] : final_names) {
            if (count > 1) {
                diags_.push_back(Diagnostic::make_error(
                    diag::name_collision,
                    "rewrite would produce " + std::to_string(count) + " states named '" + name +
                        "'"));
                return false;
            }
        }
        return true;
    }

    std::string final_name(const std::string& original) const {
        auto it = renames_.find(original);
        return it != renames_.end() ? it->second : original;
    }

    State instantiate(const PatternState& pattern) {
        State out;
        out.name = *resolve(pattern.name);  // resolved already during planning
        out.modifiers = pattern.modifiers;
        for (const PatternState& sub : pattern.substates) {
            out.substates.push_back(instantiate(sub));
        }
        return out;
    }

    void copy_states(const std::vector<State>& source, std::vector<State>& out) {
        for (const State& s : source) {
            if (deleted_states_.count(s.name)) continue;
            State copy;
            copy.name = final_name(s.name);
            auto mods = modifier_updates_.find(s.name);
            copy.modifiers = mods != modifier_updates_.end() ? mods->second : s.modifiers;
            copy_states(s.substates, copy.substates);
            out.push_back(std::move(copy));
        }
    }

    // Appends created states beneath their (possibly renamed) site.
    void insert_created(std::vector<State>& top) {
        for_each_created_state([&](const PatternState& pattern, const std::string* site) {
            State created = instantiate(pattern);
            if (!site) {
                top.push_back(std::move(created));
                return;
            }
            std::string site_name = final_name(*site);
            State* host = find_mutable(top, site_name);
            host->substates.push_back(std::move(created));
        });
    }

    static State* find_mutable(std::vector<State>& states, const std::string& name) {
        for (State& s : states) {
            if (s.name == name) return &s;
            if (State* found = find_mutable(s.substates, name)) return found;
        }
        return nullptr;
    }

    Automaton build() {
        Automaton out;
        copy_states(model_.top_states, out.top_states);
        insert_created(out.top_states);

        auto push_unique = [&](Transition t) {
            for (const Transition& existing : out.transitions) {
                if (existing == t) return;  // set semantics on the triple
            }
            out.transitions.push_back(std::move(t));
        };
        for (std::size_t i = 0; i < model_.transitions.size(); ++i) {
            int idx = static_cast<int>(i);
            if (deleted_transitions_.count(idx)) continue;
            Transition t;
            auto updated = transition_updates_.find(idx);
            t = updated != transition_updates_.end() ? updated->second : model_.transitions[i];
            // Renames follow the state, for matched and unmatched transitions
            // alike.
            t.source = final_name(t.source);
            t.target = final_name(t.target);
            push_unique(std::move(t));
        }
        for (Transition t : created_transitions_) {
            t.source = final_name(t.source);
            t.target = final_name(t.target);
            push_unique(std::move(t));
        }
        return out;
    }
};

}  // namespace detail

// Applies `rule` at `match` (which must come from find_matches on this model
// and rule). The result preserves all host content outside the match.
inline ApplyOutcome apply_at(const Automaton& model, const NormalizedRule& rule,
                             const Match& match) {
    return detail::Rewriter(model, rule, match).run();
}

// Strategy driver. `once` applies at the first match in canonical order;
// `fixpoint` reapplies until no match remains, skipping matches whose
// application errors (DANGLING and friends). A round where every match
// errors stops the loop with an ALL_MATCHES_BLOCKED warning; running out of
// the iteration budget with matches left is MAX_ITER_EXCEEDED.
inline ApplyReport apply(const Automaton& model, const NormalizedRule& rule,
                         const Strategy& strategy) {
    ApplyReport report;
    report.final_model = model;
    if (strategy.kind == Strategy::Kind::once) {
        std::vector<Match> matches = find_matches(report.final_model, rule);
        if (matches.empty()) return report;
        ApplyOutcome outcome = apply_at(report.final_model, rule, matches.front());
        for (auto& d : outcome.diagnostics) report.diagnostics.push_back(std::move(d));
        if (!outcome.ok()) return report;
        report.final_model = std::move(*outcome.model);
        report.applications = 1;
        report.log.push_back({rule.name, matches.front().binding});
        return report;
    }
    while (true) {
        std::vector<Match> matches = find_matches(report.final_model, rule);
        if (matches.empty()) return report;
        if (report.applications >= strategy.max_iterations) {
            report.diagnostics.push_back(Diagnostic::make_error(
                diag::max_iter_exceeded,
                "fixpoint did not terminate within " +
                    std::to_string(strategy.max_iterations) + " iterations"));
            return report;
        }
        bool applied = false;
        for (const Match& m : matches) {
            ApplyOutcome outcome = apply_at(report.final_model, rule, m);
            if (!outcome.ok()) continue;
            report.final_model = std::move(*outcome.model);
            report.applications += 1;
            report.log.push_back({rule.name, m.binding});
            applied = true;
            break;
        }
        if (!applied) {
            report.diagnostics.push_back(Diagnostic::make_warning(
                diag::all_matches_blocked,
                "every remaining match fails to apply; stopping after " +
                    std::to_string(report.applications) + " application(s)"));
            return report;
        }
    }
}

}  // namespace hat
