#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hat/lexer.hpp"
#include "hat/model.hpp"

namespace hat {

// Transformation rules in the model's own concrete syntax. Rule files hold
// named `rule <name> { ... }` blocks; inside a block the model grammar is
// extended with:
//
//   * schema variables `$x` at every identifier position,
//   * replacements `[[ left :- right ]]` at name positions, inside modifier
//     lists, and around whole elements (integrated notation),
//   * `match { ... } replace { ... }` blocks (separated notation), where
//     transitions can carry object ids: `Transition $T [[ a -x> b; ]]`,
//   * `not { ... }` negative application conditions,
//   * `where $a == $b, $a != c;` constraints.
//
// A parsed Rule is normalized into LHS/RHS pattern sides plus an element
// correspondence; both notations of the same rule normalize to the same
// NormalizedRule.

enum class TermKind { fixed, variable };

// A name position after replacement resolution: a fixed identifier or a
// schema variable (spelled without the '$').
struct Term {
    TermKind kind = TermKind::fixed;
    std::string text;

    static Term fixed(std::string t) { return {TermKind::fixed, std::move(t)}; }
    static Term var(std::string t) { return {TermKind::variable, std::move(t)}; }

    bool is_var() const { return kind == TermKind::variable; }
    std::string display() const { return is_var() ? "$" + text : text; }

    friend bool operator==(const Term&, const Term&) = default;
    friend auto operator<=>(const Term&, const Term&) = default;
};

// ---------------------------------------------------------------------------
// Raw rule AST (parse_rules output)
// ---------------------------------------------------------------------------

struct NameTerm {
    bool is_replacement = false;
    Term simple;                        // when !is_replacement
    std::optional<Term> left, right;    // when is_replacement
    SourcePos pos;

    const std::optional<Term> side(bool lhs) const {
        if (!is_replacement) return simple;
        return lhs ? left : right;
    }
};

struct ModifierReplacement {
    ModifierSet left, right;
};

struct PatternModifiers {
    ModifierSet plain;
    std::vector<ModifierReplacement> replacements;

    ModifierSet project(bool lhs) const {
        ModifierSet out = plain;
        for (const auto& r : replacements) {
            const ModifierSet& s = lhs ? r.left : r.right;
            out.is_initial |= s.is_initial;
            out.is_final |= s.is_final;
        }
        return out;
    }
};

// Whole-element replacement marks: `[[ element :- ]]` deletes, `[[ :- element ]]`
// creates. deleted/created are mutually exclusive by construction.
enum class ElementMark { none, delete_only, create_only };

struct StatePattern {
    int seq = 0;  // source order within the containing block
    NameTerm name;
    PatternModifiers modifiers;
    std::vector<StatePattern> substates;
    ElementMark mark = ElementMark::none;
    SourcePos pos;
};

struct TransitionPattern {
    int seq = 0;
    std::optional<std::string> id_var;  // `$T`, separated notation only
    NameTerm source, label, target;
    ElementMark mark = ElementMark::none;
    SourcePos pos;
};

struct PatternBlock {
    std::vector<StatePattern> states;            // forest, nesting preserved
    std::vector<TransitionPattern> transitions;  // source order via seq

    bool empty() const { return states.empty() && transitions.empty(); }
};

struct WhereConstraint {
    Term left;
    bool expect_equal = true;  // false for !=
    Term right;
    SourcePos pos;
};

struct Rule {
    std::string name;
    bool separated = false;
    PatternBlock elements;       // integrated notation
    PatternBlock match_block;    // separated notation
    PatternBlock replace_block;
    std::vector<PatternBlock> nacs;
    std::vector<WhereConstraint> where_clauses;
    SourcePos pos;

    std::size_t element_count() const {
        const PatternBlock& b = separated ? match_block : elements;
        return b.states.size() + b.transitions.size();
    }
};

struct ParseRulesResult {
    std::optional<std::vector<Rule>> rules;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return rules.has_value(); }

    const Rule* find(std::string_view name) const {
        if (!rules) return nullptr;
        for (const Rule& r : *rules) {
            if (r.name == name) return &r;
        }
        return nullptr;
    }
};

namespace detail {

class RuleParser : TokenCursor {
public:
    RuleParser(std::vector<Token> tokens, std::vector<Diagnostic> diagnostics)
        : TokenCursor(std::move(tokens), std::move(diagnostics)) {}

    ParseRulesResult run() {
        std::vector<Rule> rules;
        try {
            while (!at(TokenKind::end_of_input)) {
                rules.push_back(parse_rule());
            }
        } catch (const ParseAbort&) {
            return {std::nullopt, take_diagnostics()};
        }
        auto diagnostics = take_diagnostics();
        if (has_errors(diagnostics)) return {std::nullopt, std::move(diagnostics)};
        return {std::move(rules), std::move(diagnostics)};
    }

private:
    // Where a pattern element is being parsed; replacements are legal only in
    // the integrated rule body.
    enum class Ctx { integrated, sep_block, nac };

    int next_seq_ = 0;
    bool in_replacement_ = false;
    std::set<std::string> rule_names_;

    [[noreturn]] void fail_replacement(Ctx ctx, SourcePos pos) {
        if (ctx == Ctx::sep_block) {
            fail(diag::mixed_form, "replacements are not allowed inside match/replace blocks",
                 pos);
        }
        fail(diag::syntax_error, "replacements are not allowed inside 'not' blocks", pos);
    }

    Rule parse_rule() {
        SourcePos pos = peek().pos;
        if (!at_word("rule")) {
            fail(diag::syntax_error, "expected 'rule', found " + token_kind_name(peek().kind),
                 peek().pos);
        }
        take();
        Rule rule;
        rule.pos = pos;
        rule.name = expect(TokenKind::ident, "rule name").text;
        if (!rule_names_.insert(rule.name).second) {
            fail(diag::dup_rule, "duplicate rule name '" + rule.name + "'", pos);
        }
        expect(TokenKind::lbrace, "'{'");
        next_seq_ = 0;
        bool saw_integrated = false;
        while (!at(TokenKind::rbrace)) {
            if (at(TokenKind::end_of_input)) {
                fail(diag::syntax_error, "expected '}' before end of input", peek().pos);
            }
            if (at_word("not") && peek(1).kind == TokenKind::lbrace) {
                rule.nacs.push_back(parse_nac());
                continue;
            }
            if (at_word("where") && peek(1).kind != TokenKind::dash) {
                parse_where(rule.where_clauses);
                continue;
            }
            if (at_word("match") && peek(1).kind == TokenKind::lbrace) {
                if (saw_integrated) {
                    fail(diag::mixed_form,
                         "rule '" + rule.name +
                             "' mixes integrated pattern elements with match/replace blocks",
                         peek().pos);
                }
                if (rule.separated) {
                    fail(diag::syntax_error, "rule has more than one match/replace pair",
                         peek().pos);
                }
                rule.separated = true;
                take();
                expect(TokenKind::lbrace, "'{'");
                next_seq_ = 0;
                parse_block_elements(rule.match_block, Ctx::sep_block);
                expect(TokenKind::rbrace, "'}'");
                if (!at_word("replace")) {
                    fail(diag::syntax_error, "expected 'replace' after match block", peek().pos);
                }
                take();
                expect(TokenKind::lbrace, "'{'");
                next_seq_ = 0;
                parse_block_elements(rule.replace_block, Ctx::sep_block);
                expect(TokenKind::rbrace, "'}'");
                continue;
            }
            if (rule.separated) {
                fail(diag::mixed_form,
                     "rule '" + rule.name +
                         "' mixes integrated pattern elements with match/replace blocks",
                     peek().pos);
            }
            saw_integrated = true;
            parse_element(rule.elements.states, rule.elements, Ctx::integrated);
        }
        take();
        return rule;
    }

    PatternBlock parse_nac() {
        take();  // not
        expect(TokenKind::lbrace, "'{'");
        PatternBlock block;
        int saved = next_seq_;
        next_seq_ = 0;
        while (!at(TokenKind::rbrace)) {
            if (at(TokenKind::end_of_input)) {
                fail(diag::syntax_error, "expected '}' before end of input", peek().pos);
            }
            parse_element(block.states, block, Ctx::nac);
        }
        take();
        next_seq_ = saved;
        return block;
    }

    void parse_where(std::vector<WhereConstraint>& out) {
        take();  // where
        while (true) {
            WhereConstraint c;
            c.pos = peek().pos;
            c.left = parse_simple_term("constraint operand");
            if (at(TokenKind::eq)) {
                c.expect_equal = true;
            } else if (at(TokenKind::neq)) {
                c.expect_equal = false;
            } else {
                fail(diag::syntax_error,
                     "expected '==' or '!=', found " + token_kind_name(peek().kind), peek().pos);
            }
            take();
            c.right = parse_simple_term("constraint operand");
            out.push_back(std::move(c));
            if (at(TokenKind::comma)) {
                take();
                continue;
            }
            break;
        }
        expect(TokenKind::semicolon, "';'");
    }

    Term parse_simple_term(std::string_view what) {
        if (at(TokenKind::variable)) return Term::var(take().text);
        return Term::fixed(expect(TokenKind::ident, what).text);
    }

    void parse_block_elements(PatternBlock& block, Ctx ctx) {
        while (!at(TokenKind::rbrace)) {
            if (at(TokenKind::end_of_input)) {
                fail(diag::syntax_error, "expected '}' before end of input", peek().pos);
            }
            parse_element(block.states, block, ctx);
        }
    }

    // One pattern element at the current position. Nested transitions land in
    // the enclosing block's global transition list, like in model files.
    // A '[[' at element position opens a whole-element replacement unless the
    // bracket holds a bare `term? :- term?` followed by '-', in which case it
    // is the replaced source of a transition: `[[ a :- b ]] -x> c;`.
    bool replacement_starts_transition() const {
        std::size_t i = 1;
        auto kind = [&](std::size_t off) { return peek(off).kind; };
        if (kind(i) == TokenKind::ident || kind(i) == TokenKind::variable) ++i;
        if (kind(i) != TokenKind::repl_sep) return false;
        ++i;
        if (kind(i) == TokenKind::ident || kind(i) == TokenKind::variable) ++i;
        if (kind(i) != TokenKind::repl_close) return false;
        return kind(i + 1) == TokenKind::dash;
    }

    void parse_element(std::vector<StatePattern>& siblings, PatternBlock& block, Ctx ctx) {
        if (at(TokenKind::repl_open)) {
            if (in_replacement_) {
                fail(diag::nested_repl, "nested replacement", peek().pos);
            }
            if (ctx != Ctx::integrated) fail_replacement(ctx, peek().pos);
            if (replacement_starts_transition()) {
                block.transitions.push_back(parse_transition(peek().pos, ctx));
            } else {
                parse_whole_element_replacement(siblings, block);
            }
            return;
        }
        if (at_word("state")) {
            SourcePos pos = peek().pos;
            take();
            siblings.push_back(parse_state_tail(block, pos, ctx));
            return;
        }
        if (at_word("Transition") && peek(1).kind == TokenKind::variable) {
            if (ctx != Ctx::sep_block) {
                fail(diag::syntax_error,
                     "'Transition $id [[ ... ]]' is only allowed inside match/replace blocks",
                     peek().pos);
            }
            SourcePos pos = peek().pos;
            take();
            std::string id = take().text;
            expect(TokenKind::repl_open, "'[['");
            bool saved = in_replacement_;
            in_replacement_ = true;
            TransitionPattern t = parse_transition(pos, ctx);
            in_replacement_ = saved;
            expect(TokenKind::repl_close, "']]'");
            t.id_var = std::move(id);
            block.transitions.push_back(std::move(t));
            return;
        }
        if (at(TokenKind::ident) || at(TokenKind::variable)) {
            block.transitions.push_back(parse_transition(peek().pos, ctx));
            return;
        }
        fail(diag::syntax_error,
             "expected pattern element, found " + token_kind_name(peek().kind), peek().pos);
    }

    // `state` already consumed.
    StatePattern parse_state_tail(PatternBlock& block, SourcePos pos, Ctx ctx) {
        StatePattern state;
        state.pos = pos;
        state.seq = next_seq_++;
        state.name = parse_name_term("state name", ctx);
        if (at(TokenKind::mod_open)) state.modifiers = parse_pattern_modifiers(ctx);
        if (at(TokenKind::semicolon)) {
            take();
        } else if (at(TokenKind::lbrace)) {
            take();
            while (!at(TokenKind::rbrace)) {
                if (at(TokenKind::end_of_input)) {
                    fail(diag::syntax_error, "expected '}' before end of input", peek().pos);
                }
                parse_element(state.substates, block, ctx);
            }
            take();
        } else {
            fail(diag::syntax_error,
                 "expected ';' or '{' after state declaration, found " +
                     token_kind_name(peek().kind),
                 peek().pos);
        }
        return state;
    }

    TransitionPattern parse_transition(SourcePos pos, Ctx ctx) {
        TransitionPattern t;
        t.pos = pos;
        t.seq = next_seq_++;
        t.source = parse_name_term("transition source", ctx);
        expect(TokenKind::dash, "'-'");
        t.label = parse_name_term("transition label", ctx);
        expect(TokenKind::gt, "'>'");
        t.target = parse_name_term("transition target", ctx);
        expect(TokenKind::semicolon, "';'");
        return t;
    }

    NameTerm parse_name_term(std::string_view what, Ctx ctx) {
        NameTerm name;
        name.pos = peek().pos;
        if (at(TokenKind::repl_open)) {
            if (in_replacement_) {
                fail(diag::nested_repl, "nested replacement", peek().pos);
            }
            if (ctx != Ctx::integrated) fail_replacement(ctx, peek().pos);
            take();
            name.is_replacement = true;
            in_replacement_ = true;
            if (!at(TokenKind::repl_sep)) name.left = parse_replacement_side(what);
            expect(TokenKind::repl_sep, "':-'");
            if (!at(TokenKind::repl_close)) name.right = parse_replacement_side(what);
            expect(TokenKind::repl_close, "']]'");
            in_replacement_ = false;
            if (!name.left && !name.right) {
                fail(diag::syntax_error, "replacement with both sides empty", name.pos);
            }
            return name;
        }
        name.simple = parse_simple_term(what);
        return name;
    }

    Term parse_replacement_side(std::string_view what) {
        if (at(TokenKind::repl_open)) {
            fail(diag::nested_repl, "nested replacement", peek().pos);
        }
        return parse_simple_term(what);
    }

    PatternModifiers parse_pattern_modifiers(Ctx ctx) {
        PatternModifiers mods;
        expect(TokenKind::mod_open, "'<<'");
        while (!at(TokenKind::mod_close)) {
            if (at(TokenKind::repl_open)) {
                if (in_replacement_) {
                    fail(diag::nested_repl, "nested replacement", peek().pos);
                }
                if (ctx != Ctx::integrated) fail_replacement(ctx, peek().pos);
                take();
                ModifierReplacement r;
                r.left = parse_modifier_set(TokenKind::repl_sep);
                expect(TokenKind::repl_sep, "':-'");
                r.right = parse_modifier_set(TokenKind::repl_close);
                expect(TokenKind::repl_close, "']]'");
                mods.replacements.push_back(r);
                continue;
            }
            apply_modifier_word(mods.plain);
        }
        take();
        return mods;
    }

    ModifierSet parse_modifier_set(TokenKind stop) {
        ModifierSet set;
        while (!at(stop)) apply_modifier_word(set);
        return set;
    }

    void apply_modifier_word(ModifierSet& set) {
        const Token& tok = peek();
        bool* flag = nullptr;
        if (tok.is_word("initial")) flag = &set.is_initial;
        else if (tok.is_word("final")) flag = &set.is_final;
        else {
            fail(diag::syntax_error,
                 "expected 'initial' or 'final', found " + token_kind_name(tok.kind), tok.pos);
        }
        if (*flag) {
            warn(diag::dup_modifier, "duplicate modifier '" + tok.text + "' collapsed", tok.pos);
        }
        *flag = true;
        take();
    }

    // `[[ element :- ]]` (deletion) or `[[ :- element ]]` (creation). The mark
    // covers the bracketed element and any transitions hoisted out of its
    // body.
    void parse_whole_element_replacement(std::vector<StatePattern>& siblings,
                                         PatternBlock& block) {
        take();
        bool saved = in_replacement_;
        in_replacement_ = true;
        ElementMark mark;
        if (at(TokenKind::repl_sep)) {
            take();
            mark = ElementMark::create_only;
        } else {
            mark = ElementMark::delete_only;
        }
        std::size_t state_count = siblings.size();
        std::size_t transition_count = block.transitions.size();
        parse_element(siblings, block, Ctx::integrated);
        for (std::size_t i = state_count; i < siblings.size(); ++i) siblings[i].mark = mark;
        for (std::size_t i = transition_count; i < block.transitions.size(); ++i) {
            block.transitions[i].mark = mark;
        }
        if (mark == ElementMark::delete_only) {
            expect(TokenKind::repl_sep, "':-'");
            if (!at(TokenKind::repl_close)) {
                fail(diag::syntax_error,
                     "whole-element replacement must leave one side empty", peek().pos);
            }
        }
        expect(TokenKind::repl_close, "']]'");
        in_replacement_ = saved;
    }
};

}  // namespace detail

// Parses a rule file; one Rule per `rule` block, in source order.
inline ParseRulesResult parse_rules(std::string_view text) {
    LexResult lexed = lex(text);
    if (!lexed.ok()) return {std::nullopt, std::move(lexed.diagnostics)};
    return detail::RuleParser(std::move(lexed.tokens), std::move(lexed.diagnostics)).run();
}

// ---------------------------------------------------------------------------
// Normalized rules
// ---------------------------------------------------------------------------

struct PatternState {
    int id = 0;
    Term name;
    ModifierSet modifiers;
    std::vector<PatternState> substates;

    friend bool operator==(const PatternState&, const PatternState&) = default;
};

struct PatternTransition {
    int id = 0;
    Term source, label, target;

    friend bool operator==(const PatternTransition&, const PatternTransition&) = default;
};

struct PatternSide {
    std::vector<PatternState> states;
    std::vector<PatternTransition> transitions;

    bool empty() const { return states.empty() && transitions.empty(); }
    friend bool operator==(const PatternSide&, const PatternSide&) = default;
};

struct Constraint {
    Term left;
    bool expect_equal = true;
    Term right;

    friend bool operator==(const Constraint&, const Constraint&) = default;
};

// LHS/RHS pattern sides with an element correspondence. Element ids are
// dense per side, numbered 0..n-1 in source order; correspondence pairs
// (lhs id, rhs id) cover exactly the elements present on both sides.
struct NormalizedRule {
    std::string name;
    PatternSide lhs, rhs;
    std::vector<std::pair<int, int>> correspondence;
    std::vector<PatternSide> nacs;
    std::vector<Constraint> constraints;
    std::map<std::string, int> transition_ids;  // object id var -> lhs transition id
};

// Equality of the transformation denoted, ignoring rule names and object-id
// labels (those only exist to pin correspondence in the separated notation).
inline bool same_transformation(const NormalizedRule& a, const NormalizedRule& b) {
    return a.lhs == b.lhs && a.rhs == b.rhs && a.correspondence == b.correspondence &&
           a.nacs == b.nacs && a.constraints == b.constraints;
}

struct NormalizeResult {
    std::optional<NormalizedRule> rule;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return rule.has_value(); }
};

// Flattened views over a pattern side, in id order.
struct PatternStateRef {
    const PatternState* state = nullptr;
    int parent_id = -1;  // -1 = top level of the pattern
};

inline void collect_pattern_states(const std::vector<PatternState>& states, int parent_id,
                                   std::vector<PatternStateRef>& out) {
    for (const PatternState& s : states) {
        out.push_back({&s, parent_id});
        collect_pattern_states(s.substates, s.id, out);
    }
}

inline std::vector<PatternStateRef> pattern_states_of(const PatternSide& side) {
    std::vector<PatternStateRef> out;
    collect_pattern_states(side.states, -1, out);
    return out;
}

template <class Fn>
void for_each_pattern_term(const PatternSide& side, Fn&& fn) {
    std::vector<PatternStateRef> states = pattern_states_of(side);
    for (const auto& ref : states) fn(ref.state->name);
    for (const PatternTransition& t : side.transitions) {
        fn(t.source);
        fn(t.label);
        fn(t.target);
    }
}

namespace detail {

class Normalizer {
public:
    explicit Normalizer(const Rule& rule) : rule_(rule) {}

    NormalizeResult run() {
        NormalizedRule out;
        out.name = rule_.name;
        if (rule_.separated) {
            build_separated(out);
        } else {
            build_integrated(out);
        }
        if (has_errors(diags_)) return {std::nullopt, std::move(diags_)};
        for (const PatternBlock& nac : rule_.nacs) {
            PatternSide side = build_plain(nac);
            renumber(side);
            out.nacs.push_back(std::move(side));
        }
        for (const WhereConstraint& w : rule_.where_clauses) {
            out.constraints.push_back({w.left, w.expect_equal, w.right});
        }
        check_variables(out);
        if (has_errors(diags_)) return {std::nullopt, std::move(diags_)};
        return {std::move(out), std::move(diags_)};
    }

private:
    const Rule& rule_;
    std::vector<Diagnostic> diags_;

    void error(std::string code, std::string message, SourcePos pos) {
        diags_.push_back(Diagnostic::make_error(std::move(code), std::move(message), pos));
    }

    // --- integrated notation ---

    void build_integrated(NormalizedRule& out) {
        std::set<int> lhs_seqs, rhs_seqs;
        project_block(rule_.elements, /*lhs=*/true, out.lhs, lhs_seqs);
        project_block(rule_.elements, /*lhs=*/false, out.rhs, rhs_seqs);
        if (has_errors(diags_)) return;
        std::vector<std::pair<int, int>> corr;
        for (int seq : lhs_seqs) {
            if (rhs_seqs.count(seq)) corr.emplace_back(seq, seq);
        }
        finish(out, std::move(corr), {});
    }

    static bool state_present(const StatePattern& sp, bool lhs, ElementMark inherited) {
        ElementMark mark = sp.mark != ElementMark::none ? sp.mark : inherited;
        if (mark == ElementMark::delete_only) return lhs;
        if (mark == ElementMark::create_only) return !lhs;
        return sp.name.side(lhs).has_value();
    }

    void project_block(const PatternBlock& block, bool lhs, PatternSide& side,
                       std::set<int>& seqs) {
        for (const StatePattern& s : block.states) {
            if (auto projected = project_state(s, lhs, seqs, ElementMark::none)) {
                side.states.push_back(std::move(*projected));
            }
        }
        for (const TransitionPattern& t : block.transitions) {
            if (auto projected = project_transition(t, lhs)) {
                seqs.insert(t.seq);
                side.transitions.push_back(std::move(*projected));
            }
        }
    }

    // A whole-element mark covers the entire subtree, so substates of a
    // deleted/created element are one-sided with it.
    std::optional<PatternState> project_state(const StatePattern& sp, bool lhs,
                                              std::set<int>& seqs, ElementMark inherited) {
        ElementMark mark = sp.mark != ElementMark::none ? sp.mark : inherited;
        if (!state_present(sp, lhs, inherited)) {
            if (mark == ElementMark::none) require_absent(sp, lhs);
            return std::nullopt;
        }
        seqs.insert(sp.seq);
        PatternState out;
        out.id = sp.seq;
        out.name = *sp.name.side(lhs);
        out.modifiers = sp.modifiers.project(lhs);
        for (const StatePattern& sub : sp.substates) {
            if (auto projected = project_state(sub, lhs, seqs, mark)) {
                out.substates.push_back(std::move(*projected));
            }
        }
        return out;
    }

    // An element absent from one side via a name replacement may not carry
    // content on that side: `state [[ :- p ]] <<initial>>;` has nowhere to
    // require `initial` on the LHS.
    void require_absent(const StatePattern& sp, bool lhs) {
        const char* side_name = lhs ? "LHS" : "RHS";
        if (!sp.modifiers.project(lhs).empty()) {
            error(diag::bad_projection,
                  std::string("element absent from the ") + side_name +
                      " still carries modifiers there",
                  sp.pos);
        }
        for (const StatePattern& sub : sp.substates) {
            if (state_present(sub, lhs, ElementMark::none)) {
                error(diag::bad_projection,
                      std::string("substate of an element absent from the ") + side_name +
                          " would be orphaned there",
                      sub.pos);
            } else if (sub.mark == ElementMark::none) {
                require_absent(sub, lhs);
            }
        }
    }

    std::optional<PatternTransition> project_transition(const TransitionPattern& tp, bool lhs) {
        if (tp.mark == ElementMark::delete_only && !lhs) return std::nullopt;
        if (tp.mark == ElementMark::create_only && lhs) return std::nullopt;
        auto source = tp.source.side(lhs);
        auto label = tp.label.side(lhs);
        auto target = tp.target.side(lhs);
        int present = (source ? 1 : 0) + (label ? 1 : 0) + (target ? 1 : 0);
        if (present == 0) return std::nullopt;
        if (present < 3) {
            error(diag::bad_projection,
                  std::string("transition is only partially present on the ") +
                      (lhs ? "LHS" : "RHS"),
                  tp.pos);
            return std::nullopt;
        }
        PatternTransition out;
        out.id = tp.seq;
        out.source = *source;
        out.label = *label;
        out.target = *target;
        return out;
    }

    // --- separated notation ---

    void build_separated(NormalizedRule& out) {
        out.lhs = build_plain(rule_.match_block);
        out.rhs = build_plain(rule_.replace_block);
        std::vector<std::pair<int, int>> corr;
        std::map<std::string, int> transition_ids;
        pair_states(out, corr);
        pair_transitions(out, corr, transition_ids);
        if (has_errors(diags_)) return;
        finish(out, std::move(corr), std::move(transition_ids));
    }

    PatternSide build_plain(const PatternBlock& block) {
        PatternSide side;
        side.states.reserve(block.states.size());
        for (const StatePattern& s : block.states) side.states.push_back(plain_state(s));
        for (const TransitionPattern& t : block.transitions) {
            PatternTransition pt;
            pt.id = t.seq;
            pt.source = t.source.simple;
            pt.label = t.label.simple;
            pt.target = t.target.simple;
            side.transitions.push_back(std::move(pt));
        }
        return side;
    }

    PatternState plain_state(const StatePattern& sp) {
        PatternState out;
        out.id = sp.seq;
        out.name = sp.name.simple;
        out.modifiers = sp.modifiers.plain;
        for (const StatePattern& sub : sp.substates) out.substates.push_back(plain_state(sub));
        return out;
    }

    void pair_states(NormalizedRule& out, std::vector<std::pair<int, int>>& corr) {
        // States correspond across match/replace by equal name term; the
        // correspondence must preserve nesting.
        struct Entry {
            int id;
            std::optional<Term> parent;
        };
        auto index_side = [&](const PatternSide& side) {
            std::map<Term, Entry> by_term;
            bool ok = true;
            std::vector<PatternStateRef> refs = pattern_states_of(side);
            std::map<int, Term> term_of;
            for (const auto& ref : refs) term_of.emplace(ref.state->id, ref.state->name);
            for (const auto& ref : refs) {
                std::optional<Term> parent;
                if (ref.parent_id >= 0) parent = term_of.at(ref.parent_id);
                auto [it, inserted] =
                    by_term.emplace(ref.state->name, Entry{ref.state->id, parent});
                if (!inserted) {
                    error(diag::ambiguous_correspondence,
                          "state pattern " + ref.state->name.display() +
                              " appears more than once in one block",
                          rule_.pos);
                    ok = false;
                }
            }
            return std::pair(by_term, ok);
        };
        auto [lhs_index, lhs_ok] = index_side(out.lhs);
        auto [rhs_index, rhs_ok] = index_side(out.rhs);
        if (!lhs_ok || !rhs_ok) return;
        for (const auto& [term, lhs_entry] : lhs_index) {
            auto it = rhs_index.find(term);
            if (it == rhs_index.end()) continue;
            if (lhs_entry.parent != it->second.parent) {
                error(diag::ambiguous_correspondence,
                      "state pattern " + term.display() +
                          " sits under different parents in match and replace blocks",
                      rule_.pos);
                continue;
            }
            corr.emplace_back(lhs_entry.id, it->second.id);
        }
    }

    void pair_transitions(NormalizedRule& out, std::vector<std::pair<int, int>>& corr,
                          std::map<std::string, int>& transition_ids) {
        std::map<std::string, int> lhs_ids, rhs_ids;
        auto index_ids = [&](const PatternBlock& block, std::map<std::string, int>& ids) {
            for (const TransitionPattern& t : block.transitions) {
                if (!t.id_var) continue;
                if (!ids.emplace(*t.id_var, t.seq).second) {
                    error(diag::ambiguous_correspondence,
                          "transition id $" + *t.id_var + " used more than once in one block",
                          t.pos);
                }
            }
        };
        index_ids(rule_.match_block, lhs_ids);
        index_ids(rule_.replace_block, rhs_ids);
        for (const auto& [var, lhs_seq] : lhs_ids) {
            transition_ids.emplace(var, lhs_seq);
            auto it = rhs_ids.find(var);
            if (it != rhs_ids.end()) corr.emplace_back(lhs_seq, it->second);
        }
        // Unnamed transitions pair by structural equality of their terms.
        auto key_of = [](const PatternTransition& t) {
            return t.source.display() + " -" + t.label.display() + "> " + t.target.display();
        };
        auto group_unnamed = [&](const PatternBlock& block, const PatternSide& side) {
            std::map<std::string, std::vector<int>> groups;
            std::set<int> named;
            for (const TransitionPattern& t : block.transitions) {
                if (t.id_var) named.insert(t.seq);
            }
            for (const PatternTransition& t : side.transitions) {
                if (!named.count(t.id)) groups[key_of(t)].push_back(t.id);
            }
            return groups;
        };
        auto lhs_groups = group_unnamed(rule_.match_block, out.lhs);
        auto rhs_groups = group_unnamed(rule_.replace_block, out.rhs);
        for (const auto& [key, lhs_list] : lhs_groups) {
            auto it = rhs_groups.find(key);
            if (it == rhs_groups.end()) continue;  // deleted
            const auto& rhs_list = it->second;
            if (lhs_list.size() > 1 || rhs_list.size() > 1) {
                error(diag::ambiguous_correspondence,
                      "cannot pair transitions '" + key +
                          "' across match/replace blocks; give them object ids",
                      rule_.pos);
                continue;
            }
            corr.emplace_back(lhs_list.front(), rhs_list.front());
        }
    }

    // --- shared finishing passes ---

    static void collect_mutable_states(std::vector<PatternState>& states,
                                       std::vector<PatternState*>& out) {
        for (PatternState& s : states) {
            out.push_back(&s);
            collect_mutable_states(s.substates, out);
        }
    }

    // Renumbers element ids densely, 0..n-1 in source order.
    static void renumber(PatternSide& side, std::map<int, int>* remap_out = nullptr) {
        std::vector<PatternState*> states;
        collect_mutable_states(side.states, states);
        std::vector<std::pair<int, void*>> order;  // (old id, element)
        for (PatternState* s : states) order.emplace_back(s->id, s);
        for (PatternTransition& t : side.transitions) order.emplace_back(t.id, &t);
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::map<int, int> remap;
        std::set<void*> state_set(states.begin(), states.end());
        int next = 0;
        for (auto& [old_id, ptr] : order) {
            remap[old_id] = next;
            if (state_set.count(ptr)) {
                static_cast<PatternState*>(ptr)->id = next;
            } else {
                static_cast<PatternTransition*>(ptr)->id = next;
            }
            ++next;
        }
        if (remap_out) *remap_out = std::move(remap);
    }

    void finish(NormalizedRule& out, std::vector<std::pair<int, int>> corr,
                std::map<std::string, int> transition_ids) {
        std::map<int, int> lhs_remap, rhs_remap;
        renumber(out.lhs, &lhs_remap);
        renumber(out.rhs, &rhs_remap);
        for (auto& [l, r] : corr) {
            l = lhs_remap.at(l);
            r = rhs_remap.at(r);
        }
        std::sort(corr.begin(), corr.end());
        out.correspondence = std::move(corr);
        for (auto& [var, id] : transition_ids) id = lhs_remap.at(id);
        out.transition_ids = std::move(transition_ids);
    }

    void check_variables(const NormalizedRule& out) {
        std::set<std::string> lhs_vars;
        for_each_pattern_term(out.lhs, [&](const Term& t) {
            if (t.is_var()) lhs_vars.insert(t.text);
        });
        std::set<std::string> complained;
        auto require_bound = [&](const Term& t, const char* where) {
            if (!t.is_var() || lhs_vars.count(t.text) || !complained.insert(t.text).second) {
                return;
            }
            error(diag::unbound_rhs_var, std::string("schema variable $") + t.text + " in " +
                                             where + " does not occur on the LHS",
                  rule_.pos);
        };
        for_each_pattern_term(out.rhs, [&](const Term& t) { require_bound(t, "the RHS"); });
        for (const Constraint& c : out.constraints) {
            require_bound(c.left, "a where clause");
            require_bound(c.right, "a where clause");
        }
        // Object-id variables live in their own little world; reusing one as
        // a name or label variable would make bindings ambiguous.
        std::set<std::string> all_vars = lhs_vars;
        auto collect = [&](const PatternSide& side) {
            for_each_pattern_term(side, [&](const Term& t) {
                if (t.is_var()) all_vars.insert(t.text);
            });
        };
        collect(out.rhs);
        for (const PatternSide& nac : out.nacs) collect(nac);
        for (const auto& [var, id] : out.transition_ids) {
            if (all_vars.count(var)) {
                error(diag::bad_id_var,
                      "$" + var + " is used both as a transition id and as a name or label",
                      rule_.pos);
            }
        }
    }
};

}  // namespace detail

// LHS/RHS projection of a parsed rule. Pure; total on parsed rules except
// for the documented error cases (unbound RHS variables, unpairable
// elements, one-sided content).
inline NormalizeResult normalize_rule(const Rule& rule) {
    return detail::Normalizer(rule).run();
}

}  // namespace hat
