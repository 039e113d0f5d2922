#pragma once

#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hat/lexer.hpp"
#include "hat/model.hpp"

namespace hat {

// Textual model syntax (.aut files):
//
//   model      := element* ;
//   element    := stateDecl | transition ;
//   stateDecl  := 'state' IDENT modifiers? ( ';' | '{' element* '}' ) ;
//   modifiers  := '<<' ('initial'|'final')* '>>' ;
//   transition := IDENT '-' IDENT '>' IDENT ';' ;
//
// Transitions may appear anywhere, including inside state bodies; they all
// land in the model's single global transition list in source order. No
// whitespace is required around the arrow tokens, so `a -x> b;` and
// `a - x > b;` read the same.

struct ParseResult {
    std::optional<Automaton> model;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return model.has_value(); }
};

namespace detail {

class ModelParser : TokenCursor {
public:
    ModelParser(std::vector<Token> tokens, std::vector<Diagnostic> diagnostics)
        : TokenCursor(std::move(tokens), std::move(diagnostics)) {}

    ParseResult run() {
        Automaton model;
        try {
            while (!at(TokenKind::end_of_input)) {
                parse_element(model.top_states, model.transitions);
            }
        } catch (const ParseAbort&) {
            return {std::nullopt, take_diagnostics()};
        }
        auto diagnostics = take_diagnostics();
        for (auto& d : validate(model)) diagnostics.push_back(std::move(d));
        if (has_errors(diagnostics)) return {std::nullopt, std::move(diagnostics)};
        return {std::move(model), std::move(diagnostics)};
    }

private:
    std::string expect_name(std::string_view what) {
        if (at(TokenKind::variable)) {
            fail(diag::bad_ident,
                 "'$" + peek().text + "': schema variables are reserved for rule files",
                 peek().pos);
        }
        return expect(TokenKind::ident, what).text;
    }

    void parse_element(std::vector<State>& siblings, std::vector<Transition>& transitions) {
        if (at_word("state")) {
            take();
            State state;
            state.name = expect_name("state name");
            if (at(TokenKind::mod_open)) state.modifiers = parse_modifiers();
            if (at(TokenKind::semicolon)) {
                take();
            } else if (at(TokenKind::lbrace)) {
                take();
                while (!at(TokenKind::rbrace)) {
                    if (at(TokenKind::end_of_input)) {
                        fail(diag::syntax_error, "expected '}' before end of input", peek().pos);
                    }
                    parse_element(state.substates, transitions);
                }
                take();
            } else {
                fail(diag::syntax_error,
                     "expected ';' or '{' after state declaration, found " +
                         token_kind_name(peek().kind),
                     peek().pos);
            }
            siblings.push_back(std::move(state));
            return;
        }
        // transition := IDENT '-' IDENT '>' IDENT ';'
        Transition t;
        t.source = expect_name("state declaration or transition");
        expect(TokenKind::dash, "'-'");
        t.label = expect_name("transition label");
        expect(TokenKind::gt, "'>'");
        t.target = expect_name("transition target");
        SourcePos end = peek().pos;
        expect(TokenKind::semicolon, "';'");
        for (const Transition& existing : transitions) {
            if (existing == t) {
                warn(diag::dup_transition,
                     "duplicate transition " + t.source + " -" + t.label + "> " + t.target +
                         " collapsed",
                     end);
                return;
            }
        }
        transitions.push_back(std::move(t));
    }

    ModifierSet parse_modifiers() {
        ModifierSet mods;
        expect(TokenKind::mod_open, "'<<'");
        while (!at(TokenKind::mod_close)) {
            const Token& tok = peek();
            bool* flag = nullptr;
            if (tok.is_word("initial")) flag = &mods.is_initial;
            else if (tok.is_word("final")) flag = &mods.is_final;
            else {
                fail(diag::syntax_error,
                     "expected 'initial', 'final' or '>>', found " + token_kind_name(tok.kind),
                     tok.pos);
            }
            if (*flag) {
                warn(diag::dup_modifier, "duplicate modifier '" + tok.text + "' collapsed",
                     tok.pos);
            }
            *flag = true;
            take();
        }
        take();
        return mods;
    }
};

}  // namespace detail

// Parses model text into a validated Automaton. On failure the result holds
// at least one error diagnostic with a source location.
inline ParseResult parse_model(std::string_view text) {
    LexResult lexed = lex(text);
    if (!lexed.ok()) return {std::nullopt, std::move(lexed.diagnostics)};
    return detail::ModelParser(std::move(lexed.tokens), std::move(lexed.diagnostics)).run();
}

namespace detail {

inline void print_modifiers(std::ostream& out, const ModifierSet& mods) {
    if (mods.empty()) return;
    out << " <<";
    if (mods.is_initial) out << "initial";
    if (mods.is_initial && mods.is_final) out << ' ';
    if (mods.is_final) out << "final";
    out << ">>";
}

inline void print_state(std::ostream& out, const State& state, int depth) {
    std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    out << indent << "state " << state.name;
    print_modifiers(out, state.modifiers);
    if (state.is_composite()) {
        out << " {\n";
        for (const State& sub : state.substates) print_state(out, sub, depth + 1);
        out << indent << "}\n";
    } else {
        out << ";\n";
    }
}

}  // namespace detail

// Canonical pretty-printer: states first in declaration order (substates
// indented two spaces per level), one blank line, then the transitions.
// parse_model(print_model(m)) == m for every valid model.
inline std::string print_model(const Automaton& model) {
    if (!is_valid(model)) {
        throw std::invalid_argument("print_model: model failed validation");
    }
    std::ostringstream out;
    for (const State& s : model.top_states) detail::print_state(out, s, 0);
    if (!model.top_states.empty() && !model.transitions.empty()) out << '\n';
    for (const Transition& t : model.transitions) {
        out << t.source << " -" << t.label << "> " << t.target << ";\n";
    }
    return out.str();
}

}  // namespace hat
