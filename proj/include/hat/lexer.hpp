#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hat/diagnostics.hpp"
#include "hat/model.hpp"

namespace hat {

// One lexer serves both model (.aut) and rule (.rul) files; the model parser
// simply rejects rule-only tokens. Whitespace and //-comments are
// insignificant separators, CRLF input is accepted.

enum class TokenKind {
    ident,      // bare identifier, keywords included
    variable,   // $identifier, text stored without the '$'
    lbrace,     // {
    rbrace,     // }
    semicolon,  // ;
    dash,       // -
    gt,         // >
    mod_open,   // <<
    mod_close,  // >>
    repl_open,  // [[
    repl_close, // ]]
    repl_sep,   // :-
    eq,         // ==
    neq,        // !=
    comma,      // ,
    end_of_input,
};

struct Token {
    TokenKind kind = TokenKind::end_of_input;
    std::string text;  // identifier / variable spelling
    SourcePos pos;

    bool is_word(std::string_view word) const { return kind == TokenKind::ident && text == word; }
};

inline std::string token_kind_name(TokenKind kind) {
    switch (kind) {
        case TokenKind::ident: return "identifier";
        case TokenKind::variable: return "schema variable";
        case TokenKind::lbrace: return "'{'";
        case TokenKind::rbrace: return "'}'";
        case TokenKind::semicolon: return "';'";
        case TokenKind::dash: return "'-'";
        case TokenKind::gt: return "'>'";
        case TokenKind::mod_open: return "'<<'";
        case TokenKind::mod_close: return "'>>'";
        case TokenKind::repl_open: return "'[['";
        case TokenKind::repl_close: return "']]'";
        case TokenKind::repl_sep: return "':-'";
        case TokenKind::eq: return "'=='";
        case TokenKind::neq: return "'!='";
        case TokenKind::comma: return "','";
        case TokenKind::end_of_input: return "end of input";
    }
    return "token";
}

struct LexResult {
    std::vector<Token> tokens;  // always terminated by end_of_input
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return !has_errors(diagnostics); }
};

namespace detail {

// Thrown to unwind a parse after the first syntax error; parsers report the
// diagnostics they collected up to that point.
struct ParseAbort {};

class TokenCursor {
public:
    TokenCursor(std::vector<Token> tokens, std::vector<Diagnostic> diagnostics)
        : tokens_(std::move(tokens)), diagnostics_(std::move(diagnostics)) {}

    const Token& peek(std::size_t off = 0) const {
        std::size_t i = pos_ + off;
        return i < tokens_.size() ? tokens_[i] : tokens_.back();
    }
    bool at(TokenKind kind) const { return peek().kind == kind; }
    bool at_word(std::string_view word) const { return peek().is_word(word); }
    Token take() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

    [[noreturn]] void fail(std::string code, std::string message, SourcePos pos) {
        diagnostics_.push_back(Diagnostic::make_error(std::move(code), std::move(message), pos));
        throw ParseAbort{};
    }

    Token expect(TokenKind kind, std::string_view what) {
        if (!at(kind)) {
            fail(diag::syntax_error,
                 std::string("expected ") + std::string(what) + ", found " +
                     token_kind_name(peek().kind),
                 peek().pos);
        }
        return take();
    }

    void warn(std::string code, std::string message, SourcePos pos) {
        diagnostics_.push_back(Diagnostic::make_warning(std::move(code), std::move(message), pos));
    }

    std::vector<Diagnostic> take_diagnostics() { return std::move(diagnostics_); }

private:
    std::vector<Token> tokens_;
    std::vector<Diagnostic> diagnostics_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline LexResult lex(std::string_view text) {
    LexResult result;
    std::size_t i = 0;
    int line = 1, column = 1;

    auto advance = [&](std::size_t n = 1) {
        for (std::size_t k = 0; k < n && i < text.size(); ++k) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
            ++i;
        }
    };
    auto peek = [&](std::size_t off = 0) -> char {
        return i + off < text.size() ? text[i + off] : '\0';
    };
    auto push = [&](TokenKind kind, std::string tok_text, SourcePos pos) {
        result.tokens.push_back({kind, std::move(tok_text), pos});
    };

    while (i < text.size()) {
        char c = peek();
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance();
            continue;
        }
        if (c == '/' && peek(1) == '/') {
            while (i < text.size() && peek() != '\n') advance();
            continue;
        }
        SourcePos pos{line, column};
        if (is_identifier_start(c)) {
            std::string word;
            while (i < text.size() && is_identifier_char(peek())) {
                word.push_back(peek());
                advance();
            }
            push(TokenKind::ident, std::move(word), pos);
            continue;
        }
        if (c == '$') {
            advance();
            std::string word;
            while (i < text.size() && is_identifier_char(peek())) {
                word.push_back(peek());
                advance();
            }
            if (word.empty() || !is_identifier_start(word[0])) {
                result.diagnostics.push_back(Diagnostic::make_error(
                    diag::lex_error, "'$' must be followed by an identifier", pos));
                break;
            }
            push(TokenKind::variable, std::move(word), pos);
            continue;
        }
        switch (c) {
            case '{': advance(); push(TokenKind::lbrace, "{", pos); continue;
            case '}': advance(); push(TokenKind::rbrace, "}", pos); continue;
            case ';': advance(); push(TokenKind::semicolon, ";", pos); continue;
            case '-': advance(); push(TokenKind::dash, "-", pos); continue;
            case '>':
                if (peek(1) == '>') {
                    advance(2);
                    push(TokenKind::mod_close, ">>", pos);
                } else {
                    advance();
                    push(TokenKind::gt, ">", pos);
                }
                continue;
            case '<':
                if (peek(1) == '<') {
                    advance(2);
                    push(TokenKind::mod_open, "<<", pos);
                    continue;
                }
                break;
            case '[':
                if (peek(1) == '[') {
                    advance(2);
                    push(TokenKind::repl_open, "[[", pos);
                    continue;
                }
                break;
            case ']':
                if (peek(1) == ']') {
                    advance(2);
                    push(TokenKind::repl_close, "]]", pos);
                    continue;
                }
                break;
            case ':':
                if (peek(1) == '-') {
                    advance(2);
                    push(TokenKind::repl_sep, ":-", pos);
                    continue;
                }
                break;
            case '=':
                if (peek(1) == '=') {
                    advance(2);
                    push(TokenKind::eq, "==", pos);
                    continue;
                }
                break;
            case '!':
                if (peek(1) == '=') {
                    advance(2);
                    push(TokenKind::neq, "!=", pos);
                    continue;
                }
                break;
            case ',': advance(); push(TokenKind::comma, ",", pos); continue;
            default: break;
        }
        result.diagnostics.push_back(Diagnostic::make_error(
            diag::lex_error, std::string("unexpected character '") + c + "'", pos));
        break;
    }
    result.tokens.push_back({TokenKind::end_of_input, "", {line, column}});
    return result;
}

}  // namespace hat
