#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hat {

// 1-based source position. Diagnostics derived from in-memory models carry
// no location.
struct SourcePos {
    int line = 1;
    int column = 1;

    friend bool operator==(const SourcePos&, const SourcePos&) = default;
};

struct SourceSpan {
    SourcePos start;
    SourcePos end;

    friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class Severity { error, warning };

// Stable machine-readable codes. Consumers (CLI, tests) match on these, so
// they never change spelling once introduced.
namespace diag {
inline constexpr const char* dup_name = "DUP_NAME";
inline constexpr const char* undeclared_ref = "UNDECLARED_REF";
inline constexpr const char* dup_transition = "DUP_TRANSITION";
inline constexpr const char* bad_ident = "BAD_IDENT";
inline constexpr const char* multiple_initial = "MULTIPLE_INITIAL";
inline constexpr const char* dup_modifier = "DUP_MODIFIER";
inline constexpr const char* lex_error = "LEX_ERROR";
inline constexpr const char* syntax_error = "SYNTAX_ERROR";
inline constexpr const char* nested_repl = "NESTED_REPL";
inline constexpr const char* mixed_form = "MIXED_FORM";
inline constexpr const char* dup_rule = "DUP_RULE";
inline constexpr const char* bad_id_var = "BAD_ID_VAR";
inline constexpr const char* bad_projection = "BAD_PROJECTION";
inline constexpr const char* unbound_rhs_var = "UNBOUND_RHS_VAR";
inline constexpr const char* ambiguous_correspondence = "AMBIGUOUS_CORRESPONDENCE";
inline constexpr const char* dangling = "DANGLING";
inline constexpr const char* name_collision = "NAME_COLLISION";
inline constexpr const char* post_invalid = "POST_INVALID";
inline constexpr const char* max_iter_exceeded = "MAX_ITER_EXCEEDED";
inline constexpr const char* all_matches_blocked = "ALL_MATCHES_BLOCKED";
inline constexpr const char* no_unique_initial = "NO_UNIQUE_INITIAL";
inline constexpr const char* multiple_top_initial = "MULTIPLE_TOP_INITIAL";
inline constexpr const char* no_top_initial = "NO_TOP_INITIAL";
inline constexpr const char* rule_not_found = "RULE_NOT_FOUND";
inline constexpr const char* io_error = "IO_ERROR";
}  // namespace diag

struct Diagnostic {
    Severity severity = Severity::error;
    std::string code;
    std::string message;
    std::optional<SourcePos> location;

    static Diagnostic make_error(std::string code, std::string message,
                                 std::optional<SourcePos> location = std::nullopt) {
        return {Severity::error, std::move(code), std::move(message), location};
    }
    static Diagnostic make_warning(std::string code, std::string message,
                                   std::optional<SourcePos> location = std::nullopt) {
        return {Severity::warning, std::move(code), std::move(message), location};
    }

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline bool has_errors(const std::vector<Diagnostic>& diagnostics) {
    for (const auto& d : diagnostics) {
        if (d.severity == Severity::error) return true;
    }
    return false;
}

// Render one diagnostic the way the CLI reports it:
//   <file>:<line>:<col>: <severity> <CODE>: <message>
// The file prefix is omitted when `file` is empty, the position when absent.
inline std::string format_diagnostic(const Diagnostic& d, const std::string& file = {}) {
    std::ostringstream out;
    if (!file.empty()) {
        out << file;
        if (d.location) out << ':' << d.location->line << ':' << d.location->column;
        out << ": ";
    } else if (d.location) {
        out << d.location->line << ':' << d.location->column << ": ";
    }
    out << (d.severity == Severity::error ? "error " : "warning ") << d.code << ": " << d.message;
    return out.str();
}

}  // namespace hat
