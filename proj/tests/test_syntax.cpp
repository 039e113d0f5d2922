#include <doctest.h>

#include <random>

#include "hat/text_syntax.hpp"
#include "support/generators.hpp"

using namespace hat;

TEST_SUITE("syntax") {

TEST_CASE("parses states, nesting, modifiers and transitions") {
    ParseResult r =
        parse_model("state a <<initial>>; state b { state c <<initial>>; } a -x> b;");
    REQUIRE(r.ok());
    const Automaton& m = *r.model;
    REQUIRE(m.top_states.size() == 2);
    CHECK(m.top_states[0].name == "a");
    CHECK(m.top_states[0].modifiers.is_initial);
    REQUIRE(m.top_states[1].substates.size() == 1);
    CHECK(m.top_states[1].substates[0].name == "c");
    CHECK(m.top_states[1].substates[0].modifiers.is_initial);
    REQUIRE(m.transitions.size() == 1);
    CHECK(m.transitions[0] == Transition{"a", "x", "b"});
}

TEST_CASE("empty input parses to the empty model") {
    ParseResult r = parse_model("");
    REQUIRE(r.ok());
    CHECK(r.model->top_states.empty());
    CHECK(r.model->transitions.empty());
}

TEST_CASE("schema variables are rejected in model files, with location") {
    ParseResult r = parse_model("state $a;");
    REQUIRE(!r.ok());
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].code == diag::bad_ident);
    REQUIRE(r.diagnostics[0].location.has_value());
    CHECK(r.diagnostics[0].location->line == 1);
    CHECK(r.diagnostics[0].location->column == 7);
}

TEST_CASE("arrow tokens need no surrounding whitespace") {
    ParseResult tight = parse_model("state a; state b; a -x> b;");
    ParseResult loose = parse_model("state a; state b; a - x > b;");
    REQUIRE(tight.ok());
    REQUIRE(loose.ok());
    CHECK(*tight.model == *loose.model);
}

TEST_CASE("comments and CRLF line endings are insignificant") {
    ParseResult r = parse_model("// heading\r\nstate a; // trailing\r\nstate b;\r\na -x> b;\r\n");
    REQUIRE(r.ok());
    CHECK(r.model->top_states.size() == 2);
    CHECK(r.model->transitions.size() == 1);
}

TEST_CASE("transitions inside composite bodies join the global list in source order") {
    ParseResult r = parse_model("state a; state b { state c; c -y> a; } a -x> b;");
    REQUIRE(r.ok());
    REQUIRE(r.model->transitions.size() == 2);
    CHECK(r.model->transitions[0] == Transition{"c", "y", "a"});
    CHECK(r.model->transitions[1] == Transition{"a", "x", "b"});
}

TEST_CASE("duplicate transitions collapse with a warning") {
    ParseResult r = parse_model("state a; a -x> a; a -x> a;");
    REQUIRE(r.ok());
    CHECK(r.model->transitions.size() == 1);
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].code == diag::dup_transition);
    CHECK(r.diagnostics[0].severity == Severity::warning);
}

TEST_CASE("duplicate modifiers collapse with a warning") {
    ParseResult r = parse_model("state a <<initial initial>>;");
    REQUIRE(r.ok());
    CHECK(r.model->top_states[0].modifiers.is_initial);
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].code == diag::dup_modifier);
}

TEST_CASE("an empty body is a leaf") {
    ParseResult r = parse_model("state b { }");
    REQUIRE(r.ok());
    CHECK(!r.model->top_states[0].is_composite());
    CHECK(print_model(*r.model) == "state b;\n");
}

TEST_CASE("lexical and syntax errors carry locations") {
    ParseResult bad_char = parse_model("state a\nstate ?;");
    REQUIRE(!bad_char.ok());
    CHECK(bad_char.diagnostics[0].code == diag::lex_error);

    ParseResult missing = parse_model("state a");
    REQUIRE(!missing.ok());
    CHECK(missing.diagnostics[0].code == diag::syntax_error);

    ParseResult stray = parse_model("state a; ]]");
    REQUIRE(!stray.ok());
    CHECK(stray.diagnostics[0].code == diag::syntax_error);
}

TEST_CASE("validation failures surface through parse_model") {
    ParseResult r = parse_model("state a; a -x> nowhere;");
    REQUIRE(!r.ok());
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].code == diag::undeclared_ref);
}

TEST_CASE("canonical print layout") {
    ParseResult r = parse_model("state a; state b { state c <<initial>>; } a -x> b;");
    REQUIRE(r.ok());
    CHECK(print_model(*r.model) ==
          "state a;\n"
          "state b {\n"
          "  state c <<initial>>;\n"
          "}\n"
          "\n"
          "a -x> b;\n");
}

TEST_CASE("print of the empty model is empty") {
    CHECK(print_model(Automaton{}) == "");
}

TEST_CASE("modifiers print in fixed order") {
    Automaton m;
    m.top_states.push_back({"a", {true, true}, {}});
    CHECK(print_model(m) == "state a <<initial final>>;\n");

    // Regardless of the order they were written in.
    ParseResult r = parse_model("state a <<final initial>>;");
    REQUIRE(r.ok());
    CHECK(print_model(*r.model) == "state a <<initial final>>;\n");
}

TEST_CASE("print rejects invalid models") {
    Automaton m;
    m.top_states.push_back({"a", {}, {}});
    m.top_states.push_back({"a", {}, {}});
    CHECK_THROWS_AS(print_model(m), std::invalid_argument);
}

TEST_CASE("round trip: parse of print is the identity") {
    std::mt19937 rng(2024);
    testgen::GenConfig config;
    config.max_states = 8;
    for (int i = 0; i < 100; ++i) {
        Automaton m = testgen::random_model(rng, config);
        ParseResult back = parse_model(print_model(m));
        REQUIRE(back.ok());
        CHECK(*back.model == m);
    }
}

TEST_CASE("canonical form is a fixpoint of parse and print") {
    const char* noisy =
        "// noisy input\r\n"
        "state   a <<final initial>> ;\n"
        "state b{state c <<initial>>;c-y>a;}\n"
        "a - x > b;  a -x> b;\n";
    ParseResult first = parse_model(noisy);
    REQUIRE(first.ok());
    std::string canonical = print_model(*first.model);
    ParseResult second = parse_model(canonical);
    REQUIRE(second.ok());
    CHECK(print_model(*second.model) == canonical);
    CHECK(second.diagnostics.empty());
}

}  // TEST_SUITE
