#include <doctest.h>

#include <random>

#include "hat/match.hpp"
#include "hat/text_syntax.hpp"
#include "support/generators.hpp"
#include "support/match_oracle.hpp"

using namespace hat;

namespace {

Automaton model_of(const char* text) {
    ParseResult r = parse_model(text);
    REQUIRE(r.ok());
    return *r.model;
}

NormalizedRule rule_of(const std::string& text) {
    ParseRulesResult r = parse_rules(text);
    REQUIRE(r.ok());
    NormalizeResult n = normalize_rule(r.rules->front());
    REQUIRE(n.ok());
    return *n.rule;
}

const char* kForwardLhs =
    "rule probe { state $source; state $outer { state $inner <<initial>>; }"
    " $source -$event> $outer; }";

}  // namespace

TEST_SUITE("match") {

TEST_CASE("the forwarding LHS has exactly one match in the seed model") {
    Automaton m = model_of("state a; state b { state c <<initial>>; state d; } a -x> b; c -y> d;");
    NormalizedRule rule = rule_of(kForwardLhs);
    std::vector<Match> matches = find_matches(m, rule);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].binding ==
          Binding{{"source", "a"}, {"outer", "b"}, {"inner", "c"}, {"event", "x"}});
    CHECK(matches[0].state_map == std::map<int, std::string>{{0, "a"}, {1, "b"}, {2, "c"}});
    CHECK(matches[0].transition_map == std::map<int, int>{{3, 0}});
}

TEST_CASE("a missing required modifier kills the match") {
    Automaton m = model_of("state a; state b { state c; } a -x> b;");
    CHECK(find_matches(m, rule_of(kForwardLhs)).empty());
}

TEST_CASE("subset semantics: an initial pattern matches an initial-and-final host") {
    Automaton m = model_of("state a <<initial final>>;");
    NormalizedRule rule = rule_of("rule probe { state $s <<initial>>; }");
    std::vector<Match> matches = find_matches(m, rule);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].binding == Binding{{"s", "a"}});
}

TEST_CASE("repeated schema variables must bind the same value") {
    // $source appears both as a state name and as the transition source, so
    // only transitions out of the bound state can complete a match.
    Automaton m = model_of(
        "state a; state b { state c <<initial>>; state d; } state e;"
        " a -x> b; e -y> b; c -z> e;");
    NormalizedRule rule = rule_of(kForwardLhs);
    std::vector<Match> matches = find_matches(m, rule);
    REQUIRE(matches.size() == 2);
    for (const Match& match : matches) {
        const Transition& t =
            m.transitions[static_cast<std::size_t>(match.transition_map.at(3))];
        CHECK(t.source == match.binding.at("source"));
    }
    CHECK(matches[0].binding.at("source") == "a");
    CHECK(matches[1].binding.at("source") == "e");
    CHECK(oracle::sorted(matches) == oracle::sorted(oracle::matches(m, rule)));
}

TEST_CASE("fixed identifiers match only that identifier") {
    Automaton m = model_of("state a; state b; a -x> b; b -x> a;");
    NormalizedRule rule = rule_of("rule probe { a -$e> $t; }");
    std::vector<Match> matches = find_matches(m, rule);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].binding == Binding{{"e", "x"}, {"t", "b"}});
}

TEST_CASE("element assignment is injective") {
    Automaton m = model_of("state a; state b;");
    NormalizedRule rule = rule_of("rule probe { state $x; state $y; }");
    std::vector<Match> matches = find_matches(m, rule);
    // (a,b) and (b,a); never (a,a) or (b,b).
    REQUIRE(matches.size() == 2);
    for (const Match& match : matches) {
        CHECK(match.binding.at("x") != match.binding.at("y"));
    }
}

TEST_CASE("a top-level pattern state may match at any depth") {
    Automaton m = model_of("state p { state q { state r <<final>>; } }");
    NormalizedRule rule = rule_of("rule probe { state $s <<final>>; }");
    std::vector<Match> matches = find_matches(m, rule);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].binding.at("s") == "r");
}

TEST_CASE("pattern nesting requires direct containment") {
    Automaton m = model_of("state p { state q { state r; } }");
    NormalizedRule rule = rule_of("rule probe { state $a { state $b; } }");
    std::vector<Match> matches = find_matches(m, rule);
    REQUIRE(matches.size() == 2);  // p>q and q>r, but never p>r
    CHECK(matches[0].binding == Binding{{"a", "p"}, {"b", "q"}});
    CHECK(matches[1].binding == Binding{{"a", "q"}, {"b", "r"}});
}

TEST_CASE("where constraints filter on bound identifiers") {
    Automaton m = model_of("state a; state b; a -x> b; a -y> b;");
    NormalizedRule neq = rule_of("rule probe { $s -$e> $t; where $e != y; }");
    std::vector<Match> filtered = find_matches(m, neq);
    REQUIRE(filtered.size() == 1);
    CHECK(filtered[0].binding.at("e") == "x");

    NormalizedRule eq = rule_of("rule probe { $s -$e> $t; where $s == a, $e == y; }");
    std::vector<Match> both = find_matches(m, eq);
    REQUIRE(both.size() == 1);
    CHECK(both[0].binding.at("e") == "y");
}

TEST_CASE("NACs block matches that can be extended into the pattern") {
    Automaton m = model_of("state a; state b; state c; a -x> b; b -x> c;");
    // States with no outgoing transition at all: only c.
    NormalizedRule rule = rule_of("rule probe { state $s; not { $s -$e> $t; } }");
    std::vector<Match> matches = find_matches(m, rule);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].binding == Binding{{"s", "c"}});

    // NAC correctness: find_matches with the binding pre-seeded agrees.
    NormalizedRule nac_probe = rule_of("rule probe { $s -$e> $t; }");
    for (const Match& match : find_matches(m, rule_of("rule probe { state $s; }"))) {
        bool blocked = !find_matches(m, nac_probe, match.binding).empty();
        CHECK(blocked == (match.binding.at("s") != "c"));
    }
}

TEST_CASE("matching against the brute-force oracle on random models") {
    std::mt19937 rng(31337);
    testgen::GenConfig config;
    std::vector<NormalizedRule> patterns = {
        rule_of("rule p { state $s; }"),
        rule_of("rule p { state $s <<initial>>; }"),
        rule_of("rule p { state $outer { state $inner; } }"),
        rule_of(kForwardLhs),
        rule_of("rule p { $a -x> $b; }"),
        rule_of("rule p { state $a; state $b; $a -$e> $b; $b -$f> $a; }"),
        rule_of("rule p { state $s; not { $s -$e> $t; } }"),
        rule_of("rule p { state $a; state $b; $a -$e> $b; where $e != y; }"),
    };
    for (int i = 0; i < 20; ++i) {
        Automaton m = testgen::random_model(rng, config);
        for (const NormalizedRule& rule : patterns) {
            CHECK(oracle::sorted(find_matches(m, rule)) ==
                  oracle::sorted(oracle::matches(m, rule)));
        }
    }
}

TEST_CASE("adding a host modifier never removes a match (monotonicity)") {
    std::mt19937 rng(555);
    testgen::GenConfig config;
    NormalizedRule rule = rule_of(kForwardLhs);
    for (int i = 0; i < 20; ++i) {
        Automaton m = testgen::random_model(rng, config);
        std::size_t before = find_matches(m, rule).size();
        Automaton extended = m;
        if (extended.top_states.empty()) continue;
        extended.top_states[0].modifiers.is_final = true;
        CHECK(find_matches(extended, rule).size() >= before);
    }
}

TEST_CASE("find_matches is deterministic") {
    Automaton m = model_of("state a; state b { state c <<initial>>; } a -x> b; a -y> b;");
    NormalizedRule rule = rule_of(kForwardLhs);
    CHECK(find_matches(m, rule) == find_matches(m, rule));
}

TEST_CASE("matches come out in canonical lexicographic order") {
    Automaton m = model_of("state a; state b { state c <<initial>>; } a -x> b; a -y> b;");
    NormalizedRule rule = rule_of(kForwardLhs);
    std::vector<Match> matches = find_matches(m, rule);
    REQUIRE(matches.size() == 2);
    CHECK(matches[0].transition_map.at(3) == 0);  // a -x> b first
    CHECK(matches[1].transition_map.at(3) == 1);
}

}  // TEST_SUITE
