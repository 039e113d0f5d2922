#pragma once

// Hierarchical automata transformation workbench: a textual DSL for
// hierarchical automata, transformation rules written in the DSL's own
// concrete syntax, a matching and rewriting engine, a flattener, and a
// bounded trace-equivalence oracle.

#include "hat/diagnostics.hpp"
#include "hat/flatten.hpp"
#include "hat/lexer.hpp"
#include "hat/match.hpp"
#include "hat/model.hpp"
#include "hat/rewrite.hpp"
#include "hat/rules.hpp"
#include "hat/text_syntax.hpp"
#include "hat/trace.hpp"
