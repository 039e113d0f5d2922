// hat — command line front end for the hierarchical automata workbench.
//
// stdout carries only the artifact (model text, match lines, verdicts) so
// subcommands compose in shell pipelines; all reporting goes to stderr.
// Exit codes: 0 success, 1 parse/validation diagnostics, 2 application or
// semantics errors, 3 usage.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hat/hat.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiagnostics = 1;
constexpr int kExitSemantics = 2;
constexpr int kExitUsage = 3;

const char* kUsage =
    "usage: hat <command> [args]\n"
    "\n"
    "commands:\n"
    "  parse <model.aut> [--ast]           validate a model; --ast dumps JSON\n"
    "  print <model.aut>                   canonical pretty-print\n"
    "  matches <rules.rul> <model.aut> --rule NAME\n"
    "                                      list matches of a rule's LHS\n"
    "  apply <rules.rul> <model.aut> --rule NAME --strategy once|fixpoint\n"
    "        [--max-iter N]                apply a rule; result on stdout\n"
    "  flatten <model.aut>                 flatten a hierarchical model\n"
    "  equiv <m1.aut> <m2.aut> --depth K   bounded trace equivalence\n"
    "  fig3 <model.aut>                    apply the bundled forwarding rule\n";

void report(const std::vector<hat::Diagnostic>& diagnostics, const std::string& file) {
    for (const hat::Diagnostic& d : diagnostics) {
        std::cerr << hat::format_diagnostic(d, file) << "\n";
    }
}

int usage_error(const std::string& message) {
    std::cerr << "hat: " << message << "\n" << kUsage;
    return kExitUsage;
}

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Loads and parses a model file; on failure prints diagnostics and sets the
// exit code.
std::optional<hat::Automaton> load_model(const std::string& path, int& exit_code) {
    auto text = read_file(path);
    if (!text) {
        std::cerr << hat::format_diagnostic(
                         hat::Diagnostic::make_error(hat::diag::io_error, "cannot read file"),
                         path)
                  << "\n";
        exit_code = kExitDiagnostics;
        return std::nullopt;
    }
    hat::ParseResult parsed = hat::parse_model(*text);
    report(parsed.diagnostics, path);
    if (!parsed.ok()) {
        exit_code = kExitDiagnostics;
        return std::nullopt;
    }
    return std::move(parsed.model);
}

std::optional<hat::NormalizedRule> load_rule(const std::string& path,
                                             const std::string& rule_name, int& exit_code) {
    auto text = read_file(path);
    if (!text) {
        std::cerr << hat::format_diagnostic(
                         hat::Diagnostic::make_error(hat::diag::io_error, "cannot read file"),
                         path)
                  << "\n";
        exit_code = kExitDiagnostics;
        return std::nullopt;
    }
    hat::ParseRulesResult parsed = hat::parse_rules(*text);
    report(parsed.diagnostics, path);
    if (!parsed.ok()) {
        exit_code = kExitDiagnostics;
        return std::nullopt;
    }
    const hat::Rule* rule = parsed.find(rule_name);
    if (!rule) {
        std::cerr << hat::format_diagnostic(
                         hat::Diagnostic::make_error(hat::diag::rule_not_found,
                                                     "no rule named '" + rule_name + "'"),
                         path)
                  << "\n";
        exit_code = kExitDiagnostics;
        return std::nullopt;
    }
    hat::NormalizeResult normalized = hat::normalize_rule(*rule);
    report(normalized.diagnostics, path);
    if (!normalized.ok()) {
        exit_code = kExitDiagnostics;
        return std::nullopt;
    }
    return std::move(normalized.rule);
}

nlohmann::ordered_json state_to_json(const hat::State& state) {
    nlohmann::ordered_json j;
    j["name"] = state.name;
    auto modifiers = nlohmann::ordered_json::array();
    if (state.modifiers.is_initial) modifiers.push_back("initial");
    if (state.modifiers.is_final) modifiers.push_back("final");
    j["modifiers"] = std::move(modifiers);
    auto substates = nlohmann::ordered_json::array();
    for (const hat::State& sub : state.substates) substates.push_back(state_to_json(sub));
    j["substates"] = std::move(substates);
    return j;
}

int cmd_parse(const hat::Automaton& model, bool ast) {
    if (!ast) return kExitOk;
    nlohmann::ordered_json j;
    auto states = nlohmann::ordered_json::array();
    for (const hat::State& s : model.top_states) states.push_back(state_to_json(s));
    j["states"] = std::move(states);
    auto transitions = nlohmann::ordered_json::array();
    for (const hat::Transition& t : model.transitions) {
        nlohmann::ordered_json jt;
        jt["source"] = t.source;
        jt["label"] = t.label;
        jt["target"] = t.target;
        transitions.push_back(std::move(jt));
    }
    j["transitions"] = std::move(transitions);
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

std::string format_binding(const hat::Binding& binding) {
    std::string out;
    for (const auto& [var, value] : binding) {
        if (!out.empty()) out += ' ';
        out += "$" + var + "=" + value;
    }
    return out;
}

int cmd_matches(const hat::NormalizedRule& rule, const hat::Automaton& model) {
    std::vector<hat::Match> matches = hat::find_matches(model, rule);
    for (std::size_t i = 0; i < matches.size(); ++i) {
        std::cout << "#" << (i + 1);
        std::string binding = format_binding(matches[i].binding);
        if (!binding.empty()) std::cout << " " << binding;
        std::cout << "\n";
    }
    return kExitOk;
}

int run_apply(const hat::NormalizedRule& rule, const hat::Automaton& model,
              const hat::Strategy& strategy) {
    hat::ApplyReport result = hat::apply(model, rule, strategy);
    report(result.diagnostics, "");
    if (!result.ok()) return kExitSemantics;
    for (std::size_t i = 0; i < result.log.size(); ++i) {
        std::cerr << "apply " << result.log[i].rule << " #" << (i + 1);
        std::string binding = format_binding(result.log[i].binding);
        if (!binding.empty()) std::cerr << ": " << binding;
        std::cerr << "\n";
    }
    std::cerr << "applications: " << result.applications << "\n";
    std::cout << hat::print_model(result.final_model);
    return kExitOk;
}

int cmd_flatten(const hat::Automaton& model) {
    hat::FlattenResult result = hat::flatten(model);
    report(result.diagnostics, "");
    if (!result.ok()) return kExitSemantics;
    std::cout << hat::print_model(*result.model);
    return kExitOk;
}

int cmd_equiv(const hat::Automaton& a, const hat::Automaton& b, int depth) {
    hat::EquivalenceResult result = hat::equivalent(a, b, depth);
    report(result.diagnostics, "");
    if (!result.ok()) return kExitSemantics;
    if (*result.equivalent) {
        std::cout << "equivalent\n";
    } else {
        std::cout << "differ:";
        if (result.counterexample->labels.empty()) {
            std::cout << " (empty trace)";
        } else {
            for (const std::string& label : result.counterexample->labels) {
                std::cout << " " << label;
            }
        }
        std::cout << "\n";
    }
    return kExitOk;
}

struct Args {
    std::vector<std::string> positional;
    bool ast = false;
    std::optional<std::string> rule;
    std::optional<std::string> strategy;
    std::optional<int> max_iter;
    std::optional<int> depth;
};

std::optional<Args> parse_args(int argc, char** argv, std::string& error) {
    Args args;
    for (int i = 2; i < argc; ++i) {
        std::string arg = argv[i];
        auto next_value = [&]() -> std::optional<std::string> {
            if (i + 1 >= argc) return std::nullopt;
            return std::string(argv[++i]);
        };
        if (arg == "--ast") {
            args.ast = true;
        } else if (arg == "--rule") {
            args.rule = next_value();
            if (!args.rule) { error = "--rule needs a value"; return std::nullopt; }
        } else if (arg == "--strategy") {
            args.strategy = next_value();
            if (!args.strategy) { error = "--strategy needs a value"; return std::nullopt; }
        } else if (arg == "--max-iter" || arg == "--depth") {
            auto value = next_value();
            if (!value) { error = arg + " needs a value"; return std::nullopt; }
            int parsed = 0;
            try {
                parsed = std::stoi(*value);
            } catch (...) {
                error = arg + " needs an integer, got '" + *value + "'";
                return std::nullopt;
            }
            if (arg == "--max-iter") {
                if (parsed <= 0) { error = "--max-iter must be positive"; return std::nullopt; }
                args.max_iter = parsed;
            } else {
                if (parsed < 0) { error = "--depth must be non-negative"; return std::nullopt; }
                args.depth = parsed;
            }
        } else if (!arg.empty() && arg[0] == '-') {
            error = "unknown option '" + arg + "'";
            return std::nullopt;
        } else {
            args.positional.push_back(std::move(arg));
        }
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) return usage_error("missing command");
    std::string command = argv[1];
    std::string error;
    auto args = parse_args(argc, argv, error);
    if (!args) return usage_error(error);

    int exit_code = kExitOk;
    if (command == "parse") {
        if (args->positional.size() != 1) return usage_error("parse needs one model file");
        auto model = load_model(args->positional[0], exit_code);
        if (!model) return exit_code;
        return cmd_parse(*model, args->ast);
    }
    if (command == "print") {
        if (args->positional.size() != 1) return usage_error("print needs one model file");
        auto model = load_model(args->positional[0], exit_code);
        if (!model) return exit_code;
        std::cout << hat::print_model(*model);
        return kExitOk;
    }
    if (command == "matches") {
        if (args->positional.size() != 2) {
            return usage_error("matches needs a rule file and a model file");
        }
        if (!args->rule) return usage_error("matches needs --rule NAME");
        auto rule = load_rule(args->positional[0], *args->rule, exit_code);
        if (!rule) return exit_code;
        auto model = load_model(args->positional[1], exit_code);
        if (!model) return exit_code;
        return cmd_matches(*rule, *model);
    }
    if (command == "apply") {
        if (args->positional.size() != 2) {
            return usage_error("apply needs a rule file and a model file");
        }
        if (!args->rule) return usage_error("apply needs --rule NAME");
        if (!args->strategy) return usage_error("apply needs --strategy once|fixpoint");
        hat::Strategy strategy;
        if (*args->strategy == "once") {
            strategy = hat::Strategy::once();
        } else if (*args->strategy == "fixpoint") {
            strategy = hat::Strategy::fixpoint(args->max_iter.value_or(10000));
        } else {
            return usage_error("--strategy must be 'once' or 'fixpoint'");
        }
        auto rule = load_rule(args->positional[0], *args->rule, exit_code);
        if (!rule) return exit_code;
        auto model = load_model(args->positional[1], exit_code);
        if (!model) return exit_code;
        return run_apply(*rule, *model, strategy);
    }
    if (command == "flatten") {
        if (args->positional.size() != 1) return usage_error("flatten needs one model file");
        auto model = load_model(args->positional[0], exit_code);
        if (!model) return exit_code;
        return cmd_flatten(*model);
    }
    if (command == "equiv") {
        if (args->positional.size() != 2) return usage_error("equiv needs two model files");
        if (!args->depth) return usage_error("equiv needs --depth K");
        auto m1 = load_model(args->positional[0], exit_code);
        if (!m1) return exit_code;
        auto m2 = load_model(args->positional[1], exit_code);
        if (!m2) return exit_code;
        return cmd_equiv(*m1, *m2, *args->depth);
    }
    if (command == "fig3") {
        if (args->positional.size() != 1) return usage_error("fig3 needs one model file");
        hat::ParseRulesResult parsed = hat::parse_rules(hat::fig3_rule());
        hat::NormalizeResult normalized = hat::normalize_rule(parsed.rules->front());
        auto model = load_model(args->positional[0], exit_code);
        if (!model) return exit_code;
        return run_apply(*normalized.rule, *model, hat::Strategy::fixpoint());
    }
    return usage_error("unknown command '" + command + "'");
}
