// Command-line front end for the planning library.
//
// Every subcommand resolves its output directory from --out, then the
// SEQPLAN_OUT_DIR environment variable, then ./out, and writes its result
// files there. Overrides are key=value pairs; keys that name planner config
// fields adjust the config, the rest are command parameters.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "seqplan/experiments.hpp"

namespace {

struct CliArgs {
    std::string world_path;
    std::string config_path;
    std::string seed_spec;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::vector<std::string> trace_paths;
};

void add_common_options(CLI::App& cmd, CliArgs& args) {
    cmd.add_option("--world", args.world_path, "World JSON file");
    cmd.add_option("--config", args.config_path, "Planner config JSON file");
    cmd.add_option("--seeds", args.seed_spec,
                   "Seed count ('100' means 0..99) or comma-separated list");
    cmd.add_option("--out", args.out_dir, "Output directory");
    cmd.add_option("--override", args.overrides, "key=value override (repeatable)");
}

seqplan::ExperimentSpec build_spec(const CliArgs& args) {
    seqplan::ExperimentSpec spec;
    spec.world_path = args.world_path;
    spec.config_path = args.config_path;
    spec.out_dir = args.out_dir;
    spec.trace_paths = args.trace_paths;
    if (!args.seed_spec.empty()) {
        spec.seeds = seqplan::parse_seed_spec(args.seed_spec);
    }
    for (const std::string& item : args.overrides) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw seqplan::ValidationError("override '" + item +
                                           "' is not of the form key=value");
        }
        spec.overrides.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    return spec;
}

std::string join_tokens(const std::vector<seqplan::TokenId>& tokens) {
    std::string joined = "[";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) joined += " ";
        joined += std::to_string(tokens[i]);
    }
    return joined + "]";
}

void print_plan(const seqplan::PlanOutcome& outcome) {
    for (const seqplan::RunTrace& trace : outcome.traces) {
        std::cout << "seed " << trace.config.seed << ": tokens "
                  << join_tokens(trace.final_tokens) << " total "
                  << seqplan::format_double(trace.final_reward.total) << " ("
                  << trace.steps.size() << " steps, " << trace.model_calls
                  << " model calls)\n";
    }
}

void print_regret(const seqplan::RegretOutcome& outcome) {
    for (const auto& [budget, value] : outcome.medians) {
        std::cout << "budget " << budget << ": median regret "
                  << seqplan::format_double(value) << "\n";
    }
}

void print_hallucination(const seqplan::HallucinationOutcome& outcome) {
    std::cout << "hallucination token " << outcome.hallucination_token << "\n";
    for (const seqplan::HallucinationSummaryRow& row : outcome.summary) {
        std::cout << "budget " << row.budget << ": fraction "
                  << seqplan::format_double(row.fraction) << " ("
                  << row.hallucinations << "/" << row.runs << ")\n";
    }
}

void print_branching(const seqplan::BranchingOutcome& outcome) {
    std::cout << "threshold " << seqplan::format_double(outcome.threshold) << "\n"
              << "full: median iterations "
              << seqplan::format_double(outcome.median_full) << "\n"
              << "restricted: median iterations "
              << seqplan::format_double(outcome.median_restricted) << "\n";
}

void print_sweep(const seqplan::SweepOutcome& outcome) {
    std::cout << outcome.records.size() << " sweep rows written\n";
}

void print_train_value(const seqplan::TrainValueOutcome& outcome) {
    std::cout << outcome.pairs << " training pairs";
    if (outcome.skipped_traces > 0) {
        std::cout << " (" << outcome.skipped_traces << " traces skipped)";
    }
    std::cout << ", final loss "
              << seqplan::format_double(outcome.result.loss_curve.empty()
                                            ? 0.0
                                            : outcome.result.loss_curve.back())
              << "\n";
}

void print_oracle(const seqplan::OracleOutcome& outcome) {
    std::cout << "best tokens " << join_tokens(outcome.result.best_tokens)
              << " total " << seqplan::format_double(outcome.result.best_total)
              << " (" << outcome.result.terminal_count << " terminal sequences)\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MCTS sequence planner over synthetic generation worlds"};
    app.require_subcommand(1);

    CliArgs args;
    CLI::App* plan = app.add_subcommand("plan", "Run the planner, one trace per seed");
    CLI::App* sweep = app.add_subcommand("sweep", "Grid sweep over planner parameters");
    CLI::App* regret =
        app.add_subcommand("regret", "Simple regret across iteration budgets");
    CLI::App* hallucination = app.add_subcommand(
        "hallucination", "Fraction of runs committing to the known-bad arm");
    CLI::App* branching = app.add_subcommand(
        "branching", "Saliency-restricted vs unrestricted expansion");
    CLI::App* train_value =
        app.add_subcommand("train-value", "Fit the value net on recorded traces");
    CLI::App* oracle =
        app.add_subcommand("oracle", "Exhaustive optimum for a small world");
    for (CLI::App* cmd :
         {plan, sweep, regret, hallucination, branching, train_value, oracle}) {
        add_common_options(*cmd, args);
    }
    train_value->add_option("--traces", args.trace_paths,
                            "Trace JSONL file (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        const seqplan::ExperimentSpec spec = build_spec(args);
        if (plan->parsed()) print_plan(seqplan::run_plan(spec));
        if (sweep->parsed()) print_sweep(seqplan::run_sweep(spec));
        if (regret->parsed()) print_regret(seqplan::run_regret(spec));
        if (hallucination->parsed()) {
            print_hallucination(seqplan::run_hallucination(spec));
        }
        if (branching->parsed()) print_branching(seqplan::run_branching(spec));
        if (train_value->parsed()) print_train_value(seqplan::run_train_value(spec));
        if (oracle->parsed()) print_oracle(seqplan::run_oracle(spec));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
