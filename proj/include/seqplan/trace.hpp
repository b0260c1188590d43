#pragma once

// Run traces: everything a planning run did, step by step.
//
// Serialized as JSONL with one outer step per line and a final record that
// carries the finished caption and its reward breakdown, so a trace file is
// self-contained for value-net training. Wall-clock timings stay in memory
// only; files must be byte-identical across reruns of the same seed.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqplan/core.hpp"

namespace seqplan {

struct IterationRecord {
    std::int32_t index = 0;        // 1-based within the step
    double best_root_uct = 0.0;    // max UCT over root children after backprop
    std::int32_t leaf_depth = 0;   // edges walked to reach the leaf
    double value = 0.0;            // value that was backpropagated
};

struct RootChildStat {
    TokenId token = 0;
    std::int64_t visits = 0;
    double value_sum = 0.0;
    double prior = 0.0;
};

struct StepRecord {
    std::int32_t step_index = 0;
    std::vector<TokenId> root_tokens;
    TokenId chosen_token = 0;
    std::int32_t iterations_used = 0;
    std::vector<RootChildStat> root_children;
    std::vector<IterationRecord> iterations;
    double wall_seconds = 0.0;  // not serialized
};

struct RunTrace {
    std::string world_id;
    PlannerConfig config;
    std::vector<StepRecord> steps;
    std::vector<std::vector<TokenId>> intermediate_tokens;  // root state per step
    std::vector<TokenId> final_tokens;
    RewardBreakdown final_reward;
    bool has_final_reward = false;
    std::int64_t model_calls = 0;
};

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

inline void write_trace_jsonl(const RunTrace& trace, std::ostream& out) {
    for (const StepRecord& step : trace.steps) {
        nlohmann::json children = nlohmann::json::array();
        for (const RootChildStat& child : step.root_children) {
            children.push_back({{"token", child.token},
                                {"visits", child.visits},
                                {"value_sum", child.value_sum},
                                {"prior", child.prior}});
        }
        nlohmann::json iterations = nlohmann::json::array();
        for (const IterationRecord& rec : step.iterations) {
            iterations.push_back({{"index", rec.index},
                                  {"best_root_uct", rec.best_root_uct},
                                  {"leaf_depth", rec.leaf_depth},
                                  {"value", rec.value}});
        }
        nlohmann::json line = {{"step", step.step_index},
                               {"root_tokens", step.root_tokens},
                               {"chosen_token", step.chosen_token},
                               {"iterations_used", step.iterations_used},
                               {"root_children", children},
                               {"iterations", iterations}};
        out << line.dump() << "\n";
    }
    nlohmann::json final_line = {{"final", true},
                                 {"world_id", trace.world_id},
                                 {"final_tokens", trace.final_tokens},
                                 {"model_calls", trace.model_calls}};
    if (trace.has_final_reward) {
        final_line["final_reward"] = reward_to_json(trace.final_reward);
    }
    out << final_line.dump() << "\n";
}

/// Reads a trace back. Only the fields training needs are reconstructed:
/// per-step root states, the chosen tokens, and the final reward record.
inline RunTrace read_trace_jsonl(std::istream& in) {
    RunTrace trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        if (j.contains("final") && j.at("final").get<bool>()) {
            trace.world_id = j.at("world_id").get<std::string>();
            trace.final_tokens = j.at("final_tokens").get<std::vector<TokenId>>();
            trace.model_calls = j.at("model_calls").get<std::int64_t>();
            if (j.contains("final_reward")) {
                trace.final_reward = reward_from_json(j.at("final_reward"));
                trace.has_final_reward = true;
            }
            continue;
        }
        StepRecord step;
        step.step_index = j.at("step").get<std::int32_t>();
        step.root_tokens = j.at("root_tokens").get<std::vector<TokenId>>();
        step.chosen_token = j.at("chosen_token").get<TokenId>();
        step.iterations_used = j.at("iterations_used").get<std::int32_t>();
        trace.intermediate_tokens.push_back(step.root_tokens);
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

inline nlohmann::json summary_to_json(const RunTrace& trace) {
    nlohmann::json iterations = nlohmann::json::array();
    for (const StepRecord& step : trace.steps) iterations.push_back(step.iterations_used);
    return {{"world_id", trace.world_id},
            {"config", config_to_json(trace.config)},
            {"final_tokens", trace.final_tokens},
            {"steps", trace.steps.size()},
            {"iterations_per_step", iterations},
            {"model_calls", trace.model_calls},
            {"final_reward", reward_to_json(trace.final_reward)}};
}

}  // namespace seqplan
