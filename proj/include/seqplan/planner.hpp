#pragma once

// Planning loop: one fresh search tree per emitted token.
//
// Each outer step runs MCTS iterations until the iteration budget is spent or
// the best root UCT value stops improving (eps_stop <= 0 disables the early
// stop), then commits the most-visited root action. Leaves are scored by a
// blend of the model's coarse value and the value net; terminal leaves are
// scored by the (possibly noisy) terminal reward.

#include <chrono>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "seqplan/core.hpp"
#include "seqplan/model.hpp"
#include "seqplan/reward.hpp"
#include "seqplan/rng.hpp"
#include "seqplan/trace.hpp"
#include "seqplan/tree.hpp"
#include "seqplan/value_net.hpp"

namespace seqplan {

/// Everything one planning run needs, bundled to keep signatures short.
/// An empty value net (hidden_dim == 0) stands for a constant-zero estimate.
struct PlannerEnv {
    const WorldInstance& world;
    const SequenceModel& model;
    const QualityScorer& scorer;
    const ValueNetParams& value_params;
    const PlannerConfig& config;
};

/// True when the history holds window+1 entries and each of the last window
/// successive improvements is below eps_stop.
inline bool check_converged(const std::vector<double>& history, double eps_stop,
                            std::int32_t window) {
    if (!(eps_stop > 0.0)) {
        throw ValidationError("check_converged: eps_stop must be > 0");
    }
    if (window < 1) {
        throw ValidationError("check_converged: window must be >= 1");
    }
    if (history.size() < static_cast<std::size_t>(window) + 1) return false;
    for (std::size_t i = history.size() - window; i < history.size(); ++i) {
        if (history[i] - history[i - 1] >= eps_stop) return false;
    }
    return true;
}

namespace detail {

inline double best_root_uct(const SearchTree& tree, std::int32_t root_id,
                            const PlannerConfig& config) {
    const SearchNode& root = tree.node(root_id);
    if (root.children.empty()) return 0.0;
    const std::int64_t parent_total = root.visit_total();
    double best = uct_score(root.children[0].stats, parent_total, config.c_puct);
    for (std::size_t i = 1; i < root.children.size(); ++i) {
        best = std::max(best, uct_score(root.children[i].stats, parent_total,
                                        config.c_puct));
    }
    return best;
}

/// Regions to prompt for a leaf. When everything is already covered, the
/// top-weight region is prompted anyway so the rising EOS prior can surface.
inline std::vector<std::int32_t> expansion_regions(const SequenceState& state,
                                                   const WorldInstance& world,
                                                   std::int32_t k) {
    std::vector<std::int32_t> regions = identify_salient_regions(state, world, k);
    if (!regions.empty()) return regions;
    const RegionSpec* top = nullptr;
    for (const RegionSpec& region : world.regions) {
        if (top == nullptr || region.saliency_weight > top->saliency_weight ||
            (region.saliency_weight == top->saliency_weight &&
             region.region_id < top->region_id)) {
            top = &region;
        }
    }
    if (top == nullptr) {
        throw ValidationError("expansion_regions: world has no regions");
    }
    return {top->region_id};
}

}  // namespace detail

/// One select / expand / evaluate / backpropagate cycle.
inline IterationRecord mcts_iteration(SearchTree& tree, std::int32_t root_id,
                                      const PlannerEnv& env, Rng& rng,
                                      std::int32_t iteration_index,
                                      std::int64_t* model_calls = nullptr) {
    const SelectionPath path = select_leaf(tree, root_id, env.config);
    double value = 0.0;
    if (tree.node(path.leaf_id).state.terminal) {
        value = terminal_reward(tree.node(path.leaf_id).state, env.world, env.config,
                                env.scorer, rng)
                    .observed_total;
    } else {
        const SequenceState leaf_state = tree.node(path.leaf_id).state;
        const std::vector<std::int32_t> regions =
            detail::expansion_regions(leaf_state, env.world, env.config.branching_k);
        ExpansionResult expansion;
        double weight_sum = 0.0;
        double coarse_sum = 0.0;
        for (std::int32_t region_id : regions) {
            const ModelOutput output = env.model.evaluate(region_id, leaf_state, env.world);
            if (model_calls != nullptr) *model_calls += 1;
            const double weight = find_region(env.world, region_id).saliency_weight;
            expansion.entries.push_back(
                {region_id, weight, output.policy, output.coarse_value});
            weight_sum += weight;
            coarse_sum += weight * output.coarse_value;
        }
        expand_node(tree, path.leaf_id, expansion, env.config, env.world);
        const double model_value = coarse_sum / weight_sum;
        const double net_value =
            env.value_params.hidden_dim > 0
                ? predict(env.value_params, featurize(leaf_state, env.world))
                : 0.0;
        value = fuse_value(model_value, net_value, env.config.lambda_v);
    }
    backpropagate(tree, path, value, env.config.gamma);

    IterationRecord record;
    record.index = iteration_index;
    record.best_root_uct = detail::best_root_uct(tree, root_id, env.config);
    record.leaf_depth = static_cast<std::int32_t>(path.steps.size());
    record.value = value;
    return record;
}

namespace detail {

inline void throw_if_invalid(const std::vector<std::string>& violations,
                             const std::string& what) {
    if (violations.empty()) return;
    std::ostringstream message;
    message << what << ":";
    for (const std::string& violation : violations) message << "\n  " << violation;
    throw ValidationError(message.str());
}

}  // namespace detail

/// Generates one caption: a fresh tree per token, committed by visit count.
inline RunTrace plan_sequence(const PlannerEnv& env) {
    detail::throw_if_invalid(validate_world(env.world),
                             "invalid world '" + env.world.world_id + "'");
    detail::throw_if_invalid(validate_config(env.config), "invalid config");

    SequenceState state = make_state(env.config.initial_tokens, env.world);
    if (state.terminal) {
        throw ValidationError("plan_sequence: initial_tokens already form a terminal state");
    }

    RunTrace trace;
    trace.world_id = env.world.world_id;
    trace.config = env.config;
    Rng rng(env.config.seed);

    while (!state.terminal) {
        const auto started = std::chrono::steady_clock::now();
        SearchTree tree;
        const std::int32_t root_id = tree.make_root(state);

        StepRecord step;
        step.step_index = static_cast<std::int32_t>(trace.steps.size());
        step.root_tokens = state.tokens;

        std::vector<double> history;
        for (std::int32_t i = 1; i <= env.config.n_max_iterations; ++i) {
            const IterationRecord record =
                mcts_iteration(tree, root_id, env, rng, i, &trace.model_calls);
            step.iterations.push_back(record);
            history.push_back(record.best_root_uct);
            if (env.config.eps_stop > 0.0 &&
                check_converged(history, env.config.eps_stop, env.config.stop_window)) {
                break;
            }
        }
        step.iterations_used = static_cast<std::int32_t>(step.iterations.size());
        step.chosen_token = best_action_by_visits(tree, root_id);
        for (const ChildEdge& edge : tree.node(root_id).children) {
            step.root_children.push_back({edge.token, edge.stats.visit_count,
                                          edge.stats.value_sum, edge.stats.prior});
        }
        step.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count();

        trace.intermediate_tokens.push_back(state.tokens);
        state = append_token(state, step.chosen_token, env.world);
        trace.steps.push_back(std::move(step));
    }

    trace.final_tokens = state.tokens;
    trace.final_reward = terminal_reward(state, env.world, env.config, env.scorer, rng);
    trace.has_final_reward = true;
    return trace;
}

}  // namespace seqplan
